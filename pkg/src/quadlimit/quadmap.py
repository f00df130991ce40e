"""From a well-labeled tree to a rooted quadrangulation.

Construction, for a tree with ``N >= 1`` edges and ``2N`` corners taken in
contour order:

1. add a vertex ``v0`` of label 0 joined to every corner of label 1;
2. for every corner ``i`` of label ``l >= 2`` let ``s(i)`` be the next
   corner in cyclic contour order with label ``l - 1``;
3. join ``i`` to ``s(i)`` by a chord unless ``s(i)`` is the very next
   corner (then the tree edge already plays that role);
4. delete every tree edge whose endpoints carry equal labels.

Maps are stored as half-edge rotation systems. ``nxt[h]`` is the next
half-edge around ``origin[h]``; faces are the orbits of
``h -> nxt[twin[h]]``. Inside a tree corner the inserted half-edges are
ordered from the side the contour arrives from to the side it leaves by,
which is what keeps chords from crossing.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, StructureError
from .trees import LabeledTree


# ---------------------------------------------------------------------------
# planar maps
# ---------------------------------------------------------------------------

@dataclass
class PlanarMap:
    twin: list
    nxt: list
    origin: list
    vertex_label: list
    root: int
    v0: int

    @classmethod
    def from_rotations(cls, rotations, twin, origin, vertex_label, root, v0):
        nxt = [-1] * len(twin)
        for rot in rotations:
            m = len(rot)
            for i, h in enumerate(rot):
                nxt[h] = rot[(i + 1) % m]
        return cls(list(twin), nxt, list(origin), list(vertex_label), root, v0)

    @property
    def n_half_edges(self) -> int:
        return len(self.twin)

    @property
    def n_edges(self) -> int:
        return len(self.twin) // 2

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_label)

    def face_next(self, h: int) -> int:
        return self.nxt[self.twin[h]]

    def faces(self) -> list[list[int]]:
        seen = [False] * self.n_half_edges
        out = []
        for h0 in range(self.n_half_edges):
            if seen[h0]:
                continue
            face = []
            h = h0
            while not seen[h]:
                seen[h] = True
                face.append(h)
                h = self.nxt[self.twin[h]]
            if h != h0:
                raise StructureError("face traversal did not close")
            out.append(face)
        return out

    def rotation_errors(self) -> list[str]:
        """Consistency problems of the rotation system (empty when sound)."""
        errs = []
        n = self.n_half_edges
        for h in range(n):
            t = self.twin[h]
            if not 0 <= t < n or t == h or self.twin[t] != h:
                errs.append(f"twin of {h} is not an involution")
            nx = self.nxt[h]
            if not 0 <= nx < n or self.origin[nx] != self.origin[h]:
                errs.append(f"rotation successor of {h} leaves its vertex")
        if errs:
            return errs
        # each vertex must own exactly one rotation cycle
        seen = [False] * n
        cycles_at = [0] * self.n_vertices
        for h0 in range(n):
            if seen[h0]:
                continue
            h = h0
            while not seen[h]:
                seen[h] = True
                h = self.nxt[h]
            if h != h0:
                errs.append(f"rotation at half-edge {h0} is not a cycle")
            cycles_at[self.origin[h0]] += 1
        for v, c in enumerate(cycles_at):
            if c != 1:
                errs.append(f"vertex {v} has {c} rotation cycles")
        return errs

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + len(self.faces())

    def neighbors(self):
        adj = [[] for _ in range(self.n_vertices)]
        for h in range(self.n_half_edges):
            adj[self.origin[h]].append(self.origin[self.twin[h]])
        return adj

    def canonical_code(self) -> tuple:
        """Traversal code from the root half-edge; equal codes mean
        isomorphic rooted maps."""
        ids = {self.root: 0}
        order = [self.root]
        q = deque([self.root])
        while q:
            h = q.popleft()
            for g in (self.twin[h], self.nxt[h]):
                if g not in ids:
                    ids[g] = len(order)
                    order.append(g)
                    q.append(g)
        return tuple((ids[self.twin[h]], ids[self.nxt[h]]) for h in order)

    def to_text(self) -> str:
        lines = [f"# planar-map root={self.root} v0={self.v0} "
                 f"half_edges={self.n_half_edges} vertices={self.n_vertices}"]
        lines.append("id twin next origin label")
        for h in range(self.n_half_edges):
            o = self.origin[h]
            lines.append(f"{h} {self.twin[h]} {self.nxt[h]} {o} {self.vertex_label[o]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PlanarMap":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# planar-map"):
            raise ConfigError("missing planar-map header")
        meta = dict(tok.split("=") for tok in lines[0].split()[2:])
        n_h, n_v = int(meta["half_edges"]), int(meta["vertices"])
        twin, nxt, origin = [0] * n_h, [0] * n_h, [0] * n_h
        labels = [None] * n_v
        for ln in lines[1:]:
            if ln.startswith("id"):
                continue
            h, t, n, o, lab = map(int, ln.split())
            twin[h], nxt[h], origin[h] = t, n, o
            labels[o] = lab
        # isolated vertices cannot occur in connected maps with edges
        if any(lab is None for lab in labels):
            raise ConfigError("vertex without half-edges in map text")
        return cls(twin, nxt, origin, labels, int(meta["root"]), int(meta["v0"]))


# ---------------------------------------------------------------------------
# corners
# ---------------------------------------------------------------------------

@dataclass
class CornerSequence:
    """Tree corners in contour order.

    ``anchor[i]`` is the tree half-edge after
    which corner ``i`` sits in the rotation around ``vertex[i]``.
    ``index[i]`` is the contour position plus one for finite trees; in
    infinite mode corners up to the spine tip get positive indices and the
    remaining ones, seen from the root going the other way, negative
    indices ``-1, -2, ...``.
    """

    vertex: list
    label: list
    anchor: list
    index: list
    infinite: bool = False

    def __len__(self) -> int:
        return len(self.vertex)

    def successors(self) -> list[int]:
        """``s(i)``: next corner cyclically with label one lower, ``-1`` for
        label-1 corners (their successor is ``v0``)."""
        T = len(self.label)
        lab = self.label
        nearest = {}
        succ = [-1] * T
        for p in range(2 * T - 1, -1, -1):
            i = p % T
            if p < T and lab[i] >= 2:
                succ[i] = nearest.get(lab[i] - 1, -1)
            nearest[lab[i]] = i
        return succ

    def face_label_sequences(self) -> list[list[int]]:
        """Labels around each face cut out by the ``v0`` edges: ``v0``
        (label 0), then the corners from one label-1 corner to the next one
        in contour order, both included."""
        T = len(self.label)
        ones = [i for i in range(T) if self.label[i] == 1]
        out = []
        for a, p in enumerate(ones):
            q = ones[(a + 1) % len(ones)]
            steps = (q - p) % T or T
            out.append([0] + [self.label[(p + s) % T] for s in range(steps + 1)])
        return out


def contour_corners(t: LabeledTree, infinite_mode: bool = False) -> CornerSequence:
    """Corners of ``t`` in contour order.

    The edge to child ``c`` has half-edge ids ``2(c-1)`` (leaving the
    parent) and ``2(c-1)+1`` (leaving ``c``). The contour starts with the corner reached
    after the first edge out of the root and ending with the root corner
    that precedes that edge."""
    if infinite_mode and not t.spine:
        raise ConfigError("infinite mode needs a tree with a recorded spine")
    down = lambda c: 2 * (c - 1)
    up = lambda c: 2 * (c - 1) + 1
    vert, anch = [], []
    if t.n_vertices == 1:
        vert.append(0)
        anch.append(None)
    else:
        # iterative depth-first contour
        stack = [(0, 0)]
        while stack:
            v, i = stack.pop()
            kids = t.children[v]
            if i == 0 and v != 0:
                vert.append(v)
                anch.append(up(v))
            if i > 0:
                vert.append(v)
                anch.append(down(kids[i - 1]))
            if i < len(kids):
                stack.append((v, i + 1))
                stack.append((kids[i], 0))
    labels = [t.labels[v] for v in vert]
    T = len(vert)
    if infinite_mode:
        tip = t.spine[-1]
        first_tip = vert.index(tip)
        index = [p + 1 if p <= first_tip else -(T - p) for p in range(T)]
    else:
        index = [p + 1 for p in range(T)]
    return CornerSequence(vert, labels, anch, index, infinite_mode)


# ---------------------------------------------------------------------------
# the construction
# ---------------------------------------------------------------------------

@dataclass
class Quadrangulation:
    """Rooted quadrangulation with BFS distances from ``v0``.

    ``pre_deletion`` is the map after the chord step, kept for the face
    verifier; ``provisional_vertices`` lists vertices whose neighbourhood
    may be affected by truncation (infinite mode only).
    """

    map: PlanarMap
    distances: np.ndarray
    pre_deletion: PlanarMap
    corners: CornerSequence
    n_tree_edges: int
    provisional_labels_above: int | None = None
    deleted_edges: list = field(default_factory=list)

    @property
    def v0(self) -> int:
        return self.map.v0


def _build_pre_deletion(t: LabeledTree, cs: CornerSequence):
    n = t.n_vertices
    v0 = n
    labels = list(t.labels) + [0]
    twin, origin = [], []

    def new_edge(a, b):
        h = len(twin)
        twin.extend([h + 1, h])
        origin.extend([a, b])
        return h, h + 1

    for c in range(1, n):
        new_edge(t.parent[c], c)
    T = len(cs)
    inserted = [[] for _ in range(T)]  # per corner: (key, half-edge)
    v0_rot = []
    root_he = None
    for i in range(T):
        if cs.label[i] == 1:
            a, b = new_edge(v0, cs.vertex[i])
            inserted[i].append((1, b))  # after every chord in the sector
            v0_rot.append(a)
            if i == T - 1:
                root_he = a
    if root_he is None:
        raise StructureError("root corner does not carry label 1")
    succ = cs.successors()
    for i in range(T):
        s = succ[i]
        if s < 0 or s == (i + 1) % T:
            continue
        x, y = new_edge(cs.vertex[i], cs.vertex[s])
        inserted[i].append((-((s - i) % T), x))
        inserted[s].append((-((i - s) % T), y))
    # rotations: tree rotation with insertions after each anchor
    rot = [[] for _ in range(n + 1)]
    if n == 1:
        rot[0] = [h for _, h in sorted(inserted[0])]
    else:
        after = {}
        for i in range(T):
            after[cs.anchor[i]] = [h for _, h in sorted(inserted[i])]
        for v in range(n):
            base = ([2 * (v - 1) + 1] if v else []) + [2 * (c - 1) for c in t.children[v]]
            seq = []
            for h in base:
                seq.append(h)
                seq.extend(after[h])
            rot[v] = seq
    rot[v0] = v0_rot[::-1]
    return PlanarMap.from_rotations(rot, twin, origin, labels, root_he, v0), rot


def _delete_equal_label_edges(m: PlanarMap, rot):
    lab = m.vertex_label
    keep = [lab[m.origin[h]] != lab[m.origin[m.twin[h]]] for h in range(m.n_half_edges)]
    new_id = {}
    for h in range(m.n_half_edges):
        if keep[h]:
            new_id[h] = len(new_id)
    twin = [0] * len(new_id)
    origin = [0] * len(new_id)
    for h, nh in new_id.items():
        twin[nh] = new_id[m.twin[h]]
        origin[nh] = m.origin[h]
    new_rot = [[new_id[h] for h in r if keep[h]] for r in rot]
    deleted = sorted({min(h, m.twin[h]) for h in range(m.n_half_edges) if not keep[h]})
    q = PlanarMap.from_rotations(new_rot, twin, origin, m.vertex_label, new_id[m.root], m.v0)
    return q, deleted


def bfs_distances(m) -> np.ndarray:
    """Graph distance from ``v0`` to every vertex."""
    pm = m.map if isinstance(m, Quadrangulation) else m
    adj = pm.neighbors()
    dist = np.full(pm.n_vertices, -1, dtype=np.int64)
    dist[pm.v0] = 0
    q = deque([pm.v0])
    while q:
        v = q.popleft()
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def build_q(t: LabeledTree, infinite_mode: bool = False,
            r_complete: int | None = None, check: bool = True) -> Quadrangulation:
    """Quadrangulation associated with a well-labeled tree.

    The root half-edge leaves ``v0`` towards the root-vertex corner that
    precedes the first tree edge in contour order. With ``check`` the
    pre-deletion faces are verified and any violation raises
    :class:`StructureError`.
    """
    if t.labels[0] != 1:
        raise ConfigError("the tree must be well-labeled (root label 1)")
    cs = contour_corners(t, infinite_mode)
    pre, rot = _build_pre_deletion(t, cs)
    if check and t.n_edges > 0:
        rep = verify_faces(pre)
        if rep.violations:
            raise StructureError(f"face check failed: {rep.violations[:3]}")
    q, deleted = _delete_equal_label_edges(pre, rot)
    dist = bfs_distances(q)
    if infinite_mode and r_complete is None:
        r_complete = max(t.labels) - 2
    return Quadrangulation(q, dist, pre, cs, t.n_edges,
                           r_complete if infinite_mode else None, deleted)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _is_rotation_of(seq, pattern) -> bool:
    n = len(seq)
    return n == len(pattern) and any(
        all(seq[(s + i) % n] == pattern[i] for i in range(n)) for s in range(n))


@dataclass
class FaceReport:
    n_faces: int
    n_triangles: int
    n_quadrangles: int
    violations: list
    rotation_errors: list
    euler: int

    @property
    def ok(self) -> bool:
        return not self.violations and not self.rotation_errors and self.euler == 2


def verify_faces(m: PlanarMap, skip_labels_above: int | None = None) -> FaceReport:
    """Classify faces as triangles ``(e, e+1, e+1)`` or quadrangles
    ``(e, e+1, e+2, e+1)``; faces touching labels above
    ``skip_labels_above`` are not judged."""
    errs = m.rotation_errors()
    if errs:
        return FaceReport(0, 0, 0, [], errs, 0)
    faces = m.faces()
    tri = quad = 0
    bad = []
    for f in faces:
        labs = [m.vertex_label[m.origin[h]] for h in f]
        if skip_labels_above is not None and max(labs) > skip_labels_above:
            continue
        e = min(labs)
        if _is_rotation_of(labs, (e, e + 1, e + 1)):
            tri += 1
        elif _is_rotation_of(labs, (e, e + 1, e + 2, e + 1)):
            quad += 1
        else:
            bad.append(tuple(labs))
    return FaceReport(len(faces), tri, quad, bad, [], m.n_vertices - m.n_edges + len(faces))


def triangle_pairing_ok(q: Quadrangulation) -> bool:
    """Every deleted edge separated two distinct triangles."""
    pre = q.pre_deletion
    face_of = {}
    sizes = []
    for fi, f in enumerate(pre.faces()):
        sizes.append(len(f))
        for h in f:
            face_of[h] = fi
    used = set()
    for h in q.deleted_edges:
        a, b = face_of[h], face_of[pre.twin[h]]
        if a == b or sizes[a] != 3 or sizes[b] != 3 or a in used or b in used:
            return False
        used.update((a, b))
    return len(used) == sum(1 for s in sizes if s == 3)


@dataclass
class Ball:
    vertices: list
    edges: list
    volume: int


def ball_of_quad(q: Quadrangulation, r: int) -> Ball:
    """Vertices within distance ``r`` of ``v0`` and the edges among them."""
    if r < 0:
        raise ConfigError("radius must be >= 0")
    d = q.distances
    inside = set(np.nonzero(d <= r)[0].tolist())
    m = q.map
    edges = sorted({(min(m.origin[h], m.origin[m.twin[h]]), max(m.origin[h], m.origin[m.twin[h]]))
                    for h in range(m.n_half_edges)
                    if m.origin[h] in inside and m.origin[m.twin[h]] in inside})
    return Ball(sorted(inside), edges, len(inside))


def check_quadrangulation(t: LabeledTree, q: Quadrangulation) -> list[str]:
    """All structural checks for a finite tree; returns a list of problems."""
    probs = []
    N = t.n_edges
    m = q.map
    probs += m.rotation_errors()
    if probs:
        return probs
    faces = m.faces()
    if N >= 1:
        if any(len(f) != 4 for f in faces):
            probs.append("face of degree != 4")
        if (m.n_vertices, m.n_edges, len(faces)) != (N + 2, 2 * N, N):
            probs.append(f"V,E,F = {m.n_vertices},{m.n_edges},{len(faces)} for N={N}")
    if m.n_vertices - m.n_edges + len(faces) != 2:
        probs.append("Euler relation fails")
    labels = np.asarray(m.vertex_label)
    if not np.array_equal(q.distances, labels):
        probs.append("BFS distance differs from label")
    for h in range(m.n_half_edges):
        if abs(m.vertex_label[m.origin[h]] - m.vertex_label[m.origin[m.twin[h]]]) != 1:
            probs.append("edge joins labels not differing by one")
            break
    rep = verify_faces(q.pre_deletion)
    if not rep.ok:
        probs.append(f"pre-deletion faces: {rep.violations[:3]} {rep.rotation_errors[:3]}")
    if not triangle_pairing_ok(q):
        probs.append("triangles do not pair across deleted edges")
    return probs
