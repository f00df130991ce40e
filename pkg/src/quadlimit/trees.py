"""Labeled planar trees stored in an index arena.

Children are kept in contour order: the order in which a walk around the
tree, starting up the first edge at the root, meets them. Because all the
tree laws used here are invariant under reflection, this order is also
used as the planar left-to-right order of the samplers.
"""
from __future__ import annotations

from collections import deque

from .errors import ConfigError, StructureError


class LabeledTree:
    """Rooted planar tree with positive integer labels.

    Attributes
    ----------
    labels, parent, children : lists indexed by vertex id
    spine : list of vertex ids or None
        For truncated infinite trees, the spine vertices ``e_0, e_1, ...``.
    """

    __slots__ = ("labels", "parent", "children", "spine")

    def __init__(self, root_label: int = 1):
        self.labels = [int(root_label)]
        self.parent = [-1]
        self.children = [[]]
        self.spine = None

    root = 0

    def add_child(self, v: int, label: int) -> int:
        c = len(self.labels)
        self.labels.append(int(label))
        self.parent.append(v)
        self.children.append([])
        self.children[v].append(c)
        return c

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.labels) - 1

    @property
    def root_label(self) -> int:
        return self.labels[0]

    def preorder(self):
        """Vertex ids in depth-first preorder respecting child order."""
        out = []
        stack = [0]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def depths(self) -> list[int]:
        dep = [0] * self.n_vertices
        for v in self.preorder():
            for c in self.children[v]:
                dep[c] = dep[v] + 1
        return dep

    def height(self) -> int:
        return max(self.depths())

    def validate(self, root_label: int | None = None) -> None:
        """Raise :class:`StructureError` unless labels are >= 1, adjacent
        labels differ by at most one and parent/child links agree."""
        if root_label is not None and self.labels[0] != root_label:
            raise StructureError(f"root label {self.labels[0]} != {root_label}")
        seen = 0
        for v in self.preorder():
            seen += 1
            if self.labels[v] < 1:
                raise StructureError(f"vertex {v} has label {self.labels[v]} < 1")
            for c in self.children[v]:
                if self.parent[c] != v:
                    raise StructureError(f"parent link of {c} broken")
                if abs(self.labels[c] - self.labels[v]) > 1:
                    raise StructureError(f"edge {v}-{c} jumps by more than one")
        if seen != self.n_vertices:
            raise StructureError("arena contains unreachable vertices")

    def label_counts(self, j_max: int) -> list[int]:
        out = [0] * (j_max + 1)
        for lab in self.labels:
            if lab <= j_max:
                out[lab] += 1
        return out

    # -- encodings ------------------------------------------------------
    def to_nested(self, v: int = 0):
        """Hashable nested tuple ``(label, (child, ...))``."""
        # iterative post-order to avoid recursion limits on deep trees
        done = {}
        stack = [(v, False)]
        while stack:
            u, expanded = stack.pop()
            if expanded:
                done[u] = (self.labels[u], tuple(done.pop(c) for c in self.children[u]))
            else:
                stack.append((u, True))
                stack.extend((c, False) for c in self.children[u])
        return done[v]

    @classmethod
    def from_nested(cls, nested) -> "LabeledTree":
        t = cls(nested[0])
        stack = [(0, nested[1])]
        while stack:
            v, kids = stack.pop()
            for lab, sub in kids:
                c = t.add_child(v, lab)
                stack.append((c, sub))
        t._reorder_preorder()
        return t

    def _reorder_preorder(self) -> None:
        # relabel vertex ids to preorder so that equal trees have equal arenas
        order = self.preorder()
        new_id = {v: i for i, v in enumerate(order)}
        labels = [self.labels[v] for v in order]
        parent = [new_id[self.parent[v]] if self.parent[v] >= 0 else -1 for v in order]
        children = [[new_id[c] for c in self.children[v]] for v in order]
        self.labels, self.parent, self.children = labels, parent, children
        if self.spine is not None:
            self.spine = [new_id[v] for v in self.spine]

    def to_text(self) -> str:
        """One ``depth label`` line per vertex in preorder."""
        dep = self.depths()
        return "".join(f"{dep[v]} {self.labels[v]}\n" for v in self.preorder())

    @classmethod
    def from_text(cls, text: str) -> "LabeledTree":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows:
            raise ConfigError("empty tree text")
        d0, lab0 = int(rows[0][0]), int(rows[0][1])
        if d0 != 0:
            raise ConfigError("first line must be the root at depth 0")
        t = cls(lab0)
        path = [0]
        for d_s, lab_s in rows[1:]:
            d, lab = int(d_s), int(lab_s)
            if d < 1 or d > len(path):
                raise ConfigError(f"depth {d} does not follow preorder")
            del path[d:]
            path.append(t.add_child(path[-1], lab))
        return t

    def to_compact(self) -> str:
        """Nested-list text such as ``1[2[1],1]``."""
        parts = []
        stack = [(0, 0)]
        while stack:
            v, state = stack.pop()
            kids = self.children[v]
            if state == 0:
                parts.append(str(self.labels[v]))
                if kids:
                    parts.append("[")
                    stack.append((v, 1))
            elif state <= len(kids):
                if state > 1:
                    parts.append(",")
                stack.append((v, state + 1))
                stack.append((kids[state - 1], 0))
            else:
                parts.append("]")
        return "".join(parts)

    @classmethod
    def from_compact(cls, s: str) -> "LabeledTree":
        s = s.replace(" ", "")
        i = 0

        def number():
            nonlocal i
            j = i
            while i < len(s) and s[i].isdigit():
                i += 1
            if j == i:
                raise ConfigError(f"expected a label at position {j} in {s!r}")
            return int(s[j:i])

        t = cls(number())
        stack = [0]
        while i < len(s):
            ch = s[i]
            if ch == "[":
                i += 1
                stack.append(t.add_child(stack[-1], number()))
            elif ch == ",":
                i += 1
                stack.pop()
                stack.append(t.add_child(stack[-1], number()))
            elif ch == "]":
                i += 1
                stack.pop()
            else:
                raise ConfigError(f"unexpected {ch!r} in {s!r}")
        if len(stack) != 1:
            raise ConfigError(f"unbalanced brackets in {s!r}")
        return t

    def signature(self) -> tuple:
        """Flat ``(label, degree, label, degree, ...)`` in preorder; equal
        exactly for equal planar labeled trees."""
        out = []
        for v in self.preorder():
            out.extend((self.labels[v], len(self.children[v])))
        return tuple(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabeledTree) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self) -> str:
        if self.n_vertices <= 40:
            return f"LabeledTree({self.to_compact()})"
        return f"LabeledTree(<{self.n_vertices} vertices, root label {self.root_label}>)"


def ball_of_tree(t: LabeledTree, r: int) -> LabeledTree:
    """Sub-tree of vertices at depth ``<= r``, child order preserved."""
    if r < 0:
        raise ConfigError("radius must be >= 0")
    out = LabeledTree(t.labels[0])
    queue = deque([(0, 0, 0)])
    while queue:
        v, nv, d = queue.popleft()
        if d == r:
            continue
        for c in t.children[v]:
            queue.append((c, out.add_child(nv, t.labels[c]), d + 1))
    out._reorder_preorder()
    return out
