import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadlimit import quadmap as qm
from quadlimit.assembler import FiniteUniformSampler, sample_uit, uit_to_tree
from quadlimit.enumeration import build_count_table, iter_labeled_trees
from quadlimit.errors import ConfigError
from quadlimit.trees import LabeledTree


def _hand_map(rotations, twin, origin, labels, root, v0):
    return qm.PlanarMap.from_rotations(rotations, twin, origin, labels, root, v0)


def test_single_edge_same_labels():
    # tree 1-1: both tree vertices are joined to v0; one face v0 a v0 b
    q = qm.build_q(LabeledTree.from_compact("1[1]"))
    hand = _hand_map([[0, 2], [1], [3]], [1, 0, 3, 2], [2, 0, 2, 1], [1, 1, 0], 0, 2)
    assert q.map.canonical_code() == hand.canonical_code()
    assert q.map.origin[q.map.root] == q.v0 == 2
    assert q.distances.tolist() == [1, 1, 0]
    assert [len(f) for f in q.map.faces()] == [4]
    assert len(q.deleted_edges) == 1


def test_single_edge_rising_label():
    # tree 1-2: path v0 - a - b; one face v0 a b a
    q = qm.build_q(LabeledTree.from_compact("1[2]"))
    hand = _hand_map([[0], [1, 2], [3]], [1, 0, 3, 2], [2, 0, 0, 1], [1, 2, 0], 0, 2)
    assert q.map.canonical_code() == hand.canonical_code()
    assert q.distances.tolist() == [1, 2, 0]
    assert sorted(len(f) for f in q.pre_deletion.faces()) == [4]


def test_single_vertex_tree():
    q = qm.build_q(LabeledTree(1))
    assert (q.map.n_vertices, q.map.n_edges) == (2, 1)
    assert q.distances.tolist() == [1, 0]


def test_root_label_must_be_one():
    with pytest.raises(ConfigError):
        qm.build_q(LabeledTree(2))


def test_all_small_trees_give_distinct_quadrangulations():
    codes = set()
    n_trees = 0
    for N in range(1, 5):
        for nested in iter_labeled_trees(N, 1):
            t = LabeledTree.from_nested(nested)
            q = qm.build_q(t)
            assert qm.check_quadrangulation(t, q) == []
            codes.add(q.map.canonical_code())
            n_trees += 1
    assert n_trees == len(codes) == 2 + 9 + 54 + 378


def test_successor_labels():
    t = FiniteUniformSampler(build_count_table(40, 41)).sample(40, 3)
    cs = qm.contour_corners(t)
    assert len(cs) == 2 * t.n_edges
    for i, s in enumerate(cs.successors()):
        if cs.label[i] == 1:
            assert s == -1
        else:
            assert cs.label[s] == cs.label[i] - 1
    for seq in cs.face_label_sequences():
        assert seq[0] == 0 and seq[1] == 1 and seq[-1] == 1


_TABLE = []


def _table():
    if not _TABLE:
        _TABLE.append(build_count_table(80, 81))
    return _TABLE[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=80), st.integers(min_value=0, max_value=2**32))
def test_random_trees(N, seed):
    t = FiniteUniformSampler(_table()).sample(N, seed)
    q = qm.build_q(t)
    assert qm.check_quadrangulation(t, q) == []
    m = q.map
    assert (m.n_vertices, m.n_edges, len(m.faces())) == (N + 2, 2 * N, N)
    rep = qm.verify_faces(q.pre_deletion)
    assert rep.ok and rep.n_triangles == 2 * len(q.deleted_edges)


def test_text_round_trip():
    t = FiniteUniformSampler(_table()).sample(30, 9)
    q = qm.build_q(t)
    m2 = qm.PlanarMap.from_text(q.map.to_text())
    assert m2 == q.map
    with pytest.raises(ConfigError):
        qm.PlanarMap.from_text("id twin next origin label\n")


def test_ball_volume_matches_label_counts():
    t = FiniteUniformSampler(_table()).sample(80, 21)
    q = qm.build_q(t)
    counts = np.bincount(t.labels)
    for r in range(0, max(t.labels) + 1):
        assert qm.ball_of_quad(q, r).volume == 1 + counts[1 : r + 1].sum()


def test_infinite_mode_local_structure():
    u = sample_uit(4, 10, seed=2)
    t = uit_to_tree(u)
    q = qm.build_q(t, infinite_mode=True, check=False)
    assert q.corners.infinite
    assert q.corners.index[0] == 1 and min(q.corners.index) < 0
    m = q.pre_deletion
    assert m.rotation_errors() == []
    rep = qm.verify_faces(m, skip_labels_above=q.provisional_labels_above)
    assert rep.violations == []
