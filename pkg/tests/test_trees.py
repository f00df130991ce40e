import pytest
from hypothesis import given, settings, strategies as st

from quadlimit.assembler import sample_finite_uniform
from quadlimit.errors import ConfigError, StructureError
from quadlimit.trees import LabeledTree, ball_of_tree


@st.composite
def labeled_trees(draw, max_vertices=30):
    t = LabeledTree(draw(st.integers(min_value=1, max_value=4)))
    for _ in range(draw(st.integers(min_value=0, max_value=max_vertices - 1))):
        v = draw(st.integers(min_value=0, max_value=t.n_vertices - 1))
        step = draw(st.sampled_from([-1, 0, 1]))
        t.add_child(v, max(1, t.labels[v] + step))
    return t


@settings(max_examples=150, deadline=None)
@given(labeled_trees())
def test_encodings_round_trip(t):
    t.validate()
    for enc, dec in ((t.to_nested, LabeledTree.from_nested),
                     (t.to_text, LabeledTree.from_text),
                     (t.to_compact, LabeledTree.from_compact)):
        u = dec(enc())
        assert u == t
        assert u.labels == LabeledTree.from_nested(t.to_nested()).labels


@settings(max_examples=100, deadline=None)
@given(labeled_trees(), st.integers(min_value=0, max_value=6))
def test_ball_properties(t, r):
    b = ball_of_tree(t, r)
    dep = t.depths()
    assert b.n_vertices == sum(d <= r for d in dep)
    assert b.height() <= r
    assert ball_of_tree(b, r) == b
    if r >= t.height():
        assert b == t


def test_compact_examples():
    t = LabeledTree.from_compact("1[2[1],1]")
    assert t.labels == [1, 2, 1, 1] and t.children[0] == [1, 3]
    assert t.to_compact() == "1[2[1],1]"
    assert t.to_text() == "0 1\n1 2\n2 1\n1 1\n"
    with pytest.raises(ConfigError):
        LabeledTree.from_compact("1[2")
    with pytest.raises(ConfigError):
        LabeledTree.from_text("1 1\n")


def test_validate_rejects_bad_labels():
    t = LabeledTree(1)
    t.add_child(0, 3)
    with pytest.raises(StructureError):
        t.validate()
    with pytest.raises(StructureError):
        LabeledTree(2).validate(root_label=1)


def test_deep_tree_encodings():
    t = LabeledTree(1)
    v = 0
    for _ in range(5000):
        v = t.add_child(v, 1)
    assert LabeledTree.from_text(t.to_text()) == t
    assert LabeledTree.from_compact(t.to_compact()) == t


def test_sampled_tree_round_trip():
    t = sample_finite_uniform(60, seed=2)
    t.validate(root_label=1)
    assert t.n_edges == 60
    assert LabeledTree.from_text(t.to_text()) == t
