import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motifcnn.graph import (
    TEST, TRAIN, VALIDATION, Dataset, GraphFormatError, GraphValidationError, HeteroGraph, LabelSet,
    build_feature_matrix, format_dataset, parse_dataset, split_labels,
)
from motifcnn.synth import planted_hetero, random_graph


def parse(text, name="t.txt"):
    return parse_dataset(text.splitlines(), name)


def test_three_node_path_degrees():
    ds = parse("N 3\nTYPES node\nEDGE 0 1\nEDGE 1 2\n")
    assert ds.graph.num_nodes == 3
    assert ds.graph.degree().tolist() == [1, 2, 1]


def test_out_of_range_edge_is_rejected():
    with pytest.raises(GraphValidationError, match="node index out of range"):
        parse("N 3\nTYPES node\nEDGE 0 5\n")


@pytest.mark.parametrize("edges,msg", [
    ([(0, 0, False)], "self-loop"),
    ([(0, 1, False), (1, 0, False)], "duplicate"),
    ([(0, 1, True), (0, 1, True)], "duplicate"),
    ([(0, 1, False), (0, 1, True)], "already linked undirected"),
])
def test_bad_edges(edges, msg):
    with pytest.raises(GraphValidationError, match=msg):
        HeteroGraph.from_edges(3, edges)


def test_mutual_directed_edges_allowed():
    g = HeteroGraph.from_edges(2, [(0, 1, True), (1, 0, True)])
    assert g.successors(0).tolist() == [1] and g.successors(1).tolist() == [0]
    assert g.neighbors(0).tolist() == []


def test_errors_carry_file_and_line():
    with pytest.raises(GraphFormatError, match=r"t.txt:3:"):
        parse("N 2\nTYPES a\nBOGUS 1\n")
    with pytest.raises(GraphFormatError, match=r"t.txt:4:"):
        parse("N 2\nTYPES a\nFEAT a 2\n0 1.0\n")


def test_planted_schema_has_no_author_author_edges():
    ds = planted_hetero(num_authors=40, seed=3)
    g = ds.graph
    names = [g.type_names[t] for t in g.node_type]
    kinds = set()
    for s, d, directed in g.edge_list():
        kinds.add((names[s], names[d], directed) if directed else (*sorted((names[s], names[d])), False))
    assert kinds == {("A", "P", False), ("P", "V", False), ("P", "P", True)}


def test_feature_padding_two_types():
    fm = build_feature_matrix(np.array([0, 1]), {0: ([0], np.array([[1.0, 2.0]])),
                                                 1: ([1], np.array([[3.0, 4.0, 5.0]]))})
    assert fm.data.tolist() == [[1, 2, 0, 0, 0], [0, 0, 3, 4, 5]]


def test_single_type_block_is_unchanged(rng):
    block = rng.normal(size=(4, 3))
    fm = build_feature_matrix(np.zeros(4, dtype=int), {0: (np.arange(4), block)})
    assert np.array_equal(fm.data, block)


def test_featureless_type_gets_identity():
    node_type = np.array([0, 1, 1, 0, 1])
    fm = build_feature_matrix(node_type, {0: ([0, 3], np.ones((2, 2)))})
    assert fm.slices[1] == slice(2, 5)
    assert np.array_equal(fm.data[[1, 2, 4], 2:], np.eye(3))
    for i, t in enumerate(node_type):
        outside = np.ones(fm.width, bool)
        outside[fm.slices[t]] = False
        assert not fm.data[i, outside].any()


def test_feature_block_errors():
    with pytest.raises(ValueError, match="missing"):
        build_feature_matrix(np.array([0, 0]), {0: ([0], np.ones((1, 2)))})
    with pytest.raises(ValueError, match="another type"):
        build_feature_matrix(np.array([0, 1]), {0: ([1], np.ones((1, 2)))})


def _labels(y, k=None):
    y = np.asarray(y)
    return LabelSet("multiclass", k or int(y.max()) + 1, np.arange(len(y)), y)


def test_split_sizes():
    out = split_labels(_labels(np.arange(100) % 4), (0.2, 0.1), seed=0)
    assert [(out.split == s).sum() for s in (TRAIN, VALIDATION, TEST)] == [20, 10, 70]


def test_split_is_deterministic():
    a = split_labels(_labels(np.arange(60) % 3), seed=5)
    b = split_labels(_labels(np.arange(60) % 3), seed=5)
    assert np.array_equal(a.split, b.split)


def test_split_stratified_ten_nodes():
    out = split_labels(_labels(np.arange(10) % 2), (0.2, 0.1), seed=11)
    assert np.bincount(out.y[out.split == TRAIN], minlength=2).tolist() == [1, 1]


def test_split_rejects_missing_class():
    with pytest.raises(ValueError, match="no training examples"):
        split_labels(_labels([0] * 30 + [1]), (0.1, 0.1), seed=0)
    with pytest.raises(ValueError):
        split_labels(_labels([0, 1]), (0.6, 0.5))


def test_multilabel_dataset_round_trip():
    text = ("N 4\nTYPES u v\nTASK multilabel 3\nNODE 0 u\nNODE 1 v\nNODE 2 u\nNODE 3 v\n"
            "EDGE 0 1\nEDGE 2 1 directed\nEDGE 3 2\nFEAT u 2\n0 0.5 1\n2 -1 2\n"
            "LABEL 0 0,2\nLABEL 2 1\n")
    ds = parse(text)
    assert ds.labels.multilabel and ds.labels.y.tolist() == [[1, 0, 1], [0, 1, 0]]
    assert ds.features.data[1].tolist() == [0, 0, 1, 0]
    again = parse(format_dataset(ds))
    assert again.graph.same_as(ds.graph)
    assert np.array_equal(again.features.data, ds.features.data)
    assert format_dataset(again) == format_dataset(ds)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.floats(0.0, 0.6), st.integers(1, 3), st.floats(0, 1), st.integers(0, 10**6))
def test_round_trip_and_degree_sum(n, p, types, frac, seed):
    g = random_graph(n, p, num_types=types, directed_fraction=frac, seed=seed)
    und = int((~g.directed).sum())
    assert g.degree().sum() == 2 * und + 2 * int(g.directed.sum())
    assert g.undirected_degree().sum() == 2 * und
    ds = Dataset(g, build_feature_matrix(g.node_type, {}, len(g.type_names)))
    assert parse(format_dataset(ds)).graph.same_as(g)


def test_permute_relabels_nodes():
    g = HeteroGraph.from_edges(3, [(0, 1, True), (1, 2, False)], [0, 1, 1], ("a", "b"))
    h = g.permute([2, 0, 1])
    assert h.has_edge(2, 0, directed=True) and h.has_edge(0, 1)
    assert h.node_type.tolist() == [1, 1, 0]


def test_gnm_has_exact_edge_count():
    from motifcnn.synth import random_gnm

    g = random_gnm(300, 2000, seed=1)
    assert g.num_edges == 2000 and not g.directed.any()
    assert (g.src < g.dst).all() and g.dst.max() < 300
    full = random_gnm(6, 15, seed=0)
    assert sorted(full.edge_list()) == [(i, j, False) for i in range(6) for j in range(i + 1, 6)]
    with pytest.raises(ValueError):
        random_gnm(4, 7)
