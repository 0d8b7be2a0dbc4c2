import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from lowrankcut.core import Assignment
from lowrankcut.graph import (
    DuplicateEdgeError,
    GraphError,
    GSetParseError,
    HeaderError,
    NodeIndexError,
    SelfLoopError,
    WeightedGraph,
    cut_from_form,
    cut_value,
    format_edgelist,
    format_gset,
    generate_er,
    generate_regular,
    generate_torus,
    laplacian,
    load_graph,
    parse_edgelist,
    parse_gset,
)

TRIANGLE = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])


def test_parse_gset_basic():
    g = parse_gset("3 2\n1 2 1\n2 3 1")
    assert g.n == 3 and g.edges == [(0, 1, 1.0), (1, 2, 1.0)]


def test_parse_negative_weight_crlf_tabs_blank_tail():
    g = parse_gset(b"2 1\r\n1\t 2  -1\r\n\r\n\n")
    assert g.edges == [(0, 1, -1.0)]


def test_parse_normalises_order_and_decimals():
    g = parse_gset("3 1\n3 1 0.5\n")
    assert g.edges == [(0, 2, 0.5)]


@pytest.mark.parametrize("text,err,line", [
    ("3\n1 2 1", HeaderError, 1),
    ("x 1\n1 2 1", GSetParseError, 1),
    ("3 2\n1 2 1", HeaderError, 2),
    ("3 1\n1 4 1", NodeIndexError, 2),
    ("3 1\n0 2 1", NodeIndexError, 2),
    ("3 1\n2 2 1", SelfLoopError, 2),
    ("3 2\n1 2 1\n2 1 1", DuplicateEdgeError, 3),
    ("3 1\n1 2", GSetParseError, 2),
    ("", HeaderError, 1),
])
def test_parse_errors_carry_line(text, err, line):
    with pytest.raises(err) as info:
        parse_gset(text)
    assert info.value.line == line


def test_parse_errors_are_distinct():
    kinds = {HeaderError, NodeIndexError, SelfLoopError, DuplicateEdgeError}
    assert len(kinds) == 4 and all(issubclass(k, GSetParseError) for k in kinds)


def test_edgelist_zero_indexed_and_default_weight():
    g = parse_edgelist("# zero-indexed\n3 2\n0 1\n1 2 3\n")
    assert g.edges == [(0, 1, 1.0), (1, 2, 3.0)]
    assert parse_edgelist("3 1\n1 3\n").edges == [(0, 2, 1.0)]


def test_roundtrip_formats(tmp_path):
    g = generate_er(12, 0.4, seed=3)
    assert parse_gset(format_gset(g)).edges == g.edges
    assert parse_edgelist(format_edgelist(g)).edges == g.edges
    p = tmp_path / "g.txt"
    p.write_text(format_gset(g))
    assert load_graph(p).edges == g.edges


def test_graph_invariants():
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 0, 1)])
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 1, 1), (1, 0, 1)])
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(0, [])


def test_er_examples():
    assert generate_er(10, 0.0, 1).m == 0
    assert generate_er(4, 1.0, 1).m == 6
    m = generate_er(100, 0.5, 9).m
    sigma = np.sqrt(4950 * 0.25)
    assert abs(m - 2475) <= 4 * sigma
    assert generate_er(30, 0.3, 5).edges == generate_er(30, 0.3, 5).edges
    with pytest.raises(ValueError):
        generate_er(5, 1.5, 0)


def test_regular_examples():
    k4 = generate_regular(4, 3, 0)
    assert k4.m == 6
    for seed in range(5):
        assert (generate_regular(20, 5, seed).degrees() == 5).all()
    assert generate_regular(20, 5, 2).edges == generate_regular(20, 5, 2).edges
    with pytest.raises(GraphError):
        generate_regular(5, 3, 0)


def test_regular_large():
    g = generate_regular(50_000, 3, 1)
    assert g.m == 75_000 and (g.degrees() == 3).all()


def test_torus_examples():
    g = generate_torus(3, 3)
    assert g.m == 18 and (g.degrees() == 4).all()
    assert generate_torus(10, 10).m == 200
    g = generate_torus(50, 60)
    r, c = np.divmod(np.arange(g.n), 60)
    two = Assignment((r + c) % 2, 3)
    assert cut_value(g, two) == g.m


def test_laplacian_examples():
    L = laplacian(WeightedGraph.from_edges(2, [(0, 1, 1)])).operand.dense()
    assert np.array_equal(L, [[1, -1], [-1, 1]])
    assert np.array_equal(laplacian(TRIANGLE).operand.dense(), 3 * np.eye(3) - np.ones((3, 3)))


def test_laplacian_sparse_above_threshold():
    g = generate_er(60, 0.1, 2)
    L = laplacian(g, dense_threshold=50)
    assert L.operand.is_sparse and sp.issparse(L.operand.entries)
    assert np.allclose(L.operand.dense(), laplacian(g).operand.dense())


def test_cut_examples():
    assert cut_value(TRIANGLE, Assignment([0, 1, 2], 3)) == 3
    assert cut_value(WeightedGraph.from_edges(2, [(0, 1, 1)]), Assignment([0, 0], 3)) == 0
    assert cut_from_form(TRIANGLE, Assignment([0, 1, 2], 3)) == pytest.approx(3.0)
    assert cut_from_form(TRIANGLE, Assignment([1, 1, 1], 3)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        cut_from_form(TRIANGLE, Assignment([0, 1, 1], 2))


graphs = st.builds(
    lambda n, p, seed, signed: (n, p, seed, signed),
    st.integers(2, 50), st.floats(0.0, 1.0), st.integers(0, 2**31), st.booleans(),
)


@settings(max_examples=60, deadline=None)
@given(spec=graphs)
def test_cut_properties(spec):
    n, p, seed, signed = spec
    rng = np.random.default_rng(seed)
    g = generate_er(n, p, seed)
    if signed and g.m:
        g = WeightedGraph(n, g.src, g.dst, rng.choice([-1.0, 1.0], g.m))
    a = Assignment(rng.integers(0, 3, n), 3)
    cut = cut_value(g, a)
    assert cut_from_form(g, a) == pytest.approx(cut, rel=1e-6, abs=1e-9)
    L = laplacian(g).operand.dense()
    assert np.abs(L.sum(axis=1)).max() <= 1e-9 * max(1, n)
    if not signed:
        assert 0 <= cut <= g.weight.sum()
        assert np.linalg.eigvalsh(L).min() >= -1e-8 * max(1.0, np.linalg.norm(L))
    perm = rng.permutation(3)
    assert cut_value(g, Assignment(perm[a.labels], 3)) == cut
    assert cut_value(g, a.rotate(1)) == cut
