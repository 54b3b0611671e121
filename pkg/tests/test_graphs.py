import io

import numpy as np
import pytest

from springlink.errors import ParameterError, ParseError, StructureError
from springlink.graphs import (Graph, GraphKind, ParseStats, canonical_pair,
                               connected_components, degree, degree_array,
                               generate_icosphere_graph, induced_subgraph,
                               is_connected, largest_connected_component,
                               parse_edge_list, serialize_edge_list,
                               undirected_projection, with_edges)


def ug(n, edges):
    return Graph(node_count=n, edges=tuple(edges), kind=GraphKind.UNDIRECTED,
                 labels=tuple(f"v{i}" for i in range(n)))


# ---------------------------------------------------------------------------
# parsing


def test_parse_basic_undirected():
    g = parse_edge_list("a b\nb c\n", GraphKind.UNDIRECTED)
    assert g.node_count == 3
    assert g.edge_count == 2
    assert g.labels == ("a", "b", "c")
    assert g.has_edge(g.index_of("a"), g.index_of("b"))


def test_parse_skips_comments_and_blank_lines():
    text = "# comment\n% other comment\n\na b\n  \nb c\n"
    g = parse_edge_list(text, GraphKind.UNDIRECTED)
    assert g.edge_count == 2


def test_parse_ignores_extra_columns():
    g = parse_edge_list("a b 1.5 2020\nb c 2.0 2021\n", GraphKind.UNDIRECTED)
    assert g.edge_count == 2


def test_parse_single_token_line_reports_line_number():
    with pytest.raises(ParseError, match="line 2"):
        parse_edge_list("a b\nc\n", GraphKind.UNDIRECTED)


def test_parse_drops_self_loops_and_duplicates_with_counts():
    stats = ParseStats()
    g = parse_edge_list("a a\na b\nb a\na b\n", GraphKind.UNDIRECTED, stats=stats)
    assert g.edge_count == 1
    assert stats.self_loops_dropped == 1
    assert stats.duplicates_dropped == 2


def test_parse_directed_keeps_reciprocal_pairs():
    g = parse_edge_list("a b\nb a\n", GraphKind.DIRECTED)
    assert g.edge_count == 2


def test_parse_bytes_and_file_object():
    assert parse_edge_list(b"a b\n", GraphKind.UNDIRECTED).edge_count == 1
    assert parse_edge_list(io.StringIO("a b\n"), GraphKind.UNDIRECTED).edge_count == 1


def test_parse_bipartite_separates_column_namespaces():
    # the same token in both columns names two different nodes is an error;
    # distinct tokens live in per-side namespaces
    g = parse_edge_list("u1 m1\nu2 m1\n", GraphKind.BIPARTITE)
    assert g.node_count == 3
    assert g.partition.count(0) == 2
    assert g.partition.count(1) == 1


def test_parse_bipartite_rejects_label_on_both_sides():
    with pytest.raises(StructureError):
        parse_edge_list("a b\nb a\n", GraphKind.BIPARTITE)


def test_serialize_round_trip():
    g = parse_edge_list("a b\nb c\na c\n", GraphKind.UNDIRECTED)
    text = serialize_edge_list(g)
    g2 = parse_edge_list(text, GraphKind.UNDIRECTED)
    assert g2.edge_count == g.edge_count
    assert set(g2.labels) == set(g.labels)


# ---------------------------------------------------------------------------
# graph invariants


def test_graph_rejects_self_loop():
    with pytest.raises(StructureError):
        ug(2, [(0, 0)])


def test_graph_rejects_duplicate_edge():
    with pytest.raises(StructureError):
        ug(2, [(0, 1), (0, 1)])


def test_graph_rejects_out_of_range_edge():
    with pytest.raises(StructureError):
        ug(2, [(0, 2)])


def test_graph_rejects_duplicate_labels():
    with pytest.raises(StructureError):
        Graph(node_count=2, edges=((0, 1),), kind=GraphKind.UNDIRECTED,
              labels=("a", "a"))


def test_undirected_edges_must_be_canonical():
    with pytest.raises(StructureError):
        ug(3, [(2, 1)])
    assert canonical_pair(2, 1) == (1, 2)
    assert ug(3, [canonical_pair(2, 1)]).edges == ((1, 2),)


def test_bipartite_requires_partition_and_crossing_edges():
    with pytest.raises(StructureError):
        Graph(node_count=2, edges=((0, 1),), kind=GraphKind.BIPARTITE,
              labels=("a", "b"))
    with pytest.raises(StructureError):
        Graph(node_count=2, edges=((0, 1),), kind=GraphKind.BIPARTITE,
              labels=("a", "b"), partition=(0, 0))


# ---------------------------------------------------------------------------
# degrees, components, subgraphs


def test_degree_directions():
    g = Graph(node_count=3, edges=((0, 1), (2, 1)), kind=GraphKind.DIRECTED,
              labels=("a", "b", "c"))
    assert degree(g, 1) == 2
    assert degree(g, 1, "in") == 2
    assert degree(g, 1, "out") == 0
    with pytest.raises(ParameterError):
        degree(ug(2, [(0, 1)]), 0, "in")


def test_degree_array_matches_pointwise():
    rng = np.random.default_rng(0)
    edges = {canonical_pair(*rng.integers(0, 20, 2)) for _ in range(60)}
    edges = [e for e in edges if e[0] != e[1]]
    g = ug(20, sorted(edges))
    assert list(degree_array(g)) == [degree(g, u) for u in range(20)]


def test_connected_components_and_lcc():
    g = ug(6, [(0, 1), (1, 2), (3, 4)])
    comps = connected_components(g)
    assert sorted(len(c) for c in comps) == [1, 2, 3]
    lcc = largest_connected_component(g)
    assert lcc.node_count == 3
    assert set(lcc.labels) == {"v0", "v1", "v2"}
    assert not is_connected(g)
    assert is_connected(lcc)


def test_lcc_on_directed_uses_weak_connectivity():
    g = Graph(node_count=4, edges=((0, 1), (2, 1)), kind=GraphKind.DIRECTED,
              labels=tuple("abcd"))
    lcc = largest_connected_component(g)
    assert lcc.node_count == 3


def test_induced_subgraph_preserves_partition():
    g = parse_edge_list("u1 m1\nu2 m1\nu2 m2\n", GraphKind.BIPARTITE)
    sub = induced_subgraph(g, [0, 1])
    assert sub.kind is GraphKind.BIPARTITE
    assert len(sub.partition) == 2


def test_with_edges_swaps_edge_set_only():
    g = ug(4, [(0, 1), (1, 2), (2, 3)])
    g2 = with_edges(g, [(0, 1)])
    assert g2.edge_count == 1
    assert g2.labels == g.labels
    assert g2.node_count == 4


def test_undirected_projection_collapses_reciprocal_edges():
    g = Graph(node_count=3, edges=((0, 1), (1, 0), (1, 2)),
              kind=GraphKind.DIRECTED, labels=("a", "b", "c"))
    proj = undirected_projection(g)
    assert proj.kind is GraphKind.UNDIRECTED
    assert proj.edge_count == 2


# ---------------------------------------------------------------------------
# icosphere generator


@pytest.mark.parametrize("k,nodes,edges", [(0, 12, 30), (1, 42, 120),
                                           (2, 162, 480), (3, 642, 1920)])
def test_icosphere_counts(k, nodes, edges):
    g = generate_icosphere_graph(k)
    assert g.node_count == nodes
    assert g.edge_count == edges
    # Euler characteristic of a triangulated sphere: V - E + F = 2, F = 2E/3
    assert nodes - edges + 2 * edges // 3 == 2


def test_icosphere_degree_distribution():
    g = generate_icosphere_graph(2)
    degs = sorted(degree_array(g))
    assert degs.count(5) == 12
    assert degs.count(6) == g.node_count - 12


def test_icosphere_is_connected():
    assert is_connected(generate_icosphere_graph(1))


def test_icosphere_rejects_bad_subdivisions():
    with pytest.raises(ParameterError):
        generate_icosphere_graph(-1)
    with pytest.raises(ParameterError):
        generate_icosphere_graph(99)
