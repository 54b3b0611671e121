"""Bipartite and directed embedding variants.

Bi-SFDP keeps the spring-electrical model but turns off repulsion between
nodes on the same side of a bipartition, letting structurally equivalent
nodes share a position. Di-SFDP embeds a directed graph by splitting every
node u into u_out and u_in, connecting u_out -> v_in for each edge (u, v),
and running Bi-SFDP on the resulting bipartite graph; the asymmetric score
for (u, v) is the negated distance between u_out and v_in.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError, StructureError
from .graphs import (Graph, GraphKind, degree_array,
                     largest_connected_component)
from .sfdp import Layout, layout_single_level, random_layout


def bipartite_repulsion_mask(g):
    """Pair-predicate that is true only across the partition.

    The returned callable carries a `.groups` array (the partition ids), so
    the optimizer can route it to the two-sided tree backend instead of
    materializing an n x n table.
    """
    if g.kind is not GraphKind.BIPARTITE:
        raise StructureError("bipartite repulsion mask requires a bipartite graph")
    groups = np.asarray(g.partition, dtype=np.int64)

    def mask(u, v):
        return groups[u] != groups[v]

    mask.groups = groups
    return mask


def bi_sfdp_layout(g, params):
    """Masked single-level layout from seeded random positions.

    Matching-based coarsening only contracts edges, which all cross the
    partition, so any multilevel hierarchy would merge the two sides; the
    bipartite variant therefore refines a single level.
    """
    mask = bipartite_repulsion_mask(g)
    rng = np.random.default_rng(params.seed)
    init = Layout(positions=random_layout(g.node_count, params, rng))
    return layout_single_level(g, init, params, repulsion_mask=mask)


@dataclass(frozen=True)
class SplitNodeMap:
    """Node bookkeeping for the directed-to-bipartite transform.

    out_index[u] / in_index[u] are u_out / u_in in the split graph; the two
    ranges are disjoint and together cover all 2n split nodes.
    """

    graph: Graph
    out_index: np.ndarray
    in_index: np.ndarray


def directed_to_bipartite(g):
    """Split u into (u_out in L, u_in in R); edge (u,v) becomes (u_out, v_in).

    Returns (split graph, SplitNodeMap). Nodes with zero out-degree (resp.
    in-degree) keep an isolated u_out (u_in); embedding callers take the
    largest connected component of the split graph and score dropped nodes
    with the fallback rule.
    """
    if g.kind is not GraphKind.DIRECTED:
        raise StructureError("node splitting requires a directed graph")
    n = g.node_count
    labels = tuple(f"{lab}__out" for lab in g.labels) + \
        tuple(f"{lab}__in" for lab in g.labels)
    partition = (0,) * n + (1,) * n
    edges = tuple((u, n + v) for u, v in g.edges)
    split = Graph(node_count=2 * n, edges=edges, kind=GraphKind.BIPARTITE,
                  labels=labels, partition=partition)
    smap = SplitNodeMap(graph=g,
                        out_index=np.arange(n, dtype=np.int64),
                        in_index=np.arange(n, 2 * n, dtype=np.int64))
    return split, smap


def _label_rows(layout):
    rows = getattr(layout, "_label_rows", None)
    if rows is None:
        if layout.labels is None:
            raise ParameterError("layout carries no labels")
        rows = {lab: i for i, lab in enumerate(layout.labels)}
        layout._label_rows = rows
    return rows


def fallback_score(layout):
    """Score for pairs with a missing split-node: strictly below any
    in-layout pair, at -(1 + layout diameter)."""
    cached = getattr(layout, "_fallback_score", None)
    if cached is None:
        diameter = float(_kernels.max_pairwise_distance(
            np.ascontiguousarray(layout.positions, dtype=np.float64)))
        cached = -(1.0 + diameter)
        layout._fallback_score = cached
    return cached


def di_score(layout, split_map, u, v):
    """Asymmetric score -||x_{u_out} - x_{v_in}|| on the split-graph layout.

    `layout` embeds (a connected component of) the split graph; rows are
    found by label, so it works after LCC reduction. Pairs whose u_out or
    v_in was dropped get the fallback score.
    """
    if u == v:
        raise ParameterError("di_score needs two distinct nodes")
    rows = _label_rows(layout)
    g = split_map.graph
    iu = rows.get(f"{g.labels[u]}__out")
    iv = rows.get(f"{g.labels[v]}__in")
    if iu is None or iv is None:
        return fallback_score(layout)
    delta = layout.positions[iu] - layout.positions[iv]
    return -float(np.linalg.norm(delta))


def di_scores(layout, split_map, pairs):
    """Vectorized di_score over an iterable of ordered (u, v) pairs."""
    rows = _label_rows(layout)
    g = split_map.graph
    out_row = np.full(g.node_count, -1, dtype=np.int64)
    in_row = np.full(g.node_count, -1, dtype=np.int64)
    for u in range(g.node_count):
        out_row[u] = rows.get(f"{g.labels[u]}__out", -1)
        in_row[u] = rows.get(f"{g.labels[u]}__in", -1)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    iu = out_row[pairs[:, 0]]
    iv = in_row[pairs[:, 1]]
    ok = (iu >= 0) & (iv >= 0)
    scores = np.full(pairs.shape[0], fallback_score(layout), dtype=np.float64)
    delta = layout.positions[iu[ok]] - layout.positions[iv[ok]]
    scores[ok] = -np.linalg.norm(delta, axis=1)
    return scores


def orient_by_degree(g):
    """Turn an undirected graph into a directed one: u -> v iff
    degree(u) < degree(v), ties pointing toward the larger index."""
    if g.kind is not GraphKind.UNDIRECTED:
        raise StructureError("orient_by_degree requires an undirected graph")
    deg = degree_array(g)
    edges = []
    for u, v in g.edges:
        if deg[u] < deg[v]:
            edges.append((u, v))
        elif deg[v] < deg[u]:
            edges.append((v, u))
        else:
            edges.append((min(u, v), max(u, v)))
    return Graph(node_count=g.node_count, edges=tuple(edges),
                 kind=GraphKind.DIRECTED, labels=g.labels)


def di_sfdp_layout(g, params):
    """Full Di-SFDP pipeline: orient if undirected, split, take the LCC of
    the split graph, embed with Bi-SFDP. Returns (layout, SplitNodeMap)."""
    if g.kind is GraphKind.UNDIRECTED:
        g = orient_by_degree(g)
    split, smap = directed_to_bipartite(g)
    core = largest_connected_component(split)
    layout = bi_sfdp_layout(core, params)
    return layout, smap
