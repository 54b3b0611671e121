"""Graph representation, edge-list ingestion, connectivity utilities, synthetic generators.

Graphs are immutable after construction: node indices are dense 0..n-1, every
node keeps its original string label, and undirected edges are stored in
canonical (u < v) order with no self-loops or duplicates.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ParameterError, ParseError, StructureError

log = logging.getLogger(__name__)

COMMENT_PREFIXES = ("#", "%")


class GraphKind(str, Enum):
    UNDIRECTED = "undirected"
    DIRECTED = "directed"
    BIPARTITE = "bipartite"


# Partition sides for bipartite graphs.
LEFT = 0
RIGHT = 1


@dataclass(frozen=True)
class Graph:
    """Immutable node/edge structure with undirected, directed and bipartite flavors."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    kind: GraphKind
    labels: tuple[str, ...]
    partition: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.labels) != self.node_count:
            raise StructureError("labels must cover every node exactly once")
        if len(set(self.labels)) != self.node_count:
            raise StructureError("node labels must be unique")
        if self.kind is GraphKind.BIPARTITE:
            if self.partition is None or len(self.partition) != self.node_count:
                raise StructureError("bipartite graph requires a full partition")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise StructureError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise StructureError(f"edge ({u}, {v}) out of node range")
            if self.kind is not GraphKind.DIRECTED and u > v:
                raise StructureError(f"edge ({u}, {v}) not in canonical u < v order")
            if (u, v) in seen:
                raise StructureError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            if self.kind is GraphKind.BIPARTITE and self.partition[u] == self.partition[v]:
                raise StructureError(f"edge ({u}, {v}) does not cross the partition")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def index_of(self, label: str) -> int:
        """Resolve an external node label to its dense index."""
        lookup = self._label_index()
        try:
            return lookup[label]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def neighbors(self, u: int) -> frozenset[int]:
        """Neighbors of u ignoring edge direction."""
        return self._adjacency()[u]

    def out_neighbors(self, u: int) -> frozenset[int]:
        return self._directed_adjacency()[0][u]

    def in_neighbors(self, u: int) -> frozenset[int]:
        return self._directed_adjacency()[1][u]

    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) int64 array (cached)."""
        arr = self.__dict__.get("_edge_array")
        if arr is None:
            arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
            object.__setattr__(self, "_edge_array", arr)
        return arr

    def edge_set(self) -> frozenset[tuple[int, int]]:
        es = self.__dict__.get("_edge_set")
        if es is None:
            es = frozenset(self.edges)
            object.__setattr__(self, "_edge_set", es)
        return es

    def has_edge(self, u: int, v: int) -> bool:
        """Membership test in the stored edge set (canonical order for undirected)."""
        if self.kind is GraphKind.DIRECTED:
            return (u, v) in self.edge_set()
        return (min(u, v), max(u, v)) in self.edge_set()

    def side(self, u: int) -> int:
        if self.partition is None:
            raise StructureError("graph has no partition")
        return self.partition[u]

    def _label_index(self) -> dict[str, int]:
        lookup = self.__dict__.get("_labels_to_index")
        if lookup is None:
            lookup = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_labels_to_index", lookup)
        return lookup

    def _adjacency(self) -> list[frozenset[int]]:
        adj = self.__dict__.get("_adj")
        if adj is None:
            sets: list[set[int]] = [set() for _ in range(self.node_count)]
            for u, v in self.edges:
                sets[u].add(v)
                sets[v].add(u)
            adj = [frozenset(s) for s in sets]
            object.__setattr__(self, "_adj", adj)
        return adj

    def _directed_adjacency(self) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
        pair = self.__dict__.get("_dir_adj")
        if pair is None:
            outs: list[set[int]] = [set() for _ in range(self.node_count)]
            ins: list[set[int]] = [set() for _ in range(self.node_count)]
            for u, v in self.edges:
                outs[u].add(v)
                ins[v].add(u)
            pair = ([frozenset(s) for s in outs], [frozenset(s) for s in ins])
            object.__setattr__(self, "_dir_adj", pair)
        return pair


@dataclass
class ParseStats:
    """Counts of lines dropped while parsing an edge list."""

    self_loops_dropped: int = 0
    duplicates_dropped: int = 0


def canonical_pair(u: int, v: int) -> tuple[int, int]:
    """Unordered pair in canonical u < v order."""
    return (u, v) if u < v else (v, u)


def _iter_lines(source: str | bytes | IO) -> Iterable[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        return source.splitlines()
    # file-like: may yield bytes or str
    return (ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in source)


def parse_edge_list(
    source: str | bytes | IO,
    kind: GraphKind | str = GraphKind.UNDIRECTED,
    stats: ParseStats | None = None,
) -> Graph:
    """Parse a whitespace-separated edge list into a Graph.

    Lines starting with '#' or '%' are comments; tokens beyond the first two
    (weights, timestamps) are ignored. Duplicate edges and self-loops are
    dropped with a counted warning. For bipartite graphs the two token columns
    define the L/R partition and must use disjoint label sets.
    """
    kind = GraphKind(kind)
    stats = stats if stats is not None else ParseStats()
    labels: list[str] = []
    index: dict[str, int] = {}
    # bipartite labels live in per-side namespaces until merged
    side_index: tuple[dict[str, int], dict[str, int]] = ({}, {})
    partition: list[int] = []
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def node_for(token: str, side: int) -> int:
        if kind is GraphKind.BIPARTITE:
            other = side_index[1 - side]
            if token in other:
                raise StructureError(
                    f"label {token!r} appears in both columns of a bipartite edge list"
                )
            table = side_index[side]
            idx = table.get(token)
            if idx is None:
                idx = len(labels)
                table[token] = idx
                labels.append(token)
                partition.append(side)
            return idx
        idx = index.get(token)
        if idx is None:
            idx = len(labels)
            index[token] = idx
            labels.append(token)
        return idx

    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError(f"expected at least 2 tokens, got {len(tokens)}", line=lineno)
        a, b = tokens[0], tokens[1]
        if kind is GraphKind.BIPARTITE and a == b:
            raise StructureError(
                f"line {lineno}: bipartite edge {a!r}-{b!r} uses the same label in both columns"
            )
        u = node_for(a, LEFT)
        v = node_for(b, RIGHT)
        if u == v:
            stats.self_loops_dropped += 1
            continue
        key = (u, v) if kind is GraphKind.DIRECTED else canonical_pair(u, v)
        if key in seen:
            stats.duplicates_dropped += 1
            continue
        seen.add(key)
        edges.append(key)

    if stats.self_loops_dropped or stats.duplicates_dropped:
        log.warning(
            "dropped %d self-loops and %d duplicate edges while parsing",
            stats.self_loops_dropped,
            stats.duplicates_dropped,
        )
    return Graph(
        node_count=len(labels),
        edges=tuple(edges),
        kind=kind,
        labels=tuple(labels),
        partition=tuple(partition) if kind is GraphKind.BIPARTITE else None,
    )


def serialize_edge_list(g: Graph) -> str:
    """Canonical text form: one 'label_u label_v' line per edge, sorted by index pair."""
    lines = [f"{g.labels[u]} {g.labels[v]}\n" for u, v in sorted(g.edges)]
    return "".join(lines)


def degree(g: Graph, u: int, direction: str = "all") -> int:
    """Degree of node u; direction 'in'/'out' applies to directed graphs only."""
    if not (0 <= u < g.node_count):
        raise ParameterError(f"node index {u} out of range")
    if direction == "all":
        if g.kind is GraphKind.DIRECTED:
            return len(g.out_neighbors(u)) + len(g.in_neighbors(u))
        return len(g.neighbors(u))
    if direction in ("in", "out"):
        if g.kind is not GraphKind.DIRECTED:
            raise ParameterError(f"direction {direction!r} requires a directed graph")
        return len(g.in_neighbors(u)) if direction == "in" else len(g.out_neighbors(u))
    raise ParameterError(f"unknown direction {direction!r}")


def degree_array(g: Graph) -> np.ndarray:
    """All-node degree vector (undirected view)."""
    deg = np.zeros(g.node_count, dtype=np.int64)
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def connected_components(g: Graph) -> list[list[int]]:
    """Connected components (weak connectivity for directed graphs), as sorted index lists."""
    seen = [False] * g.node_count
    components: list[list[int]] = []
    for start in range(g.node_count):
        if seen[start]:
            continue
        comp = []
        queue = deque([start])
        seen[start] = True
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in g.neighbors(x):
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        components.append(sorted(comp))
    return components


def is_connected(g: Graph) -> bool:
    return len(connected_components(g)) <= 1


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    """Subgraph induced on `nodes`, reindexed densely in the given order."""
    remap = {old: new for new, old in enumerate(nodes)}
    node_set = set(nodes)
    edges = tuple(
        (remap[u], remap[v]) for u, v in g.edges if u in node_set and v in node_set
    )
    return Graph(
        node_count=len(nodes),
        edges=edges,
        kind=g.kind,
        labels=tuple(g.labels[i] for i in nodes),
        partition=tuple(g.partition[i] for i in nodes) if g.partition is not None else None,
    )


def largest_connected_component(g: Graph) -> Graph:
    """Induced subgraph on the largest component; ties go to the component
    containing the smallest original node index. Directed graphs use weak
    connectivity."""
    if g.node_count == 0:
        raise StructureError("graph has no nodes")
    components = connected_components(g)
    best = max(components, key=lambda comp: (len(comp), -comp[0]))
    return induced_subgraph(g, best)


def with_edges(g: Graph, edges: Iterable[tuple[int, int]]) -> Graph:
    """Same node set and kind as g, with a replacement edge list (e.g. a train split)."""
    return Graph(
        node_count=g.node_count,
        edges=tuple(edges),
        kind=g.kind,
        labels=g.labels,
        partition=g.partition,
    )


def undirected_projection(g: Graph) -> Graph:
    """Forget edge directions; reciprocal edge pairs collapse to one edge."""
    if g.kind is not GraphKind.DIRECTED:
        return g
    edges = sorted({canonical_pair(u, v) for u, v in g.edges})
    return Graph(
        node_count=g.node_count,
        edges=tuple(edges),
        kind=GraphKind.UNDIRECTED,
        labels=g.labels,
    )


# Icosahedron combinatorics: 12 vertices, 20 faces (indices into the vertex list).
_ICOSAHEDRON_FACES = (
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
)

MAX_ICOSPHERE_SUBDIVISIONS = 7


def generate_icosphere_graph(subdivisions: int) -> Graph:
    """1-skeleton of an icosahedron subdivided `subdivisions` times.

    Each subdivision splits every triangle into four by inserting shared edge
    midpoints (the classic icosphere triangulation, vertices on the unit
    sphere). The output is the deterministic combinatorial graph.
    """
    if not (0 <= subdivisions <= MAX_ICOSPHERE_SUBDIVISIONS):
        raise ParameterError(
            f"subdivisions must be in [0, {MAX_ICOSPHERE_SUBDIVISIONS}], got {subdivisions}"
        )
    n_vertices = 12
    faces = list(_ICOSAHEDRON_FACES)
    for _ in range(subdivisions):
        midpoints: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            nonlocal n_vertices
            key = canonical_pair(a, b)
            idx = midpoints.get(key)
            if idx is None:
                idx = n_vertices
                n_vertices += 1
                midpoints[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    edges = sorted({canonical_pair(*pair) for a, b, c in faces for pair in ((a, b), (b, c), (c, a))})
    return Graph(
        node_count=n_vertices,
        edges=tuple(edges),
        kind=GraphKind.UNDIRECTED,
        labels=tuple(f"v{i}" for i in range(n_vertices)),
    )
