"""Spring-electrical layout engine with Barnes-Hut repulsion and multilevel refinement.

Force model on a layout x: R^dim per node:

    attraction (edges only):   f_a(u, v) = ||x_u - x_v||^2 / K      toward v
    repulsion  (all pairs):    f_r(u, v) = C K^{1+p} / ||x_u-x_v||^p  away from v

The associated energy (p != 1) is

    E = sum_{(u,v) in E} d_uv^3 / (3K)
      + sum_{unordered u != v} C K^{1+p} / ((p-1) d_uv^{p-1})

whose negative gradient reproduces the forces. Optimization follows the
usual scalable force-directed recipe: coarsen by maximal matchings, lay out
the coarsest graph from random positions, prolong with a small jitter, and
refine each level with adaptive step-length cooling. Repulsion uses a
2**dim-ary spatial tree (dim <= 3) with the w/D < theta acceptance rule;
higher dimensions and small systems use exact pairwise sums.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (LayoutError, ParameterError, SingularityError,
                     StructureError)
from .graphs import Graph, GraphKind, is_connected

MAX_TREE_DIM = 3
# below this many nodes exact pairwise beats the tree; also keeps small-case
# invariants (energy monotonicity, gradient checks) free of approximation
EXACT_PAIRWISE_LIMIT = 100
PROGRESS_STREAK = 5  # consecutive energy decreases before the step grows


@dataclass(frozen=True)
class SfdpParams:
    """Model and optimizer parameters, all defaults in one place.

    C scales repulsion, K is the natural spring length, p the repulsive
    exponent; theta is the Barnes-Hut opening criterion; the optimizer runs
    at most max_iters sweeps per level, moving each node at most `step`
    (initially step_init, default K) per sweep, cooled by `cooling`, and
    stops once the largest displacement drops below tol*K.
    """

    C: float = 0.2
    K: float = 1.0
    p: float = 2.0
    dim: int = 2
    theta: float = 1.2
    step_init: float | None = None
    cooling: float = 0.9
    tol: float = 0.01
    max_iters: int = 500
    coarsen_threshold: int = 50
    seed: int = 0

    def __post_init__(self):
        if not (self.C > 0 and self.K > 0):
            raise ParameterError("C and K must be positive")
        if not self.p > 0:
            raise ParameterError("repulsive exponent p must be positive")
        if self.dim < 1:
            raise ParameterError("dim must be a positive integer")
        if self.theta < 0:
            raise ParameterError("theta must be non-negative")
        if self.step_init is not None and not self.step_init > 0:
            raise ParameterError("step_init must be positive")
        if not 0.0 < self.cooling < 1.0:
            raise ParameterError("cooling must lie in (0, 1)")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.coarsen_threshold < 1:
            raise ParameterError("coarsen_threshold must be >= 1")

    @property
    def step0(self):
        return self.K if self.step_init is None else self.step_init


@dataclass
class Layout:
    """Node coordinates (one row per node) plus optimizer diagnostics."""

    positions: np.ndarray
    labels: tuple = None
    energy: float = math.nan
    iterations: int = 0
    converged: bool = False
    jitter_events: int = 0
    seed: int = None

    @property
    def dim(self):
        return int(self.positions.shape[1])

    @property
    def node_count(self):
        return int(self.positions.shape[0])


# ---------------------------------------------------------------------------
# pairwise forces and energy


def attractive_force(x_u, x_v, K):
    """Spring force on u from edge (u, v): magnitude d^2/K, directed toward v."""
    if not K > 0:
        raise ParameterError("K must be positive")
    x_u = np.asarray(x_u, dtype=np.float64)
    x_v = np.asarray(x_v, dtype=np.float64)
    delta = x_v - x_u
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise SingularityError("coincident points have no defined force direction")
    return delta * (d / K)


def repulsive_force(x_u, x_v, C, K, p):
    """Electrical force on u from v: magnitude C K^{1+p}/d^p, directed away from v."""
    if not (C > 0 and K > 0 and p > 0):
        raise ParameterError("C, K and p must be positive")
    x_u = np.asarray(x_u, dtype=np.float64)
    x_v = np.asarray(x_v, dtype=np.float64)
    delta = x_u - x_v
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise SingularityError("coincident points have no defined force direction")
    return delta * (C * K ** (1.0 + p) / d ** (p + 1.0))


def system_energy(g, layout, params):
    """Total layout energy: edge attraction terms plus unordered-pair repulsion."""
    if params.p == 1.0:
        raise ParameterError("energy is undefined at p = 1 (1/(p-1) factor)")
    pos = np.ascontiguousarray(layout.positions, dtype=np.float64)
    if pos.shape[0] != g.node_count:
        raise ParameterError("layout size does not match graph")
    e_rep, min_d2 = _kernels.repulsive_energy_exact(pos, params.C, params.K, params.p)
    if pos.shape[0] > 1 and min_d2 == 0.0:
        raise SingularityError("coincident node pair has infinite repulsive energy")
    edges = g.edge_array()
    mult = np.ones(edges.shape[0], dtype=np.float64)
    e_att = _kernels.attraction_energy_exact(pos, edges, mult, params.K)
    return float(e_att + e_rep)


# ---------------------------------------------------------------------------
# spatial tree


class SpatialTree:
    """Array-backed 2**dim-ary partition tree over a set of points.

    Cube cells split in half along every axis; leaves hold at most one point
    except beyond the insertion depth cap, where coincident-ish points chain
    into a bucket. Inspection accessors expose per-cell mass, width, center,
    center of mass, children and leaf bodies.
    """

    def __init__(self, pos, ids=None):
        pos = np.ascontiguousarray(pos, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[0] == 0:
            raise ParameterError("positions must be a non-empty (n, dim) array")
        if not np.isfinite(pos).all():
            raise ParameterError("positions must be finite")
        n, dim = pos.shape
        if dim < 1 or dim > MAX_TREE_DIM:
            raise ParameterError(
                f"spatial tree supports 1..{MAX_TREE_DIM} dims, got {dim}; "
                "use exact pairwise repulsion instead")
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        else:
            ids = np.ascontiguousarray(ids, dtype=np.int64)
            if ids.shape != (n,):
                raise ParameterError("ids must have one entry per point")
        self.pos = pos
        self.ids = ids
        self.dim = dim
        self.n_children = 1 << dim

        cap = max(8 * n, 64)
        while True:
            self._center = np.empty((cap, dim), dtype=np.float64)
            self._width = np.empty(cap, dtype=np.float64)
            self._mass = np.zeros(cap, dtype=np.int64)
            self._comsum = np.zeros((cap, dim), dtype=np.float64)
            self._child0 = np.full(cap, -1, dtype=np.int64)
            self._body_head = np.full(cap, -1, dtype=np.int64)
            self._body_next = np.full(n, -1, dtype=np.int64)
            n_cells = _kernels.build_tree(
                pos, self._center, self._width, self._mass, self._comsum,
                self._child0, self._body_head, self._body_next)
            if n_cells >= 0:
                break
            cap *= 2
        self.n_cells = int(n_cells)
        self._com = np.zeros_like(self._comsum)
        occupied = self._mass > 0
        self._com[occupied] = self._comsum[occupied] / self._mass[occupied, None]

    def cell_mass(self, c):
        return int(self._mass[c])

    def cell_width(self, c):
        return float(self._width[c])

    def cell_center(self, c):
        return self._center[c].copy()

    def center_of_mass(self, c):
        if self._mass[c] == 0:
            raise ParameterError(f"cell {c} is empty")
        return self._com[c].copy()

    def is_leaf(self, c):
        return self._child0[c] == -1

    def cell_children(self, c):
        """Child cell indices, or () for leaves."""
        c0 = int(self._child0[c])
        if c0 == -1:
            return ()
        return tuple(range(c0, c0 + self.n_children))

    def cell_bodies(self, c):
        """Point indices chained at this leaf (empty for internal cells)."""
        out = []
        o = int(self._body_head[c])
        while o != -1:
            out.append(o)
            o = int(self._body_next[o])
        return out

    def field(self, qpos, qids, theta, C, K, p):
        """Repulsion on each query point from this tree's bodies.

        Bodies with the same global id as the query are skipped, so a tree
        queried with its own points yields self-free forces. Returns
        (forces, summed interaction energy, jitter count); for self-queries
        the energy counts every unordered pair twice.
        """
        qpos = np.ascontiguousarray(qpos, dtype=np.float64)
        qids = np.ascontiguousarray(qids, dtype=np.int64)
        out = np.empty_like(qpos)
        energy, jitters = _kernels.bh_field(
            qpos, qids, self.pos, self.ids,
            self._center, self._width, self._mass, self._com,
            self._child0, self._body_head, self._body_next,
            float(theta), float(C), float(K), float(p), out)
        return out, energy, jitters


def build_spatial_tree(layout_or_positions):
    """Build a SpatialTree from a Layout or raw (n, dim) positions, dim <= 3."""
    pos = getattr(layout_or_positions, "positions", layout_or_positions)
    return SpatialTree(pos)


def repulsion_field(layout, params, tree=None):
    """Net repulsive force on every node; exact pairwise when tree is None."""
    pos = np.ascontiguousarray(layout.positions, dtype=np.float64)
    ids = np.arange(pos.shape[0], dtype=np.int64)
    if tree is None:
        out = np.empty_like(pos)
        _kernels.exact_repulsion(pos, ids, params.C, params.K, params.p, out)
        return out
    out, _, _ = tree.field(pos, ids, params.theta, params.C, params.K, params.p)
    return out


# ---------------------------------------------------------------------------
# coarsening


@dataclass
class CoarseningLevel:
    """One contraction step: the coarse graph, the fine->coarse node mapping,
    and the multiplicity of each coarse edge (aligned with graph.edges)."""

    graph: Graph
    mapping: np.ndarray
    multiplicity: np.ndarray


def _match_and_contract(node_count, edges, multiplicity, rng):
    """Contract one randomized maximal matching at the array level.

    Returns (coarse_n, coarse_edges, coarse_mult, parent) or None when nothing
    can be matched (no edges).
    """
    m = edges.shape[0]
    matched_with = np.full(node_count, -1, dtype=np.int64)
    any_matched = False
    for e in rng.permutation(m):
        u, v = edges[e, 0], edges[e, 1]
        if matched_with[u] == -1 and matched_with[v] == -1:
            matched_with[u] = v
            matched_with[v] = u
            any_matched = True
    if not any_matched:
        return None

    parent = np.full(node_count, -1, dtype=np.int64)
    nxt = 0
    for u in range(node_count):
        if parent[u] != -1:
            continue
        parent[u] = nxt
        w = matched_with[u]
        if w != -1:
            parent[w] = nxt
        nxt += 1

    cu = parent[edges[:, 0]]
    cv = parent[edges[:, 1]]
    keep = cu != cv
    lo = np.minimum(cu[keep], cv[keep])
    hi = np.maximum(cu[keep], cv[keep])
    if lo.size:
        key = lo * np.int64(nxt) + hi
        uniq, inverse = np.unique(key, return_inverse=True)
        merged = np.zeros(uniq.size, dtype=np.float64)
        np.add.at(merged, inverse, multiplicity[keep])
        coarse_edges = np.stack([uniq // nxt, uniq % nxt], axis=1).astype(np.int64)
    else:
        coarse_edges = np.empty((0, 2), dtype=np.int64)
        merged = np.empty(0, dtype=np.float64)
    return nxt, coarse_edges, merged, parent


def coarsen(g, rng):
    """One coarsening level of g: contract a randomized maximal matching.

    Matched pairs and unmatched nodes each become one coarse node; parallel
    coarse edges merge with summed multiplicity. Requires a connected graph
    with at least 2 nodes, which guarantees a strictly smaller coarse graph.
    """
    if g.node_count < 2:
        raise ParameterError("coarsening needs at least 2 nodes")
    if not is_connected(g):
        raise StructureError("coarsening requires a connected graph")
    result = _match_and_contract(
        g.node_count, g.edge_array(),
        np.ones(g.edge_count, dtype=np.float64), rng)
    coarse_n, coarse_edges, merged, parent = result
    labels = tuple(f"c{i}" for i in range(coarse_n))
    coarse_graph = Graph(
        node_count=coarse_n,
        edges=tuple((int(u), int(v)) for u, v in coarse_edges),
        kind=GraphKind.UNDIRECTED,
        labels=labels)
    return CoarseningLevel(graph=coarse_graph, mapping=parent,
                           multiplicity=merged.astype(np.int64))


# ---------------------------------------------------------------------------
# optimizer


def _build_allowed_matrix(n, predicate):
    allowed = np.zeros((n, n), dtype=np.bool_)
    for u in range(n):
        for v in range(u + 1, n):
            if predicate(u, v):
                allowed[u, v] = True
                allowed[v, u] = True
    return allowed


class _FieldEvaluator:
    """Net force + energy estimate for one level's positions.

    Chooses the repulsion backend once: spatial tree(s) for dim <= 3 and
    enough nodes, exact pairwise otherwise; group-restricted repulsion uses
    one tree per group side, arbitrary masks always go exact.
    """

    def __init__(self, edges, mult, params, groups=None, allowed=None):
        self.edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
        self.mult = np.ascontiguousarray(mult, dtype=np.float64)
        self.params = params
        self.groups = None if groups is None else np.ascontiguousarray(groups, dtype=np.int64)
        self.allowed = allowed

    def __call__(self, pos):
        """Returns (force, energy, jitter_count)."""
        params = self.params
        n, dim = pos.shape
        ids = np.arange(n, dtype=np.int64)
        use_tree = dim <= MAX_TREE_DIM and n >= EXACT_PAIRWISE_LIMIT
        rep = np.empty_like(pos)
        if self.allowed is not None:
            e_rep, jit = _kernels.exact_repulsion_matrix(
                pos, self.allowed, ids, params.C, params.K, params.p, rep)
        elif self.groups is not None:
            if use_tree:
                left = np.flatnonzero(self.groups == 0)
                right = np.flatnonzero(self.groups != 0)
                e_rep = 0.0
                jit = 0
                rep[:] = 0.0
                if left.size and right.size:
                    ltree = SpatialTree(pos[left], ids=ids[left])
                    rtree = SpatialTree(pos[right], ids=ids[right])
                    fl, el, jl = rtree.field(pos[left], ids[left],
                                             params.theta, params.C, params.K, params.p)
                    fr, er, jr = ltree.field(pos[right], ids[right],
                                             params.theta, params.C, params.K, params.p)
                    rep[left] = fl
                    rep[right] = fr
                    e_rep = 0.5 * (el + er)
                    jit = jl + jr
            else:
                e_rep, jit = _kernels.exact_repulsion_groups(
                    pos, self.groups, ids, params.C, params.K, params.p, rep)
        else:
            if use_tree:
                tree = SpatialTree(pos, ids=ids)
                rep, e_rep, jit = tree.field(pos, ids, params.theta,
                                             params.C, params.K, params.p)
                e_rep *= 0.5  # self-query counts every unordered pair twice
            else:
                e_rep, jit = _kernels.exact_repulsion(
                    pos, ids, params.C, params.K, params.p, rep)
        att = np.empty_like(pos)
        e_att = _kernels.attraction(pos, self.edges, self.mult, params.K, att)
        return rep + att, e_rep + e_att, jit


def _run_level(pos, evaluator, params):
    """Adaptive-step descent on one level.

    Each sweep moves every node along its net force by at most the current
    step; the step grows (step/t) after PROGRESS_STREAK consecutive energy
    decreases and shrinks (t*step) on any increase. Returns the best-energy
    snapshot seen, so the result never has higher (estimated) energy than
    the input. Stops when the largest displacement falls below tol*K.
    """
    pos = np.array(pos, dtype=np.float64, copy=True)
    n = pos.shape[0]
    step = params.step0
    t = params.cooling
    force, energy, jitters = evaluator(pos)
    best_pos = pos.copy()
    best_energy = energy
    prev_energy = energy
    progress = 0
    converged = False
    iterations = 0
    for it in range(params.max_iters):
        if not np.isfinite(force).all():
            raise LayoutError(f"non-finite force at iteration {it}")
        mag = np.linalg.norm(force, axis=1)
        safe = np.where(mag > 0.0, mag, 1.0)
        scale = np.where(mag > 0.0, np.minimum(mag, step) / safe, 0.0)
        disp = force * scale[:, None]
        pos = pos + disp
        iterations = it + 1
        force, energy, jit = evaluator(pos)
        jitters += jit
        if energy < best_energy:
            best_energy = energy
            best_pos = pos.copy()
        if energy < prev_energy:
            progress += 1
            if progress >= PROGRESS_STREAK:
                progress = 0
                step = step / t
        else:
            progress = 0
            step = t * step
        prev_energy = energy
        if n == 0 or float(np.linalg.norm(disp, axis=1).max()) < params.tol * params.K:
            converged = True
            break
    return best_pos, best_energy, iterations, converged, jitters


def _resolve_mask(n, repulsion_mask):
    """Split a pair-predicate into the fast group path or a dense matrix."""
    if repulsion_mask is None:
        return None, None
    groups = getattr(repulsion_mask, "groups", None)
    if groups is not None:
        groups = np.ascontiguousarray(groups, dtype=np.int64)
        if groups.shape != (n,):
            raise ParameterError("mask groups must have one entry per node")
        return groups, None
    return None, _build_allowed_matrix(n, repulsion_mask)


def layout_single_level(g, init, params, repulsion_mask=None):
    """Refine one layout by adaptive-step force descent; deterministic.

    repulsion_mask, when given, is a pair-predicate deciding whether a node
    pair repels (attraction over edges is never masked). A mask exposing a
    `.groups` integer array (one group id per node) enables the fast
    cross-group backend; arbitrary predicates fall back to an O(n^2) table.
    """
    pos0 = np.asarray(init.positions, dtype=np.float64)
    if pos0.shape != (g.node_count, params.dim):
        raise ParameterError(
            f"init has shape {pos0.shape}, expected ({g.node_count}, {params.dim})")
    groups, allowed = _resolve_mask(g.node_count, repulsion_mask)
    evaluator = _FieldEvaluator(g.edge_array(),
                                np.ones(g.edge_count, dtype=np.float64),
                                params, groups=groups, allowed=allowed)
    best_pos, best_energy, iters, converged, jitters = _run_level(pos0, evaluator, params)
    return Layout(positions=best_pos, labels=g.labels, energy=float(best_energy),
                  iterations=iters, converged=converged, jitter_events=jitters,
                  seed=params.seed)


def random_layout(node_count, params, rng):
    """Uniform positions in a box of side K*sqrt(node_count) per axis."""
    side = params.K * math.sqrt(max(node_count, 1))
    return rng.uniform(0.0, side, size=(node_count, params.dim))


def layout_multilevel(g, params):
    """Full pipeline: coarsen, solve coarsest from random init, prolong, refine.

    The graph must be connected (take the largest connected component first).
    Everything — matchings, initialization, prolongation jitter — is driven
    by one generator seeded with params.seed, so layouts are reproducible.
    """
    if g.node_count == 0:
        raise StructureError("cannot lay out an empty graph")
    if not is_connected(g):
        raise StructureError(
            "graph is disconnected; take the largest connected component first")
    rng = np.random.default_rng(params.seed)

    edges0 = g.edge_array()
    mult0 = np.ones(edges0.shape[0], dtype=np.float64)
    level_specs = [(g.node_count, edges0, mult0)]
    parents = []
    cur_n, cur_edges, cur_mult = g.node_count, edges0, mult0
    while cur_n > params.coarsen_threshold:
        result = _match_and_contract(cur_n, cur_edges, cur_mult, rng)
        if result is None or result[0] >= cur_n:
            break
        cur_n, cur_edges, cur_mult, parent = result
        level_specs.append((cur_n, cur_edges, cur_mult))
        parents.append(parent)

    top = len(level_specs) - 1
    pos = random_layout(level_specs[top][0], params, rng)
    total_iters = 0
    total_jitters = 0
    energy = math.nan
    converged = False
    for li in range(top, -1, -1):
        n_l, e_l, m_l = level_specs[li]
        evaluator = _FieldEvaluator(e_l, m_l, params)
        pos, energy, iters, converged, jitters = _run_level(pos, evaluator, params)
        total_iters += iters
        total_jitters += jitters
        if li > 0:
            parent = parents[li - 1]
            direction = rng.normal(size=(parent.shape[0], params.dim))
            norms = np.linalg.norm(direction, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            pos = pos[parent] + (0.01 * params.K) * (direction / norms)
    return Layout(positions=pos, labels=g.labels, energy=float(energy),
                  iterations=total_iters, converged=converged,
                  jitter_events=total_jitters, seed=params.seed)


# ---------------------------------------------------------------------------
# scoring and serialization


def distance_score(layout, u, v):
    """Link-prediction score -||x_u - x_v||: higher means more likely."""
    if u == v:
        raise ParameterError("distance_score needs two distinct nodes")
    delta = layout.positions[u] - layout.positions[v]
    return -float(np.linalg.norm(delta))


def distance_scores(layout, pairs):
    """Vectorized distance_score over an (m, 2) index array."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    delta = layout.positions[pairs[:, 0]] - layout.positions[pairs[:, 1]]
    return -np.linalg.norm(delta, axis=1)


def save_layout(layout, target):
    """Write "label x1 ... xd" lines (17 significant digits) with a
    "# dim=<d> seed=<s>" header. `target` is a path or text file object."""
    if layout.labels is None:
        raise ParameterError("layout has no labels to serialize")
    if len(layout.labels) != layout.node_count:
        raise ParameterError("label count does not match layout size")
    seed = 0 if layout.seed is None else int(layout.seed)
    lines = [f"# dim={layout.dim} seed={seed}"]
    for label, row in zip(layout.labels, layout.positions):
        coords = " ".join("%.17g" % c for c in row)
        lines.append(f"{label} {coords}")
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_layout(source):
    """Inverse of save_layout; restores labels, positions, dim and seed."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParameterError("missing layout header line")
    header = lines[0].lstrip("#").split()
    fields = dict(item.split("=", 1) for item in header if "=" in item)
    try:
        dim = int(fields["dim"])
        seed = int(fields["seed"])
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"bad layout header: {lines[0]!r}") from exc
    labels = []
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ParameterError(f"line {ln}: expected label + {dim} coordinates")
        labels.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    positions = np.asarray(rows, dtype=np.float64).reshape(len(labels), dim)
    return Layout(positions=positions, labels=tuple(labels), seed=seed)
