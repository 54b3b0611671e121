"""Structural link-prediction protocol.

One trial: hide a fraction of edges while keeping the graph connected
(shuffled single pass over a union-find of retained edges), sample an equal
number of negative non-edges under the chosen regime, fit a scorer on the
train graph only, and compute the AUC of hidden-edge scores against
negative scores. Trials differ only in their seed; statistics aggregate the
per-trial AUC values.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import baselines, sfdp, variants
from .errors import ParameterError, SamplingError, StructureError
from .graphs import (GraphKind, canonical_pair, degree_array, is_connected,
                     undirected_projection, with_edges)

log = logging.getLogger(__name__)

REGIMES = ("uniform", "bipartite_weighted", "directed_difficult")
REJECTION_CAP_FACTOR = 100


@dataclass
class EvalSplit:
    """One trial's edge partition: retained train edges, hidden positives,
    and sampled negatives (empty until sample_negatives fills them)."""

    train_edges: tuple
    positives: tuple
    negatives: tuple = ()
    seed: int = None
    regime: str = None
    fraction: float = None
    shortfall: bool = False


@dataclass(frozen=True)
class TrialStats:
    auc_values: tuple
    mean: float
    std: float
    ci95_halfwidth: float

    @classmethod
    def from_values(cls, values):
        values = tuple(float(v) for v in values)
        if not values:
            raise ParameterError("no AUC values to aggregate")
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        ci = 1.96 * std / math.sqrt(len(values))
        return cls(auc_values=values, mean=mean, std=std, ci95_halfwidth=ci)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def split_edges(g, fraction, rng):
    """Hide ceil(fraction*|E|) edges without disconnecting the graph.

    Edges are visited in shuffled order; an edge whose endpoints are already
    connected by retained edges is hidden (until the quota fills), everything
    else is retained. If fewer edges than the quota are hideable — every
    remaining edge a bridge — the split carries a shortfall flag.
    """
    if not 0.0 < fraction < 1.0:
        raise ParameterError("fraction must lie in (0, 1)")
    if not is_connected(g):
        raise StructureError("edge splitting requires a connected graph")
    edges = g.edges
    quota = math.ceil(fraction * len(edges))
    uf = _UnionFind(g.node_count)
    hidden = []
    retained = []
    for e in rng.permutation(len(edges)):
        u, v = edges[e]
        if len(hidden) < quota and uf.find(u) == uf.find(v):
            hidden.append((u, v))
        else:
            uf.union(u, v)
            retained.append((u, v))
    shortfall = len(hidden) < quota
    if shortfall:
        log.warning("edge split shortfall: hid %d of the requested %d edges",
                    len(hidden), quota)
    return EvalSplit(train_edges=tuple(retained), positives=tuple(hidden),
                     fraction=fraction, shortfall=shortfall)


def _pair_universe_size(g):
    n = g.node_count
    if g.kind is GraphKind.DIRECTED:
        return n * (n - 1)
    if g.kind is GraphKind.BIPARTITE:
        left = sum(1 for s in g.partition if s == 0)
        return left * (n - left)
    return n * (n - 1) // 2


def _store_key(g, u, v):
    return (u, v) if g.kind is GraphKind.DIRECTED else canonical_pair(u, v)


def _draw_uniform(g, rng, left=None, right=None):
    n = g.node_count
    if g.kind is GraphKind.BIPARTITE:
        u = left[rng.integers(left.size)]
        v = right[rng.integers(right.size)]
        return u, v
    u = int(rng.integers(n))
    v = int(rng.integers(n))
    if u == v:
        return None
    if g.kind is GraphKind.DIRECTED:
        return u, v
    return canonical_pair(u, v)


def sample_negatives(g, count, regime, rng):
    """Sample `count` distinct non-edges of g under a regime.

    uniform: rejection-sampled uniform pairs (unordered, cross-partition, or
    ordered depending on graph kind). bipartite_weighted: half uniform, half
    with endpoints drawn proportionally to their degree in g.
    directed_difficult: half uniform, half uniformly from the reversed-edge
    non-edges {(u,v): (v,u) in E, (u,v) not in E}; a too-small difficult set
    is taken whole and topped up uniformly, with a warning.
    """
    if count <= 0:
        raise ParameterError("count must be positive")
    if regime not in REGIMES:
        raise ParameterError(f"unknown regime {regime!r}")
    if _pair_universe_size(g) - g.edge_count < count:
        raise SamplingError("not enough non-edges to sample from")
    if regime == "bipartite_weighted" and g.kind is not GraphKind.BIPARTITE:
        raise StructureError("bipartite_weighted regime requires a bipartite graph")
    if regime == "directed_difficult" and g.kind is not GraphKind.DIRECTED:
        raise StructureError("directed_difficult regime requires a directed graph")

    left = right = None
    if g.kind is GraphKind.BIPARTITE:
        part = np.asarray(g.partition, dtype=np.int64)
        left = np.flatnonzero(part == 0)
        right = np.flatnonzero(part == 1)

    chosen = []
    seen = set()

    def admit(u, v):
        key = _store_key(g, u, v)
        if key in seen or g.has_edge(u, v):
            return False
        seen.add(key)
        chosen.append(key if g.kind is not GraphKind.BIPARTITE else (u, v))
        return True

    if regime == "directed_difficult":
        difficult = [(v, u) for u, v in g.edges if not g.has_edge(v, u)]
        want = count // 2
        if not difficult:
            log.warning("no difficult pairs exist; sampling all negatives uniformly")
        elif len(difficult) <= want:
            if len(difficult) < want:
                log.warning("only %d difficult pairs available for a half of %d; "
                            "filling the rest uniformly", len(difficult), want)
            for u, v in difficult:
                admit(u, v)
        else:
            for i in rng.permutation(len(difficult))[:want]:
                admit(*difficult[i])

    if regime == "bipartite_weighted":
        deg = degree_array(g).astype(np.float64)
        wl = deg[left]
        wr = deg[right]
        if wl.sum() == 0 or wr.sum() == 0:
            raise SamplingError("degree-weighted sampling needs edges on both sides")
        wl = wl / wl.sum()
        wr = wr / wr.sum()
        want = count // 2
        attempts = 0
        cap = REJECTION_CAP_FACTOR * count
        while len(chosen) < want:
            attempts += 1
            if attempts > cap:
                raise SamplingError("rejection sampling exceeded its attempt cap")
            u = int(rng.choice(left, p=wl))
            v = int(rng.choice(right, p=wr))
            admit(u, v)

    attempts = 0
    cap = REJECTION_CAP_FACTOR * count
    while len(chosen) < count:
        attempts += 1
        if attempts > cap:
            raise SamplingError("rejection sampling exceeded its attempt cap")
        pair = _draw_uniform(g, rng, left, right)
        if pair is not None:
            admit(*pair)
    return tuple(chosen)


def auc(scores_pos, scores_neg, tie_policy="strict"):
    """Fraction of (positive, negative) pairs ranked correctly.

    strict counts only score_pos > score_neg (ties lose); half gives ties
    0.5. Computed by sorting the negatives and binary-searching each
    positive, which reproduces the brute-force double loop exactly.
    """
    if tie_policy not in ("strict", "half"):
        raise ParameterError(f"unknown tie policy {tie_policy!r}")
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ParameterError("AUC needs non-empty score lists")
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    wins = float(below.sum())
    if tie_policy == "half":
        upto = np.searchsorted(neg_sorted, pos, side="right")
        wins += 0.5 * float((upto - below).sum())
    return wins / (pos.size * neg.size)


def run_trials(g, scorer, fraction, trials, regime="uniform", base_seed=0,
               tie_policy="strict"):
    """Repeated split/fit/score evaluation; trial i draws from seed base_seed+i.

    The scorer sees only the train graph during fitting; positives and
    negatives are scored afterwards. Returns TrialStats over per-trial AUCs.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    values = []
    for i in range(trials):
        split = run_single_trial_split(g, fraction, regime, base_seed + i)
        values.append(score_split(g, scorer, split, tie_policy))
    return TrialStats.from_values(values)


def run_single_trial_split(g, fraction, regime, seed):
    """One seeded split with negatives attached."""
    rng = np.random.default_rng(seed)
    split = split_edges(g, fraction, rng)
    if not split.positives:
        raise SamplingError("split hid no edges; cannot evaluate this graph")
    negatives = sample_negatives(g, len(split.positives), regime, rng)
    return replace(split, negatives=negatives, seed=seed, regime=regime)


def score_split(g, scorer, split, tie_policy="strict"):
    """Fit the scorer on the split's train graph and return the AUC."""
    train_graph = with_edges(g, split.train_edges)
    scorer.fit(train_graph)
    pos_scores = scorer.score_pairs(split.positives)
    neg_scores = scorer.score_pairs(split.negatives)
    return auc(pos_scores, neg_scores, tie_policy)


# ---------------------------------------------------------------------------
# scorers


class SfdpScorer:
    """Multilevel spring-electrical embedding; score = negated distance."""

    def __init__(self, params=None):
        self.params = params if params is not None else sfdp.SfdpParams()
        self.layout = None

    def fit(self, train_graph):
        g = train_graph
        if g.kind is GraphKind.DIRECTED:
            g = undirected_projection(g)
        self.layout = sfdp.layout_multilevel(g, self.params)
        self._graph = g

    def score_pairs(self, pairs):
        return sfdp.distance_scores(self.layout, np.asarray(pairs, dtype=np.int64))


class BiSfdpScorer:
    """Bipartite variant: repulsion only across the partition."""

    def __init__(self, params=None):
        self.params = params if params is not None else sfdp.SfdpParams()
        self.layout = None

    def fit(self, train_graph):
        if train_graph.kind is not GraphKind.BIPARTITE:
            raise StructureError("bi-sfdp requires a bipartite graph")
        self.layout = variants.bi_sfdp_layout(train_graph, self.params)

    def score_pairs(self, pairs):
        return sfdp.distance_scores(self.layout, np.asarray(pairs, dtype=np.int64))


class DiSfdpScorer:
    """Directed variant via node splitting.

    Directed graphs embed as-is; undirected graphs are first oriented low
    degree -> high degree on the train graph, and unordered test pairs are
    oriented by the same rule before scoring.
    """

    def __init__(self, params=None):
        self.params = params if params is not None else sfdp.SfdpParams()
        self.layout = None
        self.split_map = None
        self._orient_deg = None

    def fit(self, train_graph):
        if train_graph.kind is GraphKind.BIPARTITE:
            raise StructureError("di-sfdp expects a directed or undirected graph")
        if train_graph.kind is GraphKind.UNDIRECTED:
            self._orient_deg = degree_array(train_graph)
        else:
            self._orient_deg = None
        self.layout, self.split_map = variants.di_sfdp_layout(
            train_graph, self.params)

    def _orient_pairs(self, pairs):
        deg = self._orient_deg
        out = []
        for u, v in pairs:
            if deg[u] < deg[v] or (deg[u] == deg[v] and u < v):
                out.append((u, v))
            else:
                out.append((v, u))
        return out

    def score_pairs(self, pairs):
        if self._orient_deg is not None:
            pairs = self._orient_pairs(pairs)
        return variants.di_scores(self.layout, self.split_map, pairs)


class _LocalScorer:
    """Shared plumbing for neighborhood indices: project directed trains."""

    def fit(self, train_graph):
        g = train_graph
        if g.kind is GraphKind.DIRECTED:
            g = undirected_projection(g)
        self.graph = g

    def score_pairs(self, pairs):
        g = self.graph
        return np.array([self._score(g, u, v) for u, v in pairs], dtype=np.float64)


class CommonNeighborsScorer(_LocalScorer):
    @staticmethod
    def _score(g, u, v):
        return baselines.common_neighbors(g, u, v)


class AdamicAdarScorer(_LocalScorer):
    def __init__(self, log_weight=False):
        self.log_weight = log_weight

    def _score(self, g, u, v):
        return baselines.adamic_adar(g, u, v, log_weight=self.log_weight)


class PreferentialAttachmentScorer(_LocalScorer):
    @staticmethod
    def _score(g, u, v):
        return baselines.preferential_attachment(g, u, v)


class ExternalScorer:
    """Scores read from a pre-computed table; fitting is a no-op.

    Raises if any requested pair is missing, listing the offending pairs, so
    incomplete score files fail loudly instead of skewing the AUC.
    """

    def __init__(self, table, graph):
        self.table = table
        self.graph = graph

    def fit(self, train_graph):
        pass

    def score_pairs(self, pairs):
        scores = []
        missing = []
        for u, v in pairs:
            s = self.table.get(u, v)
            if s is None:
                missing.append(f"{self.graph.labels[u]} {self.graph.labels[v]}")
            else:
                scores.append(s)
        if missing:
            shown = ", ".join(missing[:20])
            more = "" if len(missing) <= 20 else f" (+{len(missing) - 20} more)"
            raise StructureError(
                f"score table is missing {len(missing)} test pair(s): {shown}{more}")
        return np.asarray(scores, dtype=np.float64)


SCORER_NAMES = ("sfdp", "bi-sfdp", "di-sfdp", "cn", "aa", "pa", "external-file")


def make_scorer(name, params=None, aa_log=False, score_table=None, graph=None):
    """Instantiate a scorer by registry name."""
    if name == "sfdp":
        return SfdpScorer(params)
    if name == "bi-sfdp":
        return BiSfdpScorer(params)
    if name == "di-sfdp":
        return DiSfdpScorer(params)
    if name == "cn":
        return CommonNeighborsScorer()
    if name == "aa":
        return AdamicAdarScorer(log_weight=aa_log)
    if name == "pa":
        return PreferentialAttachmentScorer()
    if name == "external-file":
        if score_table is None or graph is None:
            raise ParameterError("external-file scorer needs a score table and graph")
        return ExternalScorer(score_table, graph)
    raise ParameterError(f"unknown scorer {name!r}; choose from {SCORER_NAMES}")


# ---------------------------------------------------------------------------
# split serialization


def _write_pairs(path, g, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in pairs:
            fh.write(f"{g.labels[u]} {g.labels[v]}\n")


def _read_pairs(path, g):
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith(("#", "%")):
                continue
            a, b = line.split()[:2]
            pairs.append((g.index_of(a), g.index_of(b)))
    return tuple(pairs)


def save_split(split, g, directory, prefix="split"):
    """Write train/positive/negative pair files plus a JSON manifest, so the
    identical split can feed external scorers. Returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    names = {
        "train": f"{prefix}.train.edges",
        "positives": f"{prefix}.pos.pairs",
        "negatives": f"{prefix}.neg.pairs",
    }
    _write_pairs(os.path.join(directory, names["train"]), g, split.train_edges)
    _write_pairs(os.path.join(directory, names["positives"]), g, split.positives)
    _write_pairs(os.path.join(directory, names["negatives"]), g, split.negatives)
    manifest = {
        "seed": split.seed,
        "fraction": split.fraction,
        "regime": split.regime,
        "shortfall": split.shortfall,
        "files": names,
    }
    manifest_path = os.path.join(directory, f"{prefix}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def load_split(manifest_path, g):
    """Read back a split written by save_split."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(manifest_path)
    files = manifest["files"]
    return EvalSplit(
        train_edges=_read_pairs(os.path.join(base, files["train"]), g),
        positives=_read_pairs(os.path.join(base, files["positives"]), g),
        negatives=_read_pairs(os.path.join(base, files["negatives"]), g),
        seed=manifest.get("seed"),
        regime=manifest.get("regime"),
        fraction=manifest.get("fraction"),
        shortfall=bool(manifest.get("shortfall", False)),
    )
