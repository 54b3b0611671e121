"""Local similarity indices and externally computed score tables.

CN(u,v) = |N(u) ∩ N(v)|, AA(u,v) = sum over common neighbors z of 1/|N(z)|
(a log-degree variant is available behind a flag), PA(u,v) = |N(u)|·|N(v)|.
All three read undirected neighborhoods; directed graphs must be projected
first. Matrix-factorization or random-walk baselines enter only as score
files produced by external tooling.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, StructureError
from .graphs import GraphKind, canonical_pair, degree_array

log = logging.getLogger(__name__)


def _check_pair(g, u, v):
    if g.kind is GraphKind.DIRECTED:
        raise StructureError(
            "similarity indices read undirected neighborhoods; "
            "project the graph first")
    if u == v:
        raise ValueError("similarity indices need two distinct nodes")


def common_neighbors(g, u, v):
    """Number of shared neighbors of u and v."""
    _check_pair(g, u, v)
    return len(g.neighbors(u) & g.neighbors(v))


def adamic_adar(g, u, v, log_weight=False):
    """Common neighbors weighted by inverse degree, 1/|N(z)|.

    With log_weight=True uses the 1/log|N(z)| weighting instead. Every
    common neighbor touches both u and v, so its degree is at least 2 and
    both weightings are finite.
    """
    _check_pair(g, u, v)
    shared = g.neighbors(u) & g.neighbors(v)
    if log_weight:
        return sum(1.0 / math.log(len(g.neighbors(z))) for z in shared)
    return sum(1.0 / len(g.neighbors(z)) for z in shared)


def preferential_attachment(g, u, v):
    """Degree product |N(u)|·|N(v)|."""
    if u == v:
        raise ValueError("similarity indices need two distinct nodes")
    deg = degree_array(g)
    return int(deg[u]) * int(deg[v])


@dataclass
class ScoreTable:
    """Pair-indexed scores, higher = more likely. Keys are canonical (u < v)
    on undirected/bipartite graphs and ordered on directed ones."""

    entries: dict = field(default_factory=dict)
    directed: bool = False

    def key(self, u, v):
        return (u, v) if self.directed else canonical_pair(u, v)

    def get(self, u, v):
        return self.entries.get(self.key(u, v))

    def __len__(self):
        return len(self.entries)


def load_external_scores(source, g):
    """Parse "label_u label_v score" lines into a ScoreTable.

    '#' and '%' comment lines and blank lines are skipped. Duplicate pairs
    keep the last value and log a warning; unresolvable labels and
    non-numeric scores raise with their line number.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    table = ScoreTable(directed=g.kind is GraphKind.DIRECTED)
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "%")):
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ParseError("expected 'label_u label_v score'", line=ln)
        try:
            u = g.index_of(parts[0])
            v = g.index_of(parts[1])
        except KeyError as exc:
            raise ParseError(str(exc), line=ln) from None
        try:
            score = float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric score {parts[2]!r}", line=ln) from None
        if not math.isfinite(score):
            raise ParseError(f"non-finite score {parts[2]!r}", line=ln)
        key = table.key(u, v)
        if key in table.entries:
            log.warning("duplicate score for pair %s %s at line %d; keeping the last",
                        parts[0], parts[1], ln)
        table.entries[key] = score
    return table
