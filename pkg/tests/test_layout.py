import io

import numpy as np
import pytest

from springlink.errors import LayoutError, ParameterError, StructureError
from springlink.graphs import Graph, GraphKind, generate_icosphere_graph
from springlink.sfdp import (Layout, SfdpParams, layout_multilevel,
                             layout_single_level, load_layout, save_layout,
                             system_energy)


def ug(n, edges):
    return Graph(node_count=n, edges=tuple(edges), kind=GraphKind.UNDIRECTED,
                 labels=tuple(f"v{i}" for i in range(n)))


def random_connected(rng, n, extra=2.0):
    """Random spanning tree plus extra chords."""
    edges = {(int(min(u, u2)), int(max(u, u2)))
             for u, u2 in ((i, int(rng.integers(0, i))) for i in range(1, n))}
    m = int(extra * n)
    for u, v in rng.integers(0, n, (m, 2)):
        if u != v:
            edges.add((int(min(u, v)), int(max(u, v))))
    return ug(n, sorted(edges))


# ---------------------------------------------------------------------------
# single level


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_two_node_equilibrium(p):
    g = ug(2, [(0, 1)])
    params = SfdpParams(p=p, seed=2, tol=1e-4, max_iters=3000)
    lay = layout_multilevel(g, params)
    d = np.linalg.norm(lay.positions[0] - lay.positions[1])
    assert abs(d - 0.2 ** (1.0 / (p + 2.0))) < 1e-3


def test_star_k15_leaves_equidistant():
    g = ug(6, [(0, i) for i in range(1, 6)])
    lay = layout_multilevel(g, SfdpParams(seed=5, tol=1e-4, max_iters=3000))
    d = np.linalg.norm(lay.positions[1:] - lay.positions[0], axis=1)
    assert (d.max() - d.min()) / d.mean() < 0.01


def test_single_level_energy_never_worsens():
    rng = np.random.default_rng(6)
    g = random_connected(rng, 40)
    params = SfdpParams(seed=0)
    for trial in range(3):
        init = Layout(positions=np.random.default_rng(trial).uniform(0, 8, (40, 2)))
        out = layout_single_level(g, init, params)
        e0 = system_energy(g, init, params)
        e1 = system_energy(g, out, params)
        assert e1 <= e0 + 1e-9


def test_single_level_rejects_shape_mismatch():
    g = ug(3, [(0, 1), (1, 2)])
    with pytest.raises(ParameterError):
        layout_single_level(g, Layout(positions=np.zeros((3, 3))), SfdpParams(dim=2))


def test_non_finite_forces_report_iteration():
    g = ug(2, [(0, 1)])
    init = Layout(positions=np.array([[0.0, 0.0], [np.inf, 0.0]]))
    with pytest.raises(LayoutError, match="iteration"):
        layout_single_level(g, init, SfdpParams())


def test_repulsion_mask_predicate_path():
    """An explicit pair-predicate disables chosen repulsion terms."""
    g = ug(2, [])
    init = Layout(positions=np.array([[0.0, 0.0], [0.5, 0.0]]))
    # no repulsion at all: nothing moves
    frozen = layout_single_level(g, init, SfdpParams(max_iters=5),
                                 repulsion_mask=lambda u, v: False)
    assert np.allclose(frozen.positions, init.positions)
    # with repulsion the pair drifts apart
    free = layout_single_level(g, init, SfdpParams(max_iters=5))
    d = np.linalg.norm(free.positions[0] - free.positions[1])
    assert d > 0.5


# ---------------------------------------------------------------------------
# multilevel


def test_multilevel_deterministic():
    g = generate_icosphere_graph(1)
    a = layout_multilevel(g, SfdpParams(dim=3, seed=11))
    b = layout_multilevel(g, SfdpParams(dim=3, seed=11))
    assert np.array_equal(a.positions, b.positions)
    c = layout_multilevel(g, SfdpParams(dim=3, seed=12))
    assert not np.array_equal(a.positions, c.positions)


def test_multilevel_requires_connected_graph():
    with pytest.raises(StructureError):
        layout_multilevel(ug(4, [(0, 1), (2, 3)]), SfdpParams())


def test_small_graph_skips_coarsening():
    g = ug(4, [(0, 1), (1, 2), (2, 3)])
    lay = layout_multilevel(g, SfdpParams(seed=1))
    assert lay.positions.shape == (4, 2)
    assert lay.converged


def test_icosphere_recovers_spherical_shell():
    g = generate_icosphere_graph(2)
    lay = layout_multilevel(g, SfdpParams(dim=3, seed=3))
    centered = lay.positions - lay.positions.mean(axis=0)
    r = np.linalg.norm(centered, axis=1)
    assert np.abs(r - r.mean()).max() / r.mean() < 0.10


def test_multilevel_beats_max_iters_budget_on_big_graph():
    """Hierarchy depth: a 300-node graph must coarsen below the threshold."""
    rng = np.random.default_rng(9)
    g = random_connected(rng, 300, extra=1.5)
    lay = layout_multilevel(g, SfdpParams(seed=4, max_iters=200))
    assert lay.positions.shape == (300, 2)
    assert np.isfinite(lay.positions).all()
    assert lay.iterations > 0


def test_dim_above_three_uses_exact_backend():
    g = generate_icosphere_graph(1)
    lay = layout_multilevel(g, SfdpParams(dim=5, seed=0, max_iters=120))
    assert lay.positions.shape == (42, 5)
    assert np.isfinite(lay.positions).all()


# ---------------------------------------------------------------------------
# serialization


def test_layout_save_load_round_trip():
    g = generate_icosphere_graph(0)
    lay = layout_multilevel(g, SfdpParams(dim=3, seed=21))
    buf = io.StringIO()
    save_layout(lay, buf)
    text = buf.getvalue()
    assert text.startswith("# dim=3 seed=21\n")
    back = load_layout(io.StringIO(text))
    assert back.labels == lay.labels
    assert back.dim == 3
    assert back.seed == 21
    assert np.array_equal(back.positions, lay.positions)  # 17 digits: exact


def test_load_layout_rejects_missing_header():
    with pytest.raises(ParameterError):
        load_layout(io.StringIO("v0 1.0 2.0\n"))


def test_load_layout_rejects_wrong_column_count():
    with pytest.raises(ParameterError, match="line 2"):
        load_layout(io.StringIO("# dim=2 seed=0\nv0 1.0\n"))


def test_save_layout_requires_labels():
    with pytest.raises(ParameterError):
        save_layout(Layout(positions=np.zeros((2, 2))), io.StringIO())
