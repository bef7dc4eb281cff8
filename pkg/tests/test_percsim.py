"""Sampling, cluster decomposition, crossings, curves, and space-time model."""
import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from isoperc import isoradial as ir
from isoperc import percsim as ps
from isoperc import tiling as tl
from isoperc.errors import GeometryError, ValidationError, WrongModelError

S2 = np.sqrt(2.0)


def square_graph(n):
    return ir.build_isoradial(tl.periodic_tiling("square", n), 0, validate=False)


def path_graph():
    # two collinear unit edges; angle pi/3 gives chord length 1
    return ir.IsoradialGraph(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
        edges=np.array([[0, 1], [1, 2]]),
        edge_angles=np.array([np.pi / 3, np.pi / 3]),
        faces=[],
        face_centers=np.empty((0, 2)),
        boundary_vertices=np.array([0, 1, 2]),
    )


# ------------------------------------------------------------- sampling


def test_sampling_rejects_rc_weights():
    g = square_graph(3)
    w = ir.rc_weights(g, 2.0)
    with pytest.raises(WrongModelError):
        ps.sample_configuration(w, 1)


def test_sampling_extremes_and_concentration():
    tiny = ir.EdgeWeights(model="percolation", beta=1.0, p=np.full(10**6, 1e-15))
    assert ps.sample_configuration(tiny, 7).n_open == 0
    huge = ir.EdgeWeights(model="percolation", beta=1.0, p=np.full(10**6, 1 - 1e-12))
    assert ps.sample_configuration(huge, 7).n_open >= 10**6 * (1 - 1e-6)
    half = ir.EdgeWeights(model="percolation", beta=1.0, p=np.full(10**6, 0.5))
    frac = ps.sample_configuration(half, 7).n_open / 10**6
    assert abs(frac - 0.5) < 0.002


def test_sampling_deterministic():
    g = square_graph(4)
    w = ir.percolation_weights(g)
    c1 = ps.sample_configuration(w, 123, graph=g)
    c2 = ps.sample_configuration(w, 123, graph=g)
    assert np.array_equal(c1.open, c2.open)
    assert c1.graph_hash == g.content_hash()
    assert c1.weights_key == w.key


def test_coupled_configurations_nested():
    g = ir.build_isoradial(tl.penrose_tiling(4.0), 0, validate=False)
    ws = [ir.percolation_weights(g, b) for b in (0.5, 1.0, 1.6)]
    lo, mid, hic = ps.coupled_configurations(ws, 99)
    assert not np.any(lo.open & ~mid.open)
    assert not np.any(mid.open & ~hic.open)


# ------------------------------------------------------------- clusters


def _canonical(labels):
    order = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = order.setdefault(lab, len(order))
    return out


@pytest.mark.parametrize("maker", [
    lambda: square_graph(4),
    lambda: ir.build_isoradial(tl.periodic_tiling("tri-hex", 3), 0, validate=False),
    lambda: ir.build_isoradial(tl.penrose_tiling(3.0), 0, validate=False),
])
def test_labels_match_sparse_oracle(maker):
    g = maker()
    rng = np.random.default_rng(5)
    for _ in range(100):
        c = ps.Configuration(open=rng.random(g.n_edges) < rng.uniform(0.1, 0.9))
        dec = ps.cluster_decomposition(g, c)
        open_e = g.edges[c.open]
        mat = csr_matrix(
            (np.ones(len(open_e)), (open_e[:, 0], open_e[:, 1])),
            shape=(g.n_vertices, g.n_vertices),
        )
        _, ref = connected_components(mat, directed=False)
        assert np.array_equal(_canonical(dec.labels), _canonical(ref))
        assert dec.sizes.sum() == g.n_vertices


def test_cluster_extremes():
    g = square_graph(4)
    closed = ps.cluster_decomposition(g, ps.Configuration(open=np.zeros(g.n_edges, bool)))
    assert closed.n_clusters == g.n_vertices
    assert np.all(closed.sizes == 1)
    full = ps.cluster_decomposition(g, ps.Configuration(open=np.ones(g.n_edges, bool)))
    assert full.n_clusters == 1
    assert full.sizes[0] == g.n_vertices


def test_cluster_mismatch_errors():
    g = square_graph(3)
    with pytest.raises(ValidationError):
        ps.cluster_decomposition(g, ps.Configuration(open=np.zeros(5, bool)))
    other = square_graph(4)
    c = ps.sample_configuration(ir.percolation_weights(other), 1, graph=other)
    with pytest.raises(ValidationError):
        ps.cluster_decomposition(g, c)


def test_cluster_radius_examples():
    g = path_graph()
    dec = ps.cluster_decomposition(g, ps.Configuration(open=np.array([True, True])))
    assert ps.cluster_radius(g, dec, 0) == pytest.approx(2.0)
    dec0 = ps.cluster_decomposition(g, ps.Configuration(open=np.array([False, False])))
    assert ps.cluster_radius(g, dec0, 1) == 0.0


def test_one_arm_radius_one_matches_exact():
    # rad >= 1 means some incident edge is open: 1 - (1/2)^4 on the square
    g = square_graph(24)
    w = ir.percolation_weights(g)
    curve = ps.one_arm_curve(g, w, [0.0, 1.0], 600, 11)
    assert curve.estimates[0] == 1.0
    se = max(curve.stderrs[1], 1e-4)
    assert abs(curve.estimates[1] - 15.0 / 16.0) < 3 * se


# ------------------------------------------------------------- crossings


def box_for_grid(corner_uv, cols, rows, direction="horizontal"):
    """Tilted box holding a cols x rows block of the diagonal lattice."""
    u0, v0 = corner_uv
    cu = u0 + (cols - 1) * S2 / 2.0
    cv = v0 + (rows - 1) * S2 / 2.0
    e1 = np.array([S2 / 2, S2 / 2])
    e2 = np.array([-S2 / 2, S2 / 2])
    center = cu * e1 + cv * e2
    return ps.CrossingSpec(
        center=(center[0], center[1]),
        width=cols * S2,
        height=rows * S2,
        angle=np.pi / 4,
        direction=direction,
    )


def test_small_box_exact_half_and_monte_carlo():
    t = tl.periodic_tiling("square", 14)
    g = ir.build_isoradial(t, 0, validate=False)
    w = ir.percolation_weights(g)
    # 3 columns x 2 rows of the primal diagonal lattice, corner at (6, 6)
    spec = box_for_grid((6 * S2, 0.0), 3, 2)
    geom = ps._CrossingGeometry(g, spec)
    assert geom.n_local == 6
    assert len(geom.sub_u) == 7
    assert len(geom.left_ids) == 2 and len(geom.right_ids) == 2

    hits = sum(
        geom.indicator(np.array([bool(m >> k & 1) for k in range(7)]))
        for m in range(2**7)
    )
    assert hits == 64  # exactly 1/2 by self-duality

    est = ps.crossing_probability(g, w, spec, 3000, 42)
    assert abs(est.value - 0.5) <= 4 * max(est.stderr, 1e-3)


def test_dual_box_crossings_sum_to_one():
    t = tl.periodic_tiling("square", 14)
    g = ir.build_isoradial(t, 0, validate=False)
    d = ir.dual_graph(g)
    primal = box_for_grid((6 * S2, 0.0), 3, 2, "horizontal")
    dual = box_for_grid((6.5 * S2, 0.5 * S2), 2, 3, "vertical")
    for graph, spec in ((g, primal), (d, dual)):
        geom = ps._CrossingGeometry(graph, spec)
        assert geom.n_local == 6 and len(geom.sub_u) == 7
    ph = ps.crossing_probability(g, ir.percolation_weights(g), primal, 2500, 3)
    pv = ps.crossing_probability(d, ir.percolation_weights(d), dual, 2500, 4)
    err = np.hypot(max(ph.stderr, 1e-3), max(pv.stderr, 1e-3))
    assert abs(ph.value + pv.value - 1.0) <= 4 * err


def test_crossing_rejects_oversized_box():
    g = square_graph(8)
    w = ir.percolation_weights(g)
    spec = ps.CrossingSpec(center=(4.0, 4.0), width=7.9, height=7.9)
    with pytest.raises(GeometryError):
        ps.crossing_probability(g, w, spec, 10, 1)


def test_crossing_near_zero_probability():
    g = square_graph(14)
    w = ir.percolation_weights(g, beta=1e-6)
    spec = box_for_grid((6 * S2, 0.0), 3, 2)
    est = ps.crossing_probability(g, w, spec, 300, 8)
    assert est.value < 0.02


def test_crossing_beta_scan_monotone():
    g = square_graph(14)
    spec = box_for_grid((6 * S2, 0.0), 3, 2)
    curve = ps.crossing_beta_scan(g, spec, [0.5, 0.8, 1.0, 1.3, 2.0], 400, 17)
    assert np.all(np.diff(curve.estimates) >= -1e-12)
    assert curve.estimates[0] < curve.estimates[-1]


# ---------------------------------------------------------------- curves


def test_one_arm_monotone_and_errors():
    g = square_graph(24)
    w = ir.percolation_weights(g)
    curve = ps.one_arm_curve(g, w, [0, 2, 4, 8], 200, 2)
    assert np.all(np.diff(curve.estimates) <= 1e-12)
    with pytest.raises(GeometryError):
        ps.one_arm_curve(g, w, [1000.0], 10, 2)


def test_volume_tail_basics():
    g = square_graph(24)
    w = ir.percolation_weights(g)
    curve = ps.volume_tail_curve(g, w, [1, 2, 8, 32], 200, 3)
    assert curve.estimates[0] == 1.0
    assert np.all(np.diff(curve.estimates) <= 1e-12)


def test_two_point_adjacent_bound():
    g = square_graph(24)
    w = ir.percolation_weights(g)
    curve = ps.two_point_curve(g, w, [0.0, S2], 300, 9)
    assert curve.estimates[0] == 1.0
    # adjacent vertices connect at least through their shared edge
    assert curve.estimates[1] >= 0.5 - 3 * max(curve.stderrs[1], 1e-3)


def test_curve_csv_roundtrip():
    curve = ps.ObservableCurve(
        abscissae=[1.0, 2.0],
        estimates=[0.5, 0.25],
        stderrs=[0.01, 0.02],
        n_samples=100,
        name="demo",
    )
    back = ps.ObservableCurve.from_csv(curve.to_csv(), name="demo")
    assert np.allclose(back.abscissae, curve.abscissae)
    assert np.allclose(back.estimates, curve.estimates)
    assert np.array_equal(back.n_samples, curve.n_samples)


def test_near_critical_scan_shapes_and_monotone():
    g = square_graph(40)
    table = ps.near_critical_scan(g, [0.25, 1.0, 2.5], 60, 21)
    assert np.all(np.diff(table.theta_hat) >= -1e-12)
    assert np.all(np.diff(table.largest_fraction) >= -1e-12)
    assert table.theta_hat[0] < 0.01
    assert table.theta_hat[-1] > 0.5
    assert 0.8 <= table.chi_f[0] < table.chi_f[1]
    text = table.to_csv()
    assert text.splitlines()[0].startswith("beta,theta_hat")


# ------------------------------------------------------------- space-time


def test_spacetime_tiny_box_is_connected():
    est = ps.spacetime_crossing(np.pi / 4, 0.01, 200, 5, center=(0.0, 0.0))
    assert est.value == 1.0


def test_spacetime_tilted_square_near_half():
    est = ps.spacetime_crossing(np.pi / 4, 16.0, 2000, 12)
    assert abs(est.value - 0.5) < 0.08


def test_spacetime_axis_aligned_runs():
    est = ps.spacetime_crossing(0.0, 8.0, 300, 6)
    assert 0.0 <= est.value <= 1.0


def test_spacetime_deterministic():
    a = ps.spacetime_crossing(np.pi / 4, 8.0, 200, 33)
    b = ps.spacetime_crossing(np.pi / 4, 8.0, 200, 33)
    assert a.value == b.value
