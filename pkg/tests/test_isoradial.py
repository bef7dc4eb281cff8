"""Isoradial graph extraction, duality, and canonical edge weights."""
import numpy as np
import pytest

from isoperc import isoradial as ir
from isoperc import tiling as tl
from isoperc.errors import (
    DomainError,
    InvalidAngleError,
    MissingTilingError,
    ValidationError,
)

# Root of p^3 - 3p + 1 in (0, 1/2): the triangular-lattice critical point.
P_TRIANGULAR = 2.0 * np.sin(np.pi / 18.0)

THETA_GRID = np.linspace(0.05, np.pi - 0.05, 113)
Q_GRID = [1.0, 2.0, 3.5, 4.0, 9.0, 100.0]


def test_square_lattice_angles():
    g = ir.build_isoradial(tl.periodic_tiling("square", 6), 0)
    assert g.n_edges == 36
    assert np.allclose(g.edge_angles, np.pi / 2)
    assert np.allclose(g.edge_lengths(), np.sqrt(2.0))
    # interior faces of the diagonal lattice are 4-cycles
    assert {len(f) for f in g.faces} == {4}


def test_tri_hex_classes_are_triangular_and_hexagonal():
    t = tl.periodic_tiling("tri-hex", 4)
    a = ir.build_isoradial(t, 0)
    b = ir.build_isoradial(t, 1)
    thetas = {round(float(np.unique(np.round(g.edge_angles, 9))[0]), 9) for g in (a, b)}
    assert thetas == {round(np.pi / 3, 9), round(2 * np.pi / 3, 9)}
    tri = a if np.allclose(a.edge_angles, 2 * np.pi / 3) else b
    hexa = b if tri is a else a
    # interior degrees identify the two lattices
    assert set(tri.degrees()[tri.interior_vertices()]) == {6}
    assert set(hexa.degrees()[hexa.interior_vertices()]) == {3}


def test_each_rhombus_gives_one_edge():
    t = tl.penrose_tiling(5.0)
    g = ir.build_isoradial(t, 0)
    assert g.n_edges == t.n_rhombi
    assert len(np.unique(g.edges, axis=0)) == g.n_edges


def test_penrose_faces_have_unit_circumradius():
    g = ir.build_isoradial(tl.penrose_tiling(5.0), 1)
    assert g.n_faces > 0
    for cycle, center in zip(g.faces, g.face_centers):
        assert np.allclose(
            np.linalg.norm(g.vertices[cycle] - center, axis=1), 1.0, atol=1e-9
        )
    chords = np.linalg.norm(g.vertices[g.edges[:, 1]] - g.vertices[g.edges[:, 0]], axis=1)
    assert np.allclose(chords, 2.0 * np.sin(g.edge_angles / 2.0), atol=1e-9)


def test_dual_angles_sum_to_pi():
    g = ir.build_isoradial(tl.penrose_tiling(4.0), 0)
    d = ir.dual_graph(g)
    assert d.colour_class == 1
    assert np.allclose(g.edge_angles + d.edge_angles, np.pi, atol=1e-12)
    dd = ir.dual_graph(d)
    assert np.allclose(dd.vertices, g.vertices)
    assert np.array_equal(dd.edges, g.edges)


def test_build_rejects_invalid_tiling():
    t = tl.periodic_tiling("square", 4)
    t.dir_a[5] = t.dir_a[5] * 1.1
    with pytest.raises(ValidationError):
        ir.build_isoradial(t, 0)


def test_percolation_square_is_half():
    g = ir.build_isoradial(tl.periodic_tiling("square", 4), 0)
    w = ir.percolation_weights(g)
    assert np.allclose(w.p, 0.5, atol=1e-15)


def test_percolation_triangular_point():
    t = tl.periodic_tiling("tri-hex", 3)
    for cls in (0, 1):
        g = ir.build_isoradial(t, cls)
        p = ir.percolation_weights(g).p
        target = P_TRIANGULAR if np.allclose(g.edge_angles, 2 * np.pi / 3) else 1 - P_TRIANGULAR
        assert np.allclose(p, target, atol=1e-12)
    # the triangular value is the root of p^3 - 3p + 1 in (0, 1/2)
    assert abs(P_TRIANGULAR**3 - 3 * P_TRIANGULAR + 1) < 1e-12


def test_percolation_complementarity():
    p = ir.percolation_probability(THETA_GRID)
    p_dual = ir.percolation_probability(np.pi - THETA_GRID)
    assert np.max(np.abs(p + p_dual - 1.0)) < 1e-12


def test_percolation_monotone_in_angle():
    p = ir.percolation_probability(THETA_GRID)
    assert np.all(np.diff(p) < 0)


def test_percolation_beta_tilt():
    beta = 1.37
    p1 = ir.percolation_probability(THETA_GRID)
    pb = ir.percolation_probability(THETA_GRID, beta)
    assert np.allclose(pb / (1 - pb), beta * p1 / (1 - p1), atol=1e-12)


def test_spectral_parameter_known_values():
    assert ir.rc_spectral_parameter(1.0) == pytest.approx((2.0 / 3.0, "trig"))
    assert ir.rc_spectral_parameter(2.0).value == pytest.approx(0.5)
    s4 = ir.rc_spectral_parameter(4.0)
    assert s4.value == 0.0 and s4.branch == "limit"
    s9 = ir.rc_spectral_parameter(9.0)
    assert s9.branch == "hyper"
    assert np.cosh(s9.value * np.pi / 2) == pytest.approx(1.5, abs=1e-12)
    with pytest.raises(DomainError):
        ir.rc_spectral_parameter(0.5)


def test_rc_activity_square_angle():
    for q in Q_GRID:
        y = ir.rc_edge_activity(np.pi / 2, q)
        assert y[0] == pytest.approx(np.sqrt(q), abs=1e-12)


def test_rc_duality_all_branches():
    for q in Q_GRID:
        y = ir.rc_edge_activity(THETA_GRID, q)
        y_dual = ir.rc_edge_activity(np.pi - THETA_GRID, q)
        assert np.max(np.abs(y * y_dual - q)) < 1e-9


def test_rc_branch_continuity_at_four():
    limit = ir.rc_edge_activity(THETA_GRID, 4.0)
    below = ir.rc_edge_activity(THETA_GRID, 4.0 - 1e-6)
    above = ir.rc_edge_activity(THETA_GRID, 4.0 + 1e-6)
    assert np.max(np.abs(below - limit)) <= 1e-4
    assert np.max(np.abs(above - limit)) <= 1e-4


def test_rc_reduces_to_percolation_at_q1():
    g = ir.build_isoradial(tl.penrose_tiling(4.0), 0)
    for beta in (0.7, 1.0, 1.3):
        w_rc = ir.rc_weights(g, 1.0, beta)
        w_perc = ir.percolation_weights(g, beta)
        assert np.max(np.abs(w_rc.p - w_perc.p)) < 1e-12


def test_rc_known_points():
    y = ir.rc_edge_activity(np.pi / 2, 4.0)
    assert y[0] == pytest.approx(2.0, abs=1e-12)
    w = ir.rc_weights(ir.build_isoradial(tl.periodic_tiling("square", 2), 0), 4.0)
    assert np.allclose(w.p, 2.0 / 3.0, atol=1e-12)
    # Ising-point activity on the triangular lattice
    y = ir.rc_edge_activity(2 * np.pi / 3, 2.0)
    assert y[0] == pytest.approx(np.sqrt(3.0) - 1.0, abs=1e-12)


def test_rc_beta_scales_activity():
    beta = 0.81
    y1 = ir.rc_edge_activity(THETA_GRID, 3.5)
    yb = ir.rc_edge_activity(THETA_GRID, 3.5, beta)
    assert np.allclose(yb, beta * y1, atol=1e-12)


def test_weights_validation():
    with pytest.raises(DomainError):
        ir.percolation_probability(np.pi / 2, beta=0.0)
    with pytest.raises(InvalidAngleError):
        ir.percolation_probability(np.pi)
    with pytest.raises(ValidationError):
        ir.EdgeWeights(model="percolation", beta=1.0, p=np.array([0.5, 1.2]))
    with pytest.raises(ValidationError):
        ir.EdgeWeights(model="random-cluster", beta=1.0, p=np.array([0.5]), q=2.0)
    with pytest.raises(ValidationError):
        ir.EdgeWeights(
            model="random-cluster",
            beta=1.0,
            p=np.array([0.4]),
            q=2.0,
            y=np.array([1.0]),
        )


def test_graph_json_roundtrip(tmp_path):
    g = ir.build_isoradial(tl.penrose_tiling(3.5), 0)
    weights = [ir.percolation_weights(g), ir.rc_weights(g, 2.0, 0.9)]
    path = tmp_path / "graph.json"
    g.save(path, weights)
    g2 = ir.IsoradialGraph.load(path)
    assert np.allclose(g2.vertices, g.vertices)
    assert np.array_equal(g2.edges, g.edges)
    assert np.allclose(g2.edge_angles, g.edge_angles)
    assert g2.content_hash() == g.content_hash()
    assert set(g2.weight_tables) == {w.key for w in weights}
    got = g2.weight_tables[weights[1].key]
    assert np.allclose(got.y, weights[1].y)
    with pytest.raises(MissingTilingError):
        ir.dual_graph(g2)
