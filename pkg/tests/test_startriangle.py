import numpy as np
import pytest

import isoperc.startriangle as st
from isoperc.errors import (
    NotFlippableError,
    NotSolvableError,
    ValidationError,
    WrongModelError,
)
from isoperc.isoradial import build_isoradial, percolation_probability, percolation_weights, rc_weights
from isoperc.percsim import sample_configuration
from isoperc.startriangle import (
    PARTITION_NAMES,
    TriangleParams,
    apply_switch,
    couple_triangle_star,
    coupling_kernel,
    partition_law,
    rc_solvability,
    triangle_solvability,
    verify_equivalence,
)
from isoperc.tiling import hexagon_flip, multigrid_tiling, periodic_tiling

P_TRIANGULAR = 2.0 * np.sin(np.pi / 18.0)


def solvable_angles(rng, n):
    """Random triangle angle triples, each in (0.35, pi - 0.35), summing 2*pi."""
    a = rng.uniform(0.7, np.pi - 0.4, size=n)
    b = rng.uniform(np.pi + 0.35 - a, np.pi - 0.35)
    c = 2.0 * np.pi - a - b
    return np.stack([a, b, c], axis=1)


def partition_index(bits, shape):
    """Independent oracle: partition of {0,1,2} from open bits, by union-find."""
    parent = list(range(4))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for i in range(3):
        if bits[i]:
            if shape == "triangle":
                union((i + 1) % 3, (i + 2) % 3)
            else:
                union(i, 3)
    roots = [find(i) for i in range(3)]
    groups = sorted(roots.count(r) for r in set(roots))
    if groups == [1, 1, 1]:
        return 0
    if groups == [3]:
        return 4
    singleton = next(i for i in range(3) if roots.count(roots[i]) == 1)
    return 3 - singleton


def test_partition_names_fixed_order():
    assert PARTITION_NAMES == ("A|B|C", "AB|C", "AC|B", "BC|A", "ABC")


def test_triangle_solvability_examples():
    assert triangle_solvability(0.0, 0.0, 0.0) == -1.0
    assert triangle_solvability(0.5, 0.5, 0.5) == pytest.approx(0.375)
    p = P_TRIANGULAR
    assert abs(triangle_solvability(p, p, p)) <= 1e-12
    # the isotropic solvable point solves p^3 - 3p + 1 = 0
    assert abs(p**3 - 3 * p + 1) <= 1e-12


def test_rc_solvability_examples():
    assert rc_solvability(1.0, 1.0, 1.0, 4.0) == 0.0
    assert rc_solvability(1.0, 1.0, 1.0, 1.0) == 3.0
    y = np.sqrt(3.0) - 1.0
    assert abs(rc_solvability(y, y, y, 2.0)) <= 1e-12


def test_partition_law_symmetric_percolation():
    params = TriangleParams.percolation(0.5, 0.5, 0.5)
    tri = partition_law("triangle", params)
    star = partition_law("star", params)
    np.testing.assert_allclose(tri.probabilities, [1 / 8, 1 / 8, 1 / 8, 1 / 8, 1 / 2], atol=1e-15)
    np.testing.assert_allclose(star.probabilities, [1 / 2, 1 / 8, 1 / 8, 1 / 8, 1 / 8], atol=1e-15)
    assert tri["ABC"] == pytest.approx(0.5)
    assert star["A|B|C"] == pytest.approx(0.5)


def test_partition_law_q4_unit_activities():
    params = TriangleParams.random_cluster(1.0, 1.0, 1.0, 4.0)
    expected = [0.5, 0.125, 0.125, 0.125, 0.125]
    for shape in ("triangle", "star"):
        law = partition_law(shape, params)
        np.testing.assert_allclose(law.probabilities, expected, atol=1e-12)


def test_partition_law_matches_union_find_oracle():
    rng = np.random.default_rng(7)
    params = TriangleParams.percolation(0.3, 0.6, 0.8)
    for shape in ("triangle", "star"):
        vals = params.values if shape == "triangle" else params.star_values
        law = np.zeros(5)
        for s in range(8):
            bits = [(s >> i) & 1 for i in range(3)]
            w = np.prod([v if b else 1 - v for v, b in zip(vals, bits)])
            law[partition_index(bits, shape)] += w
        np.testing.assert_allclose(partition_law(shape, params).probabilities, law, atol=1e-14)
    del rng


def test_solvable_percolation_triples_agree():
    rng = np.random.default_rng(11)
    for angles in solvable_angles(rng, 300):
        params = TriangleParams.from_angles(angles)
        assert abs(triangle_solvability(*params.values)) <= 1e-9
        report = verify_equivalence(params, tolerance=1e-12)
        assert report.passed and report.laws_agree
        assert report.max_abs_diff <= 1e-12


@pytest.mark.parametrize("q", [1.0, 2.0, 3.5, 4.0, 9.0])
def test_solvable_random_cluster_triples_agree(q):
    rng = np.random.default_rng(int(q * 10))
    for angles in solvable_angles(rng, 100):
        params = TriangleParams.from_angles(angles, model="random-cluster", q=q)
        assert abs(rc_solvability(*params.values, q)) <= 1e-8
        report = verify_equivalence(params, tolerance=1e-10)
        assert report.passed and report.laws_agree
        assert report.max_abs_diff <= 1e-10


def test_verify_equivalence_iff_semantics():
    bad = TriangleParams.percolation(0.5, 0.5, 0.5)
    report = verify_equivalence(bad)
    assert not report.solvable
    assert not report.laws_agree
    assert report.passed  # residual nonzero and laws differ: the biconditional holds
    payload = report.to_json()
    assert set(payload) == {"residual", "law_triangle", "law_star", "max_abs_diff", "pass"}
    assert payload["pass"] is True


def test_params_validation():
    with pytest.raises(ValidationError):
        TriangleParams.percolation(0.5, 1.0, 0.5)
    with pytest.raises(ValidationError):
        TriangleParams.random_cluster(1.0, 1.0, 0.0, 2.0)
    with pytest.raises(ValidationError):
        TriangleParams.random_cluster(1.0, 1.0, 1.0, 0.5)
    with pytest.raises(ValidationError):
        TriangleParams(model="percolation", values=(0.5, 0.5, 0.5), q=2.0)
    with pytest.raises(ValidationError):
        TriangleParams.from_angles([0.5, 0.5, 0.5])


def test_kernel_rows_and_partition_support():
    params = TriangleParams.from_angles([2 * np.pi / 3] * 3)
    for direction in ("triangle-to-star", "star-to-triangle"):
        kernel = coupling_kernel(params, direction)
        m = kernel.matrix
        np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)
        src_shape = "triangle" if direction == "triangle-to-star" else "star"
        dst_shape = "star" if direction == "triangle-to-star" else "triangle"
        for s in range(8):
            src_bits = [(s >> i) & 1 for i in range(3)]
            for t in range(8):
                if m[s, t] > 0:
                    dst_bits = [(t >> i) & 1 for i in range(3)]
                    assert partition_index(src_bits, src_shape) == partition_index(
                        dst_bits, dst_shape
                    )


def test_kernel_deterministic_rows():
    params = TriangleParams.from_angles([1.9, 2.1, 2.0 * np.pi - 4.0])
    to_star = coupling_kernel(params, "triangle-to-star").matrix
    # a lone open triangle edge i forces exactly the two legs reaching its ends
    for i in range(3):
        s = 1 << i
        assert to_star[s, 7 ^ (1 << i)] == 1.0
    # two or three open edges connect everything: all legs open
    for s in (3, 5, 6, 7):
        assert to_star[s, 7] == 1.0
    to_tri = coupling_kernel(params, "star-to-triangle").matrix
    for s in (0, 1, 2, 4):
        assert to_tri[s, 0] == 1.0
    for i in range(3):
        assert to_tri[7 ^ (1 << i), 1 << i] == 1.0


def test_kernel_pushforward_exact():
    rng = np.random.default_rng(23)
    for angles in solvable_angles(rng, 50):
        params = TriangleParams.from_angles(angles)
        kernel = coupling_kernel(params, "triangle-to-star")
        src = st._state_weights("triangle", params)
        dst = st._state_weights("star", params)
        assert np.max(np.abs(src @ kernel.matrix - dst)) <= 1e-12


def test_kernel_rejects_bad_inputs():
    with pytest.raises(NotSolvableError):
        coupling_kernel(TriangleParams.percolation(0.5, 0.5, 0.5))
    with pytest.raises(WrongModelError):
        coupling_kernel(TriangleParams.random_cluster(1.0, 1.0, 1.0, 4.0))
    good = TriangleParams.from_angles([2 * np.pi / 3] * 3)
    with pytest.raises(ValidationError):
        coupling_kernel(good, "sideways")


def test_couple_single_edge_example():
    # triangle with only the edge joining B and C open: the star opens the
    # legs to B and C and keeps the leg to A closed
    params = TriangleParams.from_angles([2 * np.pi / 3] * 3)
    out = couple_triangle_star([1, 0, 0], "triangle-to-star", params, rng=0)
    assert out.tolist() == [0, 1, 1]
    back = couple_triangle_star([0, 1, 1], "star-to-triangle", params, rng=0)
    assert back.tolist() == [1, 0, 0]


def test_couple_empirical_law():
    rng = np.random.default_rng(31)
    params = TriangleParams.from_angles([1.7, 2.2, 2 * np.pi - 3.9])
    kernel = coupling_kernel(params, "triangle-to-star")
    counts = np.zeros(8)
    n = 4000
    p = np.asarray(params.values)
    for _ in range(n):
        bits = (rng.random(3) < p).astype(int)
        out = couple_triangle_star(bits, "triangle-to-star", params, rng)
        counts[out[0] | (out[1] << 1) | (out[2] << 2)] += 1
    expected = st._state_weights("star", params)
    sigma = np.sqrt(expected * (1 - expected) / n)
    assert np.all(np.abs(counts / n - expected) <= 4 * sigma + 1e-12)
    del kernel


# ----------------------------------------------------------- the switch


def trihex_setup(window=3, lattice_side=True):
    t = periodic_tiling("tri-hex", window)
    colour = t.two_colour()
    e1 = np.array([np.sqrt(3.0), 0.0])
    e2 = np.array([np.sqrt(3.0) / 2.0, 1.5])
    lattice_class = int(colour[t.vertex_at(e1 + e2)])
    cls = lattice_class if lattice_side else 1 - lattice_class
    g = build_isoradial(t, colour_class=cls)
    w = percolation_weights(g)
    flippable = t.flippable_vertices()
    # pick the flip centre closest to the patch midpoint
    mid = t.vertices.mean(axis=0)
    v = int(flippable[np.argmin(np.hypot(*(t.vertices[flippable] - mid).T))])
    return t, g, w, v


def test_apply_switch_triangle_to_star():
    t, g, w, v = trihex_setup(lattice_side=True)
    cfg = sample_configuration(w, rng=5, graph=g)
    g2, w2, cfg2 = apply_switch(g, w, cfg, v, rng=6)
    assert g2.n_vertices == g.n_vertices + 1
    assert g2.n_edges == g.n_edges
    assert w2.model == "percolation" and w2.beta == 1.0
    np.testing.assert_allclose(w2.p, percolation_probability(g2.edge_angles), atol=1e-12)
    assert cfg2.graph_hash == g2.content_hash()

    trio = [r for r, _ in t.rhombi_at_vertex(v)]
    eo, en = st._edge_of_rhombus(g), st._edge_of_rhombus(g2)
    rest = np.setdiff1d(np.arange(g.n_edges), trio)
    assert np.array_equal(cfg2.open[en[rest]], cfg.open[eo[rest]])
    # the trio angles complement under the flip
    assert abs(np.sort(g2.edge_angles[en[trio]]) - np.sort(np.pi - g.edge_angles[eo[trio]])).max() <= 1e-9


def test_apply_switch_star_to_triangle():
    t, g, w, v = trihex_setup(lattice_side=False)
    cfg = sample_configuration(w, rng=8, graph=g)
    g2, w2, cfg2 = apply_switch(g, w, cfg, v, rng=9)
    assert g2.n_vertices == g.n_vertices - 1
    assert g2.n_edges == g.n_edges


def test_apply_switch_involution_restores_graph():
    t, g, w, v = trihex_setup(lattice_side=True)
    cfg = sample_configuration(w, rng=12, graph=g)
    g2, w2, cfg2 = apply_switch(g, w, cfg, v, rng=13)
    # the flip centre of the new tiling sits at the reflected position
    trio = [r for r, _ in t.rhombi_at_vertex(v)]
    outer = sorted(set(t.rhombus_vertices[trio].reshape(-1).tolist()) - {v})
    centre = t.vertices[outer].mean(axis=0)
    v2 = g2.tiling.vertex_at(2.0 * centre - t.vertices[v])
    g3, w3, cfg3 = apply_switch(g2, w2, cfg2, v2, rng=14)
    assert g3.content_hash() == g.content_hash()
    eo, e3 = st._edge_of_rhombus(g), st._edge_of_rhombus(g3)
    rest = np.setdiff1d(np.arange(g.n_edges), trio)
    assert np.array_equal(cfg3.open[e3[rest]], cfg.open[eo[rest]])


def test_apply_switch_preserves_outside_connectivity():
    from isoperc._kernels import label_components

    t, g, w, v = trihex_setup(window=4, lattice_side=True)
    rng = np.random.default_rng(17)
    g2 = None
    for _ in range(50):
        cfg = sample_configuration(w, rng, graph=g)
        g2, w2, cfg2 = apply_switch(g, w, cfg, v, rng)
        # old vertices keep their ids as a prefix only by coincidence; match by coords
        lookup = {tuple(np.round(p, 6)): i for i, p in enumerate(g2.vertices)}
        idx2 = np.array([lookup[tuple(np.round(p, 6))] for p in g.vertices])
        lab1, _ = label_components(
            g.n_vertices, g.edges[:, 0], g.edges[:, 1], cfg.open.astype(np.bool_)
        )
        lab2, _ = label_components(
            g2.n_vertices, g2.edges[:, 0], g2.edges[:, 1], cfg2.open.astype(np.bool_)
        )
        probe = np.arange(0, g.n_vertices, 7)
        for a in probe:
            for b in probe:
                same1 = lab1[a] == lab1[b]
                same2 = lab2[idx2[a]] == lab2[idx2[b]]
                assert same1 == same2


def test_apply_switch_empirical_partition_law():
    t, g, w, v = trihex_setup(lattice_side=True)
    trio = [r for r, _ in t.rhombi_at_vertex(v)]
    eo = st._edge_of_rhombus(g)
    p_trio = w.p[eo[trio]]
    params = TriangleParams.percolation(*p_trio)
    target = partition_law("star", params).probabilities

    rng = np.random.default_rng(19)
    n = 1200
    counts = np.zeros(5)
    for _ in range(n):
        cfg = sample_configuration(w, rng, graph=g)
        g2, _, cfg2 = apply_switch(g, w, cfg, v, rng)
        en = st._edge_of_rhombus(g2)
        bits = cfg2.open[en[trio]]
        # identify each new leg's outer vertex through the shared edge endpoint
        edges2, coords2 = st._labelled_trio(g2, trio, "star")
        edges1, coords1 = st._labelled_trio(g, trio, "triangle")
        order = [int(np.argmin(np.hypot(*(coords1 - c).T))) for c in coords2]
        state_bits = [0, 0, 0]
        for j in range(3):
            state_bits[order[j]] = int(cfg2.open[edges2[j]])
        counts[partition_index(state_bits, "star")] += 1
    freq = counts / n
    sigma = np.sqrt(target * (1 - target) / n)
    assert np.all(np.abs(freq - target) <= 4 * sigma + 1e-9)


def test_apply_switch_generic_tiling_roundtrip():
    angles = np.array([0.1, 1.4, 2.6])
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    t = multigrid_tiling(dirs, [0.21, 0.43, 0.65], window_size=3.0)
    g = build_isoradial(t, colour_class=0)
    w = percolation_weights(g)
    flippable = t.flippable_vertices()
    assert len(flippable) > 0
    mid = t.vertices.mean(axis=0)
    v = int(flippable[np.argmin(np.hypot(*(t.vertices[flippable] - mid).T))])
    cfg = sample_configuration(w, rng=21, graph=g)
    g2, w2, cfg2 = apply_switch(g, w, cfg, v, rng=22)
    assert g2.n_edges == g.n_edges
    trio = [r for r, _ in t.rhombi_at_vertex(v)]
    outer = sorted(set(t.rhombus_vertices[trio].reshape(-1).tolist()) - {v})
    centre = t.vertices[outer].mean(axis=0)
    v2 = g2.tiling.vertex_at(2.0 * centre - t.vertices[v])
    g3, _, cfg3 = apply_switch(g2, w2, cfg2, v2, rng=23)
    assert g3.content_hash() == g.content_hash()


def test_apply_switch_rejects_bad_inputs():
    t, g, w, v = trihex_setup(lattice_side=True)
    cfg = sample_configuration(w, rng=3, graph=g)
    rc = rc_weights(g, q=2.0)
    with pytest.raises(WrongModelError):
        apply_switch(g, rc, cfg, v, rng=0)
    tilted = percolation_weights(g, beta=1.2)
    with pytest.raises(ValidationError):
        apply_switch(g, tilted, cfg, v, rng=0)
    e1 = np.array([np.sqrt(3.0), 0.0])
    e2 = np.array([np.sqrt(3.0) / 2.0, 1.5])
    lattice_vertex = t.vertex_at(e1 + e2)
    with pytest.raises(NotFlippableError):
        apply_switch(g, w, cfg, lattice_vertex, rng=0)
    short = sample_configuration(percolation_weights(g), rng=4)
    object.__setattr__(short, "open", short.open[:-1])
    with pytest.raises(ValidationError):
        apply_switch(g, w, short, v, rng=0)


def test_double_flip_restores_tiling_bases():
    t, g, w, v = trihex_setup(lattice_side=True)
    t2 = hexagon_flip(t, v)
    trio = [r for r, _ in t.rhombi_at_vertex(v)]
    outer = sorted(set(t.rhombus_vertices[trio].reshape(-1).tolist()) - {v})
    centre = t.vertices[outer].mean(axis=0)
    v2 = t2.vertex_at(2.0 * centre - t.vertices[v])
    t3 = hexagon_flip(t2, v2)
    np.testing.assert_allclose(t3.base, t.base, atol=1e-9)
