"""Percolation sampling and critical observables on isoradial graphs.

Replicas are reproducible under any work partitioning: sample ``i`` of a run
seeded with ``s`` always draws from ``default_rng([s, i])``, so results do
not depend on chunking or thread count.  Passing a ``numpy`` Generator
instead of an integer seed is allowed for quick interactive use and falls
back to sequential draws.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from . import _kernels
from .errors import DomainError, GeometryError, ValidationError, WrongModelError
from .isoradial import EdgeWeights, IsoradialGraph, percolation_probability
from .tiling import polygon_inner_distance

__all__ = [
    "ClusterDecomposition",
    "Configuration",
    "CrossingSpec",
    "Estimate",
    "NearCriticalTable",
    "ObservableCurve",
    "cluster_decomposition",
    "cluster_radius",
    "coupled_configurations",
    "crossing_beta_scan",
    "crossing_probability",
    "near_critical_scan",
    "one_arm_curve",
    "sample_configuration",
    "spacetime_crossing",
    "two_point_curve",
    "volume_tail_curve",
]


class Estimate(NamedTuple):
    value: float
    stderr: float
    n_samples: int


def _resolve_rng(rng):
    """Split user input into (base seed or None, generator or None)."""
    if isinstance(rng, (int, np.integer)):
        if rng < 0:
            raise DomainError("seed must be nonnegative")
        return int(rng), None
    if isinstance(rng, np.random.Generator):
        return None, rng
    raise ValidationError("rng must be an integer seed or a numpy Generator")


def _replica_rng(seed, index, fallback):
    if seed is None:
        return fallback
    return np.random.default_rng([seed, index])


def _mean_and_stderr(per_sample: np.ndarray):
    n = per_sample.shape[0]
    mean = per_sample.mean(axis=0)
    if n > 1:
        se = per_sample.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        se = np.zeros_like(mean)
    return mean, se


# ----------------------------------------------------------- configurations


@dataclass
class Configuration:
    """One Bernoulli edge configuration, with provenance for manifests."""

    open: np.ndarray
    seed: Optional[int] = None
    graph_hash: Optional[str] = None
    weights_key: Optional[tuple] = None

    def __post_init__(self):
        self.open = np.asarray(self.open, dtype=bool)

    @property
    def n_open(self) -> int:
        return int(self.open.sum())


def sample_configuration(
    weights: EdgeWeights, rng, graph: Optional[IsoradialGraph] = None
) -> Configuration:
    """Draw edges independently open with their percolation probabilities."""
    if weights.model != "percolation":
        raise WrongModelError(
            "direct sampling needs percolation weights; use the random-cluster "
            "sampler for cluster-weighted measures"
        )
    seed, gen = _resolve_rng(rng)
    gen = _replica_rng(seed, 0, gen)
    return Configuration(
        open=gen.random(weights.n_edges) < weights.p,
        seed=seed,
        graph_hash=None if graph is None else graph.content_hash(),
        weights_key=weights.key,
    )


def coupled_configurations(
    weight_list: Sequence[EdgeWeights], rng, graph: Optional[IsoradialGraph] = None
):
    """Configurations driven by one shared uniform draw per edge.

    Whenever one weight table dominates another edgewise, the corresponding
    open sets are nested, which makes estimates monotone sample-by-sample.
    """
    if not weight_list:
        return []
    sizes = {w.n_edges for w in weight_list}
    if len(sizes) != 1:
        raise ValidationError("coupled weight tables must cover the same edges")
    for w in weight_list:
        if w.model != "percolation":
            raise WrongModelError("coupled sampling is for percolation weights")
    seed, gen = _resolve_rng(rng)
    gen = _replica_rng(seed, 0, gen)
    u = gen.random(weight_list[0].n_edges)
    ghash = None if graph is None else graph.content_hash()
    return [
        Configuration(open=u < w.p, seed=seed, graph_hash=ghash, weights_key=w.key)
        for w in weight_list
    ]


# ---------------------------------------------------------------- clusters


@dataclass
class ClusterDecomposition:
    """Open-cluster labels plus per-cluster size and bounding box."""

    labels: np.ndarray
    sizes: np.ndarray
    bbox_min: np.ndarray
    bbox_max: np.ndarray

    def __post_init__(self):
        if int(self.sizes.sum()) != len(self.labels):
            raise ValidationError("cluster sizes must add up to the vertex count")

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    @property
    def largest(self) -> int:
        return int(np.argmax(self.sizes))


def cluster_decomposition(g: IsoradialGraph, c: Configuration) -> ClusterDecomposition:
    """Union-find decomposition of the open subgraph."""
    if len(c.open) != g.n_edges:
        raise ValidationError(
            f"configuration has {len(c.open)} edges, graph has {g.n_edges}"
        )
    if c.graph_hash is not None and c.graph_hash != g.content_hash():
        raise ValidationError("configuration was sampled on a different graph")
    labels, count = _kernels.label_components(
        g.n_vertices,
        np.ascontiguousarray(g.edges[:, 0]),
        np.ascontiguousarray(g.edges[:, 1]),
        c.open,
    )
    sizes, bb_min, bb_max = _kernels.cluster_stats(labels, count, g.vertices)
    return ClusterDecomposition(labels=labels, sizes=sizes, bbox_min=bb_min, bbox_max=bb_max)


def _vertex_radii(g: IsoradialGraph, dec: ClusterDecomposition) -> np.ndarray:
    """Sup-norm cluster radius seen from every vertex, vectorised.

    The farthest cluster point from ``v`` in sup-norm is attained on the
    cluster bounding box, so the box extremes are exact.
    """
    lab = dec.labels
    dx = np.maximum(
        np.abs(dec.bbox_min[lab, 0] - g.vertices[:, 0]),
        np.abs(dec.bbox_max[lab, 0] - g.vertices[:, 0]),
    )
    dy = np.maximum(
        np.abs(dec.bbox_min[lab, 1] - g.vertices[:, 1]),
        np.abs(dec.bbox_max[lab, 1] - g.vertices[:, 1]),
    )
    return np.maximum(dx, dy)


def cluster_radius(g: IsoradialGraph, dec: ClusterDecomposition, v: int) -> float:
    """Sup-norm radius of the open cluster of ``v``, recentred at ``v``."""
    if not 0 <= v < g.n_vertices:
        raise ValidationError(f"vertex id {v} out of range")
    lab = dec.labels[v]
    x, y = g.vertices[v]
    dx = max(abs(dec.bbox_min[lab, 0] - x), abs(dec.bbox_max[lab, 0] - x))
    dy = max(abs(dec.bbox_min[lab, 1] - y), abs(dec.bbox_max[lab, 1] - y))
    return float(max(dx, dy))


# ------------------------------------------------------------ patch helpers


def _patch_hull(g: IsoradialGraph) -> np.ndarray:
    """CCW hull of the full patch (tiling corners when available)."""
    if g.tiling is not None:
        return g.tiling.window
    hull = ConvexHull(g.vertices)
    return g.vertices[hull.vertices]

def _max_rhombus_diameter(g: IsoradialGraph) -> float:
    half = g.edge_angles / 2.0
    return float(np.max(np.maximum(2.0 * np.sin(half), 2.0 * np.cos(half))))


def _eligible_vertices(g: IsoradialGraph, margin: float) -> np.ndarray:
    """Vertices at least ``margin`` inside the patch hull."""
    inner = polygon_inner_distance(_patch_hull(g), g.vertices)
    return np.flatnonzero(inner >= margin)


# -------------------------------------------------------- observable curves


@dataclass
class ObservableCurve:
    """Estimates with Monte Carlo errors along one abscissa."""

    abscissae: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    n_samples: np.ndarray
    name: str = ""
    is_probability: bool = True

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        self.estimates = np.asarray(self.estimates, dtype=float)
        self.stderrs = np.asarray(self.stderrs, dtype=float)
        self.n_samples = np.broadcast_to(
            np.asarray(self.n_samples, dtype=np.int64), self.abscissae.shape
        ).copy()
        if not (
            self.abscissae.shape
            == self.estimates.shape
            == self.stderrs.shape
            == self.n_samples.shape
        ):
            raise ValidationError("curve columns must have matching shapes")
        if np.any(self.stderrs < 0):
            raise ValidationError("standard errors must be nonnegative")
        if self.is_probability and (
            np.any(self.estimates < 0) or np.any(self.estimates > 1)
        ):
            raise ValidationError("probability estimates must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.abscissae)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("abscissa,estimate,stderr,n_samples\n")
        for a, e, s, n in zip(
            self.abscissae, self.estimates, self.stderrs, self.n_samples
        ):
            out.write(f"{a:.12g},{e:.12g},{s:.12g},{n}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "", is_probability: bool = True):
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        cols = np.array([[float(v) for v in row] for row in rows])
        return cls(
            abscissae=cols[:, 0],
            estimates=cols[:, 1],
            stderrs=cols[:, 2],
            n_samples=cols[:, 3].astype(np.int64),
            name=name,
            is_probability=is_probability,
        )


# ---------------------------------------------------------------- crossings


@dataclass(frozen=True)
class CrossingSpec:
    """A tilted box and the pair of opposite sides to be joined."""

    center: tuple
    width: float
    height: float
    angle: float = 0.0
    direction: str = "horizontal"

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("box sides must be positive")
        if not 0.0 <= self.angle < np.pi:
            raise ValidationError("tilt angle must lie in [0, pi)")
        if self.direction not in ("horizontal", "vertical"):
            raise ValidationError("direction must be 'horizontal' or 'vertical'")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def axes(self):
        e1 = np.array([np.cos(self.angle), np.sin(self.angle)])
        e2 = np.array([-np.sin(self.angle), np.cos(self.angle)])
        return e1, e2

    def corners(self) -> np.ndarray:
        e1, e2 = self.axes()
        c = np.asarray(self.center)
        w, h = self.width / 2.0, self.height / 2.0
        return np.array(
            [c - w * e1 - h * e2, c + w * e1 - h * e2, c + w * e1 + h * e2, c - w * e1 + h * e2]
        )

    def crossing_sides(self):
        """Endpoint pairs of the two designated sides, in ambient coords."""
        q = self.corners()
        if self.direction == "horizontal":
            return (q[0], q[3]), (q[1], q[2])
        return (q[0], q[1]), (q[3], q[2])


def _segment_hits(p, q, a, b) -> np.ndarray:
    """Vectorised proper/touching intersection of segments p->q with a->b."""
    ab = b - a
    scale = max(1.0, float(np.hypot(*ab)))
    tol = 1e-9 * scale

    def side(d):
        return np.where(d > tol, 1, np.where(d < -tol, -1, 0))

    d1 = (p[:, 0] - a[0]) * ab[1] - (p[:, 1] - a[1]) * ab[0]
    d2 = (q[:, 0] - a[0]) * ab[1] - (q[:, 1] - a[1]) * ab[0]
    pq = q - p
    d3 = (a[0] - p[:, 0]) * pq[:, 1] - (a[1] - p[:, 1]) * pq[:, 0]
    d4 = (b[0] - p[:, 0]) * pq[:, 1] - (b[1] - p[:, 1]) * pq[:, 0]
    s1, s2, s3, s4 = side(d1), side(d2), side(d3), side(d4)
    # collinear overlap (both endpoints on the side's line) does not attach
    return (s1 * s2 <= 0) & (s3 * s4 <= 0) & ~((s1 == 0) & (s2 == 0))


class _CrossingGeometry:
    """Box-local data reused across samples of one crossing estimate."""

    def __init__(self, g: IsoradialGraph, spec: CrossingSpec):
        diam = _max_rhombus_diameter(g)
        hull = _patch_hull(g)
        corner_depth = polygon_inner_distance(hull, spec.corners())
        if np.min(corner_depth) < 2.0 * diam - 1e-9:
            raise GeometryError(
                "crossing box must sit at least two rhombus diameters inside the patch"
            )
        e1, e2 = spec.axes()
        rel = g.vertices - np.asarray(spec.center)
        x_loc = rel @ e1
        y_loc = rel @ e2
        tol = 1e-9
        in_box = (np.abs(x_loc) <= spec.width / 2.0 + tol) & (
            np.abs(y_loc) <= spec.height / 2.0 + tol
        )

        local_id = np.full(g.n_vertices, -1, dtype=np.int64)
        inside = np.flatnonzero(in_box)
        local_id[inside] = np.arange(len(inside))
        self.n_local = len(inside)

        eu, ev = g.edges[:, 0], g.edges[:, 1]
        keep = in_box[eu] & in_box[ev]
        self.edge_ids = np.flatnonzero(keep)
        self.sub_u = np.ascontiguousarray(local_id[eu[keep]])
        self.sub_v = np.ascontiguousarray(local_id[ev[keep]])

        p0 = g.vertices[eu]
        p1 = g.vertices[ev]
        (a0, a1), (b0, b1) = spec.crossing_sides()
        attach = []
        for s0, s1 in ((a0, a1), (b0, b1)):
            hits = _segment_hits(p0, p1, s0, s1)
            ids = np.unique(
                np.concatenate([eu[hits & in_box[eu]], ev[hits & in_box[ev]]])
            )
            attach.append(np.ascontiguousarray(local_id[ids]))
        self.left_ids, self.right_ids = attach

    def indicator(self, open_sub: np.ndarray) -> int:
        return _kernels.sides_connected(
            self.n_local, self.sub_u, self.sub_v, open_sub, self.left_ids, self.right_ids
        )


def crossing_probability(
    g: IsoradialGraph, weights: EdgeWeights, spec: CrossingSpec, samples: int, rng
) -> Estimate:
    """Monte Carlo probability of an open path joining the designated sides.

    The path must stay inside the closed box; its ends are vertices incident
    to graph edges that intersect the two sides, which keeps the event well
    defined on irregular vertex sets.
    """
    if weights.model != "percolation":
        raise WrongModelError("crossing_probability samples percolation weights")
    if weights.n_edges != g.n_edges:
        raise ValidationError("weights do not match the graph")
    if samples <= 0:
        raise DomainError("need at least one sample")
    geom = _CrossingGeometry(g, spec)
    p_sub = weights.p[geom.edge_ids]
    seed, gen = _resolve_rng(rng)
    hits = 0
    for i in range(samples):
        r = _replica_rng(seed, i, gen)
        hits += geom.indicator(r.random(p_sub.size) < p_sub)
    value = hits / samples
    stderr = float(np.sqrt(value * (1.0 - value) / samples))
    return Estimate(value=float(value), stderr=stderr, n_samples=samples)


def crossing_beta_scan(
    g: IsoradialGraph,
    spec: CrossingSpec,
    beta_grid: Sequence[float],
    samples: int,
    rng,
) -> ObservableCurve:
    """Crossing probability along a grid of tilt parameters ``beta``.

    All betas share each sample's uniforms, so the curve is monotone
    sample-by-sample, not just in expectation.
    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.ndim != 1 or len(betas) == 0 or np.any(betas <= 0):
        raise DomainError("beta grid must be positive")
    geom = _CrossingGeometry(g, spec)
    theta_sub = g.edge_angles[geom.edge_ids]
    p_by_beta = [percolation_probability(theta_sub, b) for b in betas]
    seed, gen = _resolve_rng(rng)
    per_sample = np.empty((samples, len(betas)))
    for i in range(samples):
        r = _replica_rng(seed, i, gen)
        u = r.random(theta_sub.size)
        for j, p in enumerate(p_by_beta):
            per_sample[i, j] = geom.indicator(u < p)
    mean, se = _mean_and_stderr(per_sample)
    return ObservableCurve(
        abscissae=betas,
        estimates=mean,
        stderrs=se,
        n_samples=samples,
        name="crossing-vs-beta",
    )


# -------------------------------------------------------------- tail curves


def _anchored_curve(
    g: IsoradialGraph,
    weights: EdgeWeights,
    thresholds: np.ndarray,
    samples: int,
    rng,
    statistic: str,
    margin: float,
    name: str,
) -> ObservableCurve:
    if weights.model != "percolation":
        raise WrongModelError(f"{name} samples percolation weights")
    if weights.n_edges != g.n_edges:
        raise ValidationError("weights do not match the graph")
    if samples <= 0:
        raise DomainError("need at least one sample")
    anchors = _eligible_vertices(g, margin)
    if len(anchors) == 0:
        raise GeometryError(
            f"no interior vertices left at margin {margin:.1f}; thresholds exceed the patch"
        )
    eu = np.ascontiguousarray(g.edges[:, 0])
    ev = np.ascontiguousarray(g.edges[:, 1])
    seed, gen = _resolve_rng(rng)
    per_sample = np.empty((samples, len(thresholds)))
    for i in range(samples):
        r = _replica_rng(seed, i, gen)
        open_mask = r.random(g.n_edges) < weights.p
        labels, count = _kernels.label_components(g.n_vertices, eu, ev, open_mask)
        sizes, bb_min, bb_max = _kernels.cluster_stats(labels, count, g.vertices)
        dec = ClusterDecomposition(labels=labels, sizes=sizes, bbox_min=bb_min, bbox_max=bb_max)
        if statistic == "radius":
            values = _vertex_radii(g, dec)[anchors]
        else:
            values = sizes[labels[anchors]]
        per_sample[i] = (values[:, None] >= thresholds[None, :]).mean(axis=0)
    mean, se = _mean_and_stderr(per_sample)
    return ObservableCurve(
        abscissae=thresholds,
        estimates=mean,
        stderrs=se,
        n_samples=samples,
        name=name,
    )


def one_arm_curve(
    g: IsoradialGraph, weights: EdgeWeights, radii, samples: int, rng
) -> ObservableCurve:
    """Tail of the cluster radius, P(rad(C_v) >= k), over interior vertices."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(radii < 0):
        raise DomainError("radii must be nonnegative")
    margin = float(radii.max()) + 2.0 * _max_rhombus_diameter(g)
    return _anchored_curve(
        g, weights, radii, samples, rng, "radius", margin, "one-arm"
    )


def volume_tail_curve(
    g: IsoradialGraph, weights: EdgeWeights, sizes, samples: int, rng
) -> ObservableCurve:
    """Tail of the cluster volume, P(|C_v| >= n), over interior vertices."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.ndim != 1 or len(sizes) == 0 or np.any(sizes < 1):
        raise DomainError("cluster sizes start at 1")
    margin = 2.0 * _max_rhombus_diameter(g)
    return _anchored_curve(
        g, weights, sizes, samples, rng, "volume", margin, "volume-tail"
    )


def _distance_pairs(
    g: IsoradialGraph,
    distances: np.ndarray,
    n_anchors: int = 512,
    partners_per_anchor: int = 8,
):
    """Deterministic vertex pairs in Euclidean shells around each distance."""
    margin = 2.0 * _max_rhombus_diameter(g)
    eligible = _eligible_vertices(g, margin)
    if len(eligible) == 0:
        raise GeometryError("patch too small for two-point sampling")
    stride = max(1, len(eligible) // n_anchors)
    anchors = eligible[::stride][:n_anchors]
    tree = cKDTree(g.vertices[eligible])
    pairs = []
    for d in distances:
        if d < 1e-9:
            pairs.append((anchors, anchors))
            continue
        lo, hi = 0.95 * d, 1.05 * d
        if hi - lo < 0.7:
            mid = 0.35 - (hi - lo) / 2.0
            lo, hi = max(0.0, lo - mid), hi + mid
        us, vs = [], []
        for a in anchors:
            near = tree.query_ball_point(g.vertices[a], hi)
            cand = eligible[np.asarray(near, dtype=np.int64)]
            dist = np.linalg.norm(g.vertices[cand] - g.vertices[a], axis=1)
            keep = cand[(dist >= lo) & (cand != a)]
            keep = np.sort(keep)[:partners_per_anchor]
            us.extend([a] * len(keep))
            vs.extend(keep.tolist())
        if not us:
            raise GeometryError(f"no vertex pairs at distance {d:g}")
        pairs.append((np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)))
    return pairs


def two_point_curve(
    g: IsoradialGraph, weights: EdgeWeights, distances, samples: int, rng
) -> ObservableCurve:
    """Connection probability between vertices at given Euclidean distances."""
    if weights.model != "percolation":
        raise WrongModelError("two_point_curve samples percolation weights")
    distances = np.asarray(distances, dtype=float)
    if distances.ndim != 1 or len(distances) == 0 or np.any(distances < 0):
        raise DomainError("distances must be nonnegative")
    pairs = _distance_pairs(g, distances)
    eu = np.ascontiguousarray(g.edges[:, 0])
    ev = np.ascontiguousarray(g.edges[:, 1])
    seed, gen = _resolve_rng(rng)
    per_sample = np.empty((samples, len(distances)))
    for i in range(samples):
        r = _replica_rng(seed, i, gen)
        open_mask = r.random(g.n_edges) < weights.p
        labels, _ = _kernels.label_components(g.n_vertices, eu, ev, open_mask)
        for j, (us, vs) in enumerate(pairs):
            per_sample[i, j] = np.mean(labels[us] == labels[vs])
    mean, se = _mean_and_stderr(per_sample)
    return ObservableCurve(
        abscissae=distances,
        estimates=mean,
        stderrs=se,
        n_samples=samples,
        name="two-point",
    )


# ---------------------------------------------------------- beta-grid scan


@dataclass
class NearCriticalTable:
    """Phase-portrait observables along a beta grid, with shared coupling."""

    betas: np.ndarray
    theta_hat: np.ndarray
    theta_se: np.ndarray
    chi_f: np.ndarray
    chi_f_se: np.ndarray
    largest_fraction: np.ndarray
    largest_se: np.ndarray
    n_samples: int
    radius_threshold: float

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(
            "beta,theta_hat,theta_se,chi_f,chi_f_se,largest_fraction,largest_se,n_samples\n"
        )
        for row in zip(
            self.betas,
            self.theta_hat,
            self.theta_se,
            self.chi_f,
            self.chi_f_se,
            self.largest_fraction,
            self.largest_se,
        ):
            out.write(",".join(f"{v:.12g}" for v in row) + f",{self.n_samples}\n")
        return out.getvalue()


def near_critical_scan(
    g: IsoradialGraph, beta_grid, samples: int, rng
) -> NearCriticalTable:
    """Percolation-probability proxy, truncated mean size, largest fraction.

    The infinite-cluster indicator is proxied on a finite patch by
    ``rad(C_v) >= L/4`` with ``L`` the smaller patch extent; the truncated
    mean excludes the sample's largest cluster.  All betas share uniforms,
    so every monotone observable is coupled monotone across the grid.
    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.ndim != 1 or len(betas) == 0 or np.any(betas <= 0):
        raise DomainError("beta grid must be positive")
    extent = g.vertices.max(axis=0) - g.vertices.min(axis=0)
    threshold = float(min(extent)) / 4.0
    margin = threshold + 2.0 * _max_rhombus_diameter(g)
    anchors = _eligible_vertices(g, margin)
    if len(anchors) == 0:
        raise GeometryError("patch too small for the L/4 radius proxy")
    p_by_beta = [percolation_probability(g.edge_angles, b) for b in betas]
    eu = np.ascontiguousarray(g.edges[:, 0])
    ev = np.ascontiguousarray(g.edges[:, 1])
    seed, gen = _resolve_rng(rng)
    theta = np.empty((samples, len(betas)))
    chi = np.empty((samples, len(betas)))
    big = np.empty((samples, len(betas)))
    for i in range(samples):
        r = _replica_rng(seed, i, gen)
        u = r.random(g.n_edges)
        for j, p in enumerate(p_by_beta):
            labels, count = _kernels.label_components(g.n_vertices, eu, ev, u < p)
            sizes, bb_min, bb_max = _kernels.cluster_stats(labels, count, g.vertices)
            dec = ClusterDecomposition(
                labels=labels, sizes=sizes, bbox_min=bb_min, bbox_max=bb_max
            )
            radii = _vertex_radii(g, dec)[anchors]
            theta[i, j] = np.mean(radii >= threshold)
            anchor_sizes = sizes[labels[anchors]].astype(float)
            anchor_sizes[labels[anchors] == dec.largest] = 0.0
            chi[i, j] = anchor_sizes.mean()
            big[i, j] = sizes.max() / g.n_vertices
    t_m, t_s = _mean_and_stderr(theta)
    c_m, c_s = _mean_and_stderr(chi)
    b_m, b_s = _mean_and_stderr(big)
    return NearCriticalTable(
        betas=betas,
        theta_hat=t_m,
        theta_se=t_s,
        chi_f=c_m,
        chi_f_se=c_s,
        largest_fraction=b_m,
        largest_se=b_s,
        n_samples=samples,
        radius_threshold=threshold,
    )


# ------------------------------------------------------ space-time model


def _clip_line_to_box(x: float, spec_center, half: float, angle: float):
    """Intersection of the vertical line at ``x`` with the tilted square.

    Returns (lo, hi) in y, or None when the line misses the box.  Uses the
    box-local coordinates X = rel . e1, Y = rel . e2.
    """
    cx, cy = spec_center
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    lo, hi = -np.inf, np.inf
    # X(y) = (x-cx) cos + (y-cy) sin in [-half, half]
    for coeff, const in ((sin_a, (x - cx) * cos_a), (cos_a, -(x - cx) * sin_a)):
        if abs(coeff) < 1e-12:
            if abs(const) > half + 1e-9:
                return None
            continue
        a = (-half - const) / coeff + cy
        b = (half - const) / coeff + cy
        lo = max(lo, min(a, b))
        hi = min(hi, max(a, b))
    if hi <= lo - 1e-12:
        return None
    return lo, hi


def _side_of_point(x, y, spec_center, half, angle):
    """1 / 2 when the point lies on the first / second designated side."""
    cx, cy = spec_center
    x_loc = (x - cx) * np.cos(angle) + (y - cy) * np.sin(angle)
    tol = 1e-7 * max(1.0, half)
    if abs(x_loc + half) <= tol:
        return 1
    if abs(x_loc - half) <= tol:
        return 2
    return 0


def _bridge_exit_side(x, y, step, spec_center, half, angle):
    """Side through which the horizontal bridge from (x, y) leaves the box."""
    cx, cy = spec_center
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    x_loc = (x - cx) * cos_a + (y - cy) * sin_a
    y_loc = -(x - cx) * sin_a + (y - cy) * cos_a
    dx_loc = step * cos_a
    dy_loc = -step * sin_a
    best_t, best_side = np.inf, 0
    for pos, vel, side_neg, side_pos in (
        (x_loc, dx_loc, 1, 2),
        (y_loc, dy_loc, 0, 0),
    ):
        if abs(vel) < 1e-12:
            continue
        for bound, side in ((-half, side_neg), (half, side_pos)):
            t = (bound - pos) / vel
            if 1e-12 < t < best_t:
                best_t, best_side = t, side
    return best_side


def spacetime_crossing(
    alpha: float, n: float, samples: int, rng, center=(0.5, 0.0)
) -> Estimate:
    """Crossing estimate for continuum percolation on vertical integer lines.

    Each line carries rate-1 cut points; each neighbouring pair carries
    rate-1 bridges.  The event is an open path inside the closed ``n x n``
    square tilted by ``alpha`` that joins the two sides perpendicular to the
    square's own first axis.  Bridges that straddle a designated side attach
    their inside interval to it.
    """
    if n <= 0:
        raise DomainError("box side must be positive")
    if not 0.0 <= alpha < np.pi:
        raise ValidationError("tilt angle must lie in [0, pi)")
    if samples <= 0:
        raise DomainError("need at least one sample")
    half = n / 2.0
    cx, cy = float(center[0]), float(center[1])
    radius = half * np.sqrt(2.0)
    xs = np.arange(int(np.floor(cx - radius)) - 1, int(np.ceil(cx + radius)) + 2)
    clips = [_clip_line_to_box(float(x), (cx, cy), half, alpha) for x in xs]
    keep = [i for i, c in enumerate(clips) if c is not None]
    if not keep:
        # no line meets the box: no material for a path
        return Estimate(value=0.0, stderr=0.0, n_samples=samples)
    xs = xs[keep[0] : keep[-1] + 1]
    clips = clips[keep[0] : keep[-1] + 1]
    m = len(xs)
    lo = np.array([c[0] for c in clips])
    hi = np.array([c[1] for c in clips])

    side_lo = np.array(
        [_side_of_point(float(x), l, (cx, cy), half, alpha) for x, l in zip(xs, lo)],
        dtype=np.int8,
    )
    side_hi = np.array(
        [_side_of_point(float(x), h, (cx, cy), half, alpha) for x, h in zip(xs, hi)],
        dtype=np.int8,
    )
    side_all = np.zeros(m, dtype=np.int8)
    if abs(np.sin(alpha)) < 1e-12:
        for i, x in enumerate(xs):
            x_loc = float(x) - cx
            if abs(x_loc + half) <= 1e-9:
                side_all[i] = 1
            elif abs(x_loc - half) <= 1e-9:
                side_all[i] = 2

    # per adjacent pair: overlap range for inner bridges, one-sided leftovers
    # for straddling bridges, and where those bridges exit the box
    inner_rng = []
    strad_specs = []  # (line index, y-lo, y-hi, exit side)
    box = CrossingSpec(center=(cx, cy), width=n, height=n, angle=alpha)
    corner_ys = np.sort(box.corners()[:, 1])
    for i in range(m - 1):
        o_lo, o_hi = max(lo[i], lo[i + 1]), min(hi[i], hi[i + 1])
        inner_rng.append((max(0.0, o_hi - o_lo), o_lo, o_hi))
    for i in range(m):
        for step in (1.0, -1.0):
            j = i + int(step)
            if 0 <= j < m:
                n_lo, n_hi = lo[j], hi[j]
            else:
                n_lo, n_hi = np.inf, np.inf
            for seg_lo, seg_hi in ((lo[i], min(hi[i], n_lo)), (max(lo[i], n_hi), hi[i])):
                if seg_hi - seg_lo <= 1e-12:
                    continue
                # the exit side is constant between corner heights, so cut
                # the segment there and classify each piece by its midpoint
                cut_pts = [seg_lo] + [
                    float(v) for v in corner_ys if seg_lo < v < seg_hi
                ] + [seg_hi]
                for p_lo, p_hi in zip(cut_pts[:-1], cut_pts[1:]):
                    if p_hi - p_lo <= 1e-12:
                        continue
                    mid = 0.5 * (p_lo + p_hi)
                    side = _bridge_exit_side(
                        float(xs[i]), mid, step, (cx, cy), half, alpha
                    )
                    if side:
                        strad_specs.append((i, p_lo, p_hi, side))

    lengths = hi - lo
    seed, gen = _resolve_rng(rng)
    hits = 0
    for s in range(samples):
        r = _replica_rng(seed, s, gen)
        cut_counts = r.poisson(lengths)
        cuts_ptr = np.concatenate([[0], np.cumsum(cut_counts)]).astype(np.int64)
        cuts_flat = np.empty(cuts_ptr[-1])
        for i in range(m):
            segment = r.uniform(lo[i], hi[i], cut_counts[i])
            segment.sort()
            cuts_flat[cuts_ptr[i] : cuts_ptr[i + 1]] = segment
        inner_line, inner_y = [], []
        for i, (length, o_lo, o_hi) in enumerate(inner_rng):
            if length > 0:
                k = r.poisson(length)
                if k:
                    inner_line.extend([i] * k)
                    inner_y.extend(r.uniform(o_lo, o_hi, k).tolist())
        strad_line, strad_y, strad_side = [], [], []
        for i, seg_lo, seg_hi, side in strad_specs:
            k = r.poisson(seg_hi - seg_lo)
            if k:
                strad_line.extend([i] * k)
                strad_y.extend(r.uniform(seg_lo, seg_hi, k).tolist())
                strad_side.extend([side] * k)
        hits += _kernels.spacetime_connected(
            lo,
            hi,
            cuts_flat,
            cuts_ptr,
            side_lo,
            side_hi,
            side_all,
            np.asarray(inner_line, dtype=np.int64),
            np.asarray(inner_y, dtype=float),
            np.asarray(strad_line, dtype=np.int64),
            np.asarray(strad_y, dtype=float),
            np.asarray(strad_side, dtype=np.int8),
        )
    value = hits / samples
    stderr = float(np.sqrt(value * (1.0 - value) / samples))
    return Estimate(value=float(value), stderr=stderr, n_samples=samples)
