"""Finite-volume random-cluster measures: exact enumeration on small graphs,
single-edge heat-bath chains at scale, and critical-point probes.

Cluster weights follow the ``q^k`` convention where k counts every component,
isolated vertices included, after merging boundary vertices according to the
chosen boundary condition.  Only q >= 1 is supported; the monotone coupling
used by the scans relies on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .analysis import ExponentFit, fit_exponential, fit_power_law
from .errors import (
    DomainError,
    GeometryError,
    OutOfRegimeError,
    TooLargeError,
    ValidationError,
)
from .isoradial import EdgeWeights, IsoradialGraph, rc_weights
from .percsim import (
    Configuration,
    CrossingSpec,
    ObservableCurve,
    _CrossingGeometry,
    _distance_pairs,
    _max_rhombus_diameter,
    _resolve_rng,
)

__all__ = [
    "BoundaryCondition",
    "DecayReport",
    "RCDistribution",
    "RCParams",
    "critical_surface_residual",
    "exact_rc_distribution",
    "heat_bath_conditional",
    "rc_config_weight",
    "rc_critical_point",
    "rc_crossing_scan",
    "rc_heat_bath_sample",
    "rc_state_histogram",
    "rc_two_point_decay",
    "square_block_spec",
    "square_lattice_patch",
    "square_patch_crossing_spec",
]

ENUMERATION_EDGE_LIMIT = 24
HISTOGRAM_EDGE_LIMIT = 20


@dataclass(frozen=True)
class BoundaryCondition:
    """How boundary vertices are identified when counting clusters."""

    kind: str
    blocks: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.kind not in ("free", "wired", "explicit"):
            raise ValidationError("boundary kind must be free, wired or explicit")
        if self.kind == "explicit":
            if not self.blocks:
                raise ValidationError("explicit boundary conditions need blocks")
            object.__setattr__(
                self, "blocks", tuple(tuple(int(v) for v in blk) for blk in self.blocks)
            )
        elif self.blocks is not None:
            raise ValidationError(f"{self.kind} boundary conditions carry no blocks")

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls(kind="free")

    @classmethod
    def wired(cls) -> "BoundaryCondition":
        return cls(kind="wired")

    @classmethod
    def explicit(cls, blocks) -> "BoundaryCondition":
        return cls(kind="explicit", blocks=tuple(tuple(b) for b in blocks))

    def collapse(self, g: IsoradialGraph):
        """(vertex -> merged id) map and the merged vertex count."""
        parent = np.arange(g.n_vertices, dtype=np.int64)
        if self.kind == "wired":
            b = g.boundary_vertices
            if len(b):
                parent[b] = b[0]
        elif self.kind == "explicit":
            claimed = [v for blk in self.blocks for v in blk]
            if sorted(claimed) != sorted(g.boundary_vertices.tolist()):
                raise ValidationError(
                    "explicit blocks must cover the boundary vertex set exactly"
                )
            for blk in self.blocks:
                parent[list(blk)] = blk[0]
        roots = np.unique(parent)
        compact = np.empty(g.n_vertices, dtype=np.int64)
        compact[roots] = np.arange(len(roots))
        return compact[parent], len(roots)


@dataclass(frozen=True)
class RCParams:
    """Cluster weight q and per-edge open probabilities."""

    q: float
    p: np.ndarray
    beta: float = 1.0
    y: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q))
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if self.q < 1.0:
            raise DomainError("only q >= 1 is supported")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if p.ndim != 1 or np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValidationError("edge probabilities must lie strictly in (0, 1)")
        y = p / (1.0 - p) if self.y is None else np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if y.shape != p.shape or np.max(np.abs(p - y / (1.0 + y))) > 1e-12:
            raise ValidationError("edge activities disagree with probabilities")

    @classmethod
    def canonical(cls, g: IsoradialGraph, q: float, beta: float = 1.0) -> "RCParams":
        w = rc_weights(g, q, beta)
        return cls(q=q, p=w.p, beta=beta, y=w.y)

    @classmethod
    def from_weights(cls, weights: EdgeWeights) -> "RCParams":
        if weights.model != "random-cluster":
            raise ValidationError("expected random-cluster weights")
        return cls(q=weights.q, p=weights.p, beta=weights.beta, y=weights.y)

    @classmethod
    def homogeneous(cls, n_edges: int, p: float, q: float) -> "RCParams":
        return cls(q=q, p=np.full(n_edges, float(p)))

    def conditional_open(self) -> Tuple[np.ndarray, np.ndarray]:
        """Heat-bath open probabilities given endpoints (connected, not)."""
        return self.p, self.p / (self.p + (1.0 - self.p) * self.q)

    @property
    def key(self) -> tuple:
        return ("random-cluster", round(self.q, 12), round(self.beta, 12))


def rc_critical_point(q: float) -> float:
    """Self-dual point sqrt(q)/(1+sqrt(q)) of the homogeneous square lattice."""
    if q < 1:
        raise DomainError("only q >= 1 is supported")
    r = math.sqrt(q)
    return r / (1.0 + r)


def critical_surface_residual(p1: float, p2: float, q: float) -> float:
    """y1*y2 - q for the anisotropic square lattice; zero on the surface."""
    if not (0.0 < p1 < 1.0 and 0.0 < p2 < 1.0):
        raise DomainError("probabilities must lie strictly in (0, 1)")
    if q < 1:
        raise DomainError("only q >= 1 is supported")
    return (p1 / (1.0 - p1)) * (p2 / (1.0 - p2)) - q


def _check_config(g: IsoradialGraph, config: Configuration):
    if len(config.open) != g.n_edges:
        raise ValidationError("configuration does not match the graph")


def rc_config_weight(
    g: IsoradialGraph, config: Configuration, params: RCParams, boundary: BoundaryCondition
) -> float:
    """Unnormalised log weight: open/closed factors plus k * log q."""
    _check_config(g, config)
    if len(params.p) != g.n_edges:
        raise ValidationError("parameters do not match the graph")
    vmap, n_col = boundary.collapse(g)
    open_mask = np.ascontiguousarray(config.open, dtype=np.bool_)
    cu = np.ascontiguousarray(vmap[g.edges[:, 0]])
    cv = np.ascontiguousarray(vmap[g.edges[:, 1]])
    _, k = _kernels.label_components(n_col, cu, cv, open_mask)
    logw = float(
        np.sum(np.where(config.open, np.log(params.p), np.log1p(-params.p)))
    )
    return logw + k * math.log(params.q)


@dataclass(frozen=True)
class RCDistribution:
    """Exact law over all edge configurations, indexed by open-edge bitmask."""

    probabilities: np.ndarray
    log_weights: np.ndarray
    q: float
    boundary_kind: str

    def __post_init__(self):
        if abs(float(self.probabilities.sum()) - 1.0) > 1e-12:
            raise ValidationError("probabilities must sum to 1")

    @property
    def n_edges(self) -> int:
        return int(np.log2(len(self.probabilities)) + 0.5)

    def edge_marginals(self) -> np.ndarray:
        masks = np.arange(len(self.probabilities))
        return np.array(
            [self.probabilities[(masks >> e) & 1 == 1].sum() for e in range(self.n_edges)]
        )


def exact_rc_distribution(
    g: IsoradialGraph, params: RCParams, boundary: BoundaryCondition
) -> RCDistribution:
    """Brute-force normalisation over all 2^E configurations."""
    if g.n_edges > ENUMERATION_EDGE_LIMIT:
        raise TooLargeError(
            f"enumeration is capped at {ENUMERATION_EDGE_LIMIT} edges, got {g.n_edges}"
        )
    if len(params.p) != g.n_edges:
        raise ValidationError("parameters do not match the graph")
    vmap, n_col = boundary.collapse(g)
    cu = np.ascontiguousarray(vmap[g.edges[:, 0]])
    cv = np.ascontiguousarray(vmap[g.edges[:, 1]])
    logw = _kernels.rc_enumerate_logw(
        n_col, cu, cv, np.log(params.p), np.log1p(-params.p), math.log(params.q)
    )
    shifted = logw - logw.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    return RCDistribution(
        probabilities=probs, log_weights=logw, q=params.q, boundary_kind=boundary.kind
    )


# ------------------------------------------------------------ the chain


class _ChainContext:
    """Collapsed-graph arrays shared by every update of one chain family."""

    def __init__(self, g: IsoradialGraph, params: RCParams, boundary: BoundaryCondition):
        if len(params.p) != g.n_edges:
            raise ValidationError("parameters do not match the graph")
        vmap, n_col = boundary.collapse(g)
        self.cu = np.ascontiguousarray(vmap[g.edges[:, 0]])
        self.cv = np.ascontiguousarray(vmap[g.edges[:, 1]])
        self.n_col = n_col
        both = np.concatenate([self.cu, self.cv])
        other = np.concatenate([self.cv, self.cu])
        eid = np.tile(np.arange(g.n_edges, dtype=np.int64), 2)
        order = np.argsort(both, kind="stable")
        counts = np.bincount(both, minlength=n_col)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.nbr_v = np.ascontiguousarray(other[order])
        self.nbr_e = np.ascontiguousarray(eid[order])


def _initial_state(n_edges: int, initial) -> np.ndarray:
    if isinstance(initial, str):
        if initial == "closed":
            return np.zeros(n_edges, dtype=np.bool_)
        if initial == "open":
            return np.ones(n_edges, dtype=np.bool_)
        raise ValidationError("initial state must be 'closed', 'open' or an array")
    state = np.asarray(initial, dtype=np.bool_).copy()
    if state.shape != (n_edges,):
        raise ValidationError("initial state does not match the edge count")
    return state


_NO_MASKS = np.empty(0, dtype=np.int64)


def _chain_rng(rng):
    """Accept an integer seed or a Generator; always hand back a Generator."""
    seed, gen = _resolve_rng(rng)
    if gen is None:
        gen = np.random.default_rng(seed)
    return seed, gen


def _run_sweeps(ctx, p_conn, p_disc, state, sweeps, rng, chunk=256):
    done = 0
    n_edges = len(p_conn)
    while done < sweeps:
        step = min(chunk, sweeps - done)
        uniforms = rng.random((step, n_edges))
        _kernels.rc_sweeps(
            ctx.indptr, ctx.nbr_v, ctx.nbr_e, ctx.cu, ctx.cv,
            state, p_conn, p_disc, uniforms, _NO_MASKS, False,
        )
        done += step


def heat_bath_conditional(
    g: IsoradialGraph,
    params: RCParams,
    boundary: BoundaryCondition,
    open_state: np.ndarray,
    edge: int,
) -> float:
    """P(edge open | all other edges), the single-edge update law."""
    ctx = _ChainContext(g, params, boundary)
    rest = np.ascontiguousarray(open_state, dtype=np.bool_).copy()
    rest[edge] = False
    labels, _ = _kernels.label_components(ctx.n_col, ctx.cu, ctx.cv, rest)
    p = float(params.p[edge])
    if labels[ctx.cu[edge]] == labels[ctx.cv[edge]]:
        return p
    return p / (p + (1.0 - p) * params.q)


def rc_heat_bath_sample(
    g: IsoradialGraph,
    params: RCParams,
    boundary: BoundaryCondition,
    sweeps: int,
    rng,
    initial="closed",
) -> Configuration:
    """State of a single heat-bath chain after the given number of sweeps.

    Each sweep resamples every edge once in index order from its exact
    conditional law, so the target measure is stationary; successive calls
    with independent RNG streams give independent chains.
    """
    if sweeps < 0:
        raise ValidationError("sweeps must be nonnegative")
    seed, gen = _chain_rng(rng)
    ctx = _ChainContext(g, params, boundary)
    p_conn, p_disc = params.conditional_open()
    state = _initial_state(g.n_edges, initial)
    _run_sweeps(ctx, p_conn, p_disc, state, sweeps, gen)
    return Configuration(
        open=state,
        seed=seed,
        graph_hash=g.content_hash(),
        weights_key=params.key + (boundary.kind,),
    )


def rc_state_histogram(
    g: IsoradialGraph,
    params: RCParams,
    boundary: BoundaryCondition,
    sweeps: int,
    rng,
    burn_in: int = 100,
    initial="closed",
) -> np.ndarray:
    """Visit counts per configuration bitmask, one recording per sweep."""
    if g.n_edges > HISTOGRAM_EDGE_LIMIT:
        raise TooLargeError(
            f"histograms are capped at {HISTOGRAM_EDGE_LIMIT} edges, got {g.n_edges}"
        )
    _, gen = _chain_rng(rng)
    ctx = _ChainContext(g, params, boundary)
    p_conn, p_disc = params.conditional_open()
    state = _initial_state(g.n_edges, initial)
    _run_sweeps(ctx, p_conn, p_disc, state, burn_in, gen)
    counts = np.zeros(1 << g.n_edges, dtype=np.int64)
    done = 0
    chunk = max(1, 4_000_000 // max(g.n_edges, 1))
    while done < sweeps:
        step = min(chunk, sweeps - done)
        uniforms = gen.random((step, g.n_edges))
        masks = np.empty(step, dtype=np.int64)
        _kernels.rc_sweeps(
            ctx.indptr, ctx.nbr_v, ctx.nbr_e, ctx.cu, ctx.cv,
            state, p_conn, p_disc, uniforms, masks, True,
        )
        counts += np.bincount(masks, minlength=len(counts))
        done += step
    return counts


# ------------------------------------------------------------- the scans


def square_lattice_patch(cols: int, rows: int) -> IsoradialGraph:
    """Axis-aligned square-lattice patch with unit-circumradius faces.

    cols x rows vertices at spacing sqrt(2), every edge angle pi/2; the
    perimeter is the boundary vertex set for wired conditions.
    """
    if cols < 2 or rows < 2:
        raise ValidationError("need at least 2x2 vertices")
    step = math.sqrt(2.0)
    aa, bb = np.meshgrid(np.arange(cols), np.arange(rows), indexing="ij")
    vertices = np.stack([aa.reshape(-1) * step, bb.reshape(-1) * step], axis=1)

    def vid(a, b):
        return a * rows + b

    right_u = vid(aa[:-1, :], bb[:-1, :]).reshape(-1)
    right_v = vid(aa[:-1, :] + 1, bb[:-1, :]).reshape(-1)
    up_u = vid(aa[:, :-1], bb[:, :-1]).reshape(-1)
    up_v = vid(aa[:, :-1], bb[:, :-1] + 1).reshape(-1)
    edges = np.concatenate(
        [np.stack([right_u, right_v], axis=1), np.stack([up_u, up_v], axis=1)]
    )
    angles = np.full(len(edges), np.pi / 2.0)

    fa, fb = np.meshgrid(np.arange(cols - 1), np.arange(rows - 1), indexing="ij")
    fa, fb = fa.reshape(-1), fb.reshape(-1)
    faces = [
        np.array([vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)])
        for a, b in zip(fa, fb)
    ]
    centers = np.stack([(fa + 0.5) * step, (fb + 0.5) * step], axis=1)
    boundary = np.flatnonzero(
        (aa.reshape(-1) == 0) | (aa.reshape(-1) == cols - 1)
        | (bb.reshape(-1) == 0) | (bb.reshape(-1) == rows - 1)
    )
    return IsoradialGraph(
        vertices=vertices,
        edges=edges,
        edge_angles=angles,
        faces=faces,
        face_centers=centers,
        boundary_vertices=boundary,
    )


def square_block_spec(
    g: IsoradialGraph,
    block_cols: int,
    block_rows: int,
    direction: str = "horizontal",
    corner: tuple | None = None,
) -> CrossingSpec:
    """Crossing box holding a block of vertices on a square-lattice patch.

    The box sides run half a cell beyond the extreme vertex columns and rows,
    so no vertex lies on a side and every attachment edge crosses it properly.
    A block of r rows and c columns crossed horizontally has probability
    exactly 1/2 at p = 1/2 when c = r + 1, by duality.
    """
    if block_cols < 1 or block_rows < 1:
        raise ValidationError("block must contain at least one vertex each way")
    step = math.sqrt(2.0)
    lo = g.vertices.min(axis=0)
    hi = g.vertices.max(axis=0)
    total_cols = int(round((hi[0] - lo[0]) / step)) + 1
    total_rows = int(round((hi[1] - lo[1]) / step)) + 1
    if corner is None:
        corner = ((total_cols - block_cols) // 2, (total_rows - block_rows) // 2)
    a0, b0 = corner
    if a0 < 0 or b0 < 0 or a0 + block_cols > total_cols or b0 + block_rows > total_rows:
        raise GeometryError("vertex block does not fit inside the patch")
    center = (
        float(lo[0] + step * (a0 + (block_cols - 1) / 2.0)),
        float(lo[1] + step * (b0 + (block_rows - 1) / 2.0)),
    )
    return CrossingSpec(
        center=center,
        width=block_cols * step,
        height=block_rows * step,
        angle=0.0,
        direction=direction,
    )


def square_patch_crossing_spec(
    g: IsoradialGraph, margin_cells: int = 3, direction: str = "horizontal"
) -> CrossingSpec:
    """Largest centred crossing box leaving a margin of whole vertex columns.

    The geometry check downstream needs two rhombus diameters of clearance,
    which the half-cell side overhang erodes; three excluded columns per side
    is the minimum that always passes.
    """
    step = math.sqrt(2.0)
    lo = g.vertices.min(axis=0)
    hi = g.vertices.max(axis=0)
    total_cols = int(round((hi[0] - lo[0]) / step)) + 1
    total_rows = int(round((hi[1] - lo[1]) / step)) + 1
    block_cols = total_cols - 2 * margin_cells
    block_rows = total_rows - 2 * margin_cells
    if block_cols < 2 or block_rows < 2:
        raise GeometryError("patch is too small for the requested margin")
    return square_block_spec(g, block_cols, block_rows, direction=direction)


def _batch_stderr(series: np.ndarray, n_batches: int = 20) -> float:
    """Standard error from batch means, robust to autocorrelation."""
    n = len(series)
    nb = min(n_batches, n)
    size = n // nb
    if size == 0 or nb < 2:
        return float(np.std(series, ddof=1) / math.sqrt(max(n, 2)))
    means = series[: nb * size].reshape(nb, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(nb))


def rc_crossing_scan(
    g: IsoradialGraph,
    q: float,
    p_grid,
    boundary: BoundaryCondition,
    samples: int,
    rng,
    burn_in: int = 200,
    thin: int = 2,
    spec: Optional[CrossingSpec] = None,
):
    """Crossing probability along a p grid from coupled heat-bath chains.

    All chains (two per grid point: all-closed and all-open starts) consume
    one shared uniform stream, which makes the per-recording indicators
    nondecreasing in p exactly and sandwiches equilibration between the two
    starts.  Returns the curve and a diagnostics dict with the two-start gap.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if p_grid.ndim != 1 or len(p_grid) == 0:
        raise ValidationError("p_grid must be a nonempty 1-D array")
    if np.any(np.diff(p_grid) <= 0):
        raise ValidationError("p_grid must be strictly increasing")
    if samples < 2:
        raise ValidationError("need at least 2 recordings")
    _, gen = _chain_rng(rng)
    if spec is None:
        spec = square_patch_crossing_spec(g)
    geom = _CrossingGeometry(g, spec)

    n_edges = g.n_edges
    params = [RCParams.homogeneous(n_edges, p, q) for p in p_grid]
    ctx = _ChainContext(g, params[0], boundary)
    conds = [pr.conditional_open() for pr in params]
    states = [
        [_initial_state(n_edges, "closed"), _initial_state(n_edges, "open")]
        for _ in p_grid
    ]

    def advance(n_sweeps):
        done = 0
        while done < n_sweeps:
            step = min(64, n_sweeps - done)
            uniforms = gen.random((step, n_edges))
            for pi in range(len(p_grid)):
                p_conn, p_disc = conds[pi]
                for state in states[pi]:
                    _kernels.rc_sweeps(
                        ctx.indptr, ctx.nbr_v, ctx.nbr_e, ctx.cu, ctx.cv,
                        state, p_conn, p_disc, uniforms, _NO_MASKS, False,
                    )
            done += step

    advance(burn_in)
    indicators = np.empty((len(p_grid), 2, samples), dtype=np.int8)
    for t in range(samples):
        advance(thin)
        for pi in range(len(p_grid)):
            for ci, state in enumerate(states[pi]):
                indicators[pi, ci, t] = geom.indicator(state[geom.edge_ids])

    merged = indicators.mean(axis=1)
    estimates = merged.mean(axis=1)
    stderrs = np.array([_batch_stderr(merged[pi]) for pi in range(len(p_grid))])
    gaps = (indicators[:, 1, :].astype(float) - indicators[:, 0, :]).mean(axis=1)
    gap_sigma = np.array(
        [
            _batch_stderr(indicators[pi, 1, :].astype(float) - indicators[pi, 0, :])
            for pi in range(len(p_grid))
        ]
    )
    coalesced = [bool(np.array_equal(states[pi][0], states[pi][1])) for pi in range(len(p_grid))]
    equilibrated = bool(np.all(gaps <= 3.0 * gap_sigma + 1e-9) or all(coalesced))
    curve = ObservableCurve(
        abscissae=p_grid,
        estimates=estimates,
        stderrs=stderrs,
        n_samples=2 * samples,
        name=f"rc-crossing-q{q:g}-{boundary.kind}",
    )
    diagnostics = {
        "q": q,
        "boundary": boundary.kind,
        "burn_in": burn_in,
        "thin": thin,
        "samples": samples,
        "two_start_gap": gaps.tolist(),
        "gap_sigma": gap_sigma.tolist(),
        "coalesced": coalesced,
        "equilibrated": equilibrated,
        "box": {
            "center": [float(spec.center[0]), float(spec.center[1])],
            "width": spec.width,
            "height": spec.height,
            "angle": spec.angle,
            "direction": spec.direction,
        },
    }
    return curve, diagnostics


# ------------------------------------------------------- two-point decay


@dataclass(frozen=True)
class DecayReport:
    """Two-point curve with competing exponential and power-law fits."""

    curve: ObservableCurve
    exponential: ExponentFit
    power: ExponentFit
    exponential_preferred: bool
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "exponential": self.exponential.to_json(),
            "power": self.power.to_json(),
            "exponential_preferred": self.exponential_preferred,
            "diagnostics": self.diagnostics,
        }


def rc_two_point_decay(
    g: IsoradialGraph,
    q: float,
    beta: float,
    distances,
    samples: int,
    rng,
    boundary: Optional[BoundaryCondition] = None,
    burn_in: int = 200,
    thin: int = 2,
    enforce_regime: bool = True,
) -> DecayReport:
    """Connection probability versus distance under canonical rc weights.

    In the proven regime (q >= 4, beta < 1, free boundary) the decay is
    exponential; with enforce_regime the preconditions are checked and a
    power-law-preferred outcome raises.  Set enforce_regime=False for
    comparison runs outside the regime.
    """
    if boundary is None:
        boundary = BoundaryCondition.free()
    if enforce_regime:
        if q < 4.0:
            raise OutOfRegimeError("exponential decay is proven for q >= 4 only")
        if beta >= 1.0:
            raise OutOfRegimeError("exponential decay requires beta < 1")
        if boundary.kind != "free":
            raise OutOfRegimeError("the decay bound is for the free boundary condition")
    distances = np.asarray(distances, dtype=float)
    if distances.ndim != 1 or len(distances) < 4:
        raise ValidationError("need at least 4 distances for the fits")
    _, gen = _chain_rng(rng)
    params = RCParams.canonical(g, q, beta)
    pairs = _distance_pairs(g, distances)
    ctx = _ChainContext(g, params, boundary)
    p_conn, p_disc = params.conditional_open()
    state = _initial_state(g.n_edges, "closed")
    _run_sweeps(ctx, p_conn, p_disc, state, burn_in, gen)

    per_sample = np.empty((samples, len(distances)))
    for t in range(samples):
        _run_sweeps(ctx, p_conn, p_disc, state, thin, gen)
        labels, _ = _kernels.label_components(ctx.n_col, ctx.cu, ctx.cv, state)
        for j, (us, vs) in enumerate(pairs):
            per_sample[t, j] = np.mean(labels[us] == labels[vs])
    estimates = per_sample.mean(axis=0)
    stderrs = np.array([_batch_stderr(per_sample[:, j]) for j in range(len(distances))])
    curve = ObservableCurve(
        abscissae=distances,
        estimates=estimates,
        stderrs=stderrs,
        n_samples=samples,
        name=f"rc-two-point-q{q:g}-beta{beta:g}",
    )
    window = None
    positive = estimates > 0
    if not np.all(positive):
        # keep the fit window clear of distances with no observed connections
        last = np.flatnonzero(~positive)
        first_bad = distances[last].min()
        inside = distances[(distances < first_bad)]
        if len(inside) < 4:
            raise DomainError(
                "too few distances with positive estimates; increase samples"
            )
        inside_sorted = np.sort(inside)
        window = (float(inside_sorted[min(2, len(inside_sorted) - 4)]), float(inside_sorted[-1]))
    expo = fit_exponential(curve, window=window, rng=gen)
    power = fit_power_law(curve, window=window, rng=gen)
    preferred = expo.residual < power.residual
    if enforce_regime and not preferred:
        raise OutOfRegimeError(
            "two-point decay does not look exponential; the chain may be "
            "under-equilibrated or the parameters outside the proven regime"
        )
    return DecayReport(
        curve=curve,
        exponential=expo,
        power=power,
        exponential_preferred=preferred,
        diagnostics={
            "q": q,
            "beta": beta,
            "boundary": boundary.kind,
            "burn_in": burn_in,
            "thin": thin,
            "samples": samples,
        },
    )
