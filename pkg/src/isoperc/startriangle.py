"""The star-triangle transformation for percolation and random-cluster laws.

A triangle on outer vertices A, B, C (edge ``i`` opposite vertex ``i``) can
be exchanged with a three-legged star (leg ``i`` touching vertex ``i``)
without changing the law of which outer vertices are connected, provided the
parameters satisfy a solvability identity.  This module computes those
identities, the exact five-point connectivity laws, an explicit validated
coupling for percolation configurations, and the combined geometric switch
on an isoradial graph (hexagon flip plus configuration transport).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import (
    MissingTilingError,
    NotSolvableError,
    ValidationError,
    WrongModelError,
)
from .isoradial import (
    IsoradialGraph,
    build_isoradial,
    percolation_probability,
    percolation_weights,
    rc_edge_activity,
)
from .percsim import Configuration
from .tiling import hexagon_flip

__all__ = [
    "PARTITION_NAMES",
    "CouplingKernel",
    "EquivalenceReport",
    "PartitionLaw",
    "TriangleParams",
    "apply_switch",
    "couple_triangle_star",
    "coupling_kernel",
    "partition_law",
    "rc_solvability",
    "solvability_residual",
    "triangle_solvability",
    "verify_equivalence",
]

PARTITION_NAMES = ("A|B|C", "AB|C", "AC|B", "BC|A", "ABC")

# Partition of {A,B,C} induced by each of the 8 edge states (bit i = edge or
# leg i).  A lone triangle edge i joins the pair excluding vertex i; two open
# star legs with leg i closed do the same.
_TRI_PARTITION = tuple(
    0 if bin(s).count("1") == 0 else (3 - (s.bit_length() - 1) if bin(s).count("1") == 1 else 4)
    for s in range(8)
)
_STAR_PARTITION = tuple(
    0
    if bin(s).count("1") <= 1
    else (3 - ((7 ^ s).bit_length() - 1) if bin(s).count("1") == 2 else 4)
    for s in range(8)
)
# components of the 3-vertex triangle / 4-vertex star graph, by open count
_TRI_COMPONENTS = (3, 2, 1, 1)
_STAR_COMPONENTS = (4, 3, 2, 1)

_SOLVABLE_TOL = {"percolation": 1e-9, "random-cluster": 1e-8}


def triangle_solvability(p0: float, p1: float, p2: float) -> float:
    """Residual whose vanishing makes the percolation triangle exchangeable."""
    return p0 + p1 + p2 - p0 * p1 * p2 - 1.0


def rc_solvability(y0: float, y1: float, y2: float, q: float) -> float:
    """Residual whose vanishing makes the random-cluster triangle exchangeable."""
    return y0 * y1 * y2 + y0 * y1 + y1 * y2 + y2 * y0 - q


@dataclass(frozen=True)
class TriangleParams:
    """Edge parameters of the triangle; star parameters are derived."""

    model: str
    values: Tuple[float, float, float]
    q: Optional[float] = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != 3:
            raise ValidationError("exactly three edge parameters required")
        if self.model == "percolation":
            if self.q is not None:
                raise ValidationError("percolation params carry no q")
            if not all(0.0 <= v < 1.0 for v in vals):
                raise ValidationError("percolation probabilities must lie in [0, 1)")
        elif self.model == "random-cluster":
            if self.q is None or self.q < 1:
                raise ValidationError("random-cluster params need q >= 1")
            if not all(v > 0.0 for v in vals):
                raise ValidationError("edge activities must be positive")
        else:
            raise ValidationError(f"unknown model {self.model!r}")

    @classmethod
    def percolation(cls, p0: float, p1: float, p2: float) -> "TriangleParams":
        return cls(model="percolation", values=(p0, p1, p2))

    @classmethod
    def random_cluster(cls, y0: float, y1: float, y2: float, q: float) -> "TriangleParams":
        return cls(model="random-cluster", values=(y0, y1, y2), q=float(q))

    @classmethod
    def from_angles(cls, angles, model: str = "percolation", q: Optional[float] = None,
                    beta: float = 1.0) -> "TriangleParams":
        """Canonical solvable parameters for rhombus angles summing to 2*pi."""
        angles = np.asarray(angles, dtype=float)
        if angles.shape != (3,):
            raise ValidationError("three angles required")
        if abs(angles.sum() - 2.0 * np.pi) > 1e-7:
            raise ValidationError("angles must sum to 2*pi for a solvable triangle")
        if model == "percolation":
            return cls.percolation(*percolation_probability(angles, beta))
        if model == "random-cluster":
            if q is None:
                raise ValidationError("random-cluster params need q")
            return cls.random_cluster(*rc_edge_activity(angles, q, beta), q=q)
        raise ValidationError(f"unknown model {model!r}")

    @property
    def star_values(self) -> Tuple[float, float, float]:
        """Leg parameters: complementary probabilities, or activities q/y."""
        if self.model == "percolation":
            return tuple(1.0 - v for v in self.values)
        return tuple(self.q / v for v in self.values)


def solvability_residual(params: TriangleParams) -> float:
    if params.model == "percolation":
        return triangle_solvability(*params.values)
    return rc_solvability(*params.values, params.q)


@dataclass(frozen=True)
class PartitionLaw:
    """Distribution over the five partitions of the outer vertices."""

    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", probs)
        if probs.shape != (5,):
            raise ValidationError("a partition law has five entries")
        if np.any(probs < -1e-15):
            raise ValidationError("partition probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError("partition probabilities must sum to 1")

    def __getitem__(self, name: str) -> float:
        return float(self.probabilities[PARTITION_NAMES.index(name)])

    def to_json(self) -> dict:
        return {n: float(p) for n, p in zip(PARTITION_NAMES, self.probabilities)}


def _state_weights(shape: str, params: TriangleParams) -> np.ndarray:
    """Unnormalised weight of each of the 8 edge states."""
    if shape == "triangle":
        vals, partition_k = params.values, _TRI_COMPONENTS
    elif shape == "star":
        vals, partition_k = params.star_values, _STAR_COMPONENTS
    else:
        raise ValidationError("shape must be 'triangle' or 'star'")
    w = np.empty(8)
    for s in range(8):
        bits = [(s >> i) & 1 for i in range(3)]
        if params.model == "percolation":
            w[s] = np.prod([v if b else 1.0 - v for v, b in zip(vals, bits)])
        else:
            w[s] = np.prod([v if b else 1.0 for v, b in zip(vals, bits)])
            w[s] *= params.q ** partition_k[sum(bits)]
    return w


def _state_partitions(shape: str):
    return _TRI_PARTITION if shape == "triangle" else _STAR_PARTITION


def partition_law(shape: str, params: TriangleParams) -> PartitionLaw:
    """Exact law of the induced partition, by enumeration of 8 states.

    Random-cluster weights are ``(prod of open activities) * q^k`` with ``k``
    counting all components of the small graph, isolated vertices included;
    the star's centre therefore contributes a factor q when isolated.
    """
    weights = _state_weights(shape, params)
    parts = _state_partitions(shape)
    law = np.zeros(5)
    for s in range(8):
        law[parts[s]] += weights[s]
    return PartitionLaw(probabilities=law / law.sum())


@dataclass(frozen=True)
class EquivalenceReport:
    """Both laws, the solvability residual, and the pass verdict."""

    residual: float
    law_triangle: PartitionLaw
    law_star: PartitionLaw
    max_abs_diff: float
    solvable: bool
    laws_agree: bool
    passed: bool

    def to_json(self) -> dict:
        return {
            "residual": self.residual,
            "law_triangle": [float(v) for v in self.law_triangle.probabilities],
            "law_star": [float(v) for v in self.law_star.probabilities],
            "max_abs_diff": self.max_abs_diff,
            "pass": self.passed,
        }


def verify_equivalence(params: TriangleParams, tolerance: float = 1e-10) -> EquivalenceReport:
    """Check that the two laws agree exactly when the residual vanishes.

    The verdict is the biconditional: solvable parameters must give laws
    within ``tolerance``, and non-solvable ones must not.
    """
    residual = solvability_residual(params)
    law_t = partition_law("triangle", params)
    law_s = partition_law("star", params)
    diff = float(np.max(np.abs(law_t.probabilities - law_s.probabilities)))
    solvable = abs(residual) <= _SOLVABLE_TOL[params.model]
    agree = diff <= tolerance
    return EquivalenceReport(
        residual=float(residual),
        law_triangle=law_t,
        law_star=law_s,
        max_abs_diff=diff,
        solvable=solvable,
        laws_agree=agree,
        passed=agree == solvable,
    )


# ------------------------------------------------------------- coupling


@dataclass(frozen=True)
class CouplingKernel:
    """Validated 8x8 stochastic matrix from one shape's states to the other's.

    Rows are input states, columns output states (bit i = edge or leg i).
    Within each partition class the output is drawn from the target shape's
    product law conditioned on that class; classes with a unique compatible
    output are deterministic.
    """

    direction: str
    params: TriangleParams
    matrix: np.ndarray

    def apply(self, state: int, rng: np.random.Generator) -> int:
        return int(rng.choice(8, p=self.matrix[state]))


def coupling_kernel(params: TriangleParams, direction: str = "triangle-to-star") -> CouplingKernel:
    """Build and self-certify the percolation configuration coupling.

    Raises when the parameters are not solvable; validation re-checks by
    enumeration that the kernel preserves the partition pointwise and pushes
    the source product law exactly onto the target product law.
    """
    if params.model != "percolation":
        raise WrongModelError(
            "configuration coupling exists for percolation only; random-cluster "
            "equivalence is law-level"
        )
    if direction not in ("triangle-to-star", "star-to-triangle"):
        raise ValidationError("direction must be 'triangle-to-star' or 'star-to-triangle'")
    residual = solvability_residual(params)
    if abs(residual) > 1e-9:
        raise NotSolvableError(
            f"triangle parameters are not solvable (residual {residual:.3e})"
        )
    if direction == "triangle-to-star":
        src_shape, dst_shape = "triangle", "star"
    else:
        src_shape, dst_shape = "star", "triangle"
    src_w = _state_weights(src_shape, params)
    dst_w = _state_weights(dst_shape, params)
    src_part = _state_partitions(src_shape)
    dst_part = _state_partitions(dst_shape)

    matrix = np.zeros((8, 8))
    for s in range(8):
        targets = [t for t in range(8) if dst_part[t] == src_part[s]]
        mass = sum(dst_w[t] for t in targets)
        for t in targets:
            matrix[s, t] = dst_w[t] / mass

    if np.max(np.abs(matrix.sum(axis=1) - 1.0)) > 1e-12:
        raise ValidationError("coupling rows must be stochastic")
    for s in range(8):
        for t in range(8):
            if matrix[s, t] > 0 and dst_part[t] != src_part[s]:
                raise ValidationError("coupling must preserve the partition")
    push = src_w @ matrix
    if np.max(np.abs(push - dst_w)) > 1e-12:
        raise ValidationError(
            "coupling does not push the source law onto the target law"
        )
    return CouplingKernel(direction=direction, params=params, matrix=matrix)


def couple_triangle_star(config, direction: str, params: TriangleParams, rng) -> np.ndarray:
    """Transport a 3-bit configuration through the validated coupling."""
    bits = np.asarray(config).astype(int).reshape(3)
    state = int(bits[0] | (bits[1] << 1) | (bits[2] << 2))
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    kernel = coupling_kernel(params, direction)
    out = kernel.apply(state, rng)
    return np.array([(out >> i) & 1 for i in range(3)], dtype=np.int8)


# ------------------------------------------------------------ the switch


def _edge_of_rhombus(g: IsoradialGraph) -> np.ndarray:
    if g.edge_rhombus is None:
        raise MissingTilingError("graph lacks its rhombus correspondence")
    out = np.empty(g.n_edges, dtype=np.int64)
    out[g.edge_rhombus] = np.arange(g.n_edges)
    return out


def _labelled_trio(g: IsoradialGraph, trio, shape: str):
    """(rhombus, edge id, outer-vertex coords) for the three switch rhombi.

    The outer label of a rhombus is the triangle vertex its edge excludes,
    or the vertex its star leg touches; either way the label survives the
    flip, which is what makes the old and new bits line up.
    """
    edge_of = _edge_of_rhombus(g)
    edges = [int(edge_of[r]) for r in trio]
    ends = [tuple(g.edges[e]) for e in edges]
    if shape == "star":
        counts = {}
        for a, b in ends:
            counts[a] = counts.get(a, 0) + 1
            counts[b] = counts.get(b, 0) + 1
        centers = [v for v, k in counts.items() if k == 3]
        if len(centers) != 1:
            raise ValidationError("star legs must share exactly one centre")
        centre = centers[0]
        labels = [a if b == centre else b for a, b in ends]
    else:
        outer = sorted(set(v for pair in ends for v in pair))
        if len(outer) != 3:
            raise ValidationError("triangle edges must span exactly three vertices")
        labels = [next(v for v in outer if v not in pair) for pair in ends]
    return edges, g.vertices[labels]


def apply_switch(
    g: IsoradialGraph,
    weights,
    config: Configuration,
    center_vertex: int,
    rng,
):
    """Flip the hexagon at a tiling vertex and transport the configuration.

    Returns the flipped graph, its canonical weights, and a configuration
    that agrees with ``config`` off the hexagon and is the coupled image on
    it, so connectivity between vertices outside the hexagon is preserved
    sample by sample.
    """
    if g.tiling is None:
        raise MissingTilingError("switching requires the source tiling")
    if weights.model != "percolation":
        raise WrongModelError("configuration-level switching is percolation-only")
    canonical = percolation_probability(g.edge_angles)
    if abs(weights.beta - 1.0) > 1e-12 or not np.allclose(
        weights.p, canonical, rtol=0.0, atol=1e-9
    ):
        raise ValidationError("switching requires canonical weights at beta = 1")
    if len(config.open) != g.n_edges:
        raise ValidationError("configuration does not match the graph")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)

    tiling = g.tiling
    flipped = hexagon_flip(tiling, center_vertex)
    trio = [r for r, _slot in tiling.rhombi_at_vertex(center_vertex)]
    colour = tiling.two_colour()
    shape = "star" if colour[center_vertex] == g.colour_class else "triangle"

    g2 = build_isoradial(flipped, g.colour_class, validate=False)
    w2 = percolation_weights(g2)

    edges_old, coords_old = _labelled_trio(g, trio, shape)
    new_shape = "triangle" if shape == "star" else "star"
    edges_new, coords_new = _labelled_trio(g2, trio, new_shape)
    # pair each new label with the old label at the same outer vertex
    perm = []
    for c in coords_new:
        dist = np.hypot(*(coords_old - c).T)
        j = int(np.argmin(dist))
        if dist[j] > 1e-6:
            raise ValidationError("switch labels do not survive the flip")
        perm.append(j)
    if sorted(perm) != [0, 1, 2]:
        raise ValidationError("switch labels do not survive the flip")

    if shape == "triangle":
        p_tri = [float(weights.p[e]) for e in edges_old]
        direction = "triangle-to-star"
    else:
        p_tri = [1.0 - float(weights.p[e]) for e in edges_old]
        direction = "star-to-triangle"
    params = TriangleParams.percolation(*p_tri)

    in_bits = [int(config.open[e]) for e in edges_old]
    out_bits = couple_triangle_star(in_bits, direction, params, rng)

    edge_of_old = _edge_of_rhombus(g)
    edge_of_new = _edge_of_rhombus(g2)
    open2 = np.empty(g2.n_edges, dtype=bool)
    open2[edge_of_new] = config.open[edge_of_old]
    for j in range(3):
        open2[edges_new[j]] = bool(out_bits[perm[j]])

    return g2, w2, Configuration(
        open=open2,
        seed=None,
        graph_hash=g2.content_hash(),
        weights_key=w2.key,
    )
