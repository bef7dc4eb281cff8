"""Isoradial graphs built from rhombic tilings, and their canonical weights.

Fixing one bipartite class of a rhombic tiling gives the vertex set of a
planar graph: every rhombus contributes the diagonal that joins two corners
of that class.  The opposite class sits at the circumcenters of the bounded
faces, all of circumradius 1, and generates the dual graph.  The rhombus
angle opposite an edge determines the edge's length (the chord `2 sin(a/2)`)
and, through the formulas below, its percolation probability or its
random-cluster activity.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DomainError,
    GeometryError,
    InvalidAngleError,
    MissingTilingError,
    ValidationError,
)
from .tiling import RhombicTiling, validate_tiling

__all__ = [
    "EdgeWeights",
    "IsoradialGraph",
    "SpectralParameter",
    "build_isoradial",
    "dual_graph",
    "percolation_probability",
    "percolation_weights",
    "rc_edge_activity",
    "rc_spectral_parameter",
    "rc_weights",
]

# Branch selector for the random-cluster activity formula.  Within this
# distance of q = 4 the trigonometric and hyperbolic branches are replaced by
# their common limit to avoid evaluating sin(sx)/sin(sy) at s -> 0.
_Q4_WINDOW = 1e-9


def _as_angles(theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(theta <= 0.0) or np.any(theta >= np.pi):
        raise InvalidAngleError("edge angles must lie strictly between 0 and pi")
    return theta


def percolation_probability(theta, beta: float = 1.0) -> np.ndarray:
    """Canonical percolation probability for rhombus angle ``theta``.

    Defined by odds ``p/(1-p) = beta * sin((pi-theta)/3) / sin(theta/3)``.
    At ``beta = 1`` this satisfies ``p(theta) + p(pi-theta) = 1`` and gives
    ``p = 1/2`` on the square lattice (``theta = pi/2``).
    """
    theta = _as_angles(theta)
    if beta <= 0:
        raise DomainError("beta must be positive")
    odds = beta * np.sin((np.pi - theta) / 3.0) / np.sin(theta / 3.0)
    return odds / (1.0 + odds)


class SpectralParameter(NamedTuple):
    """Reparametrised cluster weight, with the branch it selects."""

    value: float
    branch: str  # "trig" (q < 4), "limit" (q = 4), or "hyper" (q > 4)


def rc_spectral_parameter(q: float) -> SpectralParameter:
    """Solve ``cos(s*pi/2) = sqrt(q)/2`` (or cosh for q > 4) for ``s``.

    The value decreases from 2/3 at q = 1 to 0 at q = 4, where the two
    branches meet; beyond 4 the hyperbolic branch grows from 0 again.
    """
    if q < 1:
        raise DomainError("cluster weight q must be at least 1")
    if abs(q - 4.0) < _Q4_WINDOW:
        return SpectralParameter(0.0, "limit")
    half = math.sqrt(q) / 2.0
    if q < 4.0:
        return SpectralParameter(2.0 / math.pi * math.acos(half), "trig")
    return SpectralParameter(2.0 / math.pi * math.acosh(half), "hyper")


def rc_edge_activity(theta, q: float, beta: float = 1.0) -> np.ndarray:
    """Random-cluster edge activity ``y`` for rhombus angle ``theta``.

    Satisfies ``y(theta) * y(pi - theta) = q`` at ``beta = 1``, equals
    ``sqrt(q)`` at ``theta = pi/2``, and reduces to the percolation odds at
    ``q = 1``.  ``beta`` scales the activity linearly.
    """
    theta = _as_angles(theta)
    if beta <= 0:
        raise DomainError("beta must be positive")
    s = rc_spectral_parameter(q)
    if s.branch == "limit":
        y = 2.0 * (np.pi - theta) / theta
    elif s.branch == "trig":
        y = math.sqrt(q) * np.sin(s.value * (np.pi - theta) / 2.0) / np.sin(
            s.value * theta / 2.0
        )
    else:
        y = math.sqrt(q) * np.sinh(s.value * (np.pi - theta) / 2.0) / np.sinh(
            s.value * theta / 2.0
        )
    return beta * y


def _weights_key(model: str, q: Optional[float], beta: float):
    return (model, None if q is None else round(float(q), 12), round(float(beta), 12))


@dataclass(frozen=True)
class EdgeWeights:
    """Per-edge parameters of a canonical measure on an isoradial graph."""

    model: str
    beta: float
    p: np.ndarray
    q: Optional[float] = None
    y: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.model not in ("percolation", "random-cluster"):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if p.ndim != 1 or np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValidationError("edge probabilities must lie strictly in (0, 1)")
        if self.model == "random-cluster":
            if self.q is None or self.q < 1:
                raise DomainError("random-cluster weights require q >= 1")
            if self.y is None:
                raise ValidationError("random-cluster weights require edge activities")
            y = np.asarray(self.y, dtype=float)
            object.__setattr__(self, "y", y)
            if y.shape != p.shape or np.any(y <= 0.0):
                raise ValidationError("edge activities must be positive, one per edge")
            if not np.allclose(p, y / (1.0 + y), rtol=0.0, atol=1e-12):
                raise ValidationError("stored probabilities disagree with activities")
        elif self.q is not None or self.y is not None:
            raise ValidationError("percolation weights carry neither q nor activities")

    @property
    def n_edges(self) -> int:
        return len(self.p)

    @property
    def key(self):
        """Hashable (model, q, beta) identifier for weight tables."""
        return _weights_key(self.model, self.q, self.beta)

    def to_json(self) -> dict:
        data = {
            "model": self.model,
            "beta": self.beta,
            "p": [float(v) for v in self.p],
        }
        if self.model == "random-cluster":
            data["q"] = self.q
            data["y"] = [float(v) for v in self.y]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "EdgeWeights":
        return cls(
            model=data["model"],
            beta=float(data["beta"]),
            p=np.asarray(data["p"], dtype=float),
            q=None if data.get("q") is None else float(data["q"]),
            y=None if data.get("y") is None else np.asarray(data["y"], dtype=float),
        )


class IsoradialGraph:
    """Embedded planar graph whose bounded faces share circumradius 1.

    Instances are immutable after construction and safe to share between
    worker processes.  ``tiling`` retains the source rhombic tiling when the
    graph was built in-process; graphs loaded from JSON drop it, which
    disables ``dual_graph``.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        edges: np.ndarray,
        edge_angles: np.ndarray,
        faces: Sequence[np.ndarray],
        face_centers: np.ndarray,
        boundary_vertices: np.ndarray,
        colour_class: int = 0,
        tiling: Optional[RhombicTiling] = None,
        edge_rhombus: Optional[np.ndarray] = None,
        weight_tables: Optional[dict] = None,
    ):
        self.vertices = np.asarray(vertices, dtype=float)
        self.edges = np.asarray(edges, dtype=np.int64)
        self.edge_angles = _as_angles(edge_angles)
        self.faces = [np.asarray(f, dtype=np.int64) for f in faces]
        self.face_centers = np.asarray(face_centers, dtype=float).reshape(-1, 2)
        self.boundary_vertices = np.asarray(boundary_vertices, dtype=np.int64)
        self.colour_class = int(colour_class)
        self.tiling = tiling
        self.edge_rhombus = None if edge_rhombus is None else np.asarray(edge_rhombus)
        self.weight_tables = dict(weight_tables or {})
        self._adjacency = None

        n, e = len(self.vertices), len(self.edges)
        if self.edges.shape != (e, 2) or self.edge_angles.shape != (e,):
            raise ValidationError("edges and edge_angles must align")
        if e and (self.edges.min() < 0 or self.edges.max() >= n):
            raise ValidationError("edge endpoint out of range")
        if len(np.unique(self.edges, axis=0)) != e:
            raise ValidationError("duplicate edges: each rhombus diagonal is unique")
        chords = np.linalg.norm(
            self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]], axis=1
        )
        if np.any(np.abs(chords - 2.0 * np.sin(self.edge_angles / 2.0)) > 1e-6):
            raise GeometryError("edge chord lengths disagree with their angles")
        if len(self.faces) != len(self.face_centers):
            raise ValidationError("faces and face_centers must align")
        if self.faces:
            flat = np.concatenate(self.faces)
            centers = np.repeat(self.face_centers, [len(f) for f in self.faces], axis=0)
            radii = np.linalg.norm(self.vertices[flat] - centers, axis=1)
            if np.any(np.abs(radii - 1.0) > 1e-6):
                raise GeometryError("face vertices must lie on a unit circumcircle")

    # ------------------------------------------------------------- queries

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def dual_angles(self) -> np.ndarray:
        """Angles of the corresponding dual edges, ``pi - theta``."""
        return np.pi - self.edge_angles

    def edge_lengths(self) -> np.ndarray:
        return 2.0 * np.sin(self.edge_angles / 2.0)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n_vertices)

    def adjacency(self):
        """CSR adjacency: (indptr, neighbour vertex ids, incident edge ids)."""
        if self._adjacency is None:
            e = self.n_edges
            both = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            other = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            eid = np.tile(np.arange(e, dtype=np.int64), 2)
            order = np.argsort(both, kind="stable")
            counts = np.bincount(both, minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._adjacency = (indptr, other[order], eid[order])
        return self._adjacency

    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    def content_hash(self) -> str:
        """Stable digest of the embedded graph, for run manifests."""
        h = hashlib.sha256()
        h.update(np.round(self.vertices, 9).tobytes())
        h.update(self.edges.tobytes())
        h.update(np.round(self.edge_angles, 12).tobytes())
        return h.hexdigest()

    # ------------------------------------------------------- serialisation

    def to_json(self, weights: Sequence[EdgeWeights] = ()) -> dict:
        return {
            "format": "isoperc-graph",
            "version": 1,
            "colour_class": self.colour_class,
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "edges": self.edges.tolist(),
            "edge_angles": [float(a) for a in self.edge_angles],
            "faces": [f.tolist() for f in self.faces],
            "face_centers": [[float(x), float(y)] for x, y in self.face_centers],
            "boundary_vertices": self.boundary_vertices.tolist(),
            "weights": [w.to_json() for w in weights],
        }

    @classmethod
    def from_json(cls, data: dict) -> "IsoradialGraph":
        if data.get("format") != "isoperc-graph" or data.get("version") != 1:
            raise ValidationError("not a version-1 isoperc graph document")
        tables = {}
        for wdata in data.get("weights", ()):
            w = EdgeWeights.from_json(wdata)
            tables[w.key] = w
        return cls(
            vertices=np.asarray(data["vertices"], dtype=float),
            edges=np.asarray(data["edges"], dtype=np.int64),
            edge_angles=np.asarray(data["edge_angles"], dtype=float),
            faces=[np.asarray(f, dtype=np.int64) for f in data["faces"]],
            face_centers=np.asarray(data["face_centers"], dtype=float).reshape(-1, 2),
            boundary_vertices=np.asarray(data["boundary_vertices"], dtype=np.int64),
            colour_class=int(data["colour_class"]),
            weight_tables=tables,
        )

    def save(self, path, weights: Sequence[EdgeWeights] = ()) -> None:
        Path(path).write_text(json.dumps(self.to_json(weights)))

    @classmethod
    def load(cls, path) -> "IsoradialGraph":
        return cls.from_json(json.loads(Path(path).read_text()))


def build_isoradial(
    tiling: RhombicTiling, colour_class: int = 0, validate: bool = True
) -> IsoradialGraph:
    """Extract the isoradial graph of one bipartite class of a tiling.

    Each rhombus contributes the diagonal joining its two ``colour_class``
    corners; the angle attached to that edge is the rhombus angle at the two
    corners *not* on the edge.  Vertices of the opposite class become the
    circumcenters of the bounded faces.  With ``validate`` the tiling is
    checked first and a failed report raises.
    """
    if colour_class not in (0, 1):
        raise ValidationError("colour_class must be 0 or 1")
    if validate:
        report = validate_tiling(tiling)
        if not report.passed:
            bad = [name for name, (ok, _) in report.checks.items() if not ok]
            raise ValidationError(f"tiling failed validation: {', '.join(bad)}")

    colour = tiling.two_colour()
    quads = tiling.rhombus_vertices
    gamma = tiling.angles()

    # Corner 0 and corner 2 always share a colour; pick whichever diagonal
    # lies in the requested class, with the angle of the off-edge corners.
    use_02 = colour[quads[:, 0]] == colour_class
    ends_old = np.where(use_02[:, None], quads[:, [0, 2]], quads[:, [1, 3]])
    theta = np.where(use_02, np.pi - gamma, gamma)

    old_ids = np.flatnonzero(colour == colour_class)
    new_of_old = np.full(tiling.n_vertices, -1, dtype=np.int64)
    new_of_old[old_ids] = np.arange(len(old_ids))
    vertices = tiling.vertices[old_ids]
    ends = new_of_old[ends_old]
    if np.any(ends < 0):
        raise ValidationError("rhombus diagonal endpoints not in the chosen class")
    edges = np.sort(ends, axis=1)

    interior = tiling.interior_vertex_mask()
    indptr, rhs, _ = tiling.vertex_incidence()
    centers_old = np.flatnonzero((colour == 1 - colour_class) & interior)
    face_centers = tiling.vertices[centers_old].reshape(-1, 2)
    faces = [None] * len(centers_old)
    degrees = (indptr[centers_old + 1] - indptr[centers_old]).astype(np.int64)
    for d in np.unique(degrees):
        sel = np.flatnonzero(degrees == d)
        # (k, d) incident rhombi -> (k, 2d) diagonal endpoints; around an
        # interior center every ring vertex appears in exactly two rhombi
        incident = rhs[indptr[centers_old[sel], None] + np.arange(d)]
        flat = np.sort(ends[incident].reshape(len(sel), 2 * d), axis=1)
        if np.any(flat[:, ::2] != flat[:, 1::2]):
            raise GeometryError("face ring around a circumcenter does not close")
        rings = flat[:, ::2]
        rel = vertices[rings] - face_centers[sel, None, :]
        order = np.argsort(np.arctan2(rel[:, :, 1], rel[:, :, 0]), axis=1)
        rings = np.take_along_axis(rings, order, axis=1)
        for row, i in enumerate(sel):
            faces[i] = rings[row]

    boundary = np.flatnonzero(~interior[old_ids])

    return IsoradialGraph(
        vertices=vertices,
        edges=edges,
        edge_angles=theta,
        faces=faces,
        face_centers=face_centers,
        boundary_vertices=boundary,
        colour_class=colour_class,
        tiling=tiling,
        edge_rhombus=np.arange(tiling.n_rhombi, dtype=np.int64),
    )


def dual_graph(g: IsoradialGraph) -> IsoradialGraph:
    """Isoradial graph of the opposite colour class of the same tiling.

    Edge ``i`` of the dual comes from the same rhombus as edge ``i`` of the
    primal, so corresponding angles sum to ``pi``.
    """
    if g.tiling is None:
        raise MissingTilingError(
            "graph has no source tiling (was it loaded from JSON?)"
        )
    return build_isoradial(g.tiling, 1 - g.colour_class, validate=False)


def percolation_weights(g: IsoradialGraph, beta: float = 1.0) -> EdgeWeights:
    """Canonical percolation probabilities for every edge of ``g``."""
    return EdgeWeights(
        model="percolation", beta=beta, p=percolation_probability(g.edge_angles, beta)
    )


def rc_weights(g: IsoradialGraph, q: float, beta: float = 1.0) -> EdgeWeights:
    """Canonical random-cluster activities (and probabilities) for ``g``."""
    y = rc_edge_activity(g.edge_angles, q, beta)
    return EdgeWeights(
        model="random-cluster", beta=beta, p=y / (1.0 + y), q=float(q), y=y
    )
