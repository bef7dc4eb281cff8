"""Rhombic tilings: generators, validation, tracks, and the hexagon flip.

A tiling is a finite edge-to-edge patch of unit-side rhombi.  Each rhombus
is stored as a base corner plus two unit side vectors; all four corners are
snapped onto a shared vertex table so shared sides and the two bipartite
vertex classes can be read off integer ids.  Rhombus corner order is
base, base+a, base+a+b, base+b, always counter-clockwise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import (
    DegenerateOffsetsError,
    EmptyWindowError,
    InvalidAngleError,
    InvalidDirectionsError,
    NotFlippableError,
    ValidationError,
)

SNAP = 1e-7

# corner index pairs of the four sides; slots 0 and 1 are parallel to dir_a,
# slots 2 and 3 to dir_b, so opposite sides pair as 0-1 and 2-3
SIDE_SLOTS = ((0, 1), (3, 2), (1, 2), (0, 3))
_OPPOSITE_SLOT = (1, 0, 3, 2)


def _vertex_table(points: np.ndarray, snap: float = SNAP):
    """Deduplicate points onto integer ids.

    Points are binned on a grid of pitch ``snap``; surviving representatives
    closer than 10*snap are merged afterwards, which covers the case of one
    true vertex rounding into two adjacent bins.  Returns (ids, coords) with
    ids per input point and coords ordered by quantised (x, y).
    """
    keys = np.round(points / snap).astype(np.int64)
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    coords = points[first].copy()
    tree = cKDTree(coords)
    close = tree.query_pairs(10.0 * snap, output_type="ndarray")
    if len(close) == 0:
        return inverse.astype(np.int64), coords

    parent = np.arange(len(coords))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in close:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(len(coords))])
    keep = np.flatnonzero(roots == np.arange(len(coords)))
    compact = np.full(len(coords), -1, dtype=np.int64)
    compact[keep] = np.arange(len(keep))
    return compact[roots[inverse]], coords[keep]


def polygon_inner_distance(poly: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from points to the boundary of a convex CCW polygon.

    Positive inside, negative outside; the value is the minimum over the
    polygon's edge half-planes.
    """
    poly = np.asarray(poly, float)
    points = np.atleast_2d(np.asarray(points, float))
    d = np.full(len(points), np.inf)
    for i in range(len(poly)):
        p0 = poly[i]
        p1 = poly[(i + 1) % len(poly)]
        edge = p1 - p0
        nrm = np.hypot(*edge)
        if nrm < 1e-12:
            continue
        # inward normal of a CCW polygon edge
        normal = np.array([-edge[1], edge[0]]) / nrm
        d = np.minimum(d, (points - p0) @ normal)
    return d


@dataclass(frozen=True)
class Rhombus:
    """One tile: base corner and the two unit side vectors spanning it."""

    base: tuple[float, float]
    dir_a: tuple[float, float]
    dir_b: tuple[float, float]
    grid_tag: tuple[int, int, int, int] | None = None

    @property
    def corners(self) -> np.ndarray:
        b = np.array(self.base)
        a = np.array(self.dir_a)
        c = np.array(self.dir_b)
        return np.stack([b, b + a, b + a + c, b + c])

    @property
    def angle(self) -> float:
        """Angle between the side vectors at the base corner, in (0, pi)."""
        ax, ay = self.dir_a
        bx, by = self.dir_b
        return math.atan2(ax * by - ay * bx, ax * bx + ay * by)


@dataclass
class Track:
    """Maximal chain of rhombi glued across mutually parallel sides."""

    rhombi: list[int]
    transverse: tuple[float, float]

    def __len__(self) -> int:
        return len(self.rhombi)


@dataclass
class TilingReport:
    """Outcome of validate_tiling: named checks with pass flags and details."""

    checks: dict

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {k: {"passed": ok, "detail": d} for k, (ok, d) in self.checks.items()},
        }


class RhombicTiling:
    """A finite patch of unit rhombi with a shared vertex table."""

    def __init__(self, base, dir_a, dir_b, grid_tags=None, snap: float = SNAP):
        base = np.atleast_2d(np.asarray(base, dtype=float)).copy()
        dir_a = np.atleast_2d(np.asarray(dir_a, dtype=float)).copy()
        dir_b = np.atleast_2d(np.asarray(dir_b, dtype=float)).copy()
        if base.shape[0] == 0:
            raise EmptyWindowError("window contains no rhombi")
        if not (base.shape == dir_a.shape == dir_b.shape):
            raise ValidationError("base, dir_a, dir_b must have matching shapes")

        cross = dir_a[:, 0] * dir_b[:, 1] - dir_a[:, 1] * dir_b[:, 0]
        if np.any(np.abs(cross) < 1e-9):
            raise InvalidAngleError("degenerate rhombus: side vectors nearly parallel")
        swap = cross < 0
        if np.any(swap):
            # store CCW order; swapping the spanning vectors keeps the tile
            dir_a[swap], dir_b[swap] = dir_b[swap].copy(), dir_a[swap].copy()
            if grid_tags is not None:
                grid_tags = [
                    (t[2], t[3], t[0], t[1]) if s and t is not None else t
                    for t, s in zip(grid_tags, swap)
                ]

        self.base = base
        self.dir_a = dir_a
        self.dir_b = dir_b
        self.grid_tags = list(grid_tags) if grid_tags is not None else None
        self.snap = snap

        corners = self.corners()
        ids, coords = _vertex_table(corners.reshape(-1, 2), snap)
        self.vertices = coords
        self.rhombus_vertices = ids.reshape(-1, 4).astype(np.int64)

        self._adjacency = None
        self._vertex_incidence = None
        self._kdtree = None
        self._window = None

    # ------------------------------------------------------------------ basics

    @property
    def n_rhombi(self) -> int:
        return self.base.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def corners(self) -> np.ndarray:
        """Corner coordinates, shape (R, 4, 2), CCW from the base."""
        b, a, c = self.base, self.dir_a, self.dir_b
        return np.stack([b, b + a, b + a + c, b + c], axis=1)

    def angles(self) -> np.ndarray:
        """Angle between dir_a and dir_b per rhombus, in (0, pi)."""
        cross = self.dir_a[:, 0] * self.dir_b[:, 1] - self.dir_a[:, 1] * self.dir_b[:, 0]
        dot = np.sum(self.dir_a * self.dir_b, axis=1)
        return np.arctan2(cross, dot)

    def rhombus(self, i: int) -> Rhombus:
        tag = self.grid_tags[i] if self.grid_tags is not None else None
        return Rhombus(tuple(self.base[i]), tuple(self.dir_a[i]), tuple(self.dir_b[i]), tag)

    @property
    def window(self) -> np.ndarray:
        """Convex hull of the patch vertices, CCW."""
        if self._window is None:
            hull = ConvexHull(self.vertices)
            self._window = self.vertices[hull.vertices]
        return self._window

    def max_diameter(self) -> float:
        """Largest rhombus diagonal in the patch."""
        half = self.angles() / 2.0
        return float(np.max(np.maximum(2.0 * np.sin(half), 2.0 * np.cos(half))))

    def vertex_at(self, point, tol: float = 1e-6) -> int:
        """Id of the vertex at the given coordinates, or KeyError."""
        if self._kdtree is None:
            self._kdtree = cKDTree(self.vertices)
        dist, idx = self._kdtree.query(np.asarray(point, float))
        if dist > tol:
            raise KeyError(f"no vertex within {tol} of {point}")
        return int(idx)

    # ------------------------------------------------------------- adjacency

    def sides(self) -> np.ndarray:
        """Vertex id pairs (min, max) of the four sides, shape (R, 4, 2)."""
        rv = self.rhombus_vertices
        out = np.empty((self.n_rhombi, 4, 2), dtype=np.int64)
        for s, (i, j) in enumerate(SIDE_SLOTS):
            out[:, s, 0] = np.minimum(rv[:, i], rv[:, j])
            out[:, s, 1] = np.maximum(rv[:, i], rv[:, j])
        return out

    def _build_adjacency(self):
        keys = self.sides().reshape(-1, 2)
        order = np.lexsort((keys[:, 1], keys[:, 0]))
        sk = keys[order]
        breaks = np.flatnonzero(np.any(np.diff(sk, axis=0) != 0, axis=1)) + 1
        starts = np.concatenate([[0], breaks])
        ends = np.concatenate([breaks, [len(sk)]])

        neighbour = np.full((self.n_rhombi, 4), -1, dtype=np.int64)
        neighbour_slot = np.full((self.n_rhombi, 4), -1, dtype=np.int64)
        boundary = []
        overfull = 0
        for s, e in zip(starts, ends):
            flat = order[s:e]
            if e - s == 1:
                boundary.append(flat[0])
            elif e - s == 2:
                r0, s0 = divmod(flat[0], 4)
                r1, s1 = divmod(flat[1], 4)
                neighbour[r0, s0] = r1
                neighbour_slot[r0, s0] = s1
                neighbour[r1, s1] = r0
                neighbour_slot[r1, s1] = s0
            else:
                overfull += 1
        self._adjacency = (neighbour, neighbour_slot, np.array(boundary, dtype=np.int64), overfull)

    @property
    def side_neighbours(self):
        """(neighbour, neighbour_slot, boundary_side_flat_ids, overfull_count)."""
        if self._adjacency is None:
            self._build_adjacency()
        return self._adjacency

    def vertex_incidence(self):
        """CSR lists of (rhombus, corner_slot) per vertex id."""
        if self._vertex_incidence is None:
            flat = self.rhombus_vertices.reshape(-1)
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._vertex_incidence = (indptr, order // 4, order % 4)
        return self._vertex_incidence

    def corner_angles(self) -> np.ndarray:
        """Interior angle at each corner, shape (R, 4)."""
        g = self.angles()
        return np.stack([g, np.pi - g, g, np.pi - g], axis=1)

    def vertex_angle_sum(self) -> np.ndarray:
        total = np.zeros(self.n_vertices)
        np.add.at(total, self.rhombus_vertices.reshape(-1), self.corner_angles().reshape(-1))
        return total

    def interior_vertex_mask(self) -> np.ndarray:
        """Vertices completely surrounded by tiles (angles sum to 2*pi)."""
        return np.abs(self.vertex_angle_sum() - 2.0 * np.pi) <= 1e-6

    def two_colour(self) -> np.ndarray:
        """Bipartite 2-colouring of the tiling vertices.

        Colour 0 goes to the lowest-id vertex of each connected component
        (vertex ids are ordered by quantised coordinates, so this anchor is
        stable across rebuilds).  Raises ValidationError on an odd cycle.
        """
        pairs = np.unique(self.sides().reshape(-1, 2), axis=0)
        counts = np.bincount(pairs.reshape(-1), minlength=self.n_vertices)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        fill = indptr[:-1].copy()
        adj = np.empty(indptr[-1], dtype=np.int64)
        for a, b in pairs:
            adj[fill[a]] = b
            fill[a] += 1
            adj[fill[b]] = a
            fill[b] += 1

        colour = np.full(self.n_vertices, -1, dtype=np.int8)
        for start in range(self.n_vertices):
            if colour[start] >= 0:
                continue
            colour[start] = 0
            queue = [start]
            while queue:
                v = queue.pop()
                for w in adj[indptr[v]:indptr[v + 1]]:
                    if colour[w] < 0:
                        colour[w] = 1 - colour[v]
                        queue.append(w)
                    elif colour[w] == colour[v]:
                        raise ValidationError("tiling side graph is not bipartite")
        return colour

    # -------------------------------------------------------------- flips

    def rhombi_at_vertex(self, v: int):
        """List of (rhombus, corner_slot) touching vertex v."""
        indptr, rhs, slots = self.vertex_incidence()
        if not (0 <= v < self.n_vertices):
            raise ValidationError(f"vertex id {v} out of range")
        sel = slice(indptr[v], indptr[v + 1])
        return list(zip(rhs[sel].tolist(), slots[sel].tolist()))

    def flippable_vertices(self) -> np.ndarray:
        """Interior vertices where exactly three rhombi meet."""
        indptr, _, _ = self.vertex_incidence()
        counts = np.diff(indptr)
        return np.flatnonzero((counts == 3) & self.interior_vertex_mask())

    # -------------------------------------------------------- serialisation

    def to_json(self) -> dict:
        return {
            "format": "isoperc-tiling",
            "version": 1,
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "rhombi": self.rhombus_vertices.tolist(),
            "grid_tags": self.grid_tags,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RhombicTiling":
        if data.get("format") != "isoperc-tiling":
            raise ValidationError("not a tiling document")
        if data.get("version") != 1:
            raise ValidationError(f"unsupported tiling version {data.get('version')}")
        verts = np.asarray(data["vertices"], dtype=float)
        rv = np.asarray(data["rhombi"], dtype=np.int64)
        base = verts[rv[:, 0]]
        dir_a = verts[rv[:, 1]] - base
        dir_b = verts[rv[:, 3]] - base
        tags = data.get("grid_tags")
        tags = [tuple(t) if t is not None else None for t in tags] if tags is not None else None
        return cls(base, dir_a, dir_b, grid_tags=tags)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RhombicTiling":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------- generators


def periodic_tiling(kind: str, window_size: int, theta: float | None = None) -> RhombicTiling:
    """Periodic patches: 'square', 'tri-hex', or 'rhombic' with a custom angle.

    window_size is the number of tiles along each period direction.  The
    tri-hex patch pairs each triangular-lattice edge with the circumcentres
    of its two adjacent triangles, so one vertex class is the triangular
    lattice (circumradius 1) and the other the dual hexagonal lattice.
    """
    if window_size < 1:
        raise EmptyWindowError(f"window_size must be >= 1, got {window_size}")

    if kind == "square":
        ii, jj = np.meshgrid(np.arange(window_size), np.arange(window_size), indexing="ij")
        base = np.stack([ii.reshape(-1), jj.reshape(-1)], axis=1).astype(float)
        dir_a = np.tile([1.0, 0.0], (len(base), 1))
        dir_b = np.tile([0.0, 1.0], (len(base), 1))
        return RhombicTiling(base, dir_a, dir_b)

    if kind == "rhombic":
        if theta is None:
            raise ValidationError("kind 'rhombic' requires theta")
        if not (1e-6 < theta < np.pi - 1e-6):
            raise InvalidAngleError(f"theta must lie in (0, pi), got {theta}")
        ea = np.array([1.0, 0.0])
        eb = np.array([math.cos(theta), math.sin(theta)])
        ii, jj = np.meshgrid(np.arange(window_size), np.arange(window_size), indexing="ij")
        base = ii.reshape(-1, 1) * ea + jj.reshape(-1, 1) * eb
        dir_a = np.tile(ea, (len(base), 1))
        dir_b = np.tile(eb, (len(base), 1))
        return RhombicTiling(base, dir_a, dir_b)

    if kind in ("tri-hex", "triangular-hexagonal"):
        n = window_size
        e1 = np.array([math.sqrt(3.0), 0.0])
        e2 = np.array([math.sqrt(3.0) / 2.0, 1.5])

        def pt(i, j):
            return i * e1 + j * e2

        def up_centre(i, j):
            return pt(i, j) + (e1 + e2) / 3.0

        def down_centre(i, j):
            return pt(i, j) + 2.0 * (e1 + e2) / 3.0

        bases, da, db = [], [], []

        def add(u, c1, c2):
            bases.append(u)
            da.append(c1 - u)
            db.append(c2 - u)

        for i in range(n):
            for j in range(n):
                # edge between up(i,j) and down(i,j)
                add(pt(i + 1, j), up_centre(i, j), down_centre(i, j))
        for i in range(n):
            for j in range(1, n):
                # edge between up(i,j) and down(i,j-1)
                add(pt(i, j), up_centre(i, j), down_centre(i, j - 1))
        for i in range(1, n):
            for j in range(n):
                # edge between up(i,j) and down(i-1,j)
                add(pt(i, j), up_centre(i, j), down_centre(i - 1, j))
        return RhombicTiling(np.array(bases), np.array(da), np.array(db))

    raise ValidationError(f"unknown periodic tiling kind: {kind!r}")


def multigrid_tiling(directions, offsets, window_size: float) -> RhombicTiling:
    """De Bruijn multigrid tiling: one rhombus per pair-line intersection.

    Grid family m consists of lines x . d_m = n + offset_m, n integer.  Every
    intersection of two lines from different families inside the square
    window [-w, w]^2 contributes a rhombus spanned by the two directions.
    Triple coincidences (a third line within 1e-9 of an intersection) are
    rejected as degenerate.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    offs = np.asarray(offsets, dtype=float).reshape(-1)
    k = len(dirs)
    if k < 2:
        raise InvalidDirectionsError("need at least 2 grid directions")
    if len(offs) != k:
        raise ValidationError(f"got {k} directions but {len(offs)} offsets")
    norms = np.hypot(dirs[:, 0], dirs[:, 1])
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise InvalidDirectionsError("grid directions must be unit vectors")
    for i in range(k):
        for j in range(i + 1, k):
            cr = dirs[i, 0] * dirs[j, 1] - dirs[i, 1] * dirs[j, 0]
            if abs(cr) < 1e-9:
                raise InvalidDirectionsError(f"directions {i} and {j} are parallel")
    w = float(window_size)
    if w <= 0:
        raise EmptyWindowError("window_size must be positive")

    # family m lines whose distance to the origin allows them to meet the window
    reach = w * math.sqrt(2.0)
    line_ids = []
    for m in range(k):
        lo = math.ceil(-reach - offs[m])
        hi = math.floor(reach - offs[m])
        line_ids.append(np.arange(lo, hi + 1))

    bases, da, db, tags = [], [], [], []
    for j in range(k):
        for l in range(j + 1, k):
            nj = line_ids[j]
            nl = line_ids[l]
            if len(nj) == 0 or len(nl) == 0:
                continue
            A = np.array([dirs[j], dirs[l]])
            Ainv = np.linalg.inv(A)
            gj, gl = np.meshgrid(nj, nl, indexing="ij")
            rhs = np.stack([gj.reshape(-1) + offs[j], gl.reshape(-1) + offs[l]], axis=1)
            pts = rhs @ Ainv.T
            keep = np.max(np.abs(pts), axis=1) <= w
            if not np.any(keep):
                continue
            pts = pts[keep]
            gj = gj.reshape(-1)[keep]
            gl = gl.reshape(-1)[keep]

            kvec = np.zeros((len(pts), 2))
            for m in range(k):
                t = pts @ dirs[m] - offs[m]
                if m == j or m == l:
                    continue
                frac = np.abs(t - np.round(t))
                if np.any(frac < 1e-9):
                    raise DegenerateOffsetsError(
                        f"triple line coincidence between families {j}, {l}, {m}"
                    )
                kvec += np.ceil(t)[:, None] * dirs[m]
            base = kvec + gj[:, None] * dirs[j] + gl[:, None] * dirs[l]
            bases.append(base)
            da.append(np.tile(dirs[j], (len(base), 1)))
            db.append(np.tile(dirs[l], (len(base), 1)))
            tags.extend((j, int(a), l, int(b)) for a, b in zip(gj, gl))

    if not bases:
        raise EmptyWindowError("no grid intersections inside the window")
    return RhombicTiling(np.concatenate(bases), np.concatenate(da), np.concatenate(db), grid_tags=tags)


def penrose_tiling(window_size: float, offsets=None) -> RhombicTiling:
    """Five-fold multigrid tiling with offsets summing to an integer."""
    angles = 2.0 * np.pi * np.arange(5) / 5.0
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if offsets is None:
        offsets = np.array([0.137, 0.319, 0.422, 0.253, -0.131])
        offsets[4] = 1.0 - offsets[:4].sum()
    offsets = np.asarray(offsets, dtype=float)
    return multigrid_tiling(dirs, offsets, window_size)


# ------------------------------------------------------------------ tracks


def extract_tracks(tiling: RhombicTiling) -> list[Track]:
    """All tracks of the patch.

    A track enters a rhombus through one side and leaves through the
    opposite parallel side, so its members all share one side direction
    (the transverse direction).  Every rhombus lies on exactly two tracks.
    """
    neighbour, neighbour_slot, _, _ = tiling.side_neighbours
    R = tiling.n_rhombi
    assigned = np.full((R, 2), -1, dtype=np.int64)
    tracks: list[Track] = []

    def walk(r0, exit_slot):
        chain = []
        r, s = r0, exit_slot
        while True:
            nxt = neighbour[r, s]
            if nxt < 0:
                return chain
            entry = neighbour_slot[r, s]
            r, s = nxt, _OPPOSITE_SLOT[entry]
            if assigned[r, s // 2] >= 0 or r == r0:
                # cycle guard; validation reports self-intersection separately
                return chain
            chain.append(int(r))
            assigned[r, s // 2] = len(tracks)

    for r0 in range(R):
        for cls in (0, 1):
            if assigned[r0, cls] >= 0:
                continue
            assigned[r0, cls] = len(tracks)
            # class 0 crosses the dir_a-parallel sides (slots 0/1),
            # class 1 the dir_b-parallel sides (slots 2/3)
            fwd_slot = 1 if cls == 0 else 3
            bwd_slot = 0 if cls == 0 else 2
            forward = walk(r0, fwd_slot)
            backward = walk(r0, bwd_slot)
            members = backward[::-1] + [r0] + forward
            t = tiling.dir_a[r0] if cls == 0 else tiling.dir_b[r0]
            if t[1] < 0 or (t[1] == 0 and t[0] < 0):
                t = -t
            tracks.append(Track(members, (float(t[0]), float(t[1]))))
    return tracks


# --------------------------------------------------------------- validation


def validate_tiling(tiling: RhombicTiling) -> TilingReport:
    """Structural checks: side lengths, angles, gluing, bipartiteness,
    area balance against the covered region, and track sanity."""
    checks = {}

    len_a = np.hypot(tiling.dir_a[:, 0], tiling.dir_a[:, 1])
    len_b = np.hypot(tiling.dir_b[:, 0], tiling.dir_b[:, 1])
    dev = max(np.abs(len_a - 1.0).max(), np.abs(len_b - 1.0).max())
    checks["unit_sides"] = (dev <= 1e-9, f"max side length deviation {dev:.3e}")

    ang = tiling.angles()
    margin = float(np.minimum(ang, np.pi - ang).min()) if len(ang) else 0.0
    checks["angles"] = (margin > 1e-9, f"smallest angle margin {margin:.6f}")

    neighbour, _, boundary, overfull = tiling.side_neighbours
    ok_mult = overfull == 0
    detail = f"{overfull} sides shared by 3+ rhombi"
    if ok_mult:
        bkeys = tiling.sides().reshape(-1, 2)[boundary]
        deg = np.bincount(bkeys.reshape(-1), minlength=tiling.n_vertices)
        odd = int(np.sum(deg % 2))
        ok_mult = odd == 0
        detail = f"{len(boundary)} boundary sides, {odd} odd-degree boundary vertices"
    checks["edge_to_edge"] = (ok_mult, detail)

    try:
        tiling.two_colour()
        checks["bipartite"] = (True, "2-colouring found")
    except ValidationError as exc:
        checks["bipartite"] = (False, str(exc))

    try:
        from shapely import union_all
        from shapely.geometry import Polygon

        polys = [Polygon(c) for c in tiling.corners()]
        covered = union_all(polys).area
        tile_sum = float(np.abs(np.sin(ang)).sum())
        rel = abs(covered - tile_sum) / tile_sum
        checks["area_balance"] = (rel <= 1e-6, f"relative area mismatch {rel:.3e}")
    except Exception as exc:  # pragma: no cover - shapely failure is environmental
        checks["area_balance"] = (False, f"union computation failed: {exc}")

    tracks = extract_tracks(tiling)
    per_rhombus = np.zeros(tiling.n_rhombi, dtype=np.int64)
    self_intersecting = 0
    for t in tracks:
        if len(set(t.rhombi)) != len(t.rhombi):
            self_intersecting += 1
        for r in t.rhombi:
            per_rhombus[r] += 1
    cover_ok = bool(np.all(per_rhombus == 2))
    pair_counts: dict = {}
    multi_shared = 0
    membership: dict = {}
    for tid, t in enumerate(tracks):
        for r in t.rhombi:
            membership.setdefault(r, []).append(tid)
    for tids in membership.values():
        if len(tids) == 2:
            key = (min(tids), max(tids))
            pair_counts[key] = pair_counts.get(key, 0) + 1
    multi_shared = sum(1 for c in pair_counts.values() if c > 1)
    ok_tracks = cover_ok and self_intersecting == 0 and multi_shared == 0
    checks["tracks"] = (
        ok_tracks,
        f"{len(tracks)} tracks, {self_intersecting} self-intersecting, "
        f"{multi_shared} pairs sharing 2+ rhombi, perfect 2-cover: {cover_ok}",
    )

    return TilingReport(checks)


def angle_margin(tiling: RhombicTiling) -> float:
    """Largest eps such that every rhombus angle lies in [eps, pi - eps]."""
    ang = tiling.angles()
    return float(np.minimum(ang, np.pi - ang).min())


# ------------------------------------------------------------ hexagon flip


def hexagon_flip(tiling: RhombicTiling, center_vertex: int) -> RhombicTiling:
    """Re-tile the hexagon formed by the three rhombi meeting at a vertex.

    The three tiles around an interior degree-3 vertex fill a centrally
    symmetric hexagon; the flip replaces them by their point reflections
    through the hexagon centre, which is the unique other tiling.  Applying
    the flip twice restores the original patch.
    """
    incident = tiling.rhombi_at_vertex(center_vertex)
    if len(incident) != 3:
        raise NotFlippableError(
            f"vertex {center_vertex} touches {len(incident)} rhombi, need exactly 3"
        )
    rset = [r for r, _ in incident]
    slots = [s for _, s in incident]
    angle_sum = float(np.sum(tiling.corner_angles()[rset, slots]))
    if abs(angle_sum - 2.0 * np.pi) > 1e-6:
        raise NotFlippableError(
            f"vertex {center_vertex} is not interior (angle sum {angle_sum:.6f})"
        )

    outer = set(tiling.rhombus_vertices[rset].reshape(-1).tolist()) - {center_vertex}
    if len(outer) != 6:
        raise NotFlippableError("degenerate hexagon around the vertex")
    centre = tiling.vertices[sorted(outer)].mean(axis=0)

    base = tiling.base.copy()
    for r in rset:
        base[r] = 2.0 * centre - (tiling.base[r] + tiling.dir_a[r] + tiling.dir_b[r])
    tags = list(tiling.grid_tags) if tiling.grid_tags is not None else None
    return RhombicTiling(base, tiling.dir_a.copy(), tiling.dir_b.copy(), grid_tags=tags,
                         snap=tiling.snap)
