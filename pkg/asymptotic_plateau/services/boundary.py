import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import shapely
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree
from shapely.geometry import GeometryCollection, LineString, MultiLineString, MultiPolygon, Point, Polygon, box
from shapely.ops import polylabel

from asymptotic_plateau.exceptions import BoundaryError, ConstructionError, DomainError
from asymptotic_plateau.services.hypgeom import IdealPoint, Inversion, Isometry
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

ArrayLikeFloat = float | np.ndarray | Sequence[float]

GEOMETRY = section("geometry")
BRIDGE = section("bridge")
COINCIDENCE_TOL = GEOMETRY.get("coincidence_tol", 1e-9)
ENDPOINT_TOL = GEOMETRY.get("endpoint_tol", 1e-3)
ORTHOGONALITY_TOL = GEOMETRY.get("orthogonality_tol", 1e-3)
MIN_SHRINK_RATE = BRIDGE.get("min_shrink_rate", 0.5)


# ===========================================
# REGION: Polyline helpers
# ===========================================
def polyline_length(points: np.ndarray, closed: bool) -> float:
    pts = np.vstack([points, points[:1]]) if closed else points
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def resample_polyline(points: np.ndarray, count: int, closed: bool) -> np.ndarray:
    """Arclength-uniform resampling of a polyline with ``count`` output samples."""
    pts = np.asarray(points, dtype=float)
    if closed:
        pts = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if closed:
        targets = np.linspace(0.0, s[-1], count, endpoint=False)
    else:
        targets = np.linspace(0.0, s[-1], count)
    return np.column_stack([np.interp(targets, s, pts[:, k]) for k in range(pts.shape[1])])


def resample_by_spacing(points: np.ndarray, spacing: float, closed: bool) -> np.ndarray:
    count = max(3 if closed else 2, int(np.ceil(polyline_length(points, closed) / spacing)) + (0 if closed else 1))
    return resample_polyline(points, count, closed)


def vertex_tangents(points: np.ndarray, closed: bool) -> np.ndarray:
    """Unit tangents at the vertices by central differences (one-sided at open ends)."""
    pts = np.asarray(points, dtype=float)
    if closed:
        t = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    else:
        t = np.empty_like(pts)
        t[1:-1] = pts[2:] - pts[:-2]
        t[0] = pts[1] - pts[0]
        t[-1] = pts[-1] - pts[-2]
    return t / np.linalg.norm(t, axis=1, keepdims=True)


def point_segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray,
                            chunk: int = 2048) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Distance from every point to the nearest of the segments ``a[j] -> b[j]``.

    Returns the distances, the index of the nearest segment and the clamped segment
    parameter of the foot point.
    """
    points = np.atleast_2d(points)
    ab = b - a
    ab2 = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    best_d = np.empty(len(points))
    best_j = np.empty(len(points), dtype=int)
    best_t = np.empty(len(points))
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.sum(ap * ab[None], axis=2) / ab2[None], 0.0, 1.0)
        foot = a[None] + t[..., None] * ab[None]
        d = np.linalg.norm(p[:, None, :] - foot, axis=2)
        j = np.argmin(d, axis=1)
        rows = np.arange(len(p))
        best_d[start:start + chunk] = d[rows, j]
        best_j[start:start + chunk] = j
        best_t[start:start + chunk] = t[rows, j]
    return best_d, best_j, best_t


def windowed_hausdorff(curves_a: Sequence[np.ndarray], curves_b: Sequence[np.ndarray],
                       window: float, spacing: float = 0.02, margin: float = 1.0) -> float:
    """
    Hausdorff distance between two families of open polylines seen through the box
    ``[-window, window]²``; each side is compared against the other side's samples in a
    box enlarged by ``margin`` so that clipping does not create spurious distances.
    """
    def samples(curves, half):
        pts = [resample_by_spacing(c, spacing, closed=False) for c in curves if len(c) >= 2]
        if not pts:
            return np.zeros((0, 2))
        pts = np.vstack(pts)
        return pts[np.all(np.abs(pts) <= half, axis=1)]

    a_in, b_in = samples(curves_a, window), samples(curves_b, window)
    a_out, b_out = samples(curves_a, window + margin), samples(curves_b, window + margin)
    if len(a_in) == 0 and len(b_in) == 0:
        return 0.0
    if len(a_out) == 0 or len(b_out) == 0:
        return float("inf")
    d_ab = cKDTree(b_out).query(a_in)[0].max() if len(a_in) else 0.0
    d_ba = cKDTree(a_out).query(b_in)[0].max() if len(b_in) else 0.0
    return float(max(d_ab, d_ba))


def _ring_parity(points: np.ndarray, rings: Sequence[np.ndarray], chunk: int = 4096) -> np.ndarray:
    """Even-odd crossing count of a +x ray from each point against closed rings."""
    a = np.vstack([r for r in rings])
    b = np.vstack([np.roll(r, -1, axis=0) for r in rings])
    inside = np.zeros(len(points), dtype=bool)
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        px, py = p[:, 0:1], p[:, 1:2]
        ay, by = a[None, :, 1], b[None, :, 1]
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a[None, :, 0] + (py - ay) * (b[None, :, 0] - a[None, :, 0]) / (by - ay)
        hits = straddle & (px < x_cross)
        inside[start:start + chunk] = (np.count_nonzero(hits, axis=1) % 2) == 1
    return inside


# ===========================================
# REGION: Arcs and curve sets
# ===========================================
@dataclass(frozen=True)
class IdealArc:
    """Embedded arc in the ideal plane stored as an ordered sample polyline."""
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise BoundaryError("An ideal arc needs at least two planar samples.")
        if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) <= COINCIDENCE_TOL):
            raise BoundaryError("Ideal arc is not regular: repeated consecutive samples.")
        object.__setattr__(self, "points", pts)

    @classmethod
    def segment(cls, start: Sequence[float], end: Sequence[float], samples: int = 64) -> "IdealArc":
        t = np.linspace(0.0, 1.0, samples)[:, None]
        return cls((1.0 - t) * np.asarray(start, float) + t * np.asarray(end, float))

    @classmethod
    def from_function(cls, curve, samples: int = 256) -> "IdealArc":
        """Samples ``curve(t) -> (x, y)`` on ``t ∈ [0, 1]``."""
        t = np.linspace(0.0, 1.0, samples)
        return cls(np.array([curve(v) for v in t], dtype=float))

    @property
    def length(self) -> float:
        return polyline_length(self.points, closed=False)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def end_tangents(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unit tangents at both ends, pointing along the arc (second-order one-sided)."""
        p = self.points
        if len(p) >= 3:
            t0 = -3.0 * p[0] + 4.0 * p[1] - p[2]
            t1 = 3.0 * p[-1] - 4.0 * p[-2] + p[-3]
        else:
            t0 = t1 = p[1] - p[0]
        return t0 / np.linalg.norm(t0), t1 / np.linalg.norm(t1)

    def point_at(self, s: float) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return np.array([np.interp(s, cum, self.points[:, k]) for k in range(2)])

    def frame_at(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Point and unit tangent at arclength ``s``."""
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        j = int(np.clip(np.searchsorted(cum, s) - 1, 0, len(seg) - 1))
        tangent = (self.points[j + 1] - self.points[j]) / seg[j]
        return self.point_at(s), tangent

    def project(self, point: Sequence[float]) -> Tuple[float, np.ndarray]:
        """Arclength of the closest arc point to ``point`` and that point."""
        a, b = self.points[:-1], self.points[1:]
        _, j, t = point_segment_distances(np.asarray(point, float)[None], a, b)
        seg = np.linalg.norm(b - a, axis=1)
        s = float(np.sum(seg[:j[0]]) + t[0] * seg[j[0]])
        return s, self.point_at(s)

    def resampled(self, samples: int) -> "IdealArc":
        return IdealArc(resample_polyline(self.points, samples, closed=False))

    def line_string(self) -> LineString:
        return LineString(self.points)


class IdealCurveSet:
    """
    Finite set of closed piecewise-smooth curves in the ideal plane.

    Components are dense closed polylines (the first sample is not repeated) and are
    orientation-free. ``singular_points`` lists, per component, the indices of corner
    samples where smoothness may fail.

    Example Usage:
    --------------
    ```python
    circle = IdealCurveSet.circle((0.0, 0.0), 1.0, samples=400)
    region = circle.to_region()          # shapely polygon of the even-odd interior
    circle.to_json()                     # {"components": [[[x, y], ...]], "singular_points": [[]]}
    ```
    """

    def __init__(self, components: Iterable[np.ndarray] = (),
                 singular_points: Iterable[Sequence[int]] | None = None):
        comps = []
        for comp in components:
            arr = np.asarray(comp, dtype=float).reshape(-1, 2)
            if len(arr) > 1 and np.allclose(arr[0], arr[-1], atol=COINCIDENCE_TOL, rtol=0.0):
                arr = arr[:-1]
            if len(arr) < 3:
                raise BoundaryError("Closed curve components need at least three samples.")
            comps.append(arr)
        self.__components: List[np.ndarray] = comps
        if singular_points is None:
            singular_points = [[] for _ in comps]
        self.__singular_points: List[List[int]] = [list(map(int, s)) for s in singular_points]
        if len(self.__singular_points) != len(comps):
            raise BoundaryError("One singular-point list is required per component.")

    # ===========================================
    # REGION: Getters
    # ===========================================
    @property
    def get_components(self) -> List[np.ndarray]:
        return self.__components

    @property
    def get_singular_points(self) -> List[List[int]]:
        return self.__singular_points

    # ===========================================
    # END REGION: Getters
    # ===========================================
    def __len__(self) -> int:
        return len(self.__components)

    @property
    def is_empty(self) -> bool:
        return len(self.__components) == 0

    def lengths(self) -> np.ndarray:
        return np.array([polyline_length(c, closed=True) for c in self.__components])

    def segments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All segments as arrays (start, end, owning component)."""
        if self.is_empty:
            return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0, dtype=int)
        a = np.vstack(self.__components)
        b = np.vstack([np.roll(c, -1, axis=0) for c in self.__components])
        owner = np.concatenate([np.full(len(c), i) for i, c in enumerate(self.__components)])
        return a, b, owner

    # ===========================================
    # REGION: Constructors
    # ===========================================
    @classmethod
    def circle(cls, center: Sequence[float], radius: float, samples: int = 512) -> "IdealCurveSet":
        if radius <= 0.0:
            raise DomainError("Circle radius must be positive.")
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        pts = np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])
        return cls([pts])

    @classmethod
    def circles(cls, specs: Sequence[Tuple[Sequence[float], float]], samples: int = 512) -> "IdealCurveSet":
        comps = []
        for center, radius in specs:
            comps.extend(cls.circle(center, radius, samples).get_components)
        return cls(comps)

    @classmethod
    def rectangle(cls, xmin: float, ymin: float, xmax: float, ymax: float, spacing: float = 0.01) -> "IdealCurveSet":
        corners = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
        pieces = []
        singular = []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            n = max(2, int(np.ceil(np.linalg.norm(b - a) / spacing)))
            singular.append(sum(len(p) for p in pieces))
            t = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
            pieces.append((1.0 - t) * a + t * b)
        return cls([np.vstack(pieces)], [singular])

    @classmethod
    def from_geometry(cls, geometry, spacing: float | None = None) -> "IdealCurveSet":
        """
        Extracts the boundary rings of a shapely (multi)polygon as curve components.

        Vertices shared by two rings, or visited twice by one ring, are recorded as
        singular points.
        """
        rings = []
        for poly in polygons_of(geometry):
            rings.append(np.asarray(poly.exterior.coords)[:-1])
            rings.extend(np.asarray(r.coords)[:-1] for r in poly.interiors)
        if spacing is not None:
            rings = [_resample_keep_corners(r, spacing) for r in rings]
        keys = {}
        for i, ring in enumerate(rings):
            for j, p in enumerate(ring):
                keys.setdefault((round(p[0], 9), round(p[1], 9)), []).append((i, j))
        singular = [[] for _ in rings]
        for hits in keys.values():
            if len(hits) > 1:
                for i, j in hits:
                    singular[i].append(j)
        return cls(rings, [sorted(s) for s in singular])

    # ===========================================
    # REGION: Geometry
    # ===========================================
    def to_region(self):
        """Even-odd interior as a shapely geometry."""
        region = Polygon()
        for comp in self.__components:
            poly = shapely.make_valid(Polygon(comp))
            region = region.symmetric_difference(poly)
        return region

    def boundary_lines(self) -> MultiLineString:
        return MultiLineString([np.vstack([c, c[:1]]) for c in self.__components])

    def parity(self, points: np.ndarray) -> np.ndarray:
        """True where the ray-crossing parity of the curves is odd."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty:
            return np.zeros(len(points), dtype=bool)
        return _ring_parity(points, self.__components)

    def distance(self, points: np.ndarray) -> np.ndarray:
        a, b, _ = self.segments()
        return point_segment_distances(np.atleast_2d(points), a, b)[0]

    def transformed(self, isometry: Isometry) -> "IdealCurveSet":
        """Image under an isometry that keeps every sample finite."""
        comps = [isometry.apply_to_plane_points(c) for c in self.__components]
        return IdealCurveSet(comps, self.__singular_points)

    def resampled(self, spacing: float) -> "IdealCurveSet":
        return IdealCurveSet([resample_by_spacing(c, spacing, closed=True) for c in self.__components])

    def validate(self) -> None:
        """Raises BoundaryError when a component self-crosses or two components cross."""
        lines = [shapely.LinearRing(c) for c in self.__components]
        for i, ring in enumerate(lines):
            if not ring.is_simple and not self.__singular_points[i]:
                raise BoundaryError(f"Curve component {i} is not simple.")
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                if lines[i].crosses(lines[j]) and not (self.__singular_points[i] or self.__singular_points[j]):
                    raise BoundaryError(f"Curve components {i} and {j} intersect.")

    # ===========================================
    # REGION: Serialization
    # ===========================================
    def to_json(self) -> dict:
        return {"components": [c.tolist() for c in self.__components],
                "singular_points": [list(s) for s in self.__singular_points]}

    @classmethod
    def from_json(cls, payload: dict) -> "IdealCurveSet":
        return cls([np.asarray(c, dtype=float) for c in payload.get("components", [])],
                   payload.get("singular_points"))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_json(), file)

    @classmethod
    def load(cls, path: str) -> "IdealCurveSet":
        with open(path, "r", encoding="utf-8") as file:
            return cls.from_json(json.load(file))


def polygons_of(geometry) -> List[Polygon]:
    if geometry is None or geometry.is_empty:
        return []
    if isinstance(geometry, Polygon):
        return [geometry]
    if isinstance(geometry, (MultiPolygon, GeometryCollection)):
        out = []
        for g in geometry.geoms:
            out.extend(polygons_of(g))
        return out
    return []


def _resample_keep_corners(ring: np.ndarray, spacing: float, corner_angle: float = 0.5) -> np.ndarray:
    """Resamples a ring by arclength while keeping vertices where the turning angle is large."""
    t_in = ring - np.roll(ring, 1, axis=0)
    t_out = np.roll(ring, -1, axis=0) - ring
    cosang = np.sum(t_in * t_out, axis=1) / (np.linalg.norm(t_in, axis=1) * np.linalg.norm(t_out, axis=1))
    corners = np.flatnonzero(cosang < np.cos(corner_angle))
    if len(corners) == 0:
        return resample_by_spacing(ring, spacing, closed=True)
    pieces = []
    for k, c in enumerate(corners):
        nxt = corners[(k + 1) % len(corners)]
        idx = np.arange(c, nxt + (len(ring) if nxt <= c else 0) + 1) % len(ring)
        piece = resample_by_spacing(ring[idx], spacing, closed=False)
        pieces.append(piece[:-1])
    return np.vstack(pieces)


# ===========================================
# REGION: Regions
# ===========================================
class RegionK:
    """
    Closed ideal region K with piecewise smooth boundary.

    Membership is the parity of the boundary crossings, flipped when K contains ∞.
    """

    def __init__(self, boundary: IdealCurveSet, contains_infinity: bool = False):
        self.__boundary = boundary
        self.__contains_infinity = bool(contains_infinity)

    @property
    def get_boundary(self) -> IdealCurveSet:
        return self.__boundary

    @property
    def get_contains_infinity(self) -> bool:
        return self.__contains_infinity

    @classmethod
    def disk(cls, center: Sequence[float] = (0.0, 0.0), radius: float = 1.0, samples: int = 512) -> "RegionK":
        return cls(IdealCurveSet.circle(center, radius, samples))

    @classmethod
    def from_geometry(cls, geometry, spacing: float | None = None) -> "RegionK":
        return cls(IdealCurveSet.from_geometry(geometry, spacing))

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = self.__boundary.parity(points)
        return ~inside if self.__contains_infinity else inside

    def polygon(self):
        if self.__contains_infinity:
            raise DomainError("A region containing ∞ has no bounded polygon; use a window.")
        return self.__boundary.to_region()

    def windowed_polygon(self, window: Polygon):
        base = self.__boundary.to_region()
        return window.difference(base) if self.__contains_infinity else base.intersection(window)

    def bounds(self) -> Tuple[float, float, float, float]:
        pts = np.vstack(self.__boundary.get_components)
        return float(pts[:, 0].min()), float(pts[:, 1].min()), float(pts[:, 0].max()), float(pts[:, 1].max())

    def test_points(self, window_margin: float = 1.0) -> List[Tuple[np.ndarray, bool]]:
        """One representative point per complementary component, tagged with membership."""
        xmin, ymin, xmax, ymax = self.bounds()
        window = box(xmin - window_margin, ymin - window_margin, xmax + window_margin, ymax + window_margin)
        inside = self.__boundary.to_region().intersection(window)
        outside = window.difference(inside)
        out = []
        for poly in polygons_of(inside):
            p = np.asarray(poly.representative_point().coords[0])
            out.append((p, bool(self.contains(p[None])[0])))
        for poly in polygons_of(outside):
            p = np.asarray(poly.representative_point().coords[0])
            out.append((p, bool(self.contains(p[None])[0])))
        return out

    def is_closure_of_interior(self, spacing: float = 0.02) -> bool:
        """Every boundary sample has an interior grid point within two grid spacings."""
        xmin, ymin, xmax, ymax = self.bounds()
        xs = np.arange(xmin - 2 * spacing, xmax + 2 * spacing, spacing)
        ys = np.arange(ymin - 2 * spacing, ymax + 2 * spacing, spacing)
        grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
        interior = grid[self.contains(grid) & (self.__boundary.distance(grid) > 1e-9)]
        if len(interior) == 0:
            return False
        samples = np.vstack([resample_by_spacing(c, spacing, closed=True) for c in self.__boundary.get_components])
        d, _ = cKDTree(interior).query(samples)
        return bool(np.all(d <= 2.0 * spacing * np.sqrt(2.0)))

    def distance_to_boundary(self, points: np.ndarray) -> np.ndarray:
        return self.__boundary.distance(points)

    def shrunk(self, delta: float, spacing: float | None = None) -> "RegionK":
        return self._buffered(-delta, spacing)

    def enlarged(self, delta: float, spacing: float | None = None) -> "RegionK":
        return self._buffered(delta, spacing)

    def _buffered(self, delta: float, spacing: float | None) -> "RegionK":
        if self.__contains_infinity:
            # K contains ∞: grow K by shrinking its bounded complement
            comp = self.__boundary.to_region().buffer(-delta, quad_segs=32)
            return RegionK(IdealCurveSet.from_geometry(comp, spacing), contains_infinity=True)
        poly = self.__boundary.to_region().buffer(delta, quad_segs=32)
        if poly.is_empty:
            raise BoundaryError(f"Region vanishes when buffered by {delta}.")
        return RegionK(IdealCurveSet.from_geometry(poly, spacing))


def symmetric_difference(a: IdealCurveSet, b: IdealCurveSet, sliver_tol: float = 1e-7) -> IdealCurveSet:
    """
    Curves of ``a △ b``: shared sub-arcs cancel, transversal crossings become singular points.

    Realized as the boundary of the even-odd region difference of the two curve sets.

    Raises:
    -------
    BoundaryError:
        If the curves overlap tangentially along a sliver thinner than ``sliver_tol``.
    """
    if a.is_empty:
        return IdealCurveSet(b.get_components, b.get_singular_points)
    if b.is_empty:
        return IdealCurveSet(a.get_components, a.get_singular_points)
    region = a.to_region().symmetric_difference(b.to_region())
    for poly in polygons_of(region):
        thickness = 2.0 * poly.area / max(poly.length, 1e-300)
        if thickness < sliver_tol:
            raise BoundaryError("Curves overlap tangentially beyond tolerance.")
    return IdealCurveSet.from_geometry(region)


def lift_to_height(curves: IdealCurveSet, eps: float, samples: int | None = None,
                   spacing: float | None = None) -> List[np.ndarray]:
    """
    Copies every curve to the plane z = ε with arclength-uniform samples.

    Parameters:
    -----------
    curves : IdealCurveSet
    eps : float
        Truncation height, must be positive.
    samples : int, optional
        Total sample count, split between components in proportion to length.
    spacing : float, optional
        Target Euclidean spacing; used when ``samples`` is not given.

    Returns:
    --------
    list of np.ndarray
        One (N_i, 3) polyline per component.
    """
    if eps <= 0.0:
        raise DomainError("Truncation height must be positive.")
    if curves.is_empty:
        return []
    lengths = curves.lengths()
    if samples is not None:
        counts = np.maximum(3, np.round(samples * lengths / lengths.sum()).astype(int))
        counts[np.argmax(lengths)] += samples - counts.sum() if counts.sum() != samples else 0
        counts = np.maximum(3, counts)
    else:
        spacing = spacing or float(lengths.sum()) / 256.0
        counts = np.maximum(3, np.ceil(lengths / spacing).astype(int))
    out = []
    for comp, n in zip(curves.get_components, counts):
        xy = resample_polyline(comp, int(n), closed=True)
        out.append(np.column_stack([xy, np.full(len(xy), float(eps))]))
    return out


# ===========================================
# REGION: Orthogonality
# ===========================================
def _tangent_at_foot(curves: IdealCurveSet, point: np.ndarray) -> Tuple[float, np.ndarray]:
    comps = curves.get_components
    best = (np.inf, None)
    for comp in comps:
        tangents = vertex_tangents(comp, closed=True)
        a, b = comp, np.roll(comp, -1, axis=0)
        d, j, t = point_segment_distances(point[None], a, b)
        if d[0] < best[0]:
            tj = (1.0 - t[0]) * tangents[j[0]] + t[0] * tangents[(j[0] + 1) % len(comp)]
            best = (float(d[0]), tj / np.linalg.norm(tj))
    return best


def orthogonality_check(arc: IdealArc, curves: IdealCurveSet, tol: float = ENDPOINT_TOL) -> Tuple[float, float]:
    """
    Junction angles (radians, in [0, π/2]) between the arc and the curves at both ends.

    Raises:
    -------
    BoundaryError:
        If an endpoint is farther than ``tol`` from the curves.
    """
    t_start, t_end = arc.end_tangents()
    angles = []
    for endpoint, tangent in ((arc.start, t_start), (arc.end, t_end)):
        d, curve_tangent = _tangent_at_foot(curves, endpoint)
        if d > tol:
            raise BoundaryError(f"Arc endpoint {endpoint.tolist()} is not on the boundary (distance {d:.3e}).")
        angles.append(float(np.arccos(np.clip(abs(float(tangent @ curve_tangent)), 0.0, 1.0))))
    return angles[0], angles[1]


def curve_normal_at(curves: IdealCurveSet, point: Sequence[float],
                    toward: Sequence[float] | None = None) -> Tuple[float, np.ndarray]:
    """Distance to the curves and the unit normal at the foot point, turned to face ``toward`` when given."""
    point = np.asarray(point, dtype=float)
    d, tangent = _tangent_at_foot(curves, point)
    normal = np.array([-tangent[1], tangent[0]])
    if toward is not None and float((np.asarray(toward, float) - point) @ normal) < 0.0:
        normal = -normal
    return d, normal


def find_orthogonal_chord(curves: IdealCurveSet, component: int = 0,
                          hint: Sequence[float] | None = None, samples: int = 64,
                          tol: float = ORTHOGONALITY_TOL, singular_margin: float = 0.05) -> IdealArc:
    """
    Straight chord inside a closed component meeting it orthogonally at both ends.

    Candidate chords leave the curve along its inward normal; the start point is chosen
    near ``hint`` when given and refined so that the far junction is orthogonal too.

    Raises:
    -------
    ConstructionError:
        If no chord within ``tol`` of orthogonality is found.
    """
    comp = curves.get_components[component]
    closed = np.vstack([comp, comp[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    tangents = vertex_tangents(comp, closed=True)
    region = Polygon(comp)
    ring = shapely.LinearRing(comp)
    singular = [comp[i] for i in curves.get_singular_points[component]]

    def frame(s):
        s = s % total
        j = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(comp) - 1))
        t = (s - cum[j]) / seg[j]
        p = (1.0 - t) * comp[j] + t * comp[(j + 1) % len(comp)]
        tg = (1.0 - t) * tangents[j] + t * tangents[(j + 1) % len(comp)]
        tg = tg / np.linalg.norm(tg)
        n = np.array([-tg[1], tg[0]])
        if not region.contains(Point(p + 1e-6 * total * n)):
            n = -n
        return p, n

    def far_hit(s):
        p, n = frame(s)
        ray = LineString([p + 1e-9 * total * n, p + 2.0 * total * n])
        hit = ray.intersection(ring)
        pts = np.array([g.coords[0] for g in getattr(hit, "geoms", [hit]) if not g.is_empty]).reshape(-1, 2)
        if len(pts) == 0:
            return None
        q = pts[np.argmin(np.linalg.norm(pts - p, axis=1))]
        return p, q, n

    def defect(s):
        hit = far_hit(s)
        if hit is None:
            return np.pi
        p, q, n = hit
        _, tq = _tangent_at_foot(IdealCurveSet([comp]), q)
        return abs(float(n @ tq))

    def near_singular(p):
        return any(np.linalg.norm(p - c) < singular_margin for c in singular)

    grid = np.linspace(0.0, total, samples, endpoint=False)
    if hint is not None:
        s_hint, _ = IdealArc(closed).project(hint)
        grid = s_hint + np.linspace(-0.25 * total, 0.25 * total, 2 * (samples // 2) + 1)
        grid = grid[np.argsort(np.abs(grid - s_hint))]
    scores = []
    for s in grid:
        hit = far_hit(s)
        if hit is None or near_singular(hit[0]) or near_singular(hit[1]):
            scores.append(np.inf)
        else:
            scores.append(defect(s))
    scores = np.array(scores)
    if not np.any(np.isfinite(scores)):
        raise ConstructionError("No admissible chord: every candidate meets a singular point.")
    # first candidate (closest to the hint) that is already within tolerance wins
    ok = np.flatnonzero(scores < tol)
    if len(ok):
        s_best = grid[ok[0]]
    else:
        k = int(np.argmin(scores))
        step = total / samples
        res = minimize_scalar(defect, bounds=(grid[k] - step, grid[k] + step), method="bounded",
                              options={"xatol": 1e-10 * total})
        s_best = float(res.x)
        if defect(s_best) >= tol:
            raise ConstructionError(f"No orthogonal chord within {tol}: best defect {defect(s_best):.3e}.")
    p, q, _ = far_hit(s_best)
    return IdealArc.segment(p, q, samples=max(16, int(np.linalg.norm(q - p) / (total / len(comp))) + 1))


def bounds_hole(curves: IdealCurveSet, component: int) -> bool:
    """True when the bounded side of the component lies outside the region, i.e. the curve rims a hole."""
    comp = curves.get_components[component]
    poly = Polygon(comp)
    tangent = vertex_tangents(comp, closed=True)[0]
    normal = np.array([-tangent[1], tangent[0]])
    probe = comp[0] + 1e-4 * np.sqrt(poly.area) * normal
    if not poly.contains(Point(probe)):
        probe = comp[0] - 1e-4 * np.sqrt(poly.area) * normal
    return not bool(curves.parity(probe[None])[0])


def away_disk(curves: IdealCurveSet, component: int, margin: float = 10.0):
    """
    Side of the component facing away from the region: the hole it rims, or the outside of
    the curve clipped to a box ``margin`` times the size of the curve set.
    """
    poly = shapely.make_valid(Polygon(curves.get_components[component]))
    if bounds_hole(curves, component):
        return poly
    xmin, ymin, xmax, ymax = curves.boundary_lines().bounds
    pad = margin * max(xmax - xmin, ymax - ymin)
    return box(xmin - pad, ymin - pad, xmax + pad, ymax + pad).difference(poly)


def component_order(curves: IdealCurveSet) -> List[int]:
    """Hole rims by decreasing hole area, then the outer curves."""
    comps = curves.get_components
    holes = [k for k in range(len(comps)) if bounds_hole(curves, k)]
    holes.sort(key=lambda k: -Polygon(comps[k]).area)
    return holes + [k for k in range(len(comps)) if k not in holes]


def exterior_orthogonal_arc(curves: IdealCurveSet, component: int, samples: int = 257,
                            tol: float = ORTHOGONALITY_TOL) -> IdealArc:
    """
    Arc outside the region whose ends meet an outer component orthogonally.

    The plane is inverted in a circle around a region point c halfway between the pole of
    the region and the curve; the outside of the curve becomes a bounded disk, an
    orthogonal chord is found there and mapped back. Inversions are conformal, so the
    image is a circular arc meeting the curve at right angles. Samples are uniform in the
    chord parameter, so the one-sided end tangents stay second-order accurate.

    Raises:
    -------
    ConstructionError:
        If the chord passes too close to c, where the arc would run off to infinity.
    """
    comps = curves.get_components
    comp = comps[component]
    region = max(polygons_of(curves.to_region()), key=lambda p: p.area)
    pole = np.array(polylabel(region, tolerance=1e-4 * np.sqrt(region.area)).coords[0])
    others = [c for k, c in enumerate(comps) if k != component]
    far = IdealCurveSet(others).distance(comp) if others else np.linalg.norm(comp - pole, axis=1)
    q = comp[int(np.argmax(far))]
    center = None
    for fraction in (0.5, 0.25, 0.1):
        c = pole + fraction * (q - pole)
        if curves.parity(c[None])[0]:
            center = c
            break
    if center is None:
        raise ConstructionError("No region point to invert about.")
    radius = float(np.linalg.norm(comp - center, axis=1).min())
    inversion = Inversion((float(center[0]), float(center[1])), radius)

    def invert(xy):
        return inversion.apply(np.column_stack([xy, np.zeros(len(xy))]))[:, :2]

    image = IdealCurveSet([invert(comp)], [curves.get_singular_points[component]])
    axis = (q - pole) / np.linalg.norm(q - pole)
    rel = image.get_components[0] - center
    hint = image.get_components[0][int(np.argmax(np.abs(rel[:, 0] * axis[1] - rel[:, 1] * axis[0])))]
    chord = find_orthogonal_chord(image, 0, hint=hint, tol=tol)
    if chord.line_string().distance(Point(center)) < 0.05 * chord.length:
        raise ConstructionError("Exterior arc would pass through infinity.")
    t = np.linspace(0.0, 1.0, samples)[:, None]
    return IdealArc(invert((1.0 - t) * chord.start + t * chord.end))


# ===========================================
# REGION: Skillets
# ===========================================
@dataclass(frozen=True)
class SkilletBoundary:
    """
    Skillet {y ≤ u(x)}: u is infinite exactly on [-1, 1], vanishes for |x| ≥ R and on
    1 < |x| < R follows a quarter ellipse of width R - 1 and height ``height``, which
    is convex and joins both the line y = 0 and the rails x = ±1 with matching tangents.
    """
    support_radius: float
    height: float
    isometry: Isometry = field(default_factory=Isometry.identity)

    def __post_init__(self):
        if self.support_radius <= 1.0:
            raise DomainError("Skillet support radius must exceed 1.")
        if self.height <= 0.0:
            raise DomainError("Skillet height must be positive.")
        for move in self.isometry.moves:
            if isinstance(move, Inversion):
                raise DomainError("Skillet isometries must fix ∞ (no inversions).")

    def _s(self, x: np.ndarray) -> np.ndarray:
        return (self.support_radius - np.abs(x)) / (self.support_radius - 1.0)

    def u(self, x: ArrayLikeFloat) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = np.clip(self._s(x), 0.0, 1.0)
        val = self.height * (1.0 - np.sqrt(1.0 - s * s))
        val = np.where(np.abs(x) >= self.support_radius, 0.0, val)
        return np.where(np.abs(x) <= 1.0, np.inf, val)

    def du(self, x: ArrayLikeFloat) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        finite = (np.abs(x) > 1.0) & (np.abs(x) < self.support_radius)
        s = np.clip(self._s(x), 0.0, 1.0 - 1e-16)
        slope = self.height * s / np.sqrt(1.0 - s * s) * (-np.sign(x) / (self.support_radius - 1.0))
        return np.where(finite, slope, 0.0)

    def d2u(self, x: ArrayLikeFloat) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        finite = (np.abs(x) > 1.0) & (np.abs(x) < self.support_radius)
        s = np.clip(self._s(x), 0.0, 1.0 - 1e-16)
        curv = self.height / (1.0 - s * s) ** 1.5 / (self.support_radius - 1.0) ** 2
        return np.where(finite, curv, 0.0)

    def half_width(self, y: ArrayLikeFloat) -> np.ndarray:
        """|x| of the boundary at height y ≥ 0: R at y = 0, 1 for y ≥ height."""
        y = np.clip(np.asarray(y, dtype=float) / self.height, 0.0, 1.0)
        s = np.sqrt(1.0 - (1.0 - y) ** 2)
        return self.support_radius - s * (self.support_radius - 1.0)

    def boundary_polylines(self, window: float, spacing: float = 0.01) -> List[np.ndarray]:
        """Left and right boundary branches clipped to the box [-window, window]²."""
        branches = []
        theta = np.linspace(0.0, 0.5 * np.pi, max(16, int(0.5 * np.pi * max(self.support_radius - 1.0,
                                                                             self.height) / spacing)))
        for sign in (-1.0, 1.0):
            flat = np.column_stack([np.linspace(sign * window, sign * self.support_radius, 64), np.zeros(64)])
            # quarter ellipse centred at (±R, height) from (±R, 0) to (±1, height)
            ex = sign * (self.support_radius - (self.support_radius - 1.0) * np.sin(theta))
            ey = self.height * (1.0 - np.cos(theta))
            fillet = np.column_stack([ex, ey])
            rail = np.column_stack([np.full(64, sign * 1.0), np.linspace(self.height, max(window, self.height), 64)])
            pts = np.vstack([flat, fillet[1:], rail[1:]])
            pts = self.isometry.apply_to_plane_points(pts)
            branches.append(pts)
        return branches

    def region(self, window: float, bottom: float | None = None, spacing: float = 0.01) -> RegionK:
        """The skillet intersected with the box [-window, window] x [bottom, window]."""
        bottom = -window if bottom is None else bottom
        left, right = self.boundary_polylines(window, spacing)
        ring = np.vstack([left[::-1], [[-window, bottom], [window, bottom]], right])
        poly = shapely.make_valid(Polygon(ring))
        return RegionK.from_geometry(poly, spacing)



def skillet_boundary(support_radius: float, height: float) -> SkilletBoundary:
    return SkilletBoundary(float(support_radius), float(height))


# ===========================================
# REGION: Bridges
# ===========================================
@dataclass(frozen=True)
class BridgeSpec:
    """Bridge along ``arc`` of Euclidean width ``width``; junction corners get round fillets of ``fillet``·width."""
    arc: IdealArc
    width: float
    fillet: float = 1.0

    def __post_init__(self):
        if self.width <= 0.0:
            raise BoundaryError("Bridge width must be positive.")


@dataclass
class BridgeBoundary:
    """Curves ∂S △ ∂P of one bridge together with the data used to build them."""
    curves: IdealCurveSet
    spec: BridgeSpec
    base: IdealCurveSet
    region: object
    carved: bool
    junctions: List[Tuple[np.ndarray, np.ndarray]]

    @property
    def width(self) -> float:
        return self.spec.width


def _attached_ends(arc: IdealArc, base: IdealCurveSet, tol: float) -> List[bool]:
    d = base.distance(np.vstack([arc.start, arc.end]))
    return [bool(d[0] <= tol), bool(d[1] <= tol)]


def _extended_arc(arc: IdealArc, attached: List[bool], overshoot: float) -> np.ndarray:
    t0, t1 = arc.end_tangents()
    pts = arc.points
    if attached[0]:
        pts = np.vstack([pts[0] - overshoot * t0, pts])
    if attached[1]:
        pts = np.vstack([pts, pts[-1] + overshoot * t1])
    return pts


def build_bridge(base: IdealCurveSet, spec: BridgeSpec, support_radius: float | None = None,
                 tol: float = ENDPOINT_TOL) -> BridgeBoundary:
    """
    Attaches one bridge to the region bounded by ``base``.

    The arc's interior must avoid ``base``. When the arc runs outside the region the tube
    is added, otherwise it is carved out; in both cases the result is ∂S △ ∂P. Junction
    corners are rounded with circular fillets of radius (R - 1)·w, so that seen at scale w
    the junction is the skillet of support radius R. Unattached ends get round caps.
    """
    support_radius = support_radius or BRIDGE.get("skillet_support_radius", 2.0)
    arc, w = spec.arc, spec.width
    attached = _attached_ends(arc, base, tol)
    if not any(attached):
        raise BoundaryError("Bridge arc is detached from the boundary.")
    t0, t1 = arc.end_tangents()
    for is_attached, endpoint, tangent in ((attached[0], arc.start, t0), (attached[1], arc.end, t1)):
        if is_attached:
            d, ct = _tangent_at_foot(base, endpoint)
            angle = float(np.arccos(np.clip(abs(float(tangent @ ct)), 0.0, 1.0)))
            if abs(angle - 0.5 * np.pi) > ORTHOGONALITY_TOL:
                raise BoundaryError(f"Non-orthogonal junction at {endpoint.tolist()}: angle {angle:.6f}.")

    length = arc.length
    trim = min(0.25 * length, 2.0 * support_radius * w)
    inner = arc.points[[i for i in range(len(arc.points))
                        if (not attached[0] or np.linalg.norm(arc.points[i] - arc.start) > 1e-3 * length)
                        and (not attached[1] or np.linalg.norm(arc.points[i] - arc.end) > 1e-3 * length)]]
    if len(inner) >= 2 and LineString(inner).intersects(base.boundary_lines()):
        raise BoundaryError("Bridge arc interior meets the boundary.")

    overshoot = 2.0 * support_radius * w
    tube = LineString(_extended_arc(arc, attached, overshoot)).buffer(w, cap_style="flat", quad_segs=32)
    for is_attached, endpoint in ((attached[0], arc.start), (attached[1], arc.end)):
        if not is_attached:
            tube = tube.union(Point(endpoint).buffer(w, quad_segs=32))
    expected = 2.0 * w * (length + overshoot * sum(attached))
    if tube.area < 0.98 * expected:
        raise BoundaryError("Bridge tube self-intersects: arc curvature too large for the width.")

    junction_zone = Polygon()
    for is_attached, endpoint in ((attached[0], arc.start), (attached[1], arc.end)):
        if is_attached:
            junction_zone = junction_zone.union(Point(endpoint).buffer((support_radius + 1.0) * w, quad_segs=32))
    if tube.difference(junction_zone).intersects(base.boundary_lines()):
        raise BoundaryError("Bridge tube hits another boundary component.")

    region = base.to_region()
    mid = arc.point_at(0.5 * length)
    carved = bool(base.parity(mid[None])[0])
    fillet = (support_radius - 1.0) * w
    if carved:
        raw = region.difference(tube)
        opened = raw.buffer(-fillet, quad_segs=32).buffer(fillet, quad_segs=32)
        result = raw.difference(raw.difference(opened).intersection(junction_zone))
    else:
        raw = region.union(tube)
        closed = raw.buffer(fillet, quad_segs=32).buffer(-fillet, quad_segs=32)
        result = raw.union(closed.difference(raw).intersection(junction_zone))
    result = shapely.make_valid(result)

    spacing = min(w / 8.0, float(np.median(base.lengths() / [len(c) for c in base.get_components])))
    curves = IdealCurveSet.from_geometry(result, spacing=spacing)
    junctions = []
    if attached[0]:
        junctions.append((arc.start.copy(), t0))
    if attached[1]:
        junctions.append((arc.end.copy(), -t1))
    log.debug("bridge of width %.4g built: %d components, carved=%s", w, len(curves), carved)
    return BridgeBoundary(curves, BridgeSpec(arc, w, support_radius - 1.0), base, result, carved, junctions)


def make_bridge_family(base: IdealCurveSet, arc: IdealArc, widths: Sequence[float],
                       support_radius: float | None = None) -> List[BridgeBoundary]:
    """
    Bridges of decreasing widths along one arc.

    Parameters:
    -----------
    base : IdealCurveSet
        The boundary ∂S the bridges attach to.
    arc : IdealArc
        The arc Γ, orthogonal to ∂S at attached ends.
    widths : sequence of float
        Strictly decreasing positive widths.

    Returns:
    --------
    list of BridgeBoundary
        One ∂S △ ∂P_n per width.

    Raises:
    -------
    BoundaryError:
        Nonpositive or non-decreasing widths, detached or non-orthogonal arcs, tubes that
        self-intersect or hit other components.
    """
    widths = [float(w) for w in widths]
    if not widths:
        raise BoundaryError("At least one bridge width is required.")
    if any(w <= 0.0 for w in widths):
        raise BoundaryError("Bridge width must be positive.")
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise BoundaryError("Bridge widths must be strictly decreasing.")
    return [build_bridge(base, BridgeSpec(arc, w), support_radius) for w in widths]


def measured_width(bridge: BridgeBoundary, samples: int = 64) -> float:
    """sup over centerline samples away from the junctions of the distance to the new boundary."""
    arc, w = bridge.spec.arc, bridge.width
    length = arc.length
    margin = (bridge.spec.fillet + 2.0) * w
    if length <= 2.0 * margin:
        margin = 0.25 * length
    s = np.linspace(margin, length - margin, samples)
    pts = np.array([arc.point_at(v) for v in s])
    return float(bridge.curves.distance(pts).max())


# ===========================================
# REGION: Nicely shrinking families
# ===========================================
@dataclass
class ShrinkingReport:
    widths: List[float]
    samples: List[dict]
    passed: bool
    reason: str

    def to_json(self) -> dict:
        return {"widths": self.widths, "samples": self.samples, "passed": self.passed, "reason": self.reason}


def _frame_curves(curves: IdealCurveSet, origin: np.ndarray, tangent: np.ndarray, scale: float,
                  window: float) -> List[np.ndarray]:
    """Curves moved to ``origin``, rotated so ``tangent`` is +y, scaled by 1/scale, cut to the window."""
    normal = np.array([tangent[1], -tangent[0]])
    out = []
    for comp in curves.get_components:
        closed = np.vstack([comp, comp[:1]])
        local = np.column_stack([(closed - origin) @ normal, (closed - origin) @ tangent]) / scale
        keep = np.all(np.abs(local) <= window + 1.0, axis=1)
        if not np.any(keep):
            continue
        # split into runs of consecutive kept samples
        breaks = np.flatnonzero(np.diff(keep.astype(int)) != 0) + 1
        for run in np.split(np.arange(len(local)), breaks):
            if keep[run[0]] and len(run) >= 2:
                out.append(local[run])
    return out


def _reference_lines(window: float) -> List[np.ndarray]:
    y = np.array([-window - 1.0, window + 1.0])
    return [np.column_stack([[-1.0, -1.0], y]), np.column_stack([[1.0, 1.0], y])]


def convergence_rate(widths: Sequence[float], distances: Sequence[float]) -> float:
    """Exponent p of the least-squares fit distance ≈ c·w^p; 0 when a distance is not positive."""
    widths, distances = np.asarray(widths, dtype=float), np.asarray(distances, dtype=float)
    if len(widths) < 2 or np.any(distances <= 0.0) or not np.all(np.isfinite(distances)):
        return 0.0
    rate, _ = np.polyfit(np.log(widths), np.log(distances), 1)
    return float(rate)


def distances_converge(widths: Sequence[float], distances: Sequence[float], tol: float,
                       min_rate: float = MIN_SHRINK_RATE) -> bool:
    """
    True when the last distance is within ``tol``, or when the distances strictly decrease
    and fall at least like w^``min_rate``.
    """
    if distances[-1] <= tol:
        return True
    decreasing = all(b < a for a, b in zip(distances, distances[1:]))
    return decreasing and convergence_rate(widths, distances) >= min_rate


def check_nicely_shrinking(family: Sequence[BridgeBoundary], sample_points: Sequence[IdealPoint],
                           window: float | None = None, tol: float = 0.05) -> ShrinkingReport:
    """
    Rescales each bridge boundary about sample points by 1/w and measures the Hausdorff
    distance, inside a fixed window, to the two model limits: the lines x = ±1 and the
    skillet whose support radius matches the fillets.

    A sample converges when its distances reach ``tol`` or shrink at a positive power
    of the width (see :func:`distances_converge`). A failed trend is reported, not raised.
    """
    window = window or BRIDGE.get("window", 4.0)
    widths = [b.width for b in family]
    if len(family) < 2 or any(b >= a for a, b in zip(widths, widths[1:])):
        return ShrinkingReport(widths, [], False, "widths are not strictly decreasing")

    results = []
    passed = True
    for point in sample_points:
        xy = point.as_array()
        dist_lines, dist_skillet = [], []
        for bridge in family:
            arc = bridge.spec.arc
            s, foot = arc.project(xy)
            _, tangent = arc.frame_at(min(max(s, 1e-12), arc.length - 1e-12))
            skillet = SkilletBoundary(1.0 + bridge.spec.fillet, bridge.spec.fillet)
            ref_skillet = skillet.boundary_polylines(window + 1.0)
            d_lines = windowed_hausdorff(_frame_curves(bridge.curves, xy, tangent, bridge.width, window),
                                         _reference_lines(window), window)
            d_sk = min(windowed_hausdorff(_frame_curves(bridge.curves, xy, sign * tangent, bridge.width, window),
                                          ref_skillet, window) for sign in (1.0, -1.0))
            dist_lines.append(d_lines)
            dist_skillet.append(d_sk)
        use_skillet = dist_skillet[-1] < dist_lines[-1]
        series = dist_skillet if use_skillet else dist_lines
        ok = distances_converge(widths, series, tol)
        passed = passed and ok
        results.append({"point": xy.tolist(),
                        "classification": "skillet boundary" if use_skillet else "parallel lines",
                        "distances": series,
                        "rate": convergence_rate(widths, series), "converging": ok})
    reason = "" if passed else "distance to the model limits does not go to zero"
    return ShrinkingReport(widths, results, passed, reason)
