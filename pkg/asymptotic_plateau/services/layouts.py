import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import LineString, Polygon, box
from shapely.ops import polylabel

from asymptotic_plateau.exceptions import BoundaryError, DomainError
from asymptotic_plateau.services.boundary import (
    BridgeSpec,
    IdealArc,
    IdealCurveSet,
    build_bridge,
    curve_normal_at,
    point_segment_distances,
    polygons_of,
)
from asymptotic_plateau.services.construct import ConstructionState, StageConfig, eps_budget
from asymptotic_plateau.services.exhaustion import HANDLE, PANTS, SurfaceSpec

log = logging.getLogger(__name__)

ANGLES = 720
COVER_GRID = 100
# tube half-width and last-turn clearance in units of the spiral pitch
TUBE_FRACTION = 1.0 / 8.0
CLEARANCE = 6.0 * TUBE_FRACTION
SLAB_RADIUS = 0.4
SLAB_BLOCK_WIDTH = 0.08
SLAB_ARC_WIDTH = 0.05
SLAB_HEIGHT = 0.15
SLAB_LEG = 0.1


# ===========================================
# REGION: Helpers
# ===========================================
def _join(*parts: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Concatenates polylines, dropping consecutive samples closer than ``tol``."""
    pts = np.vstack(parts)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > tol
    return pts[keep]


def _foot(curves: IdealCurveSet, point: np.ndarray) -> np.ndarray:
    a, b, _ = curves.segments()
    _, j, t = point_segment_distances(point[None], a, b)
    return a[j[0]] + t[0] * (b[j[0]] - a[j[0]])


def _ray_hits(center: np.ndarray, a: np.ndarray, b: np.ndarray, thetas: np.ndarray,
              chunk: int = 32) -> List[np.ndarray]:
    """Distances along each ray ``center + t·(cos θ, sin θ)``, t > 0, at which it crosses a segment."""
    e = b - a
    w = a - center
    out = []
    for start in range(0, len(thetas), chunk):
        th = thetas[start:start + chunk]
        ux, uy = np.cos(th)[:, None], np.sin(th)[:, None]
        denom = ux * e[None, :, 1] - uy * e[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]) / denom
            s = (w[None, :, 0] * uy - w[None, :, 1] * ux) / denom
        hit = (np.abs(denom) > 1e-15) & (t > 0.0) & (s >= 0.0) & (s < 1.0)
        out.extend(np.sort(t[i][hit[i]]) for i in range(len(th)))
    return out


def _periodic(thetas: np.ndarray, values: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def interp(theta):
        return np.interp(np.mod(theta, 2.0 * np.pi), thetas, values, period=2.0 * np.pi)
    return interp


def _circle_from(center: np.ndarray, radius: float, theta0: float, spacing: float) -> np.ndarray:
    """Circle sampled with a vertex at angle ``theta0``."""
    count = max(64, int(np.ceil(2.0 * np.pi * radius / spacing)))
    t = theta0 + np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    return center + radius * np.column_stack([np.cos(t), np.sin(t)])


def spiral_points(center: np.ndarray, r_start: Callable, r_end: Callable, theta0: float, turns: int,
                  spacing: float) -> np.ndarray:
    """
    Relative spiral r(θ) = r_start(θ) + (r_end(θ) - r_start(θ))·τ, τ running from 0 to 1
    over ``turns`` counterclockwise turns from θ0.
    """
    r_max = float(max(np.max(r_end(np.linspace(0.0, 2.0 * np.pi, 64))), 1e-9))
    count = int(np.ceil(2.0 * np.pi * turns * r_max / spacing)) + 1
    theta = theta0 + np.linspace(0.0, 2.0 * np.pi * turns, count)
    tau = (theta - theta0) / (2.0 * np.pi * turns)
    r = r_start(theta) + (r_end(theta) - r_start(theta)) * tau
    return center + r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])


def covering_distance(curves: IdealCurveSet, window: float, grid: int = COVER_GRID,
                      spacing: float | None = None) -> float:
    """Largest distance from a grid × grid lattice on [-window, window]² to the curves (upper bound)."""
    spacing = spacing or window / (4.0 * grid)
    pts = np.vstack(curves.resampled(spacing).get_components)
    axis = np.linspace(-window, window, grid)
    gx, gy = np.meshgrid(axis, axis)
    d, _ = cKDTree(pts).query(np.column_stack([gx.ravel(), gy.ravel()]))
    return float(d.max() + 0.5 * spacing)


# ===========================================
# REGION: Dense plans
# ===========================================
@dataclass
class FaceLayout:
    """Complementary component of the ideal boundary and the spiral that fills it."""
    index: int
    bounded: bool
    area: float
    status: str
    arc: IdealArc | None = None
    disk: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"face": self.index, "bounded": self.bounded, "area": self.area, "status": self.status,
                "arc_length": None if self.arc is None else self.arc.length}


def dense_parameters(n: int) -> dict:
    """Spiral pitch 1/(2n), disk radius 1/(5n) (diameter below 1/(2n)) and tube half-width pitch/8."""
    if n < 1:
        raise DomainError(f"Density index must be positive, got {n}.")
    pitch = 1.0 / (2.0 * n)
    return {"pitch": pitch, "disk_radius": 1.0 / (5.0 * n), "width": TUBE_FRACTION * pitch,
            "clearance": CLEARANCE * pitch}


def _complementary_faces(curves: IdealCurveSet, window: float) -> List[Tuple[Polygon, bool]]:
    frame = box(-window, -window, window, window)
    region = shapely.make_valid(curves.to_region())
    faces = [(p, True) for p in polygons_of(region.intersection(frame))]
    for p in polygons_of(frame.difference(region)):
        faces.append((p, not p.exterior.intersects(frame.exterior)))
    return faces


def _bounded_spiral(curves: IdealCurveSet, face: Polygon, params: dict, theta0: float) -> Tuple[IdealArc, np.ndarray]:
    if len(face.interiors):
        raise BoundaryError("Face with holes is not star-shaped.")
    pole = np.array(polylabel(face, tolerance=1e-4 * np.sqrt(face.area)).coords[0])
    ring = np.asarray(face.exterior.coords)
    thetas = np.linspace(0.0, 2.0 * np.pi, ANGLES, endpoint=False)
    hits = _ray_hits(pole, ring[:-1], ring[1:], thetas)
    if any(len(h) != 1 for h in hits):
        raise BoundaryError("Face is not star-shaped about its pole.")
    outer = _periodic(thetas, np.array([h[0] for h in hits]))
    rho, w, pitch = params["disk_radius"], params["width"], params["pitch"]
    start = rho + 2.0 * w

    def r_end(theta):
        return outer(theta) - params["clearance"]

    def r_start(theta):
        return np.full_like(np.asarray(theta, dtype=float), start)

    span = r_end(thetas) - start
    turns = max(1, int(np.ceil(span.max() / pitch)))
    if span.min() / turns < 3.0 * w:
        raise BoundaryError("Face too small for the spiral at this density.")
    u0 = np.array([np.cos(theta0), np.sin(theta0)])
    disk = _circle_from(pole, rho, theta0, w / 4.0)
    spiral = spiral_points(pole, r_start, r_end, theta0, turns, 0.5 * w)
    leg_in = pole + np.outer(np.linspace(rho, start, 3), u0)
    s_end = spiral[-1]
    foot = _foot(curves, s_end)
    _, normal = curve_normal_at(curves, foot, toward=s_end)
    depth = float(np.linalg.norm(s_end - foot))
    leg_out = foot + np.outer([depth, 0.5 * depth, 0.0], normal)
    return IdealArc(_join(leg_in, spiral, leg_out)), disk


def _unbounded_spiral(curves: IdealCurveSet, window: float, params: dict, theta0: float) -> Tuple[IdealArc, np.ndarray]:
    pts = np.vstack(curves.get_components)
    hull = shapely.MultiPoint(pts).convex_hull
    center = np.array(polylabel(hull, tolerance=1e-4 * np.sqrt(hull.area)).coords[0])
    a, b, _ = curves.segments()
    thetas = np.linspace(0.0, 2.0 * np.pi, ANGLES, endpoint=False)
    hits = _ray_hits(center, a, b, thetas)
    if any(len(h) == 0 for h in hits):
        raise BoundaryError("Curves do not surround the spiral center.")
    inner = _periodic(thetas, np.array([h[-1] for h in hits]))
    rho, w, pitch, clear = params["disk_radius"], params["width"], params["pitch"], params["clearance"]
    r_max = float(np.max(np.linalg.norm(np.array([[-window, -window], [window, -window], [window, window],
                                                  [-window, window]]) - center, axis=1))) + clear

    def r_start(theta):
        return inner(theta) + clear

    def r_end(theta):
        return np.full_like(np.asarray(theta, dtype=float), r_max)

    span = r_max - r_start(thetas)
    turns = max(1, int(np.ceil(span.max() / pitch)))
    if span.min() / turns < 3.0 * w:
        raise BoundaryError("Window too small for the spiral at this density.")
    spiral = spiral_points(center, r_start, r_end, theta0, turns, 0.5 * w)
    s0 = spiral[0]
    foot = _foot(curves, s0)
    _, normal = curve_normal_at(curves, foot, toward=s0)
    depth = float(np.linalg.norm(s0 - foot))
    leg_in = foot + np.outer([0.0, 0.5 * depth, depth], normal)
    theta1 = theta0 + 2.0 * np.pi * turns
    u1 = np.array([np.cos(theta1), np.sin(theta1)])
    leg_out = center + np.outer(r_max + np.linspace(0.0, 2.0 * w, 3), u1)
    disk_center = center + (r_max + 2.0 * w + rho) * u1
    disk = _circle_from(disk_center, rho, theta1 + np.pi, w / 4.0)
    return IdealArc(_join(leg_in, spiral, leg_out)), disk


def dense_plan(state: ConstructionState, n: int, window: float | None = None) -> StageConfig:
    """
    Boundary of the next stage of the dense-limit-set construction.

    Every complementary component Ω of the current curves (inside the square window
    [-window, window]²) receives a small disk, diameter below 1/(2n), joined to ∂Ω by a
    bridge along a spiral of pitch 1/(2n) that comes within 1/(2n) of every point of Ω.
    Bounded components spiral outward from the disk at their pole, which requires them
    to be star-shaped about it; the unbounded component spirals from the curves out to
    the window corners and ends in its disk. Components that cannot hold the spiral are
    skipped and reported. The result is checked for 1/n density on a 100 × 100 grid.

    Example Usage:
    --------------
    >>> config = dense_plan(state, n=2)
    >>> config.checks["covering"]["passed"]
    True
    """
    params = dense_parameters(n)
    curves = state.curves
    if window is None:
        window = 1.5 * float(np.max(np.abs(curves.boundary_lines().bounds)))
    if not box(-window, -window, window, window).contains(curves.boundary_lines()):
        raise DomainError(f"Window {window} does not contain the curves.")
    stage = state.stage + 1
    faces, bridges, notes = [], [], []
    plans = []
    for i, (face, bounded) in enumerate(_complementary_faces(curves, window)):
        theta0 = np.pi * i
        try:
            if bounded:
                arc, disk = _bounded_spiral(curves, face, params, theta0)
            else:
                arc, disk = _unbounded_spiral(curves, window, params, theta0)
            plans.append((arc, disk))
            faces.append(FaceLayout(i, bounded, float(face.area), "planned", arc, disk))
        except BoundaryError as exc:
            faces.append(FaceLayout(i, bounded, float(face.area), f"skipped: {exc}"))
            notes.append(f"face {i} skipped: {exc}")
            log.warning("dense plan n=%d: face %d skipped (%s)", n, i, exc)

    for (arc, disk), layout in zip(plans, [f for f in faces if f.arc is not None]):
        base = IdealCurveSet(curves.get_components + [disk], curves.get_singular_points + [[]])
        spec = BridgeSpec(arc, params["width"])
        try:
            curves = build_bridge(base, spec).curves
            bridges.append(spec)
            layout.status = "bridged"
        except BoundaryError as exc:
            layout.status = f"skipped: {exc}"
            notes.append(f"face {layout.index} skipped: {exc}")
            log.warning("dense plan n=%d: bridge of face %d failed (%s)", n, layout.index, exc)

    distance = covering_distance(curves, window)
    checks = {"covering": {"max_distance": distance, "bound": 1.0 / n, "passed": bool(distance < 1.0 / n),
                           "window": window},
              "faces": [f.to_json() for f in faces], "params": params}
    log.info("dense plan n=%d: %d bridges, covering distance %.4g", n, len(bridges), distance)
    return StageConfig(stage, "dense-disk", eps_budget(stage), width=params["width"], bridges=tuple(bridges),
                       boundary=curves, notes=tuple(notes), checks=checks)


# ===========================================
# REGION: Slab plans
# ===========================================
def slab_block(n: int, kind: str) -> Tuple[IdealCurveSet, float]:
    """
    Building block of stage n: the disk of radius 0.4 centered on the x-axis in its slab
    with a carved diameter (A_n, an annulus, slab 2(n-1) < x < 2n-1) or with the carved
    diameter crossed by a second bridge (T_n, a holed torus, slab 2n-1 < x < 2n).
    """
    if kind not in (PANTS, HANDLE):
        raise DomainError(f"Invalid block: {kind}. Choose from {[PANTS, HANDLE]}")
    cx = 2.0 * n - (1.5 if kind == PANTS else 0.5)
    curves = IdealCurveSet.circle((cx, 0.0), SLAB_RADIUS, samples=512)
    diameter = IdealArc.segment((cx, -SLAB_RADIUS), (cx, SLAB_RADIUS), samples=65)
    curves = build_bridge(curves, BridgeSpec(diameter, SLAB_BLOCK_WIDTH)).curves
    if kind == HANDLE:
        cross = IdealArc.segment((cx - SLAB_BLOCK_WIDTH, 0.0), (cx + SLAB_BLOCK_WIDTH, 0.0), samples=17)
        curves = build_bridge(curves, BridgeSpec(cross, 0.75 * SLAB_BLOCK_WIDTH)).curves
    return curves, cx


def _side_point(comp: np.ndarray, height: float, side: str) -> np.ndarray:
    """Crossing of the curve with y = height furthest to the right (or left)."""
    ring = np.vstack([comp, comp[:1]])
    line = LineString([(ring[:, 0].min() - 1.0, height), (ring[:, 0].max() + 1.0, height)])
    hit = line.intersection(LineString(ring))
    pts = np.array([g.coords[0] for g in getattr(hit, "geoms", [hit]) if not g.is_empty]).reshape(-1, 2)
    if len(pts) == 0:
        raise BoundaryError(f"Curve does not reach height {height}.")
    return pts[np.argmax(pts[:, 0])] if side == "right" else pts[np.argmin(pts[:, 0])]


def connecting_arc(curves: IdealCurveSet, block: IdealCurveSet, height: float = SLAB_HEIGHT,
                   leg: float = SLAB_LEG, samples: int = 129) -> IdealArc:
    """
    Arc from the rightmost component σ of ``curves`` to the left side of ``block``
    kept on the line y = height off the x-axis: orthogonal legs at both ends joined by a
    cubic Hermite curve. The x-coordinate never decreases along the Hermite part.
    """
    comps = curves.get_components
    sigma = comps[int(np.argmax([c[:, 0].max() for c in comps]))]
    target = block.get_components[int(np.argmin([c[:, 0].min() for c in block.get_components]))]
    p0 = _side_point(sigma, height, "right")
    p1 = _side_point(target, height, "left")
    _, n0 = curve_normal_at(IdealCurveSet([sigma]), p0, toward=p1)
    _, n1 = curve_normal_at(IdealCurveSet([target]), p1, toward=p0)
    a, b = p0 + leg * n0, p1 + leg * n1
    span = float(np.linalg.norm(b - a))
    t = np.linspace(0.0, 1.0, samples)[:, None]
    h00, h10 = 2 * t ** 3 - 3 * t ** 2 + 1, t ** 3 - 2 * t ** 2 + t
    h01, h11 = -2 * t ** 3 + 3 * t ** 2, t ** 3 - t ** 2
    middle = h00 * a + h10 * span * n0 + h01 * b + h11 * span * (-n1)
    start = p0 + np.outer([0.0, 0.5 * leg], n0)
    end = p1 + np.outer([0.5 * leg, 0.0], n1)
    return IdealArc(_join(start, middle, end))


def _restricted(curves: IdealCurveSet, x_max: float):
    return curves.boundary_lines().intersection(box(-1e3, -1e3, x_max, 1e3))


def slab_stabilization(first: IdealCurveSet, second: IdealCurveSet, x_max: float = 2.0,
                       tol: float = 1e-3) -> Tuple[bool, float]:
    """Hausdorff distance of the two boundaries restricted to {x < x_max}."""
    a, b = _restricted(first, x_max), _restricted(second, x_max)
    if a.is_empty and b.is_empty:
        return True, 0.0
    d = float(shapely.hausdorff_distance(a, b))
    return d <= tol, d


def slab_plan(spec: SurfaceSpec, n: int) -> StageConfig:
    """
    Stage-n boundary of the slab layout for a surface of infinite topology.

    Stage 1 is the disk D_1 of radius 0.4 about (1/2, 0). Stage m ≥ 2 adds the block
    of the m-th nonannular piece (A_m for pants, T_m for a handle) and joins it to the
    rightmost component by a bridge along :func:`connecting_arc`, which stays off the
    x-axis and inside the slabs between the two. Layouts are deterministic, so two
    stages agree exactly where neither added anything.

    Raises:
    -------
    DomainError:
        Finite specs or n < 1.
    """
    if spec.is_finite:
        raise DomainError("Slab layouts are for surfaces of infinite topology.")
    if n < 1:
        raise DomainError(f"Stage must be positive, got {n}.")
    curves = IdealCurveSet.circle((0.5, 0.0), SLAB_RADIUS, samples=512)
    pieces = spec.pieces()
    case, checks, bridges = "disk", {}, []
    for m in range(2, n + 1):
        kind = next(pieces)
        block, cx = slab_block(m, kind)
        arc = connecting_arc(curves, block)
        base = IdealCurveSet(curves.get_components + block.get_components,
                             curves.get_singular_points + block.get_singular_points)
        bridge = BridgeSpec(arc, SLAB_ARC_WIDTH)
        curves = build_bridge(base, bridge).curves
        bridges.append(bridge)
        case = "slab-A_n" if kind == PANTS else "slab-T_n"
        xs = arc.points[:, 0]
        checks = {"block": kind, "block_center": cx, "arc_min_abs_y": float(np.abs(arc.points[:, 1]).min()),
                  "arc_x_range": [float(xs.min()), float(xs.max())],
                  "arc_in_slabs": bool(xs.min() > 0.0 and xs.max() < 2.0 * m)}
    log.debug("slab plan stage %d: %d components", n, len(curves))
    return StageConfig(n, case, eps_budget(n), width=SLAB_ARC_WIDTH if bridges else 0.0, bridges=tuple(bridges),
                       boundary=curves, checks=checks)
