import abc
import logging
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import shortest_path
from scipy.sparse import coo_matrix
from shapely.geometry import Polygon
from shapely.ops import polylabel

from asymptotic_plateau.exceptions import ConstructionError, DomainError
from asymptotic_plateau.services.boundary import (
    IdealArc,
    RegionK,
    SkilletBoundary,
    polygons_of,
    polyline_length,
    resample_polyline,
)
from asymptotic_plateau.services.mesh import TriMesh, boundary_loops, disjoint_union, stitch_rows, submesh
from asymptotic_plateau.services.strip import matched_strip_height, solve_strip_profile
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

MINIMIZER = section("minimizer")
EPS = MINIMIZER.get("eps", 0.1)
RESOLUTION = MINIMIZER.get("resolution", 32)
SIDE_OFFSET = 0.1
# peak of the unit strip over its half-width
STRIP_PEAK = 1.66925
# radial hyperbolic step cap of the hemisphere rings
MAX_RING_STEP = 0.2


@lru_cache(maxsize=1)
def _strip_profile():
    return solve_strip_profile(1024)


# ===========================================
# REGION: Assembly helpers
# ===========================================
def _ring_count(total: int, s: float, s0: float) -> int:
    """Vertices on the ring at hyperbolic radius s when the outer ring at s0 carries ``total``."""
    return int(max(6, min(total, np.ceil(total * np.sinh(s) / np.sinh(s0)))))


def _grid_triangles(n_cols: int, n_rows: int, wrap: bool = False) -> np.ndarray:
    """Two triangles per quad of a row-major grid; ``wrap`` closes the rows."""
    cols = n_cols if wrap else n_cols - 1
    r, c = np.meshgrid(np.arange(n_rows - 1), np.arange(cols), indexing="ij")
    r, c = r.ravel(), c.ravel()
    a = r * n_cols + c
    b = r * n_cols + (c + 1) % n_cols
    d = (r + 1) * n_cols + c
    e = (r + 1) * n_cols + (c + 1) % n_cols
    return np.vstack([np.column_stack([a, b, e]), np.column_stack([a, e, d])])


def _polar_mesh(apex: np.ndarray, rings: Sequence[Tuple[np.ndarray, np.ndarray]], eps: float,
                name: str) -> TriMesh:
    """Apex plus closed rings listed inside out; the last ring is the boundary on z = ε."""
    vertices = [np.asarray(apex, dtype=float)[None]]
    tris: List[Tuple[int, int, int]] = []
    offset = 1
    prev_idx, prev_param = [0], np.array([0.0])
    for xyz, param in rings:
        idx = list(range(offset, offset + len(xyz)))
        tris.extend(stitch_rows(prev_idx, idx, prev_param, param, closed=True))
        vertices.append(xyz)
        prev_idx, prev_param = idx, param
        offset += len(xyz)
    vertices = np.vstack(vertices)
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[prev_idx] = True
    vertices[boundary, 2] = eps
    return orient_away(TriMesh(vertices, np.array(tris), boundary, eps, name=name))


def orient_away(mesh: TriMesh, inside_point: Sequence[float] | None = None) -> TriMesh:
    """
    Consistently orients the mesh with normals pointing out of the enclosed region.

    Without ``inside_point`` the highest triangle is made to face upward; otherwise the
    normals face away from the given point on average.
    """
    mesh = mesh.orient()
    normals = mesh.face_cross()
    centroids = mesh.corners().mean(axis=1)
    if inside_point is None:
        top = int(np.argmax(centroids[:, 2]))
        facing = normals[top, 2]
    else:
        facing = float(np.sum(np.einsum("ij,ij->i", normals, centroids - np.asarray(inside_point, float))))
    return mesh if facing > 0.0 else mesh.flipped()


def _ccw(ring: np.ndarray) -> np.ndarray:
    x, y = ring[:, 0], ring[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return ring if signed > 0.0 else ring[::-1]


def _polar(ring: np.ndarray, center: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unwrapped angles and radii of a ring about ``center``, raising if not star-shaped."""
    rel = ring - center
    theta = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    if np.any(np.diff(theta) <= 0.0) or theta[-1] - theta[0] >= 2.0 * np.pi:
        raise ConstructionError("Boundary component is not star-shaped about its pole of inaccessibility.")
    return theta, np.linalg.norm(rel, axis=1)


def _semicircle_nodes(half_width: np.ndarray, eps: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cross-section nodes of the arch through (-c, ε) and (c, ε) centred on the ideal
    plane, spaced evenly in hyperbolic arclength. Returns offsets and heights of shape
    (len(half_width), count).
    """
    half_width = np.atleast_1d(half_width)
    a = np.sqrt(half_width ** 2 + eps ** 2)
    theta0 = np.arcsin(eps / a)
    t0 = np.log(np.tan(0.5 * theta0))
    t = t0[:, None] * (1.0 - 2.0 * np.linspace(0.0, 1.0, count)[None, :])
    theta = 2.0 * np.arctan(np.exp(t))
    offsets = -a[:, None] * np.cos(theta)
    heights = a[:, None] * np.sin(theta)
    offsets[:, 0], offsets[:, -1] = -half_width, half_width
    heights[:, 0] = heights[:, -1] = eps
    return offsets, heights


# ===========================================
# REGION: Hemispheres and domes
# ===========================================
def hemisphere_mesh(center: Sequence[float] = (0.0, 0.0), radius: float = 1.0, eps: float = EPS,
                    resolution: int = 256) -> TriMesh:
    """
    Totally geodesic hemisphere cut at z = ε, meshed by rings at evenly spaced hyperbolic
    distance from the top.

    The ring at distance s sits at z = a / cosh(s) and Euclidean radius a·tanh(s); ring
    sizes grow like sinh(s) so triangles stay close to isotropic in the hyperbolic metric.
    ``resolution`` is the vertex count of the boundary ring; about 640 gives 10k triangles
    at ε = 0.1. Rings are never more than 0.2 apart, so small ε gives long thin
    triangles near the boundary instead of a handful of rings.
    """
    if not 0.0 < eps < radius:
        raise DomainError("Hemisphere mesh needs 0 < ε < radius.")
    if resolution < 16:
        raise DomainError("Resolution must be at least 16.")
    cx, cy = float(center[0]), float(center[1])
    s0 = float(np.arccosh(radius / eps))
    ds = min(2.0 * np.pi * np.sinh(s0) / resolution, MAX_RING_STEP)
    rings_count = max(2, int(np.ceil(s0 / ds)))
    rings = []
    for k in range(1, rings_count + 1):
        s = s0 * k / rings_count
        n = resolution if k == rings_count else _ring_count(resolution, s, s0)
        phi = 2.0 * np.pi * np.arange(n) / n
        r = radius * np.tanh(s)
        z = eps if k == rings_count else radius / np.cosh(s)
        xyz = np.column_stack([cx + r * np.cos(phi), cy + r * np.sin(phi), np.full(n, z)])
        rings.append((xyz, np.arange(n) / n))
    return _polar_mesh(np.array([cx, cy, radius]), rings, eps, "hemisphere")


def dome_mesh(ring_xy: np.ndarray, eps: float = EPS, resolution: int = RESOLUTION, profile: str = "cylinder",
              scale: float = 1.0, name: str = "dome") -> TriMesh:
    """
    Disk-type initial surface spanning one star-shaped closed curve lifted to z = ε.

    Parameters:
    -----------
    ring_xy : np.ndarray
        Closed boundary polyline in the ideal plane.
    profile : str
        ``"hemisphere"`` rings at hyperbolic polar spacing with heights a/cosh(s), where a
        is the radius of the disk of equal area; ``"cylinder"`` a vertical wall over the
        curve up to z = a closed by a flat cap; ``"flat"`` everything on z = ε.
    scale : float
        Height and radial factor of the interior rings for ``"hemisphere"`` (below 1
        keeps the dome inside, above 1 outside).

    Raises:
    -------
    ConstructionError:
        When the curve is not star-shaped about its pole of inaccessibility.
    """
    valid = ["hemisphere", "cylinder", "flat"]
    if profile not in valid:
        raise ValueError(f"Invalid profile: {profile}. Choose from {valid}")
    ring = _ccw(np.asarray(ring_xy, dtype=float))
    poly = Polygon(ring)
    a_eff = float(np.sqrt(poly.area / np.pi))
    if not 0.0 < eps < a_eff:
        raise DomainError(f"Truncation height {eps} too large for a component of radius {a_eff:.4g}.")
    pole = polylabel(poly, tolerance=1e-3 * a_eff)
    center = np.array([pole.x, pole.y])
    boundary = resample_polyline(ring, resolution, closed=True)
    theta, radii = _polar(boundary, center)
    params = (theta - theta[0]) / (2.0 * np.pi)

    def ring_at(n: int, fraction: float, z: float) -> Tuple[np.ndarray, np.ndarray]:
        phi = theta[0] + 2.0 * np.pi * np.arange(n) / n
        r = fraction * np.interp(phi, theta, radii, period=2.0 * np.pi)
        xyz = np.column_stack([center[0] + r * np.cos(phi), center[1] + r * np.sin(phi), np.full(n, z)])
        return xyz, np.arange(n) / n

    s0 = float(np.arccosh(a_eff / eps))
    ds = 2.0 * np.pi * np.sinh(s0) / resolution
    outer = (np.column_stack([boundary, np.full(resolution, eps)]), params)
    rings = []
    if profile == "cylinder":
        top = a_eff
        cap_rings = max(2, int(np.ceil(1.0 / ds)))
        for k in range(1, cap_rings):
            f = k / cap_rings
            rings.append(ring_at(max(6, min(resolution, int(np.ceil(resolution * f)))), f, top))
        walls = max(2, int(np.ceil(np.log(top / eps) / ds)))
        for j in range(walls, 0, -1):
            rings.append((np.column_stack([boundary, np.full(resolution, eps * (top / eps) ** (j / walls))]),
                          params))
        apex_z = top
    else:
        lift = 0.0 if profile == "flat" else scale
        count = max(2, int(np.ceil(s0 / ds)))
        for k in range(1, count):
            s = s0 * k / count
            f = np.tanh(s) / np.tanh(s0) * (scale if profile == "hemisphere" else 1.0)
            rings.append(ring_at(_ring_count(resolution, s, s0), f, eps + lift * (a_eff / np.cosh(s) - eps)))
        apex_z = eps + lift * (a_eff - eps)
    rings.append(outer)
    return _polar_mesh(np.array([center[0], center[1], apex_z]), rings, eps, name)


def arch_mesh(inner_xy: np.ndarray, outer_xy: np.ndarray, eps: float = EPS, resolution: int = RESOLUTION,
              cross_nodes: int | None = None, scale: float = 1.0, name: str = "arch") -> TriMesh:
    """
    Annulus-type initial surface over the region between two nested star-shaped curves:
    semicircular arches in each radial half-plane about the inner curve's pole.
    """
    inner = _ccw(np.asarray(inner_xy, dtype=float))
    outer = _ccw(np.asarray(outer_xy, dtype=float))
    pole = polylabel(Polygon(inner), tolerance=1e-4 * np.sqrt(Polygon(inner).area))
    center = np.array([pole.x, pole.y])
    th_in, r_in = _polar(resample_polyline(inner, resolution, closed=True), center)
    th_out, r_out = _polar(resample_polyline(outer, resolution, closed=True), center)
    phi = th_in[0] + 2.0 * np.pi * np.arange(resolution) / resolution
    ri = np.interp(phi, th_in, r_in, period=2.0 * np.pi)
    ro = np.interp(phi, th_out, r_out, period=2.0 * np.pi)
    if np.any(ro <= ri):
        raise ConstructionError("Arch curves are not nested.")
    nodes = cross_nodes or max(8, resolution // 4)
    half = 0.5 * (ro - ri)
    offsets, heights = _semicircle_nodes(half, eps, nodes)
    heights = eps + scale * (heights - eps)
    radial = 0.5 * (ro + ri)[:, None] + offsets
    # rows run across the arch, columns around it
    x = center[0] + radial.T * np.cos(phi)[None, :]
    y = center[1] + radial.T * np.sin(phi)[None, :]
    vertices = np.column_stack([x.ravel(), y.ravel(), heights.T.ravel()])
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[:resolution] = True
    boundary[-resolution:] = True
    tris = _grid_triangles(resolution, nodes, wrap=True)
    return orient_away(TriMesh(vertices, tris, boundary, eps, name=name))


def annulus_mesh(center: Sequence[float], inner_radius: float, outer_radius: float, eps: float = EPS,
                 resolution: int = RESOLUTION, cross_nodes: int | None = None) -> TriMesh:
    phi = 2.0 * np.pi * np.arange(512) / 512
    circle = np.column_stack([np.cos(phi), np.sin(phi)])
    return arch_mesh(np.asarray(center) + inner_radius * circle, np.asarray(center) + outer_radius * circle,
                     eps, resolution, cross_nodes, name="annulus")


def revolution_mesh(center: Sequence[float], rho: np.ndarray, z: np.ndarray, eps: float,
                    resolution: int = RESOLUTION) -> TriMesh:
    """Surface of revolution about the vertical axis through ``center`` with profile (ρ, z); both ends on z = ε."""
    rho, z = np.asarray(rho, dtype=float), np.asarray(z, dtype=float).copy()
    z[0] = z[-1] = eps
    phi = 2.0 * np.pi * np.arange(resolution) / resolution
    x = center[0] + rho[:, None] * np.cos(phi)[None, :]
    y = center[1] + rho[:, None] * np.sin(phi)[None, :]
    vertices = np.column_stack([x.ravel(), y.ravel(), np.repeat(z, resolution)])
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[:resolution] = True
    boundary[-resolution:] = True
    tris = _grid_triangles(resolution, len(rho), wrap=True)
    return orient_away(TriMesh(vertices, tris, boundary, eps, name="revolution"))


# ===========================================
# REGION: Strip and skillet
# ===========================================
def strip_band_mesh(eps: float = EPS, length: float = 0.5, resolution: int = 48,
                    profile: str = "semicircle") -> TriMesh:
    """
    Band over {|x| ≤ 1, |y| ≤ length} with rails at x = ±1 on z = ε and sliding ends:
    the end rows may move in x and z but keep their y.

    ``profile="exact"`` starts on the truncated strip profile itself.
    """
    valid = ["semicircle", "exact"]
    if profile not in valid:
        raise ValueError(f"Invalid profile: {profile}. Choose from {valid}")
    offsets, heights = _semicircle_nodes(np.array([1.0]), eps, resolution)
    x, z = offsets[0], heights[0]
    if profile == "exact":
        z = np.asarray(matched_strip_height(_strip_profile(), eps, x), dtype=float)
        z[0] = z[-1] = eps
    rows = max(4, int(np.ceil(2.0 * length * resolution / np.pi))) + 1
    y = np.linspace(-length, length, rows)
    vertices = np.column_stack([np.tile(x, rows), np.repeat(y, resolution), np.tile(z, rows)])
    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[0::resolution] = True
    boundary[resolution - 1::resolution] = True
    frozen = np.repeat(boundary[:, None], 3, axis=1)
    frozen[:resolution, 1] = True
    frozen[-resolution:, 1] = True
    tris = _grid_triangles(resolution, rows)
    return orient_away(TriMesh(vertices, tris, boundary, eps, frozen, name="strip"))


def _exit_distance(inside, origin: np.ndarray, directions: np.ndarray, far: float) -> np.ndarray:
    lo = np.zeros(len(directions))
    hi = np.full(len(directions), far)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ins = inside(origin + mid[:, None] * directions)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    return 0.5 * (lo + hi)


def skillet_mesh(skillet: SkilletBoundary, eps: float = EPS, resolution: int = 64, window: float = 4.0,
                 tunnel: float | None = None, top: float | None = None) -> TriMesh:
    """
    Radial-graph initial surface for the skillet {y ≤ u(x)}, truncated to |x| ≤ window,
    y ≤ tunnel and z ≤ top.

    Vertices lie on rays from p = (0, -window, 0): columns follow the boundary curve (the
    flat part, the fillet, the rail and the strip cross-section closing the tunnel) and
    rows climb in elevation up to the wall at height ``top``. Every vertex sits where its
    ray leaves the solid made of the vertical wall over the curve and the tunnel under the
    truncated strip profile. The wall ends, the top row and the tunnel cross-section are
    held fixed on their asymptotic shapes.
    """
    R, h = skillet.support_radius, skillet.height
    tunnel = tunnel or window
    top = top or window
    y_p = -window
    if window <= R or tunnel <= h:
        raise DomainError("Skillet window must exceed the support radius and the fillet height.")
    profile = _strip_profile()

    def roof(x):
        return np.asarray(matched_strip_height(profile, eps, np.clip(x, -1.0, 1.0)), dtype=float)

    def inside(points: np.ndarray) -> np.ndarray:
        x, y, z = points[:, 0], points[:, 1], points[:, 2]
        wall = np.where(np.abs(x) > 1.0, skillet.u(np.where(np.abs(x) > 1.0, x, 2.0 * R)), h)
        in_tunnel = (np.abs(x) <= 1.0) & (z < roof(x))
        return in_tunnel | (y <= wall)

    n_piece = max(4, resolution // 8)
    n_arc = max(8, resolution // 4)
    line = np.column_stack([np.linspace(-window, -R, n_piece, endpoint=False), np.zeros(n_piece)])
    th = np.linspace(0.0, 0.5 * np.pi, n_piece, endpoint=False)
    fillet = np.column_stack([-(R - (R - 1.0) * np.sin(th)), h * (1.0 - np.cos(th))])
    rail = np.column_stack([np.full(n_piece, -1.0), np.linspace(h, tunnel, n_piece, endpoint=False)])
    left = np.column_stack([np.vstack([line, fillet, rail]), np.full(3 * n_piece, eps)])
    xa = -np.cos(np.pi * np.arange(n_arc + 1) / n_arc)
    arc = np.column_stack([xa, np.full(n_arc + 1, tunnel), roof(xa)])
    arc[0, 2] = arc[-1, 2] = eps
    right = left[::-1] * np.array([-1.0, 1.0, 1.0])
    bottom = np.vstack([left, arc, right])
    cols = len(bottom)

    origin = np.array([0.0, y_p, 0.0])
    rel = bottom - origin
    alpha = np.arctan2(rel[:, 0], rel[:, 1])
    dist = np.hypot(rel[:, 0], rel[:, 1])
    tan0 = rel[:, 2] / dist
    heading = np.column_stack([np.sin(alpha), np.cos(alpha), np.zeros(cols)])
    far = 4.0 * (window + tunnel + top)
    wall_dist = _exit_distance(inside, origin + np.array([0.0, 0.0, top]), heading, far)
    tan_top = top / wall_dist
    rows = max(8, resolution // 3)
    vertices = np.empty((rows + 1, cols, 3))
    vertices[0] = bottom
    for k in range(1, rows + 1):
        tb = tan0 * (tan_top / tan0) ** (k / rows)
        beta = np.arctan(tb)
        omega = np.column_stack([np.cos(beta) * np.sin(alpha), np.cos(beta) * np.cos(alpha), np.sin(beta)])
        rho = _exit_distance(inside, origin, omega, far)
        vertices[k] = origin + rho[:, None] * omega
    vertices = vertices.reshape(-1, 3)

    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[:cols] = np.abs(bottom[:, 2] - eps) == 0.0
    frozen = np.zeros((len(vertices), 3), dtype=bool)
    frozen[:cols] = True
    frozen[-cols:] = True
    grid = np.arange(len(vertices)).reshape(rows + 1, cols)
    frozen[grid[:, 0]] = True
    frozen[grid[:, -1]] = True
    tris = _grid_triangles(cols, rows + 1)
    mesh = TriMesh(vertices, tris, boundary, eps, frozen, name="skillet")
    return orient_away(mesh, inside_point=origin)


# ===========================================
# REGION: Regions
# ===========================================
def region_mesh(region: RegionK, eps: float = EPS, resolution: int = RESOLUTION, side: str = "default",
                offset: float = SIDE_OFFSET) -> TriMesh:
    """
    Initial surface for a bounded region: a dome per simply connected component and an
    arch per component with one hole.

    Parameters:
    -----------
    side : str
        ``"default"`` vertical walls with flat caps, ``"inner"`` a lowered dome inside the
        hemisphere-like surface, ``"outer"`` a raised one, ``"flat"`` the region itself on z = ε.
    """
    sides = {"default": ("cylinder", 1.0), "inner": ("hemisphere", 1.0 - offset),
             "outer": ("hemisphere", 1.0 + offset), "flat": ("flat", 0.0)}
    if side not in sides:
        raise ValueError(f"Invalid side: {side}. Choose from {list(sides.keys())}")
    if region.get_contains_infinity:
        raise ConstructionError("No initial surface for regions containing ∞; use a dedicated builder.")
    profile, scale = sides[side]
    polys = polygons_of(region.polygon())
    total = sum(p.exterior.length + sum(r.length for r in p.interiors) for p in polys)
    parts = []
    for i, poly in enumerate(polys):
        share = max(16, int(round(resolution * poly.exterior.length / total * len(polys))))
        exterior = np.asarray(poly.exterior.coords)[:-1]
        holes = [np.asarray(r.coords)[:-1] for r in poly.interiors]
        if not holes:
            parts.append(dome_mesh(exterior, eps, share, profile, scale, name=f"dome-{i}"))
        elif len(holes) == 1:
            arch_scale = 1.0 if side in ("default", "flat") else scale
            parts.append(arch_mesh(holes[0], exterior, eps, share, scale=arch_scale, name=f"arch-{i}"))
        else:
            raise ConstructionError("Components with more than one hole need band surgery.")
    return parts[0] if len(parts) == 1 else disjoint_union(parts, name="region")


# ===========================================
# REGION: Band surgery
# ===========================================
def _seam(mesh: TriMesh, point: np.ndarray, radius: float) -> Tuple[np.ndarray, int, int]:
    """Run of boundary-loop vertices within ``radius`` of ``point`` and its two neighbours."""
    verts = mesh.get_vertices
    for loop in boundary_loops(mesh):
        near = np.linalg.norm(verts[loop, :2] - point, axis=1) <= radius
        if not np.any(near):
            continue
        if np.all(near):
            raise ConstructionError("Band seam swallows a whole boundary component.")
        start = int(np.flatnonzero(~near)[0])
        loop, near = np.roll(loop, -start), np.roll(near, -start)
        idx = np.flatnonzero(near)
        if np.any(np.diff(idx) != 1):
            raise ConstructionError("Boundary comes back near the band end; seam is not a single run.")
        if len(idx) < 3:
            raise ConstructionError(f"Boundary too coarse for a band of width {radius:.4g}: fewer than 3 seam vertices.")
        return loop[idx], int(loop[idx[0] - 1]), int(loop[(idx[-1] + 1) % len(loop)])
    raise ConstructionError(f"No boundary vertex near the band end {point.tolist()}.")


def _notch_chain(mesh: TriMesh, old_boundary: np.ndarray, a: int, b: int) -> np.ndarray:
    """Path from a to b along boundary edges through vertices that were interior before the cut."""
    edges = mesh.boundary_edges()
    allowed = ~old_boundary
    allowed[[a, b]] = True
    ok = allowed[edges[:, 0]] & allowed[edges[:, 1]]
    e = edges[ok]
    n = mesh.n_vertices
    graph = coo_matrix((np.ones(2 * len(e)), (np.concatenate([e[:, 0], e[:, 1]]),
                                              np.concatenate([e[:, 1], e[:, 0]]))), shape=(n, n)).tocsr()
    dist, pred = shortest_path(graph, unweighted=True, indices=a, return_predecessors=True)
    if not np.isfinite(dist[b]):
        raise ConstructionError("Cut left no interior path between the seam ends.")
    path = [b]
    while path[-1] != a:
        path.append(int(pred[path[-1]]))
    return np.array(path[::-1], dtype=np.int64)


def _arclength_params(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return cum / cum[-1]


def attach_band(mesh: TriMesh, arc: IdealArc, width: float, seam_factor: float = 1.5, cross_nodes: int = 9,
                row_spacing: float | None = None) -> TriMesh:
    """
    Glues a thin band along ``arc`` to a surface whose boundary meets both arc ends.

    The boundary vertices within ``seam_factor``·width of each end are cut away; the band
    has rails at distance ``width`` on both sides of the arc on z = ε and arched cross
    sections of height 1.67·width, the truncated strip scaled to the band. Each end of the
    band is zipped to the interior path exposed by the cut, so the old boundary loop is
    rerouted along the rails.

    Raises:
    -------
    ConstructionError:
        When the boundary is too coarse near an end (fewer than three seam vertices) or
        the arc is too short for the band.
    """
    eps = mesh.get_eps
    if width <= 2.0 * eps:
        raise ConstructionError(f"Band width {width} must exceed 2ε = {2 * eps}.")
    radius = seam_factor * width
    length = arc.length
    if length <= 3.0 * radius:
        raise ConstructionError("Arc too short for the band.")
    seam_a, prev_a, next_a = _seam(mesh, arc.start, radius)
    seam_b, prev_b, next_b = _seam(mesh, arc.end, radius)
    if set(seam_a.tolist()) & set(seam_b.tolist()):
        raise ConstructionError("Band end seams overlap.")
    old_boundary = mesh.get_boundary.copy()
    drop = np.zeros(mesh.n_vertices, dtype=bool)
    drop[seam_a] = True
    drop[seam_b] = True
    cut, remap = submesh(mesh, ~drop)
    old_boundary = old_boundary[remap >= 0]
    ends = []
    for prev, nxt in ((prev_a, next_a), (prev_b, next_b)):
        if remap[prev] < 0 or remap[nxt] < 0:
            raise ConstructionError("Seam neighbours vanished with the cut.")
        ends.append(_notch_chain(cut, old_boundary, int(remap[prev]), int(remap[nxt])))

    spacing = row_spacing or 0.25 * width
    sigma = np.linspace(radius, length - radius, max(3, int(np.ceil((length - 2.0 * radius) / spacing)) + 1))
    s = -np.cos(np.pi * np.arange(cross_nodes) / (cross_nodes - 1))
    rows = []
    for sg in sigma:
        point, tangent = arc.frame_at(sg)
        normal = np.array([-tangent[1], tangent[0]])
        xy = point[None, :] + width * s[:, None] * normal[None, :]
        z = eps + STRIP_PEAK * width * np.sqrt(np.clip(1.0 - s * s, 0.0, None))
        rows.append(np.column_stack([xy, z]))
    band = np.array(rows)
    band[:, [0, -1], 2] = eps

    base = cut.n_vertices
    n_rows = len(sigma)
    band_idx = base + np.arange(n_rows * cross_nodes).reshape(n_rows, cross_nodes)
    tris = [cut.get_triangles]
    tris.append(_grid_triangles(cross_nodes, n_rows) + base)
    verts = np.vstack([cut.get_vertices, band.reshape(-1, 3)])

    for chain, row, sg in ((ends[0], band_idx[0], sigma[0]), (ends[1], band_idx[-1], sigma[-1])):
        point, tangent = arc.frame_at(sg)
        normal = np.array([-tangent[1], tangent[0]])
        side = float((verts[chain[0], :2] - point) @ normal)
        ordered = row[::-1] if side > 0.0 else row
        tris.append(np.array(stitch_rows(chain, ordered, _arclength_params(verts[chain]),
                                         _arclength_params(verts[ordered]), closed=False)))

    boundary = np.concatenate([cut.get_boundary, np.zeros(n_rows * cross_nodes, dtype=bool)])
    boundary[band_idx[:, 0]] = True
    boundary[band_idx[:, -1]] = True
    frozen = np.vstack([cut.get_frozen, np.zeros((n_rows * cross_nodes, 3), dtype=bool)])
    joined = TriMesh(verts, np.vstack(tris), boundary, eps, frozen, name=f"{mesh.get_name}+band")
    log.debug("band of width %.4g attached: %d rows, chains of %d and %d vertices",
              width, n_rows, len(ends[0]), len(ends[1]))
    return orient_away(joined)


# ===========================================
# REGION: Initial surfaces
# ===========================================
class InitialSurface(abc.ABC):
    """
    Builder of the starting mesh handed to the area minimizer.

    Parameters:
    -----------
    eps : float
        Truncation height.
    resolution : int
        Boundary sample count (columns for the strip and skillet builders).
    """

    def __init__(self, eps: float = EPS, resolution: int = RESOLUTION):
        if not 0.0 < eps <= 0.2:
            raise DomainError(f"Truncation height must lie in (0, 0.2], got {eps}.")
        if resolution < 16:
            raise DomainError("Resolution must be at least 16.")
        self.__eps = eps
        self.__resolution = resolution

    @property
    def get_eps(self) -> float:
        return self.__eps

    @property
    def get_resolution(self) -> int:
        return self.__resolution

    @abc.abstractmethod
    def build(self) -> TriMesh:
        """Returns the initial mesh."""
        pass


class RegionSurface(InitialSurface):
    def __init__(self, region: RegionK, eps: float = EPS, resolution: int = RESOLUTION, side: str = "default"):
        super().__init__(eps, resolution)
        self.region = region
        self.side = side

    def build(self) -> TriMesh:
        return region_mesh(self.region, self.get_eps, self.get_resolution, self.side)


class StripSurface(InitialSurface):
    def __init__(self, eps: float = EPS, resolution: int = 48, length: float = 0.5):
        super().__init__(eps, resolution)
        self.length = length

    def build(self) -> TriMesh:
        return strip_band_mesh(self.get_eps, self.length, self.get_resolution)


class SkilletSurface(InitialSurface):
    def __init__(self, skillet: SkilletBoundary, eps: float = EPS, resolution: int = 64, window: float = 4.0):
        super().__init__(eps, resolution)
        self.skillet = skillet
        self.window = window

    def build(self) -> TriMesh:
        return skillet_mesh(self.skillet, self.get_eps, self.get_resolution, self.window)


class InitialSurfaceFactory:
    """Creates initial-surface builders by kind: ``region``, ``strip`` or ``skillet``."""

    @staticmethod
    def get_builder(kind: str, **kwargs) -> RegionSurface | StripSurface | SkilletSurface:
        builders = {
            "region": RegionSurface,
            "strip": StripSurface,
            "skillet": SkilletSurface,
        }
        if kind not in builders:
            raise ValueError(f"Invalid surface kind: {kind}. Choose from {list(builders.keys())}")
        return builders[kind](**kwargs)


def curve_lengths(mesh: TriMesh) -> np.ndarray:
    """Euclidean lengths of the boundary loops projected to the ideal plane."""
    verts = mesh.get_vertices
    return np.array([polyline_length(verts[loop, :2], closed=True) for loop in boundary_loops(mesh)])
