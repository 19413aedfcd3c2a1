import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from asymptotic_plateau.exceptions import DomainError, GraphFailureError
from asymptotic_plateau.services.hypgeom import GeodesicPlane, hyp_distance_many
from asymptotic_plateau.services.mesh import TriMesh, ray_triangle_hits

log = logging.getLogger(__name__)

HULL_TOL = 1e-3


# ===========================================
# REGION: Convex hull
# ===========================================
@dataclass
class HullReport:
    max_violation: float
    violating_vertices: int
    planes: int
    tol: float = HULL_TOL

    @property
    def passed(self) -> bool:
        return self.max_violation < self.tol

    def to_json(self) -> dict:
        return {"max_violation": self.max_violation, "violating_vertices": self.violating_vertices,
                "planes": self.planes, "passed": self.passed}


def _hull_planes(anchors: np.ndarray, directions: int, grid: int, margin: float):
    """Geodesic planes with every anchor strictly on their negative side, and the sign to test."""
    xy = anchors[:, :2]
    diam = float(np.max(np.ptp(xy, axis=0)))
    delta = margin * max(diam, 1e-12)
    planes = []
    for theta in 2.0 * np.pi * np.arange(directions) / directions:
        n = np.array([np.cos(theta), np.sin(theta)])
        h = float(np.max(xy @ n)) + delta
        planes.append((GeodesicPlane.vertical(tuple(h * n), (-n[1], n[0])), 1.0))
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    for cx in np.linspace(lo[0], hi[0], grid):
        for cy in np.linspace(lo[1], hi[1], grid):
            dist = np.linalg.norm(anchors - np.array([cx, cy, 0.0]), axis=1)
            planes.append((GeodesicPlane.hemisphere((cx, cy), dist.max() + delta), 1.0))
            if dist.min() > 2.0 * delta:
                planes.append((GeodesicPlane.hemisphere((cx, cy), dist.min() - delta), -1.0))
    return planes


def convex_hull_check(mesh: TriMesh, directions: int = 64, grid: int = 8, margin: float = 5e-3,
                      tol: float = HULL_TOL) -> HullReport:
    """
    Tests that the surface stays in the convex hull of its fixed boundary.

    The boundary and fully frozen vertices are the anchors. Half-spaces are bounded by
    vertical planes just beyond the anchors in ``directions`` directions, by hemispheres
    just enclosing them and by hemispheres just excluding them, centred on a ``grid`` ×
    ``grid`` lattice over their footprint. The violation depth is the largest hyperbolic
    distance from a vertex on the wrong side to the plane.

    Example Usage:
    --------------
    ```python
    report = convex_hull_check(solved)
    report.max_violation, report.passed
    ```
    """
    anchors = mesh.get_vertices[~mesh.free]
    if len(anchors) < 3:
        raise DomainError("Convex hull check needs at least three fixed vertices.")
    verts = mesh.get_vertices[mesh.free]
    worst, bad = 0.0, np.zeros(len(verts), dtype=bool)
    planes = _hull_planes(anchors, directions, grid, margin)
    for plane, outside in planes:
        wrong = outside * plane.side_many(verts) > 0.0
        if np.any(wrong):
            worst = max(worst, float(plane.distance_many(verts[wrong]).max()))
            bad |= wrong
    report = HullReport(max_violation=worst, violating_vertices=int(bad.sum()), planes=len(planes), tol=tol)
    log.debug("convex hull check over %d planes: max violation %.3e", len(planes), worst)
    return report


# ===========================================
# REGION: Normal graphs
# ===========================================
@dataclass
class GraphDecomposition:
    """A surface written as a normal graph f over a reference surface inside a hyperbolic ball."""
    reference_id: str
    vertex_ids: np.ndarray
    f: np.ndarray
    sup_f: float
    sup_grad: float

    def to_json(self) -> dict:
        return {"reference_id": self.reference_id, "vertices": len(self.vertex_ids), "sup_f": self.sup_f,
                "sup_grad": self.sup_grad}


def closest_points_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Euclidean closest point of each p on the triangle (a, b, c) in the same row."""
    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    nn = np.sum(n * n, axis=-1)
    ap = p - a
    # barycentric coordinates of the projection into the triangle plane
    v = np.sum(np.cross(ap, ac) * n, axis=-1) / nn
    w = np.sum(np.cross(ab, ap) * n, axis=-1) / nn
    u = 1.0 - v - w
    proj = a + v[..., None] * ab + w[..., None] * ac
    inside = (u >= 0.0) & (v >= 0.0) & (w >= 0.0)
    best = proj
    best_d = np.where(inside, np.sum((p - proj) ** 2, axis=-1), np.inf)
    for s, e in ((a, b), (b, c), (c, a)):
        d = e - s
        t = np.clip(np.sum((p - s) * d, axis=-1) / np.sum(d * d, axis=-1), 0.0, 1.0)
        q = s + t[..., None] * d
        dq = np.sum((p - q) ** 2, axis=-1)
        closer = ~inside & (dq < best_d)
        best = np.where(closer[..., None], q, best)
        best_d = np.where(closer, dq, best_d)
    return best


def _incident_triangles(mesh: TriMesh) -> np.ndarray:
    """(N, max valence) triangle ids per vertex padded with -1."""
    tris = mesh.get_triangles
    rows = tris.ravel()
    cols = np.repeat(np.arange(len(tris)), 3)
    order = np.argsort(rows, kind="stable")
    rows, cols = rows[order], cols[order]
    counts = np.bincount(rows, minlength=mesh.n_vertices)
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(len(rows)) - start[rows]
    table = np.full((mesh.n_vertices, max(1, counts.max())), -1, dtype=np.int64)
    table[rows, slot] = cols
    return table


def normal_graph_decompose(m_new: TriMesh, m_ref: TriMesh, radius: float,
                           center: Sequence[float] = (0.0, 0.0, 1.0), neighbours: int = 6,
                           search_radius: float = 1.0, coincidence_tol: float = 1e-9) -> GraphDecomposition:
    """
    Writes ``m_new`` inside the hyperbolic ball B(center, radius) as a normal graph over ``m_ref``.

    Each vertex is matched to its closest point on the reference surface; f is the signed
    hyperbolic distance to it, positive on the side the reference normals point to.
    |∇f| is measured per triangle of ``m_new`` on the matched foot triangle, as the
    hyperbolic length z·|∇f|.

    Raises:
    -------
    GraphFailureError:
        When two distinct vertices share a foot point, when matched triangles fold over
        (the projection is not injective) or when a foot lies farther than
        ``search_radius``.
    """
    verts = m_new.get_vertices
    selected = np.flatnonzero(hyp_distance_many(verts, np.asarray(center, dtype=float)) < radius)
    if len(selected) == 0:
        raise DomainError(f"No vertex of the surface lies within hyperbolic distance {radius} of {list(center)}.")
    p = verts[selected]
    ref_verts, ref_tris = m_ref.get_vertices, m_ref.get_triangles
    k = min(neighbours, m_ref.n_vertices)
    _, near = cKDTree(ref_verts).query(p, k=k)
    near = near.reshape(len(p), k)
    cand = _incident_triangles(m_ref)[near].reshape(len(p), -1)
    valid = cand >= 0
    tri = ref_verts[ref_tris[np.where(valid, cand, 0)]]
    q = closest_points_on_triangles(p[:, None, :], tri[:, :, 0], tri[:, :, 1], tri[:, :, 2])
    d2 = np.where(valid, np.sum((q - p[:, None, :]) ** 2, axis=-1), np.inf)
    pick = np.argmin(d2, axis=1)
    rows = np.arange(len(p))
    foot = q[rows, pick]
    foot_tri = cand[rows, pick]

    normals = m_ref.face_normals()[foot_tri]
    sign = np.where(np.sum((p - foot) * normals, axis=1) >= 0.0, 1.0, -1.0)
    f = sign * hyp_distance_many(p, foot)
    if np.max(np.abs(f)) > search_radius:
        raise GraphFailureError(f"Foot point farther than the search radius {search_radius}.")
    scale = max(float(np.max(np.ptp(ref_verts, axis=0))), 1.0)
    dup_pairs = cKDTree(foot).query_pairs(coincidence_tol * scale, output_type="ndarray")
    if len(dup_pairs):
        i, j = dup_pairs[0]
        raise GraphFailureError(f"Vertices {selected[i]} and {selected[j]} share a foot point.")

    lookup = np.full(m_new.n_vertices, -1, dtype=np.int64)
    lookup[selected] = rows
    local = lookup[m_new.get_triangles]
    local = local[np.all(local >= 0, axis=1)]
    sup_grad = 0.0
    if len(local):
        c = foot[local]
        cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        orient = np.sum(cross * normals[local[:, 0]], axis=1)
        if np.any(orient > 0.0) and np.any(orient < 0.0):
            raise GraphFailureError("Projected triangles fold over the reference surface.")
        area2 = np.linalg.norm(cross, axis=1)
        unit = cross / area2[:, None]
        grad = np.zeros((len(local), 3))
        for k in range(3):
            edge = c[:, (k + 2) % 3] - c[:, (k + 1) % 3]
            grad += f[local[:, k], None] * np.cross(unit, edge)
        grad /= area2[:, None]
        z = c[:, :, 2].mean(axis=1)
        sup_grad = float(np.max(z * np.linalg.norm(grad, axis=1)))
    return GraphDecomposition(reference_id=m_ref.digest(), vertex_ids=selected, f=f,
                              sup_f=float(np.max(np.abs(f))), sup_grad=sup_grad)


# ===========================================
# REGION: Radial graphs
# ===========================================
@dataclass
class RadialGraphReport:
    max_count: int
    min_normal_y: float
    rays: int
    grazing: int

    @property
    def passed(self) -> bool:
        return self.max_count <= 1

    @property
    def normal_positive(self) -> bool:
        return self.min_normal_y > 0.0

    def to_json(self) -> dict:
        return {"max_count": self.max_count, "min_normal_y": self.min_normal_y, "rays": self.rays,
                "grazing": self.grazing, "passed": self.passed, "normal_positive": self.normal_positive}


def radial_graph_check(mesh: TriMesh, base_point: Sequence[float], rays: int = 10000,
                       rng: np.random.Generator | None = None) -> RadialGraphReport:
    """
    Counts how often rays from the ideal point ``base_point`` = (0, y_p, 0) cross the surface.

    Rays aim at area-weighted random points of the mesh, so each crosses it at least once;
    a radial graph is crossed exactly once. Also reports the smallest y-component of the
    unit normals, oriented positive on the triangle where |ν_y| is largest.
    """
    p = np.asarray(base_point, dtype=float)
    if p.shape != (3,) or p[2] != 0.0 or p[0] != 0.0 or p[1] >= 0.0:
        raise DomainError("Base point must be (0, y_p, 0) with y_p < 0.")
    rng = rng or np.random.default_rng(0)
    corners = mesh.corners()
    areas = mesh.euclidean_areas()
    tri = rng.choice(len(areas), size=rays, p=areas / areas.sum())
    r1, r2 = rng.uniform(size=rays), rng.uniform(size=rays)
    s = np.sqrt(r1)
    target = (1.0 - s)[:, None] * corners[tri, 0] + (s * (1.0 - r2))[:, None] * corners[tri, 1] \
        + (s * r2)[:, None] * corners[tri, 2]
    counts, grazing = ray_triangle_hits(np.broadcast_to(p, target.shape), target - p, corners)
    counted = counts[~grazing]
    normals = mesh.face_normals()
    ref = int(np.argmax(np.abs(normals[:, 1])))
    ny = np.sign(normals[ref, 1]) * normals[:, 1]
    report = RadialGraphReport(max_count=int(counted.max()) if len(counted) else 0, min_normal_y=float(ny.min()),
                               rays=rays, grazing=int(grazing.sum()))
    log.info("radial graph check: max count %d over %d rays (%d grazing), min ν_y %.3e",
             report.max_count, rays, report.grazing, report.min_normal_y)
    return report

