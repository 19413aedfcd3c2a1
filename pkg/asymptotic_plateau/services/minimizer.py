import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from asymptotic_plateau.exceptions import DegenerateMeshError, DomainError, NumericalFailure
from asymptotic_plateau.services.boundary import RegionK
from asymptotic_plateau.services.hypgeom import HPoint, geodesic_exp
from asymptotic_plateau.services.mesh import DEGENERATE_AREA, TriMesh, ray_triangle_hits
from asymptotic_plateau.services.meshing import region_mesh
from asymptotic_plateau.services.surface_checks import HullReport, convex_hull_check
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

MINIMIZER = section("minimizer")
EPS = MINIMIZER.get("eps", 0.1)
TOL = MINIMIZER.get("tol", 1e-6)
MAX_ITERS = MINIMIZER.get("max_iters", 50000)
ARMIJO = MINIMIZER.get("armijo", 1e-4)
MIN_STEP = MINIMIZER.get("min_step", 1e-14)
PINCH_FACTOR = MINIMIZER.get("pinch_factor", 1.5)
STEP_RULE = MINIMIZER.get("step_rule", "armijo")
RESOLUTION = MINIMIZER.get("resolution", 32)
MAX_STEP = 1e6
HULL_TOL = 1e-3
RAY_RETRIES = 10


# ===========================================
# REGION: Area functional
# ===========================================
def _face_terms(vertices: np.ndarray, triangles: np.ndarray):
    c = vertices[triangles]
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    norm = np.linalg.norm(cross, axis=1)
    area = 0.5 * norm
    z = c[:, :, 2]
    mid = 0.5 * np.column_stack([z[:, 0] + z[:, 1], z[:, 1] + z[:, 2], z[:, 2] + z[:, 0]])
    weight = np.sum(mid ** -2, axis=1) / 3.0
    return c, cross, norm, area, mid, weight


def hyperbolic_area(mesh: TriMesh) -> float:
    """
    Hyperbolic area of the truncated surface.

    Each triangle contributes its Euclidean area times the mean of 1/z² at its three edge
    midpoints, a rule that is exact when 1/z² varies quadratically over the triangle.

    Raises:
    -------
    DegenerateMeshError:
        When a triangle has Euclidean area ≤ 1e-14.
    """
    _, _, _, area, _, weight = _face_terms(mesh.get_vertices, mesh.get_triangles)
    if len(area) and area.min() <= DEGENERATE_AREA:
        raise DegenerateMeshError(f"Degenerate triangle {int(np.argmin(area))} (area {area.min():.3e}).")
    return float(np.sum(area * weight))


def area_gradient(mesh: TriMesh) -> np.ndarray:
    """
    Exact gradient of :func:`hyperbolic_area` in the vertex coordinates, shape (N, 3).

    Frozen coordinates (all three for boundary vertices) get zero.
    """
    verts, tris = mesh.get_vertices, mesh.get_triangles
    c, cross, norm, area, mid, weight = _face_terms(verts, tris)
    if len(area) and area.min() <= DEGENERATE_AREA:
        raise DegenerateMeshError(f"Degenerate triangle {int(np.argmin(area))} (area {area.min():.3e}).")
    unit = cross / norm[:, None]
    grad = np.zeros_like(verts)
    inv3 = mid ** -3
    # corner k: area term 0.5 n × (next - previous), weight term from its two edges
    for k in range(3):
        nxt, prv = c[:, (k + 1) % 3], c[:, (k + 2) % 3]
        d_area = 0.5 * np.cross(unit, prv - nxt)
        d_weight = -(inv3[:, k] + inv3[:, (k + 2) % 3]) / 3.0
        g = weight[:, None] * d_area
        g[:, 2] += area * d_weight
        np.add.at(grad, tris[:, k], g)
    grad[mesh.get_frozen] = 0.0
    return grad


def gradient_norm(mesh: TriMesh, grad: np.ndarray) -> float:
    """
    Gradient sup-norm used as the stopping test: the largest hyperbolic length z·|g| of the
    gradient covector over movable vertices. The Euclidean sup-norm is not invariant under
    dilations and grows like z⁻¹ towards the truncation height, so ``tol`` is read in the
    hyperbolic metric at every height.
    """
    free = mesh.free
    if not np.any(free):
        return 0.0
    z = mesh.get_vertices[free, 2]
    return float(np.max(z * np.linalg.norm(grad[free], axis=1)))


def _preconditioner(mesh: TriMesh) -> np.ndarray:
    """Per-vertex factor z⁴ / a_v turning the covector into a hyperbolic mass-lumped gradient."""
    areas = mesh.vertex_areas()
    z = mesh.get_vertices[:, 2]
    return np.where(areas > 0.0, z ** 4 / np.where(areas > 0.0, areas, 1.0), 0.0)


# ===========================================
# REGION: Descent
# ===========================================
@dataclass
class AreaReport:
    """Outcome of an area minimization."""
    area: float
    grad_norm: float
    iterations: int
    converged: bool
    tol: float = TOL
    step_rule: str = STEP_RULE
    pinch_suspected: bool = False
    min_free_height: float = float("nan")
    reason: str = ""
    history: List[float] = field(default_factory=list)
    hull: HullReport | None = None

    def __post_init__(self):
        if self.area < 0.0:
            raise DomainError("Area cannot be negative.")
        if self.converged and self.grad_norm > self.tol:
            raise DomainError("Converged report with a gradient above tolerance.")

    def to_json(self, topology=None) -> dict:
        payload = {"area": self.area, "grad_norm": self.grad_norm, "iters": self.iterations,
                   "converged": self.converged, "tol": self.tol, "step_rule": self.step_rule,
                   "pinch_suspected": self.pinch_suspected, "min_free_height": self.min_free_height,
                   "reason": self.reason}
        if topology is not None:
            payload.update({"chi": topology.chi, "boundary_components": topology.boundary_components,
                            "genus": topology.genus})
        return payload


def _pinch_check(mesh: TriMesh, pinch_factor: float) -> Tuple[bool, float]:
    free = mesh.free & ~mesh.near_boundary()
    if not np.any(free):
        return False, float("nan")
    low = float(mesh.get_vertices[free, 2].min())
    return low < pinch_factor * mesh.get_eps, low


def minimize_area(mesh: TriMesh, tol: float = TOL, max_iters: int = MAX_ITERS, step_rule: str = STEP_RULE,
                  armijo: float = ARMIJO, min_step: float = MIN_STEP,
                  pinch_factor: float = PINCH_FACTOR) -> Tuple[TriMesh, AreaReport]:
    """
    Minimizes the hyperbolic area with the boundary and frozen coordinates held fixed.

    Parameters:
    -----------
    mesh : TriMesh
        Initial surface; its connectivity never changes.
    tol : float
        Convergence threshold for :func:`gradient_norm`.
    step_rule : str
        ``"armijo"`` preconditioned steepest descent or ``"cg"`` preconditioned
        Polak-Ribière conjugate gradients, both with Armijo backtracking (halving).

    Returns:
    --------
    (TriMesh, AreaReport)
        Accepted iterates never increase the area. A line search whose step falls below
        ``min_step`` stops the run with ``converged=False``.

    Raises:
    -------
    DegenerateMeshError:
        When every trial step of a line search degenerates a triangle.

    Example Usage:
    --------------
    ```python
    solved, report = minimize_area(dome_mesh(ring, eps=0.1), tol=1e-5)
    report.converged, report.area
    ```
    """
    rules = ["armijo", "cg"]
    if step_rule not in rules:
        raise ValueError(f"Invalid step rule: {step_rule}. Choose from {rules}")
    eps = mesh.get_eps
    frozen = mesh.get_frozen
    free_z = ~frozen[:, 2]
    verts = mesh.get_vertices.copy()
    area = hyperbolic_area(mesh)
    grad = area_gradient(mesh)
    gnorm = gradient_norm(mesh, grad)
    history = [area]
    step = 1.0
    direction = None
    prev_grad = prev_precond = None
    iters = 0
    reason = "converged"
    log.info("minimizing %s: %d vertices, %d triangles, area %.8g, |g| %.3e",
             mesh.get_name, mesh.n_vertices, mesh.n_triangles, area, gnorm)

    while gnorm >= tol:
        if iters >= max_iters:
            reason = "max_iters"
            break
        precond = _preconditioner(mesh)[:, None] * -grad
        precond[frozen] = 0.0
        if step_rule == "cg" and direction is not None:
            beta = max(0.0, float(np.sum(-grad * (precond - prev_precond)) / np.sum(-prev_grad * prev_precond)))
            direction = precond + beta * direction
            if np.sum(grad * direction) >= 0.0:
                direction = precond
        else:
            direction = precond
        direction[frozen] = 0.0

        alpha = min(2.0 * step, MAX_STEP)
        accepted = False
        degenerate_only = True
        while alpha >= min_step:
            trial = verts + alpha * direction
            trial[free_z, 2] = np.maximum(trial[free_z, 2], eps)
            candidate = mesh.with_vertices(trial)
            try:
                trial_area = hyperbolic_area(candidate)
            except DegenerateMeshError:
                alpha *= 0.5
                continue
            degenerate_only = False
            if trial_area <= area + armijo * float(np.sum(grad * (trial - verts))):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if degenerate_only:
                raise DegenerateMeshError(f"Every trial step degenerates the mesh at iteration {iters}.")
            reason = "line_search_stall"
            log.warning("line search stalled at iteration %d (area %.8g, |g| %.3e)", iters, area, gnorm)
            break

        prev_grad, prev_precond = grad, precond
        mesh, verts, area, step = candidate, trial, trial_area, alpha
        grad = area_gradient(mesh)
        gnorm = gradient_norm(mesh, grad)
        history.append(area)
        iters += 1
        if iters % 500 == 0:
            log.debug("iteration %d: area %.10g, |g| %.3e, step %.3e", iters, area, gnorm, step)

    pinch, low = _pinch_check(mesh, pinch_factor)
    if pinch:
        log.warning("free vertex at height %.4g near ε = %.4g: topology change suspected", low, eps)
    report = AreaReport(area=area, grad_norm=gnorm, iterations=iters, converged=gnorm < tol, tol=tol,
                        step_rule=step_rule, pinch_suspected=pinch, min_free_height=low, reason=reason,
                        history=history)
    log.info("%s after %d iterations: area %.10g, |g| %.3e", reason, iters, area, gnorm)
    return mesh.with_vertices(verts, validate=True), report


def solve_asymptotic_plateau(region: RegionK, eps: float = EPS, resolution: int = RESOLUTION,
                             side: str = "default", initial: TriMesh | None = None, tol: float = TOL,
                             max_iters: int = MAX_ITERS, step_rule: str = STEP_RULE) -> Tuple[TriMesh, AreaReport]:
    """
    Area-minimizing surface with ideal boundary ∂K, truncated at height ε. The returned
    report carries the convex hull check of the solution in ``hull``.

    Parameters:
    -----------
    side : str
        ``"inner"`` starts from a dome inside the expected solution, ``"outer"`` from one
        outside it, ``"default"`` from a vertical cylinder with a flat cap.
    initial : TriMesh, optional
        Replaces the built initial surface (strip bands, skillet meshes, surgered meshes).

    Raises:
    -------
    DomainError:
        When ε lies outside (0, 0.2].
    """
    if not 0.0 < eps <= 0.2:
        raise DomainError(f"Truncation height must lie in (0, 0.2], got {eps}.")
    if initial is None:
        initial = region_mesh(region, eps, resolution, side)
    elif abs(initial.get_eps - eps) > 0.0:
        raise DomainError("Initial mesh was built for a different truncation height.")
    mesh, report = minimize_area(initial, tol=tol, max_iters=max_iters, step_rule=step_rule)
    report.hull = convex_hull_check(mesh, tol=HULL_TOL)
    if not report.hull.passed:
        log.warning("solution leaves the convex hull of its boundary by %.3e", report.hull.max_violation)
    return mesh, report


# ===========================================
# REGION: Enclosed regions
# ===========================================
def _crossing_parity(mesh: TriMesh, points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    corners = mesh.corners()
    parity = np.zeros(len(points), dtype=bool)
    pending = np.arange(len(points))
    for _ in range(RAY_RETRIES):
        tilt = 0.05 * rng.uniform(-1.0, 1.0, size=(len(pending), 2))
        directions = np.column_stack([tilt, np.ones(len(pending))])
        counts, grazing = ray_triangle_hits(points[pending], directions, corners)
        parity[pending[~grazing]] = counts[~grazing] % 2 == 1
        pending = pending[grazing]
        if len(pending) == 0:
            return parity
    raise NumericalFailure(f"{len(pending)} rays kept grazing the mesh after {RAY_RETRIES} attempts.")


def enclosed_region_mask(mesh: TriMesh, region: RegionK, points: np.ndarray,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Membership in the open region bounded by the surface and K for each point."""
    rng = rng or np.random.default_rng(0)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    parity = _crossing_parity(mesh, points, rng)
    return parity ^ region.get_contains_infinity


def enclosed_region_contains(mesh: TriMesh, region: RegionK, point: HPoint | Sequence[float],
                             rng: np.random.Generator | None = None) -> bool:
    """
    Whether ``point`` lies in the region enclosed by the surface and K.

    The parity of the crossings along an almost vertical ray to the point at infinity
    decides, flipped when ∞ belongs to K. Rays that graze the mesh are redrawn.

    Raises:
    -------
    NumericalFailure:
        After ten grazing rays in a row.
    """
    p = point.as_array() if isinstance(point, HPoint) else np.asarray(point, dtype=float)
    return bool(enclosed_region_mask(mesh, region, p[None], rng)[0])


@dataclass
class EnclosureReport:
    relation: str
    disjoint: bool
    contained: bool
    overlap_samples: int
    crossing_edges: int
    samples: int

    @property
    def passed(self) -> bool:
        return self.contained if self.relation == "nested" else self.disjoint

    def to_json(self) -> dict:
        return {"relation": self.relation, "disjoint": self.disjoint, "contained": self.contained,
                "overlap_samples": self.overlap_samples, "crossing_edges": self.crossing_edges,
                "samples": self.samples, "passed": self.passed}


def _crossing_edges(a: TriMesh, b: TriMesh) -> int:
    """Edges of ``a`` passing through triangles of ``b``."""
    edges = a.edges()
    va = a.get_vertices
    reach = max(a.edge_lengths().max(), b.edge_lengths().max())
    centroids = b.corners().mean(axis=1)
    mids = 0.5 * (va[edges[:, 0]] + va[edges[:, 1]])
    near_edge = cKDTree(centroids).query(mids, distance_upper_bound=2.0 * reach)[0] < np.inf
    if not np.any(near_edge):
        return 0
    near_tri = cKDTree(mids[near_edge]).query(centroids, distance_upper_bound=2.0 * reach)[0] < np.inf
    e = edges[near_edge]
    counts, _ = ray_triangle_hits(va[e[:, 0]], va[e[:, 1]] - va[e[:, 0]], b.corners()[near_tri], t_max=1.0)
    return int(np.count_nonzero(counts))


def _same_region(k1: RegionK, k2: RegionK) -> bool:
    if k1.get_contains_infinity != k2.get_contains_infinity:
        return False
    a, b = k1.get_boundary.to_region(), k2.get_boundary.to_region()
    return a.symmetric_difference(b).area <= 1e-9 * max(a.area, 1e-12)


def disjoint_enclosure_check(m1: TriMesh, k1: RegionK, m2: TriMesh, k2: RegionK, samples: int = 20000,
                             rng: np.random.Generator | None = None) -> EnclosureReport:
    """
    Tests whether the closed regions enclosed by two solved surfaces are disjoint.

    Sampled points in the common bounding box may not lie in both regions and no mesh
    edge of one surface may cross a triangle of the other. When K1 lies in the interior
    of K2 (or the other way round) containment of the enclosed regions is tested
    instead and reported with ``relation="nested"``.

    Raises:
    -------
    DomainError:
        When both regions coincide.
    """
    if _same_region(k1, k2):
        raise DomainError("Enclosure check needs two different regions.")
    rng = rng or np.random.default_rng(0)
    relation = "disjoint"
    inner, outer = (m1, k1), (m2, k2)
    if not (k1.get_contains_infinity or k2.get_contains_infinity):
        p1, p2 = k1.polygon(), k2.polygon()
        if p2.contains(p1) and not p2.boundary.intersects(p1):
            relation = "nested"
        elif p1.contains(p2) and not p1.boundary.intersects(p2):
            relation, inner, outer = "nested", (m2, k2), (m1, k1)
        elif p1.intersects(p2):
            relation = "overlapping"

    both = np.vstack([m1.get_vertices, m2.get_vertices])
    lo, hi = both.min(axis=0), both.max(axis=0)
    pts = rng.uniform(lo, hi, size=(samples, 3))
    pts[:, 2] = np.maximum(pts[:, 2], m1.get_eps)
    in_inner = enclosed_region_mask(inner[0], inner[1], pts, rng)
    in_outer = enclosed_region_mask(outer[0], outer[1], pts, rng)
    crossings = _crossing_edges(m1, m2) + _crossing_edges(m2, m1)
    overlap = int(np.count_nonzero(in_inner & in_outer))
    contained = relation == "nested" and crossings == 0 and not np.any(in_inner & ~in_outer)
    report = EnclosureReport(relation=relation, disjoint=overlap == 0 and crossings == 0, contained=contained,
                             overlap_samples=overlap, crossing_edges=crossings, samples=samples)
    log.info("enclosure check (%s): %d shared samples, %d crossing edges", relation, overlap, crossings)
    return report


# ===========================================
# REGION: Uniqueness proxy and ε extrapolation
# ===========================================
@dataclass
class AgreementReport:
    """Inner/outer re-minimization comparison; a heuristic, not a uniqueness certificate."""
    hausdorff: float
    threshold: float
    agree: bool
    inner_area: float
    outer_area: float
    heuristic: bool = True

    def to_json(self) -> dict:
        return {"hausdorff": self.hausdorff, "threshold": self.threshold, "agree": self.agree,
                "inner_area": self.inner_area, "outer_area": self.outer_area,
                "label": "heuristic uniqueness proxy"}


def normal_offset(mesh: TriMesh, distance: float) -> TriMesh:
    """Moves every movable vertex a hyperbolic ``distance`` along its vertex normal."""
    verts = mesh.get_vertices
    normals = mesh.vertex_normals()
    moved = geodesic_exp(verts, normals, distance)
    moved[:, 2] = np.maximum(moved[:, 2], mesh.get_eps)
    moved = np.where(mesh.get_frozen, verts, moved)
    return mesh.with_vertices(moved, validate=True)


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def inner_outer_agreement(mesh: TriMesh, delta: float = 0.05, tol: float = TOL, max_iters: int = MAX_ITERS,
                          step_rule: str = STEP_RULE) -> AgreementReport:
    """
    Re-minimizes the solved surface from both normal offsets ±δ and compares the results.

    The two runs agree when their Hausdorff distance stays below twice the mean edge
    length, the numerical stand-in for a unique minimizer.
    """
    results = []
    for sign in (-1.0, 1.0):
        solved, report = minimize_area(normal_offset(mesh, sign * delta), tol=tol, max_iters=max_iters,
                                       step_rule=step_rule)
        results.append((solved, report))
    (m_in, r_in), (m_out, r_out) = results
    dist = hausdorff_distance(m_in.get_vertices, m_out.get_vertices)
    threshold = 2.0 * mesh.mean_edge_length()
    return AgreementReport(hausdorff=dist, threshold=threshold, agree=dist < threshold,
                           inner_area=r_in.area, outer_area=r_out.area)


def richardson_extrapolate(eps_values: Sequence[float], renormalized: Sequence[float]) -> float:
    """Value at ε = 0 of the polynomial in ε through the renormalized areas."""
    eps_values = np.asarray(eps_values, dtype=float)
    if len(eps_values) < 2 or len(np.unique(eps_values)) != len(eps_values):
        raise DomainError("Extrapolation needs at least two distinct truncation heights.")
    coeffs = np.polyfit(eps_values, np.asarray(renormalized, dtype=float), len(eps_values) - 1)
    return float(np.polyval(coeffs, 0.0))


def richardson_area(region: RegionK, eps_values: Sequence[float] = (0.04, 0.02, 0.01),
                    resolution: int = RESOLUTION, side: str = "default", tol: float = TOL,
                    max_iters: int = MAX_ITERS) -> Tuple[pd.DataFrame, float]:
    """
    Solves at each truncation height and extrapolates the renormalized area
    A(ε) − length(∂K)/ε to ε → 0.

    Returns:
    --------
    (pd.DataFrame, float)
        One row per ε (eps, area, renormalized, converged) and the extrapolated value.
    """
    length = float(np.sum(region.get_boundary.lengths()))
    rows = []
    for eps in eps_values:
        _, report = solve_asymptotic_plateau(region, eps, resolution, side, tol=tol, max_iters=max_iters)
        rows.append({"eps": eps, "area": report.area, "renormalized": report.area - length / eps,
                     "converged": report.converged})
    frame = pd.DataFrame(rows)
    return frame, richardson_extrapolate(frame["eps"], frame["renormalized"])
