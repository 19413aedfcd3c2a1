import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.sparse import coo_matrix, csr_matrix, diags
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, splu

from asymptotic_plateau.exceptions import DomainError, NumericalFailure
from asymptotic_plateau.services.hypgeom import IdealPoint, hyp_distance_many
from asymptotic_plateau.services.mesh import TriMesh
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

STABILITY = section("stability")
COTAN_CLAMP = STABILITY.get("cotan_clamp", 1e4)
EIGEN_TOL = STABILITY.get("eigen_tol", 1e-8)
EIGEN_MAX_ITERS = STABILITY.get("eigen_max_iters", 500)
SYMMETRY_TOL = 1e-12
DENSE_SIZE = 64


# ===========================================
# REGION: Second fundamental form
# ===========================================
def _two_ring(mesh: TriMesh) -> np.ndarray:
    """(N, K) indices of the 2-ring of every vertex padded with -1."""
    adj = mesh.vertex_adjacency()
    ring = ((adj + adj @ adj) > 0).tolil()
    ring.setdiag(False)
    ring = csr_matrix(ring)
    counts = np.diff(ring.indptr)
    table = np.full((mesh.n_vertices, max(1, counts.max())), -1, dtype=np.int64)
    rows = np.repeat(np.arange(mesh.n_vertices), counts)
    slot = np.arange(len(ring.indices)) - ring.indptr[rows]
    table[rows, slot] = ring.indices
    return table


def curvature_sq(mesh: TriMesh) -> np.ndarray:
    """
    Per-vertex |A|² in the hyperbolic metric.

    A quadratic h(u, v) is fitted by least squares to the 2-ring in the tangent frame of
    the vertex normal. With Euclidean shape operator S and unit normal ν of the fitted
    graph, the hyperbolic principal curvatures at height z are z·κ_i + ν_z, so
    |A|² = z² tr(S²) + 2 z ν_z tr(S) + 2 ν_z².
    """
    verts = mesh.get_vertices
    n = mesh.vertex_normals()
    helper = np.where(np.abs(n[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(n, e1)
    ring = _two_ring(mesh)
    mask = (ring >= 0).astype(float)
    d = verts[np.where(ring >= 0, ring, 0)] - verts[:, None, :]
    u = np.einsum("ikj,ij->ik", d, e1)
    v = np.einsum("ikj,ij->ik", d, e2)
    h = np.einsum("ikj,ij->ik", d, n)
    design = np.stack([0.5 * u * u, u * v, 0.5 * v * v, u, v], axis=-1) * mask[..., None]
    gram = np.einsum("ika,ikb->iab", design, design)
    scale = np.maximum(np.einsum("iaa->i", gram), 1e-300)
    gram += (1e-12 * scale)[:, None, None] * np.eye(5)
    coef = np.linalg.solve(gram, np.einsum("ika,ik->ia", design, h * mask)[..., None])[..., 0]
    hess = np.stack([np.stack([coef[:, 0], coef[:, 1]], -1), np.stack([coef[:, 1], coef[:, 2]], -1)], -2)
    slope = coef[:, 3:5]
    root = np.sqrt(1.0 + np.sum(slope * slope, axis=1))
    metric = np.eye(2) + slope[:, :, None] * slope[:, None, :]
    shape = np.linalg.solve(metric, hess) / root[:, None, None]
    normal = (n - slope[:, :1] * e1 - slope[:, 1:] * e2) / root[:, None]
    z, nz = verts[:, 2], normal[:, 2]
    trace = np.einsum("iaa->i", shape)
    trace_sq = np.einsum("iab,iba->i", shape, shape)
    return z * z * trace_sq + 2.0 * z * nz * trace + 2.0 * nz * nz


# ===========================================
# REGION: Jacobi operator
# ===========================================
class JacobiOperator:
    """
    Weak form of J = −Δ − (|A|² − 2) on a surface in the induced hyperbolic metric.

    Holds the full cotan stiffness matrix, the lumped hyperbolic vertex areas, the |A|²
    estimate and a Dirichlet mask; :meth:`matrix` and :meth:`mass` give the system on
    the remaining vertices.
    """

    def __init__(self, stiffness: csr_matrix, mass: np.ndarray, curvature: np.ndarray, dirichlet: np.ndarray,
                 clamped: int = 0):
        self.__stiffness = stiffness
        self.__mass = mass
        self.__curvature = curvature
        self.__dirichlet = dirichlet
        self.__clamped = clamped
        self.__free = np.flatnonzero(~dirichlet)

    @property
    def get_stiffness(self) -> csr_matrix:
        return self.__stiffness

    @property
    def get_mass(self) -> np.ndarray:
        return self.__mass

    @property
    def get_curvature(self) -> np.ndarray:
        return self.__curvature

    @property
    def get_dirichlet(self) -> np.ndarray:
        return self.__dirichlet

    @property
    def get_clamped(self) -> int:
        return self.__clamped

    @property
    def free_index(self) -> np.ndarray:
        return self.__free

    @property
    def size(self) -> int:
        return len(self.__free)

    def potential(self) -> np.ndarray:
        return -(self.__curvature - 2.0)

    def full_matrix(self) -> csr_matrix:
        return (self.__stiffness + diags(self.__mass * self.potential())).tocsr()

    def matrix(self) -> csr_matrix:
        f = self.__free
        return self.full_matrix()[f][:, f].tocsr()

    def mass(self) -> np.ndarray:
        return self.__mass[self.__free]

    def restricted(self, extra_dirichlet: np.ndarray) -> "JacobiOperator":
        """Same operator with more vertices held at zero."""
        return JacobiOperator(self.__stiffness, self.__mass, self.__curvature,
                              self.__dirichlet | np.asarray(extra_dirichlet, dtype=bool), self.__clamped)

    def quadratic_form(self, values: np.ndarray) -> float:
        return float(values @ (self.full_matrix() @ values))


def assemble_jacobi(mesh: TriMesh, dirichlet: np.ndarray | None = None,
                    cotan_clamp: float = COTAN_CLAMP) -> JacobiOperator:
    """
    Assembles the Jacobi operator of a surface.

    Each triangle is replaced by the flat triangle with its three hyperbolic edge lengths;
    cotangent weights of that triangle build the stiffness matrix and a third of its area
    goes to each corner as lumped mass. Cotangents are clipped to ±``cotan_clamp``.

    Parameters:
    -----------
    dirichlet : np.ndarray, optional
        Vertices held at zero; the boundary and fully frozen vertices always are.

    Raises:
    -------
    NumericalFailure:
        When the assembled stiffness is not symmetric.
    """
    verts, tris = mesh.get_vertices, mesh.get_triangles
    c = verts[tris]
    length = np.column_stack([hyp_distance_many(c[:, (k + 1) % 3], c[:, (k + 2) % 3]) for k in range(3)])
    a, b, d = length[:, 0], length[:, 1], length[:, 2]
    heron = (a + b + d) * (-a + b + d) * (a - b + d) * (a + b - d)
    area = 0.25 * np.sqrt(np.maximum(heron, 0.0))
    cot = np.empty_like(length)
    for k in range(3):
        num = length[:, (k + 1) % 3] ** 2 + length[:, (k + 2) % 3] ** 2 - length[:, k] ** 2
        cot[:, k] = np.where(area > 0.0, num / (4.0 * np.where(area > 0.0, area, 1.0)), np.sign(num) * np.inf)
    clamped = int(np.count_nonzero(np.abs(cot) > cotan_clamp))
    if clamped:
        log.warning("%d cotangent weights clamped to ±%.0e", clamped, cotan_clamp)
    cot = np.clip(cot, -cotan_clamp, cotan_clamp)

    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = tris[:, (k + 1) % 3], tris[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    n = mesh.n_vertices
    stiffness = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(n, n)).tocsr()
    asym = abs(stiffness - stiffness.T).max() if stiffness.nnz else 0.0
    if asym > SYMMETRY_TOL * max(abs(stiffness).max(), 1.0):
        raise NumericalFailure(f"Jacobi stiffness is not symmetric (deviation {asym:.3e}).")
    mass = np.zeros(n)
    for k in range(3):
        np.add.at(mass, tris[:, k], area / 3.0)
    mask = ~mesh.free
    if dirichlet is not None:
        mask = mask | np.asarray(dirichlet, dtype=bool)
    op = JacobiOperator(stiffness, mass, curvature_sq(mesh), mask, clamped)
    log.debug("Jacobi operator: %d free of %d vertices", op.size, n)
    return op


def apply_jacobi(op: JacobiOperator, values: np.ndarray) -> np.ndarray:
    """Pointwise residual M⁻¹ J·values; zero on Dirichlet vertices."""
    values = np.asarray(values, dtype=float)
    if values.shape != op.get_mass.shape:
        raise DomainError(f"Field has {values.shape[0]} values for {op.get_mass.shape[0]} vertices.")
    out = op.full_matrix() @ values
    mass = op.get_mass
    out = np.where(mass > 0.0, out / np.where(mass > 0.0, mass, 1.0), 0.0)
    out[op.get_dirichlet] = 0.0
    return out


# ===========================================
# REGION: Spectrum
# ===========================================
@dataclass
class SpectrumReport:
    lambda1: float
    eigenfunction: np.ndarray
    residual: float
    iterations: int
    ladder: List[Dict[str, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"lambda1": self.lambda1, "residual": self.residual, "iterations": self.iterations,
                "ladder": self.ladder}


def spectral_lower_bound(op: JacobiOperator) -> float:
    """Gershgorin bound below every eigenvalue of Jφ = λMφ, read off M^{-1/2} J M^{-1/2}."""
    s = diags(1.0 / np.sqrt(op.mass()))
    scaled = (s @ op.matrix() @ s).tocsr()
    centre = scaled.diagonal()
    radius = np.asarray(abs(scaled).sum(axis=1)).ravel() - np.abs(centre)
    return float(np.min(centre - radius))


def smallest_eigenvalue(op: JacobiOperator, tol: float = EIGEN_TOL,
                        max_iters: int = EIGEN_MAX_ITERS) -> SpectrumReport:
    """
    Smallest eigenvalue of Jφ = λMφ.

    Systems with at most ``DENSE_SIZE`` free vertices are solved densely. Larger ones use
    shift-invert Lanczos with the shift below :func:`spectral_lower_bound`, so the
    eigenvalue nearest the shift is λ1 whatever its sign; the pair is then polished by
    inverse iteration until ‖Jφ − λMφ‖/‖φ‖ < ``tol``.

    Raises:
    -------
    DomainError:
        When every vertex is held at zero.
    NumericalFailure:
        When a free vertex carries no mass, Lanczos does not converge, or the residual
        stays above ``tol`` after ``max_iters`` polishing steps.
    """
    if op.size == 0:
        raise DomainError("Operator has no free vertex.")
    J = op.matrix().tocsc()
    m = op.mass()
    if np.any(m <= 0.0):
        raise NumericalFailure("A free vertex has zero lumped mass.")
    M = diags(m).tocsc()

    def residual(x: np.ndarray) -> Tuple[float, float]:
        jx = J @ x
        lam = float(x @ jx)
        return lam, float(np.linalg.norm(jx - lam * m * x) / np.linalg.norm(x))

    if op.size <= DENSE_SIZE:
        values, vectors = eigh(J.toarray(), np.diag(m))
        x, it = vectors[:, 0], 0
        lam, res = residual(x)
    else:
        lower = spectral_lower_bound(op)
        sigma = lower - 1e-3 * (abs(lower) + 1.0)
        try:
            values, vectors = eigsh(J, k=1, M=M, sigma=sigma, which="LM", tol=tol, maxiter=max_iters)
        except ArpackNoConvergence as exc:
            raise NumericalFailure(f"Shift-invert Lanczos did not converge below σ = {sigma:.4g}.") from exc
        x = vectors[:, 0] / np.sqrt(vectors[:, 0] @ (m * vectors[:, 0]))
        guess = float(values[0])
        lu = splu((J - (guess - 1e-6 * (abs(guess) + 1.0)) * M).tocsc())
        for it in range(max_iters + 1):
            lam, res = residual(x)
            if res < tol:
                break
            y = lu.solve(m * x)
            x = y / np.sqrt(y @ (m * y))
        else:
            raise NumericalFailure(f"Inverse iteration stopped at residual {res:.3e} after {max_iters} iterations.")
    if x[np.argmax(np.abs(x))] < 0.0:
        x = -x
    phi = np.zeros(len(op.get_mass))
    phi[op.free_index] = x
    log.info("λ1 = %.8g (residual %.2e, %d polishing steps)", lam, res, it)
    return SpectrumReport(lambda1=lam, eigenfunction=phi, residual=res, iterations=it)


def eigenfunction_boundary_trace(report: SpectrumReport, mesh: TriMesh) -> float:
    """Largest |φ| on the ring of vertices next to the ε-boundary, with φ scaled to sup 1."""
    phi = np.abs(report.eigenfunction)
    top = phi.max()
    if top == 0.0:
        return 0.0
    ring = mesh.near_boundary() & ~mesh.get_boundary
    return float(phi[ring].max() / top) if np.any(ring) else 0.0


# ===========================================
# REGION: Killing fields
# ===========================================
def dilation_field(mesh: TriMesh, center: IdealPoint) -> np.ndarray:
    """Normal part of the dilation field about an ideal point, ⟨p − c, ν⟩ / z in hyperbolic length."""
    if center.is_infinity:
        raise DomainError("Dilations about ∞ are translations; use translation_field.")
    verts = mesh.get_vertices
    c = np.array([*center.as_array()[:2], 0.0])
    return np.einsum("ij,ij->i", verts - c, mesh.vertex_normals()) / verts[:, 2]


def translation_field(mesh: TriMesh, direction: Sequence[float]) -> np.ndarray:
    """Normal part ⟨d, ν⟩ / z of a horizontal translation field."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,) or abs(d[2]) > 1e-12 or np.linalg.norm(d) == 0.0:
        raise DomainError("Translation direction must be a nonzero horizontal 3-vector.")
    d = d / np.linalg.norm(d)
    return (mesh.vertex_normals() @ d) / mesh.get_vertices[:, 2]


# ===========================================
# REGION: Probe
# ===========================================
@dataclass
class StabilityProbeReport:
    rungs: List[Dict[str, float]]
    field_positive: bool
    growth: bool
    status: str
    reason: str = ""

    @property
    def consistent(self) -> bool:
        return self.status == "strictly-L∞-stable: consistent"

    def to_json(self) -> dict:
        return {"rungs": self.rungs, "field_positive": self.field_positive, "growth": self.growth,
                "status": self.status, "reason": self.reason, "label": "heuristic probe"}


def ladder_masks(mesh: TriMesh, radii: Sequence[float], region: str = "ball",
                 anchor: Sequence[float] = (0.0, 0.0, 1.0)) -> List[np.ndarray]:
    """Vertices inside each rung: hyperbolic balls about ``anchor`` or slabs |x| ≤ r."""
    verts = mesh.get_vertices
    if region == "ball":
        dist = hyp_distance_many(verts, np.asarray(anchor, dtype=float))
    elif region == "slab":
        dist = np.abs(verts[:, 0])
    else:
        raise ValueError(f"Invalid ladder region: {region}. Choose from ['ball', 'slab']")
    return [dist <= r for r in sorted(radii)]


def stability_probe(mesh: TriMesh, radii: Sequence[float], values: np.ndarray, region: str = "ball",
                    anchor: Sequence[float] = (0.0, 0.0, 1.0), tol: float = EIGEN_TOL,
                    max_iters: int = EIGEN_MAX_ITERS) -> StabilityProbeReport:
    """
    Probes strict stability on a ladder of growing compact pieces of the surface.

    Every rung must have λ1 > 0 and the comparison field must stay positive on it; the
    field must also grow outward, with its minimum over the outermost ring of the ladder
    above its median over the first rung. A sign change makes the probe inconclusive.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise DomainError("Comparison field must have one value per vertex.")
    base = assemble_jacobi(mesh)
    masks = ladder_masks(mesh, radii, region, anchor)
    rungs, positive, sign_change = [], True, False
    for r, inside in zip(sorted(radii), masks):
        op = base.restricted(~inside)
        if op.size == 0:
            raise DomainError(f"Rung {r} contains no free vertex.")
        spectrum = smallest_eigenvalue(op, tol, max_iters)
        interior = values[op.free_index]
        rung_positive = bool(interior.min() > 0.0)
        sign_change |= bool(interior.min() < 0.0 < interior.max())
        positive &= rung_positive
        rungs.append({"radius": float(r), "lambda1": spectrum.lambda1, "field_min": float(interior.min()),
                      "vertices": int(op.size), "positive": rung_positive})
    free = ~base.get_dirichlet
    outer_ring = masks[-1] & ~masks[-2] & free if len(masks) > 1 else masks[-1] & free
    first = masks[0] & free
    growth = bool(np.any(outer_ring) and values[outer_ring].min() > np.median(values[first]))
    stable = all(r["lambda1"] > 0.0 for r in rungs)
    if sign_change:
        status, reason = "inconclusive", "comparison field changes sign"
    elif not stable:
        status, reason = "unstable", "nonpositive λ1 on a rung"
    elif positive and growth:
        status, reason = "strictly-L∞-stable: consistent", ""
    else:
        status, reason = "inconclusive", "comparison field does not grow toward the boundary"
    log.info("stability probe over %d rungs: %s", len(rungs), status)
    return StabilityProbeReport(rungs=rungs, field_positive=positive, growth=growth, status=status, reason=reason)


def spectrum_ladder(mesh: TriMesh, radii: Sequence[float], region: str = "ball",
                    anchor: Sequence[float] = (0.0, 0.0, 1.0)) -> SpectrumReport:
    """λ1 of the whole free part plus one entry per rung of the ladder."""
    base = assemble_jacobi(mesh)
    report = smallest_eigenvalue(base)
    for r, inside in zip(sorted(radii), ladder_masks(mesh, radii, region, anchor)):
        op = base.restricted(~inside)
        if op.size:
            report.ladder.append({"radius": float(r), "lambda1": smallest_eigenvalue(op).lambda1})
    return report
