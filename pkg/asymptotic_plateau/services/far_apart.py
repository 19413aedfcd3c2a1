import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from asymptotic_plateau.exceptions import DomainError, NumericalFailure
from asymptotic_plateau.services.meshing import revolution_mesh
from asymptotic_plateau.services.mesh import TriMesh
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

MINIMIZER = section("minimizer")
EPS = MINIMIZER.get("eps", 0.1)
NODES = 81
GAUSS_T, GAUSS_W = np.polynomial.legendre.leggauss(4)
GAUSS_T, GAUSS_W = 0.5 * (GAUSS_T + 1.0), 0.5 * GAUSS_W


# ===========================================
# REGION: Profile area
# ===========================================
def profile_area(rho: np.ndarray, z: np.ndarray) -> float:
    """Hyperbolic area 2π ∫ ρ / z² ds of the surface of revolution with polygonal profile (ρ, z)."""
    return _area_and_gradient(np.asarray(rho, float), np.asarray(z, float))[0]


def _area_and_gradient(rho: np.ndarray, z: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    d_rho, d_z = np.diff(rho), np.diff(z)
    length = np.hypot(d_rho, d_z)
    t = GAUSS_T[None, :]
    rq = rho[:-1, None] + t * d_rho[:, None]
    zq = z[:-1, None] + t * d_z[:, None]
    f = (GAUSS_W * rq / zq ** 2).sum(axis=1)
    area = 2.0 * np.pi * float((length * f).sum())

    df_dr = GAUSS_W / zq ** 2
    df_dz = -2.0 * GAUSS_W * rq / zq ** 3
    unit_r, unit_z = d_rho / length, d_z / length
    g_rho, g_z = np.zeros_like(rho), np.zeros_like(z)
    g_rho[:-1] += -unit_r * f + length * (df_dr * (1.0 - t)).sum(axis=1)
    g_rho[1:] += unit_r * f + length * (df_dr * t).sum(axis=1)
    g_z[:-1] += -unit_z * f + length * (df_dz * (1.0 - t)).sum(axis=1)
    g_z[1:] += unit_z * f + length * (df_dz * t).sum(axis=1)
    return area, 2.0 * np.pi * g_rho, 2.0 * np.pi * g_z


def disconnected_area(r: float, big_r: float, eps: float = EPS) -> float:
    """Two totally geodesic caps, one per circle: 2π(√(ρ² + ε²)/ε - 1) each."""
    return float(sum(2.0 * np.pi * (np.hypot(rad, eps) / eps - 1.0) for rad in (r, big_r)))


# ===========================================
# REGION: Connected candidate
# ===========================================
@dataclass
class AnnulusProfile:
    r: float
    big_r: float
    eps: float
    rho: np.ndarray
    z: np.ndarray
    area: float
    converged: bool

    @property
    def disconnected(self) -> float:
        return disconnected_area(self.r, self.big_r, self.eps)

    @property
    def connected_wins(self) -> bool:
        return self.area < self.disconnected

    def max_distance_from(self, point: Sequence[float]) -> float:
        return float(np.hypot(self.rho - point[0], self.z - point[1]).max())

    def to_mesh(self, resolution: int = 128) -> TriMesh:
        return revolution_mesh((0.0, 0.0), self.rho, self.z, self.eps, resolution)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"rho": self.rho, "z": self.z})

    def to_json(self) -> dict:
        return {"r": self.r, "R": self.big_r, "eps": self.eps, "connected_area": self.area,
                "disconnected_area": self.disconnected, "connected_wins": self.connected_wins,
                "converged": self.converged}


def connected_profile(r: float, big_r: float, eps: float = EPS, nodes: int = NODES,
                      max_iters: int = 5000) -> AnnulusProfile:
    """
    Least-area surface of revolution spanning the concentric circles of radii r < R lifted
    to z = ε.

    The profile is written in polar form about ((r + R)/2, 0) on a fixed angular grid,
    uniform in log tan(θ/2), starting from the half-circle joining the two boundary points.
    Only the polar radii move; the constraint z ≥ ε becomes a box bound, so L-BFGS-B
    carries the whole descent. Lengths are measured in units of the half-gap, which makes
    the discrete problem invariant under dilations of (r, R, ε).

    Raises:
    -------
    DomainError:
        Unless 0 < r < R and ε > 0.
    """
    if not (0.0 < r < big_r) or eps <= 0.0:
        raise DomainError(f"Need 0 < r < R and ε > 0, got r={r}, R={big_r}, ε={eps}.")
    center = 0.5 * (r + big_r)
    half_gap = 0.5 * (big_r - r)
    theta_end = np.arctan2(eps, half_gap)
    theta_start = np.pi - theta_end
    s = np.linspace(np.log(np.tan(0.5 * theta_end)), np.log(np.tan(0.5 * theta_start)), nodes)
    theta = 2.0 * np.arctan(np.exp(s))
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    a0 = np.hypot(half_gap, eps) / half_gap

    def unpack(x):
        a = np.concatenate([[a0], x, [a0]]) * half_gap
        return center + a * cos_t, a * sin_t

    def objective(x):
        rho, z = unpack(x)
        area, g_rho, g_z = _area_and_gradient(rho, z)
        g_a = (g_rho * cos_t + g_z * sin_t)[1:-1] * half_gap
        return area, g_a

    lower = (eps / sin_t[1:-1]) / half_gap
    # the profile must stay off the axis
    upper = np.where(cos_t[1:-1] < 0.0, 0.999 * center / np.maximum(-cos_t[1:-1], 1e-300), np.inf) / half_gap
    x0 = np.clip(np.full(nodes - 2, a0), lower, upper)
    result = minimize(objective, x0, jac=True, method="L-BFGS-B",
                      bounds=list(zip(lower, upper)), options={"maxiter": max_iters, "gtol": 1e-10, "ftol": 1e-14})
    if not np.isfinite(result.fun):
        raise NumericalFailure(f"Profile descent diverged for r={r}, R={big_r}, ε={eps}.")
    rho, z = unpack(result.x)
    log.debug("connected profile r=%.4g R=%.4g ε=%.3g: area %.8g (%s)", r, big_r, eps, result.fun, result.message)
    return AnnulusProfile(float(r), float(big_r), float(eps), rho, z, float(result.fun), bool(result.success))


# ===========================================
# REGION: Experiments
# ===========================================
@dataclass
class FarApartReport:
    threshold: float
    eps: float
    bracket: Tuple[float, float]
    rows: List[dict]
    dilation_consistent: bool

    @property
    def passed(self) -> bool:
        return 1.0 < self.threshold < 100.0 and self.dilation_consistent

    def to_json(self) -> dict:
        return {"threshold": self.threshold, "eps": self.eps, "bracket": list(self.bracket),
                "dilation_consistent": self.dilation_consistent, "passed": self.passed, "rows": self.rows}


def area_gap(ratio: float, eps: float = EPS, scale: float = 1.0) -> float:
    """Connected minus disconnected area for circles of radii scale and scale·ratio at truncation scale·ε."""
    profile = connected_profile(scale, scale * ratio, scale * eps)
    return profile.area - profile.disconnected


def far_apart_threshold(eps: float = EPS, lower: float | None = None, upper: float = 100.0,
                        iterations: int = 30, dilation: float = 10.0, probes: int = 5) -> FarApartReport:
    """
    Bisection on log(R/r) for the ratio ρ* at which the connected annulus stops beating
    the pair of caps. The sign of the area gap is then compared at ``probes`` ratios on
    both sides of ρ* with every length multiplied by ``dilation``.

    Raises:
    -------
    NumericalFailure:
        The gap does not change sign over the bracket.
    """
    lower = lower or 1.0 + eps / 10.0
    g_lo, g_hi = area_gap(lower, eps), area_gap(upper, eps)
    if not (g_lo < 0.0 < g_hi):
        raise NumericalFailure(f"No sign change of the area gap on [{lower}, {upper}]: {g_lo:.4g}, {g_hi:.4g}.")
    lo, hi = np.log(lower), np.log(upper)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if area_gap(float(np.exp(mid)), eps) < 0.0:
            lo = mid
        else:
            hi = mid
    threshold = float(np.exp(0.5 * (lo + hi)))

    rows, consistent = [], True
    for ratio in np.exp(np.linspace(np.log(lower), np.log(upper), probes + 2)[1:-1]):
        if abs(np.log(ratio / threshold)) < 0.05:
            continue
        base, scaled = area_gap(float(ratio), eps), area_gap(float(ratio), eps, dilation)
        same = (base < 0.0) == (scaled < 0.0)
        consistent = consistent and same
        rows.append({"ratio": float(ratio), "gap": base, "gap_dilated": scaled, "consistent": same})
    log.info("far-apart threshold R/r = %.6g at ε = %.3g", threshold, eps)
    return FarApartReport(threshold, eps, (float(lower), float(upper)), rows, consistent)


@dataclass
class CollapseReport:
    rows: List[dict]

    @property
    def ratios(self) -> np.ndarray:
        return np.array([row["distance"] / row["delta"] for row in self.rows])

    @property
    def passed(self) -> bool:
        ratios = self.ratios
        return bool(len(ratios) and ratios.max() <= 2.0 * ratios.min() and all(r["connected_wins"] for r in self.rows))

    def to_json(self) -> dict:
        return {"rows": self.rows, "passed": self.passed}


def two_circle_collapse(deltas: Sequence[float] = (0.1, 0.05, 0.025), eps_factor: float = 0.1) -> CollapseReport:
    """
    Minimal annulus between circles of radii 1 ± δ truncated at ε = eps_factor·δ, and its
    largest distance from the limit circle, seen in the half-plane as the point (1, 0).
    """
    rows = []
    for delta in deltas:
        profile = connected_profile(1.0 - delta, 1.0 + delta, eps_factor * delta)
        row = profile.to_json()
        row.update({"delta": float(delta), "distance": profile.max_distance_from((1.0, 0.0))})
        rows.append(row)
        log.debug("collapse δ=%.4g: distance %.6g", delta, row["distance"])
    return CollapseReport(rows)
