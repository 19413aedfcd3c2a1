import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from asymptotic_plateau.exceptions import DomainError, NumericalFailure
from tool_kit.config_loader import section

log = logging.getLogger(__name__)

STRIP = section("strip")
LANDING_TOL = STRIP.get("landing_tol", 1e-6)
# largest internal step, in x for the outward phase and in log(u) for the endpoint phase
MAX_STEP = 1.0 / 1024.0
MAX_LOG_STEP = 0.01
# the endpoint phase stops at u = min(10 h, U_STOP_CAP)
U_STOP_CAP = 0.05


# ===========================================
# REGION: Peak height
# ===========================================
def _tail_integral(r: float) -> float:
    """∫_r^1 t² / sqrt(1 - t⁴) dt with the (1 - t)^(-1/2) singularity handled by the quadrature weight."""
    value, _ = quad(lambda t: t * t / np.sqrt((1.0 + t) * (1.0 + t * t)), r, 1.0,
                    weight="alg", wvar=(0.0, -0.5), epsabs=1e-14, epsrel=1e-13)
    return value


@lru_cache(maxsize=1)
def peak_height() -> float:
    """
    Peak u0 = u(0) of the minimal strip over {|x| ≤ 1}.

    Separating the strip equation gives x(u) = ∫_u^{u0} s² / sqrt(u0⁴ - s⁴) ds, so the
    half-width condition x(0) = 1 reads u0 · ∫_0^1 t² / sqrt(1 - t⁴) dt = 1.

    Returns:
    --------
    float
        u0 ≈ 1.66925.
    """
    integral = _tail_integral(0.0)
    return brentq(lambda u0: u0 * integral - 1.0, 0.5, 5.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# ===========================================
# REGION: Profile
# ===========================================
@dataclass(frozen=True)
class StripProfile:
    """
    Samples of the strip profile z = u(x) on the cell-centred grid x_i = -1 + (2i + 1)/n.

    ``nodes`` keeps every internal integration node (x, u, u') so that u and u' can be
    evaluated between grid points; ``landing`` is where the integrated solution reaches
    u = 0.
    """
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    u0: float
    landing: float
    nodes: Tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def h(self) -> float:
        return 2.0 / len(self.x)

    def _spline(self) -> CubicHermiteSpline:
        xs, us, dus = self.nodes
        return CubicHermiteSpline(xs, us, dus)

    def u_at(self, x) -> np.ndarray:
        """u(x) for |x| < 1: Hermite interpolation between nodes, the endpoint law u³ = 3u0²(1 - |x|) beyond."""
        x = np.abs(np.asarray(x, dtype=float))
        xs, us, _ = self.nodes
        inside = x <= xs[-1]
        out = np.empty_like(x)
        out[inside] = self._spline()(x[inside])
        out[~inside] = np.cbrt(3.0 * self.u0 ** 2 * np.clip(1.0 - x[~inside], 0.0, None))
        return out

    def du_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        xs, _, _ = self.nodes
        inside = ax <= xs[-1]
        out = np.empty_like(ax)
        out[inside] = self._spline().derivative()(ax[inside])
        u = np.cbrt(3.0 * self.u0 ** 2 * np.clip(1.0 - ax[~inside], 1e-300, None))
        out[~inside] = -self.u0 ** 2 / u ** 2
        return np.where(x < 0.0, -out, out)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "u": self.u, "du": self.du,
                             "wstar": w_star_values(self.x, self.u, self.du)})


def _rk4(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, step: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * step, y + 0.5 * step * k1)
    k3 = f(t + 0.5 * step, y + 0.5 * step * k2)
    k4 = f(t + step, y + step * k3)
    return y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _outward(_x: float, y: np.ndarray) -> np.ndarray:
    # y = (u, u'):  u u'' + 2 (1 + u'²) = 0
    u, p = y
    return np.array([p, -2.0 * (1.0 + p * p) / u])


def _endpoint(t: float, y: np.ndarray) -> np.ndarray:
    # t = log u, y = (x, q) with q = dx/du:  dq/du = 2 q (q² + 1) / u
    x, q = y
    return np.array([np.exp(t) * q, 2.0 * q * (q * q + 1.0)])


def solve_strip_profile(n: int = STRIP.get("n", 4096), landing_tol: float = LANDING_TOL) -> StripProfile:
    """
    Solves u u'' + 2(1 + u'²) = 0 on (-1, 1) by shooting from x = 0 with u(0) = u0, u'(0) = 0.

    The outward phase integrates in x with classical RK4 until |u'| reaches 1. The
    remaining part, where u' → -∞, is integrated for x as a function of log u, down to
    u = min(10 h, 0.05); the landing point then follows from u³ ≈ 3 u0² (1 - x). Grid
    values in that part are recovered by inverting the Hermite interpolant of x(log u).
    The profile is mirrored, so it is exactly even.

    Parameters:
    -----------
    n : int
        Grid size, at least 16.
    landing_tol : float
        Allowed distance between the landing point and x = 1.

    Returns:
    --------
    StripProfile

    Raises:
    -------
    DomainError:
        If n < 16.
    NumericalFailure:
        If the integrated profile does not land within ``landing_tol`` of x = 1.
    """
    if n < 16:
        raise DomainError("Strip grid needs n ≥ 16.")
    u0 = peak_height()
    h = 2.0 / n
    half = np.arange(n // 2, n)
    grid = -1.0 + (2.0 * half + 1.0) / n
    if n % 2:
        grid = grid[grid >= 0.0]

    # outward phase: steps divide h/2 so that grid points are step points
    m = max(1, int(np.ceil(0.5 * h / MAX_STEP)))
    step = 0.5 * h / m
    xs, us, ps = [0.0], [u0], [0.0]
    y = np.array([u0, 0.0])
    x = 0.0
    k = 0
    while abs(y[1]) < 1.0:
        y = _rk4(_outward, x, y, step)
        k += 1
        x = k * step
        if y[0] <= 0.0:
            raise NumericalFailure("Strip profile reached u = 0 in the outward phase.")
        xs.append(x)
        us.append(y[0])
        ps.append(y[1])
    x_switch = x

    # endpoint phase in t = log u
    u_stop = min(10.0 * h, U_STOP_CAP)
    t0, t1 = np.log(y[0]), np.log(u_stop)
    steps = max(1, int(np.ceil((t0 - t1) / min(MAX_LOG_STEP, 2.0 * h))))
    dt = (t1 - t0) / steps
    ts = [t0]
    xq = [np.array([x_switch, 1.0 / y[1]])]
    state = xq[0]
    for j in range(steps):
        state = _rk4(_endpoint, t0 + j * dt, state, dt)
        ts.append(t0 + (j + 1) * dt)
        xq.append(state)
    ts = np.array(ts)
    xq = np.array(xq)
    landing = float(xq[-1, 0] + u_stop ** 3 / (3.0 * u0 ** 2))
    if abs(landing - 1.0) > landing_tol:
        raise NumericalFailure(f"Strip shooting lands at x = {landing:.12f}, expected 1 within {landing_tol}.")

    # grid values
    u_grid = np.empty_like(grid)
    du_grid = np.empty_like(grid)
    outward = grid <= x_switch + 1e-15
    idx = np.rint(grid[outward] / step).astype(int)
    u_grid[outward] = np.asarray(us)[idx]
    du_grid[outward] = np.asarray(ps)[idx]

    # x and q as functions of t, increasing t for the interpolants
    tr = ts[::-1]
    x_t = xq[::-1, 0]
    q_t = xq[::-1, 1]
    dx_dt = np.exp(tr) * q_t
    dq_dt = 2.0 * q_t * (q_t * q_t + 1.0)
    x_of_t = CubicHermiteSpline(tr, x_t, dx_dt)
    q_of_t = CubicHermiteSpline(tr, q_t, dq_dt)
    late = ~outward & (grid <= xq[-1, 0])
    if np.any(late):
        t_late = _invert_monotone(x_of_t, tr, x_t, grid[late])
        u_grid[late] = np.exp(t_late)
        du_grid[late] = 1.0 / q_of_t(t_late)
    beyond = ~outward & ~late
    if np.any(beyond):
        u_grid[beyond] = np.cbrt(3.0 * u0 ** 2 * (1.0 - grid[beyond]))
        du_grid[beyond] = -u0 ** 2 / u_grid[beyond] ** 2

    # dense nodes for interpolation (x increasing)
    node_x = np.concatenate([xs, xq[1:, 0]])
    node_u = np.concatenate([us, np.exp(ts[1:])])
    node_p = np.concatenate([ps, 1.0 / xq[1:, 1]])

    full_x = np.concatenate([-grid[::-1], grid]) if n % 2 == 0 else np.concatenate([-grid[:0:-1], grid])
    full_u = np.concatenate([u_grid[::-1], u_grid]) if n % 2 == 0 else np.concatenate([u_grid[:0:-1], u_grid])
    full_du = np.concatenate([-du_grid[::-1], du_grid]) if n % 2 == 0 else np.concatenate([-du_grid[:0:-1], du_grid])
    log.debug("strip profile n=%d: switch at x=%.6f, landing error %.3e", n, x_switch, landing - 1.0)
    return StripProfile(full_x, full_u, full_du, u0, landing, (node_x, node_u, node_p))


def _invert_monotone(spline: CubicHermiteSpline, t_nodes: np.ndarray, x_nodes: np.ndarray,
                     targets: np.ndarray, iterations: int = 20) -> np.ndarray:
    """Solves spline(t) = target for a spline decreasing in t, by safeguarded Newton steps."""
    # x decreases with t: flip for searchsorted
    order_x = x_nodes[::-1]
    j = np.clip(np.searchsorted(order_x, targets), 1, len(order_x) - 1)
    hi = t_nodes[::-1][j - 1]
    lo = t_nodes[::-1][j]
    x_lo, x_hi = spline(lo), spline(hi)
    t = lo + (targets - x_lo) * (hi - lo) / np.where(x_hi != x_lo, x_hi - x_lo, 1.0)
    dspline = spline.derivative()
    for _ in range(iterations):
        f = spline(t) - targets
        d = dspline(t)
        nxt = t - f / np.where(d != 0.0, d, 1.0)
        bad = (nxt < lo) | (nxt > hi) | ~np.isfinite(nxt)
        # f > 0 means t is too small (x decreases in t)
        lo = np.where(f > 0.0, t, lo)
        hi = np.where(f > 0.0, hi, t)
        t = np.where(bad, 0.5 * (lo + hi), nxt)
    return t


def strip_landing_point(n: int = STRIP.get("n", 4096)) -> float:
    return solve_strip_profile(n, landing_tol=np.inf).landing


# ===========================================
# REGION: Oracles
# ===========================================
def first_integral_residual(profile: StripProfile) -> float:
    """max over the grid of |(1 + u'²) u⁴ - u0⁴| / u0⁴."""
    u0_4 = profile.u0 ** 4
    value = (1.0 + profile.du ** 2) * profile.u ** 4
    return float(np.max(np.abs(value - u0_4)) / u0_4)


def strip_profile_from_quadrature(n: int) -> StripProfile:
    """
    Reference profile from inverting x(u) = u0 ∫_{u/u0}^1 t² / sqrt(1 - t⁴) dt by quadrature,
    with u' taken from the first integral.
    """
    if n < 16:
        raise DomainError("Strip grid needs n ≥ 16.")
    u0 = peak_height()
    half = -1.0 + (2.0 * np.arange(n // 2, n) + 1.0) / n
    half = half[half >= 0.0]
    u = np.array([brentq(lambda v, xi=xi: u0 * _tail_integral(v / u0) - xi, 0.0, u0,
                         xtol=1e-15, rtol=4 * np.finfo(float).eps) for xi in half])
    du = -np.sqrt(np.clip(u0 ** 4 - u ** 4, 0.0, None)) / u ** 2
    mirror = slice(None, None, -1) if n % 2 == 0 else slice(None, 0, -1)
    x = np.concatenate([-half[mirror], half])
    node_x, node_u, node_du = np.concatenate([[0.0], half]), np.concatenate([[u0], u]), np.concatenate([[0.0], du])
    if half[0] == 0.0:
        node_x, node_u, node_du = half, u, du
    return StripProfile(x, np.concatenate([u[mirror], u]), np.concatenate([-du[mirror], du]), u0, 1.0,
                        (node_x, node_u, node_du))


def strip_curvature_sq(profile: StripProfile) -> np.ndarray:
    """
    |A|² of the strip in the hyperbolic metric at the grid points.

    With unit Euclidean normal ν the hyperbolic principal curvatures of a graph z = u(x)
    are u κ + ν_z and ν_z, κ the Euclidean curvature of the profile; u'' is taken from
    the strip equation.
    """
    u, p = profile.u, profile.du
    root = np.sqrt(1.0 + p * p)
    d2u = -2.0 * (1.0 + p * p) / u
    k1 = u * d2u / root ** 3 + 1.0 / root
    k2 = 1.0 / root
    return k1 * k1 + k2 * k2


def matched_strip_height(profile: StripProfile, eps: float, x) -> np.ndarray:
    """
    Height at x of the dilated strip λ u(x/λ) passing through (±1, ε).

    This is the strip a surface truncated at z = ε over {|x| ≤ 1} should approximate.
    """
    if not 0.0 < eps < profile.u0:
        raise DomainError("Truncation height must lie in (0, u0).")
    lam = brentq(lambda s: s * float(profile.u_at(1.0 / s)) - eps, 1.0, 1.0 + 10.0 * eps + 1.0, xtol=1e-14)
    x = np.asarray(x, dtype=float)
    return lam * profile.u_at(x / lam)


# ===========================================
# REGION: Jacobi field w*
# ===========================================
def w_star_values(x: np.ndarray, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    return (u - x * du) / (u * np.sqrt(1.0 + du * du))


def w_star(profile: StripProfile, x) -> np.ndarray | float:
    """
    Dilation Jacobi field of the strip, w* = (-x u' + u) / (u sqrt(1 + u'²)).

    Raises:
    -------
    DomainError:
        If |x| ≥ 1.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) >= 1.0):
        raise DomainError("w* is defined for |x| < 1 only.")
    value = w_star_values(xa, profile.u_at(xa), profile.du_at(xa))
    return float(value) if value.ndim == 0 else value
