import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

from asymptotic_plateau.exceptions import DomainError

log = logging.getLogger(__name__)

ArrayLike = np.ndarray | Sequence[float]


# ===========================================
# REGION: Points
# ===========================================
@dataclass(frozen=True)
class HPoint:
    """Point of the upper half-space model; ``z`` is the Euclidean height above the ideal plane."""
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "HPoint":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    @property
    def is_interior(self) -> bool:
        return self.z > 0.0


@dataclass(frozen=True)
class IdealPoint:
    """
    Point of the ideal boundary {z = 0} ∪ {∞}.

    Exactly one representation is active: a plane point ``(x, y)`` or the point at
    infinity, built with :meth:`infinity`.
    """
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise DomainError("IdealPoint needs both coordinates or neither (infinity).")

    @classmethod
    def infinity(cls) -> "IdealPoint":
        return cls(None, None)

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def as_array(self) -> np.ndarray:
        if self.is_infinity:
            raise DomainError("The point at infinity has no plane coordinates.")
        return np.array([self.x, self.y], dtype=float)


def _as_points(points: HPoint | ArrayLike) -> np.ndarray:
    if isinstance(points, HPoint):
        return points.as_array()
    return np.asarray(points, dtype=float)


def _require_interior(points: np.ndarray) -> None:
    if np.any(points[..., 2] <= 0.0):
        raise DomainError("Half-space points must have z > 0.")


# ===========================================
# REGION: Distances
# ===========================================
def hyp_distance_many(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """
    Vectorized hyperbolic distance in the half-space model.

    Uses ``d = 2 asinh(|p - q| / (2 sqrt(z_p z_q)))``, the half-angle form of
    ``cosh d = 1 + |p - q|² / (2 z_p z_q)``, which keeps full precision for close points.

    Parameters:
    -----------
    p, q : array-like of shape (..., 3)
        Broadcast-compatible arrays of half-space points.

    Returns:
    --------
    np.ndarray
        Distances with the broadcast shape of the inputs without the last axis.

    Raises:
    -------
    DomainError:
        If any point has nonpositive height.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _require_interior(p)
    _require_interior(q)
    chord = np.linalg.norm(p - q, axis=-1)
    return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(p[..., 2] * q[..., 2])))


def hyp_distance(p: HPoint | ArrayLike, q: HPoint | ArrayLike) -> float:
    """Hyperbolic distance between two half-space points."""
    return float(hyp_distance_many(_as_points(p), _as_points(q)))


def ball_distance(a: ArrayLike, b: ArrayLike) -> np.ndarray | float:
    """Distance in the Poincaré ball: ``cosh d = 1 + 2|a-b|² / ((1-|a|²)(1-|b|²))``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = 1.0 - np.sum(a * a, axis=-1)
    nb = 1.0 - np.sum(b * b, axis=-1)
    if np.any(na <= 0.0) or np.any(nb <= 0.0):
        raise DomainError("Ball points must satisfy |b| < 1.")
    chord = np.linalg.norm(a - b, axis=-1)
    # sinh(d/2) = |a-b| / sqrt((1-|a|²)(1-|b|²))
    d = 2.0 * np.arcsinh(chord / np.sqrt(na * nb))
    return float(d) if np.ndim(d) == 0 else d


# ===========================================
# REGION: Model conversion
# ===========================================
def half_to_ball(points: ArrayLike) -> np.ndarray:
    """Cayley transform sending (0,0,1) to the ball center and ∞ to the north pole (0,0,1)."""
    p = np.asarray(points, dtype=float)
    _require_interior(p)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    denom = x * x + y * y + (z + 1.0) ** 2
    return np.stack([2.0 * x / denom, 2.0 * y / denom, 1.0 - 2.0 * (z + 1.0) / denom], axis=-1)


def ball_to_half(points: ArrayLike) -> np.ndarray:
    b = np.asarray(points, dtype=float)
    if np.any(np.sum(b * b, axis=-1) >= 1.0):
        raise DomainError("Ball points must lie strictly inside the unit ball.")
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    denom = bx * bx + by * by + (1.0 - bz) ** 2
    return np.stack([2.0 * bx / denom, 2.0 * by / denom, -1.0 + 2.0 * (1.0 - bz) / denom], axis=-1)


def convert_model(point: HPoint | ArrayLike, direction: str = "half_to_ball") -> np.ndarray:
    """
    Converts a point between the half-space and the ball model.

    Parameters:
    -----------
    point : HPoint or array-like of shape (..., 3)
        Source point(s).
    direction : str
        ``"half_to_ball"`` or ``"ball_to_half"``.

    Raises:
    -------
    DomainError:
        If the point is not interior to the source model.
    ValueError:
        If the direction is unknown.
    """
    converters = {"half_to_ball": half_to_ball, "ball_to_half": ball_to_half}
    if direction not in converters:
        raise ValueError(f"Invalid direction: {direction}. Choose from {list(converters.keys())}")
    return converters[direction](_as_points(point))


def ideal_to_sphere(point: IdealPoint) -> np.ndarray:
    """Image of an ideal point on the unit sphere under the same Cayley transform."""
    if point.is_infinity:
        return np.array([0.0, 0.0, 1.0])
    x, y = point.x, point.y
    denom = x * x + y * y + 1.0
    return np.array([2.0 * x / denom, 2.0 * y / denom, 1.0 - 2.0 / denom])


# ===========================================
# REGION: Primitive moves
# ===========================================
@dataclass(frozen=True)
class Dilation:
    """Homothety of ratio ``factor`` about the ideal point ``center``."""
    factor: float
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.factor <= 0.0:
            raise DomainError("Dilation factor must be positive.")

    def apply(self, p: np.ndarray) -> np.ndarray:
        c = np.array([self.center[0], self.center[1], 0.0])
        return c + self.factor * (p - c)

    def apply_ideal(self, xy: np.ndarray | None) -> np.ndarray | None:
        if xy is None:
            return None
        c = np.asarray(self.center, dtype=float)
        return c + self.factor * (xy - c)

    def inverse(self) -> "Dilation":
        return Dilation(1.0 / self.factor, self.center)


@dataclass(frozen=True)
class Translation:
    a: float
    b: float

    def apply(self, p: np.ndarray) -> np.ndarray:
        return p + np.array([self.a, self.b, 0.0])

    def apply_ideal(self, xy: np.ndarray | None) -> np.ndarray | None:
        return None if xy is None else xy + np.array([self.a, self.b])

    def inverse(self) -> "Translation":
        return Translation(-self.a, -self.b)


@dataclass(frozen=True)
class Rotation:
    """Rotation by ``angle`` about the vertical geodesic over ``center``."""
    angle: float
    center: Tuple[float, float] = (0.0, 0.0)

    def _matrix(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def apply(self, p: np.ndarray) -> np.ndarray:
        out = np.array(p, dtype=float, copy=True)
        c = np.asarray(self.center, dtype=float)
        out[..., :2] = (p[..., :2] - c) @ self._matrix().T + c
        return out

    def apply_ideal(self, xy: np.ndarray | None) -> np.ndarray | None:
        if xy is None:
            return None
        c = np.asarray(self.center, dtype=float)
        return (xy - c) @ self._matrix().T + c

    def inverse(self) -> "Rotation":
        return Rotation(-self.angle, self.center)


@dataclass(frozen=True)
class Inversion:
    """Inversion in the hemisphere of Euclidean ``radius`` over ``center``; an involution."""
    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise DomainError("Inversion radius must be positive.")

    def apply(self, p: np.ndarray) -> np.ndarray:
        c = np.array([self.center[0], self.center[1], 0.0])
        d = p - c
        r2 = np.sum(d * d, axis=-1, keepdims=True)
        return c + self.radius ** 2 * d / r2

    def apply_ideal(self, xy: np.ndarray | None) -> np.ndarray | None:
        c = np.asarray(self.center, dtype=float)
        if xy is None:
            return c.copy()
        d = xy - c
        r2 = float(np.sum(d * d))
        if r2 == 0.0:
            return None
        return c + self.radius ** 2 * d / r2

    def inverse(self) -> "Inversion":
        return self


Move = Dilation | Translation | Rotation | Inversion


@dataclass(frozen=True)
class Isometry:
    """
    Isometry of H³ stored as a word of primitive moves, applied left to right.

    Words keep each move exact and auditable; composition concatenates words.

    Example Usage:
    --------------
    ```python
    g = Isometry((Dilation(2.0), Translation(1.0, 0.0)))
    g.apply(HPoint(0, 0, 1))  # HPoint(1, 0, 2)
    ```
    """
    moves: Tuple[Move, ...] = field(default_factory=tuple)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(())

    def apply_many(self, points: ArrayLike) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        _require_interior(p)
        for move in self.moves:
            p = move.apply(p)
        return p

    def apply(self, point: HPoint) -> HPoint:
        return HPoint.from_array(self.apply_many(point.as_array()))

    def apply_to_ideal(self, point: IdealPoint) -> IdealPoint:
        xy = None if point.is_infinity else point.as_array()
        for move in self.moves:
            xy = move.apply_ideal(xy)
        return IdealPoint.infinity() if xy is None else IdealPoint(float(xy[0]), float(xy[1]))

    def apply_to_plane_points(self, xy: ArrayLike) -> np.ndarray:
        """Applies the word to finite ideal points given as an (N, 2) array."""
        out = np.asarray(xy, dtype=float)
        for move in self.moves:
            out = move.apply_ideal(out)
        return out

    def compose(self, other: "Isometry") -> "Isometry":
        """Returns the isometry ``other ∘ self`` (apply self first)."""
        return Isometry(self.moves + other.moves)

    def inverse(self) -> "Isometry":
        return Isometry(tuple(m.inverse() for m in reversed(self.moves)))

    def __len__(self) -> int:
        return len(self.moves)


def apply_isometry(g: Isometry, p: HPoint) -> HPoint:
    if not p.is_interior:
        raise DomainError("Half-space points must have z > 0.")
    return g.apply(p)


def random_isometry(rng: np.random.Generator, length: int = 4) -> Isometry:
    """Random word of primitive moves with parameters in moderate ranges."""
    moves: list[Move] = []
    for _ in range(length):
        kind = rng.integers(4)
        if kind == 0:
            moves.append(Dilation(float(np.exp(rng.uniform(-1.0, 1.0))),
                                  tuple(rng.uniform(-1.0, 1.0, size=2))))
        elif kind == 1:
            moves.append(Translation(*rng.uniform(-2.0, 2.0, size=2)))
        elif kind == 2:
            moves.append(Rotation(float(rng.uniform(0.0, 2.0 * np.pi)), tuple(rng.uniform(-1.0, 1.0, size=2))))
        else:
            moves.append(Inversion(tuple(rng.uniform(-3.0, 3.0, size=2)), float(rng.uniform(0.5, 2.0))))
    return Isometry(tuple(moves))


# ===========================================
# REGION: Geodesic planes
# ===========================================
@dataclass(frozen=True)
class GeodesicPlane:
    """
    Totally geodesic plane: a hemisphere orthogonal to {z = 0} or a vertical half-plane.

    Hemispheres carry ``center`` and ``radius``; vertical planes carry an ideal line given
    by ``point`` and ``direction``.
    """
    kind: str
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    point: Tuple[float, float] = (0.0, 0.0)
    direction: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("hemisphere", "vertical-plane"):
            raise DomainError(f"Invalid plane kind: {self.kind}. Choose from ['hemisphere', 'vertical-plane']")
        if self.kind == "hemisphere" and self.radius <= 0.0:
            raise DomainError("Hemisphere radius must be positive.")
        if self.kind == "vertical-plane" and np.hypot(*self.direction) == 0.0:
            raise DomainError("Vertical plane needs a nonzero direction.")

    @classmethod
    def hemisphere(cls, center: Tuple[float, float], radius: float) -> "GeodesicPlane":
        return cls("hemisphere", center=(float(center[0]), float(center[1])), radius=float(radius))

    @classmethod
    def vertical(cls, point: Tuple[float, float], direction: Tuple[float, float]) -> "GeodesicPlane":
        return cls("vertical-plane", point=(float(point[0]), float(point[1])),
                   direction=(float(direction[0]), float(direction[1])))

    def _normal(self) -> np.ndarray:
        dx, dy = self.direction
        n = np.array([dy, -dx], dtype=float)
        return n / np.linalg.norm(n)

    def side_many(self, points: ArrayLike) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.kind == "hemisphere":
            d = p - np.array([self.center[0], self.center[1], 0.0])
            return np.sum(d * d, axis=-1) - self.radius ** 2
        return (p[..., :2] - np.asarray(self.point)) @ self._normal()

    def side(self, p: HPoint | ArrayLike) -> float:
        return float(self.side_many(_as_points(p)))

    def distance_many(self, points: ArrayLike) -> np.ndarray:
        """Unsigned hyperbolic distance from points to the plane."""
        p = np.asarray(points, dtype=float)
        _require_interior(p)
        value = np.abs(self.side_many(p))
        if self.kind == "hemisphere":
            return np.arcsinh(value / (2.0 * self.radius * p[..., 2]))
        return np.arcsinh(value / p[..., 2])

    def ideal_side(self, xy: ArrayLike) -> np.ndarray:
        """Side value of ideal plane points (z = 0)."""
        xy = np.asarray(xy, dtype=float)
        p = np.concatenate([xy, np.zeros(xy.shape[:-1] + (1,))], axis=-1)
        return self.side_many(p)


def side_of_geodesic_plane(plane: GeodesicPlane, p: HPoint | ArrayLike) -> float:
    return plane.side(p)


def distance_to_plane(plane: GeodesicPlane, p: HPoint | ArrayLike) -> float:
    return float(plane.distance_many(_as_points(p)))


# ===========================================
# REGION: Geodesics
# ===========================================
def geodesic_exp(points: ArrayLike, directions: ArrayLike, t: ArrayLike) -> np.ndarray:
    """
    Moves points a hyperbolic distance ``t`` along the geodesics they start on.

    Geodesics are vertical lines or half-circles orthogonal to {z = 0}; the initial
    Euclidean direction fixes which one. Negative ``t`` walks backwards.

    Parameters:
    -----------
    points : array-like of shape (N, 3) or (3,)
    directions : array-like of the same shape, nonzero Euclidean tangent directions
    t : scalar or array-like of shape (N,)

    Returns:
    --------
    np.ndarray
        End points, same shape as ``points``.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    t = np.broadcast_to(np.asarray(t, dtype=float), (p.shape[0],)).copy()
    _require_interior(p)

    # walking backwards is walking forwards along -v
    back = t < 0.0
    v[back] = -v[back]
    t = np.abs(t)

    out = np.empty_like(p)
    vh = np.linalg.norm(v[:, :2], axis=1)
    vertical = vh < 1e-14
    if np.any(vertical):
        out[vertical, :2] = p[vertical, :2]
        out[vertical, 2] = p[vertical, 2] * np.exp(np.sign(v[vertical, 2]) * t[vertical])

    arc = ~vertical
    if np.any(arc):
        z = p[arc, 2]
        e = v[arc, :2] / vh[arc, None]
        sc = z * v[arc, 2] / vh[arc]
        radius = np.hypot(sc, z)
        # tan(φ0/2), picked per branch to avoid cancellation
        tan_half = np.where(sc <= 0.0, z / (radius - sc), (radius + sc) / z)
        tau = tan_half * np.exp(-t[arc])
        cos1 = (1.0 - tau ** 2) / (1.0 + tau ** 2)
        sin1 = 2.0 * tau / (1.0 + tau ** 2)
        out[arc, :2] = p[arc, :2] + e * (sc + radius * cos1)[:, None]
        out[arc, 2] = radius * sin1
    return out.reshape(np.shape(points))


def geodesic_midpoint(p: ArrayLike, q: ArrayLike) -> np.ndarray:
    """Point halfway between p and q along their geodesic."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = hyp_distance_many(p, q)
    delta = q - p
    if np.linalg.norm(delta[:2]) < 1e-14:
        return np.array([p[0], p[1], np.sqrt(p[2] * q[2])])
    # direction at p of the geodesic arc through q: reflect the chord in the circle's radius
    horiz = delta[:2] / np.linalg.norm(delta[:2])
    s_q = float(delta[:2] @ horiz)
    sc = (s_q ** 2 + q[2] ** 2 - p[2] ** 2) / (2.0 * s_q)
    tangent = np.array([*(horiz * p[2]), sc])
    return geodesic_exp(p, tangent, d / 2.0)


def as_point_array(points: Iterable[HPoint]) -> np.ndarray:
    return np.array([p.as_array() for p in points], dtype=float).reshape(-1, 3)
