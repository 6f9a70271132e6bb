"""Closed convex sets with projection, support and distance oracles.

The set algebra is deliberately small: boxes (possibly degenerate, possibly
with infinite bounds), balls, translates, reflections and intersections of a
set with a closed ball centred at the origin. Every set is nonempty, closed
and convex by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, InvalidInputError, UnboundedSupportError

DYKSTRA_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 10_000
SUPPORT_ASCENT_TOL = 1e-10
SUPPORT_ASCENT_MAX_ITER = 100_000


def _vec(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    return x


class ConvexSet:
    """Base class. Subclasses implement ``project``, ``support_point`` and ``dim``."""

    dim: int

    def _check(self, x) -> np.ndarray:
        x = _vec(x)
        if x.shape != (self.dim,):
            raise InvalidInputError(f"expected vector of length {self.dim}, got shape {x.shape}")
        return x

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def support_point(self, z) -> np.ndarray:
        """A maximizer of <z, .> over the set."""
        raise NotImplementedError

    def support(self, z) -> float:
        z = self._check(z)
        return float(z @ self.support_point(z))

    @property
    def bounded(self) -> bool:
        raise NotImplementedError

    def canonical(self) -> ConvexSet:
        """An equivalent Box or Ball when one exists, else ``self``."""
        return self

    def distance(self, x) -> float:
        x = self._check(x)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.distance(x) <= tol


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box ``{x : lower <= x <= upper}``; ``lower == upper`` pins a coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("box bounds must be vectors of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidInputError("box bounds contain NaN")
        if np.any(lo > hi):
            i = int(np.argmax(lo > hi))
            raise InvalidInputError(f"box has lower > upper in coordinate {i}")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise InvalidInputError("box is empty (infinite bound on the wrong side)")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def support_point(self, z):
        z = self._check(z)
        if np.any((z > 0) & np.isinf(self.upper)) or np.any((z < 0) & np.isinf(self.lower)):
            raise UnboundedSupportError("box is unbounded in the requested direction")
        mid = np.where(np.isfinite(self.lower), self.lower, self.upper)
        mid = np.where(np.isfinite(mid), mid, 0.0)
        return np.where(z > 0, self.upper, np.where(z < 0, self.lower, mid))

    def support(self, z):
        z = self._check(z)
        p = self.support_point(z)
        return float(np.sum(np.where(z != 0, z * p, 0.0)))

    def canonical(self):
        return self

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _vec(self.center)
        if not math.isfinite(self.radius) or self.radius < 0:
            raise InvalidInputError(f"ball radius must be finite and >= 0, got {self.radius}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def bounded(self) -> bool:
        return True

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x
        return self.center + (self.radius / r) * d

    def support_point(self, z):
        z = self._check(z)
        nz = np.linalg.norm(z)
        if nz == 0:
            return self.center.copy()
        return self.center + (self.radius / nz) * z

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


@dataclass(frozen=True, eq=False)
class Translate(ConvexSet):
    """The set ``base + shift``."""

    base: ConvexSet
    shift: np.ndarray

    def __post_init__(self):
        s = _vec(self.shift)
        if s.shape != (self.base.dim,):
            raise InvalidInputError("shift length does not match base set dimension")
        s.setflags(write=False)
        object.__setattr__(self, "shift", s)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def bounded(self) -> bool:
        return self.base.bounded

    def project(self, x):
        x = self._check(x)
        return self.base.project(x - self.shift) + self.shift

    def support_point(self, z):
        return self.base.support_point(z) + self.shift

    def support(self, z):
        z = self._check(z)
        return float(self.shift @ z) + self.base.support(z)

    def canonical(self):
        b = self.base.canonical()
        if isinstance(b, Box):
            return Box(b.lower + self.shift, b.upper + self.shift)
        if isinstance(b, Ball):
            return Ball(b.center + self.shift, b.radius)
        return self

    def __repr__(self):
        return f"Translate({self.base!r}, shift={self.shift.tolist()})"


@dataclass(frozen=True, eq=False)
class Reflect(ConvexSet):
    """The set ``-base``."""

    base: ConvexSet

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def bounded(self) -> bool:
        return self.base.bounded

    def project(self, x):
        x = self._check(x)
        return -self.base.project(-x)

    def support_point(self, z):
        return -self.base.support_point(-self._check(z))

    def support(self, z):
        return self.base.support(-self._check(z))

    def canonical(self):
        b = self.base.canonical()
        if isinstance(b, Box):
            return Box(-b.upper, -b.lower)
        if isinstance(b, Ball):
            return Ball(-b.center, b.radius)
        return self

    def __repr__(self):
        return f"Reflect({self.base!r})"


@dataclass(frozen=True, eq=False)
class BallIntersection(ConvexSet):
    """``base`` intersected with the closed ball of given radius about the origin."""

    base: ConvexSet
    radius: float
    _ball: Ball = field(init=False, repr=False)

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius < 0:
            raise InvalidInputError(f"truncation radius must be finite and >= 0, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "_ball", Ball(np.zeros(self.base.dim), self.radius))
        gap = self.base.distance(np.zeros(self.base.dim))
        if gap > self.radius + 1e-12:
            raise InvalidInputError(
                f"empty intersection: base is at distance {gap:.6g} from 0, radius {self.radius:.6g}"
            )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def bounded(self) -> bool:
        return True

    def _box_ray(self, v, c_max):
        """Largest c in [0, c_max] with |clip(c v)| <= radius, and the clipped point.

        For a box base the KKT conditions of both the projection and the
        support problem reduce to y = clip(c v) for a scalar c >= 0, and
        |clip(c v)| is nondecreasing in c.
        """
        box = self.base.canonical()

        def excess(c):
            return float(np.linalg.norm(np.clip(c * v, box.lower, box.upper))) - self.radius

        if excess(c_max) <= 0.0:
            c = c_max
        elif excess(0.0) >= 0.0:
            c = 0.0
        else:
            c = optimize.brentq(excess, 0.0, c_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return np.clip(c * v, box.lower, box.upper)

    def project(self, x):
        x = self._check(x)
        a = self.base.project(x)
        if np.linalg.norm(a) <= self.radius:
            return a
        b = self._ball.project(x)
        if self.base.distance(b) == 0.0:
            return b
        if isinstance(self.base.canonical(), Box):
            return self._box_ray(x, 1.0)
        return self._dykstra(x)

    def _dykstra(self, x):
        # the iterate alone can stall for several sweeps while the correction
        # terms accumulate, so the increments are part of the stopping test
        y = x
        p = np.zeros_like(x)
        q = np.zeros_like(x)
        step = np.inf
        for _ in range(DYKSTRA_MAX_SWEEPS):
            a = self.base.project(y + p)
            p_next = y + p - a
            b = self._ball.project(a + q)
            q_next = a + q - b
            step = float(np.linalg.norm(b - y) + np.linalg.norm(p_next - p) + np.linalg.norm(q_next - q))
            y, p, q = b, p_next, q_next
            if step <= DYKSTRA_TOL * max(1.0, float(np.linalg.norm(y))):
                return y
        raise ConvergenceError(
            f"Dykstra projection did not converge in {DYKSTRA_MAX_SWEEPS} sweeps", residual=step
        )

    def support_point(self, z):
        z = self._check(z)
        nz = np.linalg.norm(z)
        if nz == 0:
            return self.project(np.zeros(self.dim))
        box = self.base.canonical()
        if isinstance(box, Box):
            reach = np.maximum(np.abs(np.where(np.isfinite(box.lower), box.lower, 0.0)),
                               np.abs(np.where(np.isfinite(box.upper), box.upper, 0.0)))
            active = z != 0
            # past c_max every active coordinate sits on its bound (or beyond the radius)
            c_max = float(np.max((np.maximum(reach[active], self.radius) + 1.0) / np.abs(z[active])))
            return self._box_ray(z, c_max)
        return self._support_ascent(z / nz)

    def _support_ascent(self, direction):
        """Projected gradient ascent on ``<direction, .>``."""
        y = self.project(np.zeros(self.dim))
        s = 2.0 * self.radius + 1.0
        gap = np.inf
        for _ in range(SUPPORT_ASCENT_MAX_ITER):
            y_next = self.project(y + s * direction)
            gap = float(np.linalg.norm(y_next - y))
            y = y_next
            if gap <= SUPPORT_ASCENT_TOL * max(1.0, self.radius):
                return y
        raise ConvergenceError("support ascent did not converge", residual=gap)

    def __repr__(self):
        return f"BallIntersection({self.base!r}, radius={self.radius})"


def project(s: ConvexSet, x) -> np.ndarray:
    return s.project(x)


def support(s: ConvexSet, z) -> float:
    return s.support(z)


def distance(s: ConvexSet, x) -> float:
    return s.distance(x)


def normal_cone_contains(s: ConvexSet, x, xi, tol: float) -> bool:
    """Test ``xi in N_s(x)`` via ``x in s`` and ``support(s, xi) = <xi, x>``, both to ``tol``."""
    x = s._check(x)
    xi = s._check(xi)
    if s.distance(x) > tol:
        return False
    gap = s.support(xi) - float(xi @ x)
    return gap <= tol * (1.0 + float(np.linalg.norm(xi)))


def _interval_excess(a, lo, hi):
    """Distance from scalars ``a`` (may be +-inf) to intervals [lo, hi], elementwise."""
    with np.errstate(invalid="ignore"):
        below = np.where(a < lo, lo - a, 0.0)
        above = np.where(a > hi, a - hi, 0.0)
    return np.nan_to_num(below + above, nan=0.0, posinf=np.inf)


def _one_sided_box(b1: Box, b2: Box) -> float:
    # sup over b1 of the distance to b2 separates over coordinates; each term is
    # maximized at an endpoint of b1's interval
    lo = _interval_excess(b1.lower, b2.lower, b2.upper)
    hi = _interval_excess(b1.upper, b2.lower, b2.upper)
    return float(np.sqrt(np.sum(np.maximum(lo, hi) ** 2)))


def hausdorff_box(b1: Box, b2: Box) -> float:
    """Exact Euclidean Hausdorff distance between two axis-aligned boxes."""
    if b1.dim != b2.dim:
        raise InvalidInputError("boxes have different dimensions")
    return max(_one_sided_box(b1, b2), _one_sided_box(b2, b1))


def hausdorff_exact(s1: ConvexSet, s2: ConvexSet) -> float | None:
    """Exact Hausdorff distance when a closed form is known, else ``None``.

    Closed forms: box/box, ball/ball, and two translates of one base object.
    """
    if s1.dim != s2.dim:
        raise InvalidInputError("sets have different dimensions")
    if isinstance(s1, Translate) and isinstance(s2, Translate) and s1.base is s2.base:
        return float(np.linalg.norm(s1.shift - s2.shift))
    c1, c2 = s1.canonical(), s2.canonical()
    if isinstance(c1, Box) and isinstance(c2, Box):
        return hausdorff_box(c1, c2)
    if isinstance(c1, Ball) and isinstance(c2, Ball):
        return float(np.linalg.norm(c1.center - c2.center) + abs(c1.radius - c2.radius))
    return None


def _directions(dim: int, count: int, seed: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return np.column_stack([np.cos(th), np.sin(th)])
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    return np.vstack([axes, d])


def hausdorff_estimate(s1: ConvexSet, s2: ConvexSet, n_directions: int = 256, seed: int = 0) -> float:
    """Sampled two-sided Hausdorff estimate; a lower bound of the true value.

    Samples exposed points of each set (support maximizers in many directions)
    and measures their distance to the other set.
    """
    if not (s1.bounded and s2.bounded):
        raise InvalidInputError("sampled Hausdorff estimate needs bounded sets")
    dirs = _directions(s1.dim, n_directions, seed)
    h12 = max(s2.distance(s1.support_point(u)) for u in dirs)
    h21 = max(s1.distance(s2.support_point(u)) for u in dirs)
    return max(h12, h21)


def support_gap_bound_check(s1: ConvexSet, s2: ConvexSet, dH: float, directions) -> bool:
    """Check ``|support(s1, z) - support(s2, z)| <= |z| * dH`` on every direction."""
    for z in np.atleast_2d(np.asarray(directions, dtype=float)):
        gap = abs(s1.support(z) - s2.support(z))
        if gap > float(np.linalg.norm(z)) * dH + 1e-9:
            return False
    return True


def truncate(s: ConvexSet, n: float) -> BallIntersection:
    """``s`` intersected with the closed ball of radius ``n`` about the origin."""
    gap = s.distance(np.zeros(s.dim))
    if gap > n:
        raise InvalidInputError(f"truncation radius {n} is below the distance {gap:.6g} of the set from 0")
    return BallIntersection(s, n)
