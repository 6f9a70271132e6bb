"""Time-dependent convex sets C(t) and their absolute-continuity modulus v.

Two representations are supported: a fixed set translated along a path
(``TranslatedFamily``) and a list of sets sampled on a time grid with
user-supplied modulus values (``SampledFamily``).
"""

from __future__ import annotations

import csv
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .convex import ConvexSet, Translate, hausdorff_estimate, hausdorff_exact
from .errors import InvalidInputError
from .operators import ValidationReport

QUAD_ABS_TOL = 1e-10
SP2_SLACK = 1e-8


class TimePath:
    """A vector-valued function of time with a known derivative."""

    dim: int

    def __call__(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def arc_length(self, s: float, t: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ClosedFormPath(TimePath):
    """Path given by a pure callable and its derivative."""

    func: Callable[[float], np.ndarray]
    deriv: Callable[[float], np.ndarray]

    @property
    def dim(self) -> int:
        return np.atleast_1d(np.asarray(self.func(0.0), dtype=float)).shape[0]

    def __call__(self, t):
        return np.atleast_1d(np.asarray(self.func(float(t)), dtype=float))

    def derivative(self, t):
        return np.atleast_1d(np.asarray(self.deriv(float(t)), dtype=float))

    def arc_length(self, s, t):
        if t == s:
            return 0.0
        speed = lambda tau: float(np.linalg.norm(self.derivative(tau)))  # noqa: E731
        value, _ = integrate.quad(speed, s, t, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=500)
        return float(value)


def polynomial_path(coeffs) -> ClosedFormPath:
    """f(t) = sum_k coeffs[k] * t**k, with each coefficient a vector (or scalar)."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] == 0:
        raise InvalidInputError("polynomial coefficients must be a non-empty list")
    dc = c[1:] * np.arange(1, c.shape[0])[:, None] if c.shape[0] > 1 else np.zeros_like(c)

    def f(t):
        return np.polynomial.polynomial.polyval(t, c)

    def df(t):
        return np.polynomial.polynomial.polyval(t, dc)

    return ClosedFormPath(f, df)


def constant_path(value) -> ClosedFormPath:
    return polynomial_path([np.atleast_1d(np.asarray(value, dtype=float))])


@dataclass(frozen=True, eq=False)
class PiecewiseLinearPath(TimePath):
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.shape[0] < 2 or v.shape[0] != t.shape[0]:
            raise InvalidInputError("piecewise-linear path needs >= 2 nodes with one value row each")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("piecewise-linear path times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def _check_t(self, t):
        if t < self.times[0] - 1e-14 or t > self.times[-1] + 1e-14:
            raise InvalidInputError(f"time {t} outside path domain [{self.times[0]}, {self.times[-1]}]")

    def __call__(self, t):
        self._check_t(t)
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.dim)])

    def derivative(self, t):
        """Slope of the segment containing ``t`` (right segment at interior nodes)."""
        self._check_t(t)
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        return (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])

    def arc_length(self, s, t):
        if t == s:
            return 0.0
        inner = self.times[(self.times > s) & (self.times < t)]
        knots = np.concatenate([[s], inner, [t]])
        pts = np.array([self(k) for k in knots])
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def load_path_csv(path) -> PiecewiseLinearPath:
    """Column 0 is time, columns 1..d the path values. A header row is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if k == 0:
                    continue
                raise InvalidInputError(f"{path}:{k + 1}: non-numeric entry") from None
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    data = np.array(rows)
    if data.ndim != 2 or data.shape[1] < 2:
        raise InvalidInputError(f"{path}: need a time column and at least one value column")
    return PiecewiseLinearPath(data[:, 0], data[:, 1:])


class MovingSet:
    horizon: float
    dim: int

    def _check_time(self, t):
        if not (0.0 <= t <= self.horizon + 1e-12 * max(1.0, self.horizon)):
            raise InvalidInputError(f"time {t} outside [0, {self.horizon}]")

    def set_at(self, t: float) -> ConvexSet:
        raise NotImplementedError

    def modulus(self, s: float, t: float) -> float:
        raise NotImplementedError

    def hausdorff(self, s: float, t: float) -> tuple[float, bool]:
        """(d_H(C(s), C(t)), exact?)."""
        a, b = self.set_at(s), self.set_at(t)
        exact = hausdorff_exact(a, b)
        if exact is not None:
            return exact, True
        return hausdorff_estimate(a, b), False


@dataclass(frozen=True, eq=False)
class TranslatedFamily(MovingSet):
    """C(t) = base + path(t)."""

    base: ConvexSet
    path: TimePath
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidInputError("horizon must be positive")
        if self.path.dim != self.base.dim:
            raise InvalidInputError(f"path has dim {self.path.dim} but base set has dim {self.base.dim}")
        if isinstance(self.path, PiecewiseLinearPath):
            if self.path.times[0] > 0 or self.path.times[-1] < self.horizon:
                raise InvalidInputError("piecewise-linear path does not cover [0, T]")

    @property
    def dim(self) -> int:
        return self.base.dim

    def set_at(self, t):
        self._check_time(t)
        return Translate(self.base, self.path(t))

    def modulus(self, s, t):
        if s > t:
            raise InvalidInputError(f"modulus needs s <= t, got s={s}, t={t}")
        self._check_time(s)
        self._check_time(t)
        return self.path.arc_length(s, t)

    def hausdorff(self, s, t):
        return float(np.linalg.norm(self.path(t) - self.path(s))), True


@dataclass(frozen=True, eq=False)
class SampledFamily(MovingSet):
    """Sets given on a grid; left-constant between nodes, modulus interpolated linearly."""

    times: np.ndarray
    sets: tuple
    modulus_samples: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.modulus_samples, dtype=float)
        sets = tuple(self.sets)
        if t.ndim != 1 or len(t) < 1 or len(sets) != len(t) or v.shape != t.shape:
            raise InvalidInputError("sampled family needs matching times, sets and modulus samples")
        if t[0] != 0.0:
            raise InvalidInputError("sampled family must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("sampled family times must be strictly increasing")
        if v[0] != 0.0:
            raise InvalidInputError("modulus must vanish at t = 0")
        if np.any(np.diff(v) < 0):
            raise InvalidInputError("modulus samples must be nondecreasing")
        if len({s.dim for s in sets}) != 1:
            raise InvalidInputError("all sets in a sampled family must share a dimension")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "modulus_samples", v)
        object.__setattr__(self, "sets", sets)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def set_at(self, t):
        self._check_time(t)
        k = int(np.searchsorted(self.times, t + 1e-12 * max(1.0, self.horizon), side="right") - 1)
        return self.sets[max(k, 0)]

    def modulus(self, s, t):
        if s > t:
            raise InvalidInputError(f"modulus needs s <= t, got s={s}, t={t}")
        self._check_time(s)
        self._check_time(t)
        v = self.modulus_samples
        return float(np.interp(t, self.times, v) - np.interp(s, self.times, v))


def validate_sp2(ms: MovingSet, grid) -> ValidationReport:
    """Check d_H(C(s), C(t)) <= v(t) - v(s) on adjacent grid pairs.

    Hausdorff distances are exact where a closed form exists; otherwise a
    sampled estimate is used and the check detail says so.
    """
    grid = np.asarray(grid, dtype=float)
    report = ValidationReport()
    violations = []
    estimated = 0
    worst = -np.inf
    for s, t in zip(grid[:-1], grid[1:]):
        try:
            ms.set_at(s)
            ms.set_at(t)
        except InvalidInputError as exc:
            violations.append((s, t, str(exc)))
            continue
        dh, exact = ms.hausdorff(s, t)
        estimated += not exact
        v = ms.modulus(s, t)
        worst = max(worst, dh - v)
        if dh > v + SP2_SLACK:
            kind = "exact" if exact else "estimated"
            violations.append((s, t, f"d_H={dh:.6g} ({kind}) > v(t)-v(s)={v:.6g}"))
    detail = f"{len(grid) - 1} pairs"
    if estimated:
        detail += f", {estimated} with sampled Hausdorff estimates"
    report.add("modulus bounds Hausdorff motion", not violations, worst if np.isfinite(worst) else None, detail)
    for s, t, msg in violations:
        report.add(f"pair [{s:.6g}, {t:.6g}]", False, None, msg)
    return report
