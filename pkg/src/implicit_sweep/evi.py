"""Quasistatic evolution variational inequality with a weighted-l1 friction term.

For a.e. t the velocity w = u'(t) satisfies

    f(t) - A w - B u(t) in dJ(w),     J(w) = sum_i g_i |w_i|.

With C = dJ(0) this is the sweeping process with moving set C(t) = f(t) - C;
``to_sweeping`` builds that problem and ``crosscheck`` solves both forms on the
same grid and compares them. The EVI side is solved independently by proximal
gradient on the per-step strongly convex program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convex import Box, Reflect
from .errors import ConvergenceError, InconsistencyError, InvalidInputError, SweepError
from .moving_set import TimePath, TranslatedFamily
from .operators import SymmetricOperator, ValidationReport, validate_sp1
from .sweeping import (
    SolverOptions,
    SweepingProblem,
    Trajectory,
    VIABILITY_TOL,
    time_grid,
)
from .sweeping import solve as solve_sweeping


@dataclass(frozen=True, eq=False)
class FrictionFunctional:
    """J(w) = sum_i g_i |w_i| with g >= 0."""

    g: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise InvalidInputError("friction weights must be a finite vector")
        if np.any(g < 0):
            raise InvalidInputError(f"friction weight g[{int(np.argmin(g))}] is negative", field="friction.g")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def __call__(self, w) -> float:
        return float(np.sum(self.g * np.abs(w)))

    def prox(self, x, s: float) -> np.ndarray:
        """argmin_y s J(y) + |y - x|^2 / 2, i.e. soft thresholding at s g."""
        return prox(self, x, s)


def subdiff_zero(J: FrictionFunctional) -> Box:
    """dJ(0) = {xi : <xi, v> <= J(v) for all v} = the box [-g, g]."""
    return Box(-J.g, J.g.copy())


def prox(J: FrictionFunctional, x, s: float) -> np.ndarray:
    if not s > 0:
        raise InvalidInputError("prox step must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - s * J.g, 0.0)


def subgradient_certificate(J: FrictionFunctional, w, xi, tol: float) -> bool:
    """Componentwise test of ``xi in dJ(w)``."""
    w = np.asarray(w, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) > J.g + tol):
        return False
    moving = w != 0
    return bool(np.all(np.abs(xi[moving] - np.sign(w[moving]) * J.g[moving]) <= tol))


def _evi_step(A, B, u_prev, f_next, J, opts):
    c = B.apply(u_prev) - np.asarray(f_next, dtype=float)
    s = 1.0 / float(A.eigenvalues[-1])
    cert_tol = 10.0 * opts.tol
    w = np.zeros(A.dim)
    gap = math.inf
    certificate_failed = False
    for _ in range(opts.max_iter):
        w_next = prox(J, w - s * (A.apply(w) + c), s)
        gap = float(np.linalg.norm(w_next - w))
        small = gap <= opts.tol * (1.0 + float(np.linalg.norm(w)))
        w = w_next
        if small:
            if subgradient_certificate(J, w, -(A.apply(w) + c), cert_tol):
                return w, gap
            certificate_failed = True
    if certificate_failed:
        raise InconsistencyError("EVI step met the gap test but never the subgradient certificate")
    raise ConvergenceError(f"EVI step did not converge in {opts.max_iter} iterations", residual=gap)


def evi_step(
    A: SymmetricOperator,
    B: SymmetricOperator,
    u_prev,
    f_next,
    J: FrictionFunctional,
    opts: SolverOptions = SolverOptions(),
) -> np.ndarray:
    """Minimize A w.w/2 + <B u_prev - f_next, w> + J(w) by proximal gradient from w = 0.

    Step size 1/lambda_max(A). The returned w satisfies
    f_next - A w - B u_prev in dJ(w) componentwise to 10 * opts.tol.
    """
    if not A.coercivity_constant() > 0:
        raise InvalidInputError("A is not coercive")
    return _evi_step(A, B, u_prev, f_next, J, opts)[0]


def compatibility_margins(B: SymmetricOperator, u0, f0, J: FrictionFunctional) -> np.ndarray:
    """g_i - |(f0 - B u0)_i|; nonnegative entries mean the node is in equilibrium."""
    r = np.asarray(f0, dtype=float) - B.apply(u0)
    return J.g - np.abs(r)


def check_compatibility(B: SymmetricOperator, u0, f0, J: FrictionFunctional, tol: float = VIABILITY_TOL) -> bool:
    """True iff f0 - B u0 lies in dJ(0) up to ``tol``."""
    return bool(np.all(compatibility_margins(B, u0, f0, J) >= -tol))


@dataclass(frozen=True, eq=False)
class EviProblem:
    A: SymmetricOperator
    B: SymmetricOperator
    J: FrictionFunctional
    load: TimePath
    u0: np.ndarray
    T: float

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        dims = {self.A.dim, self.B.dim, self.J.dim, self.load.dim, u0.shape[0]}
        if len(dims) != 1 or u0.ndim != 1:
            raise InvalidInputError(
                f"dimension mismatch: A {self.A.dim}, B {self.B.dim}, J {self.J.dim}, "
                f"load {self.load.dim}, u0 {u0.shape}"
            )
        if not self.T > 0:
            raise InvalidInputError("horizon T must be positive")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "T", float(self.T))

    @property
    def dim(self) -> int:
        return self.A.dim

    def validate(self, tol: float = VIABILITY_TOL) -> ValidationReport:
        report = validate_sp1(self.A, self.B)
        margins = compatibility_margins(self.B, self.u0, self.load(0.0), self.J)
        k = int(np.argmin(margins))
        report.add(
            "compatibility f(0) - B u0 in dJ(0)",
            margins[k] >= -tol,
            float(margins[k]),
            f"smallest margin at dof {k}",
        )
        return report

    def check(self) -> None:
        report = self.validate()
        if not report.passed:
            raise InvalidInputError("EVI problem is invalid:\n" + str(report))


def to_sweeping(e: EviProblem) -> SweepingProblem:
    """The equivalent sweeping problem with C(t) = f(t) - dJ(0)."""
    margins = compatibility_margins(e.B, e.u0, e.load(0.0), e.J)
    if np.min(margins) < -VIABILITY_TOL:
        k = int(np.argmin(margins))
        raise InvalidInputError(f"compatibility fails at dof {k}: margin {margins[k]:.3e}")
    family = TranslatedFamily(Reflect(subdiff_zero(e.J)), e.load, e.T)
    return SweepingProblem(e.A, e.B, family, e.u0, e.T)


def solve_evi(e: EviProblem, n: int, opts: SolverOptions = SolverOptions()) -> Trajectory:
    """Implicit Euler: w_{i+1} = evi_step(u_i, f(t_{i+1})), u_{i+1} = u_i + (T/n) w_{i+1}."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    e.check()
    times = time_grid(e.T, n)
    mu = e.T / n
    states = np.empty((n + 1, e.dim))
    velocities = np.empty((n, e.dim))
    residuals = np.empty(n)
    states[0] = e.u0
    for i in range(n):
        try:
            w, res = _evi_step(e.A, e.B, states[i], e.load(times[i + 1]), e.J, opts)
        except (ConvergenceError, InconsistencyError) as exc:
            exc.step = i + 1
            raise
        except SweepError as exc:
            raise type(exc)(f"step {i + 1}: {exc}") from exc
        velocities[i] = w
        residuals[i] = res
        states[i + 1] = states[i] + mu * w
    return Trajectory(times, states, velocities, residuals)


@dataclass
class CrosscheckReport:
    max_state_gap: float
    max_velocity_gap: float
    scale: float
    equiv_tol: float
    evi: Trajectory
    sweep: Trajectory

    @property
    def threshold(self) -> float:
        return self.equiv_tol * self.scale

    @property
    def passed(self) -> bool:
        return self.max_state_gap <= self.threshold and self.max_velocity_gap <= self.threshold

    def to_text(self) -> str:
        lines = {
            "n": self.evi.n,
            "max_state_gap": repr(self.max_state_gap),
            "max_velocity_gap": repr(self.max_velocity_gap),
            "scale": repr(self.scale),
            "equiv_tol": repr(self.equiv_tol),
            "threshold": repr(self.threshold),
            "result": "pass" if self.passed else "fail",
        }
        return "\n".join(f"{k}: {v}" for k, v in lines.items())


def crosscheck(e: EviProblem, n: int, opts: SolverOptions = SolverOptions()) -> CrosscheckReport:
    """Solve the EVI and its sweeping form on one grid and compare node by node."""
    evi_traj = solve_evi(e, n, opts)
    sweep_traj = solve_sweeping(to_sweeping(e), n, opts)
    state_gap = float(np.max(np.linalg.norm(evi_traj.states - sweep_traj.states, axis=1)))
    vel_gap = float(np.max(np.linalg.norm(evi_traj.velocities - sweep_traj.velocities, axis=1)))
    scale = 1.0 + float(np.max(np.linalg.norm(evi_traj.states, axis=1)))
    return CrosscheckReport(state_gap, vel_gap, scale, opts.equiv_tol, evi_traj, sweep_traj)
