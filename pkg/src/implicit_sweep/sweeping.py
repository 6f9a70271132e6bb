"""Catching-up solver for the implicit sweeping process

    -u'(t) in N_{C(t)}(A u'(t) + B u(t)),   u(0) = u0.

Each step finds z with -z in N_C(A z + B u_prev). Writing y = A z + B u_prev,
this is the projection of b = B u_prev onto C in the metric induced by A^{-1},
which is computed by projected gradient with the Euclidean projection oracle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .convex import ConvexSet, normal_cone_contains
from .errors import ConvergenceError, InconsistencyError, InvalidInputError, SweepError
from .moving_set import MovingSet, SampledFamily
from .operators import SymmetricOperator, validate_sp1

VIABILITY_TOL = 1e-8


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 50_000
    equiv_tol: float = 1e-6

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive", field="solver.tol")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1", field="solver.max_iter")


@dataclass(frozen=True, eq=False)
class SweepingProblem:
    A: SymmetricOperator
    B: SymmetricOperator
    sets: MovingSet
    u0: np.ndarray
    T: float

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        if self.A.dim != self.B.dim or self.A.dim != self.sets.dim or u0.shape != (self.A.dim,):
            raise InvalidInputError(
                f"dimension mismatch: A {self.A.dim}, B {self.B.dim}, sets {self.sets.dim}, u0 {u0.shape}"
            )
        if not self.T > 0:
            raise InvalidInputError("horizon T must be positive")
        if self.T > self.sets.horizon * (1 + 1e-12):
            raise InvalidInputError(f"horizon {self.T} exceeds the set family horizon {self.sets.horizon}")
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "T", float(self.T))

    def initial_viability_gap(self) -> float:
        return self.sets.set_at(0.0).distance(self.B.apply(self.u0))

    def check(self) -> None:
        """Raise InvalidInputError unless A is coercive, B is PSD and B u0 lies in C(0)."""
        report = validate_sp1(self.A, self.B)
        if not report.passed:
            raise InvalidInputError("operators fail coercivity/positivity:\n" + str(report))
        gap = self.initial_viability_gap()
        if gap > VIABILITY_TOL:
            raise InvalidInputError(f"initial state is not viable: dist(B u0, C(0)) = {gap:.3e}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Nodal states u_0..u_n and step velocities z_1..z_n on t_i = i T / n.

    ``velocities[i]`` is the velocity on the half-open step (t_i, t_{i+1}].
    """

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    step_residuals: np.ndarray
    iterations: np.ndarray = field(default=None)

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def max_speed(self) -> float:
        return float(np.max(np.linalg.norm(self.velocities, axis=1))) if self.n else 0.0

    def to_csv(self, path) -> None:
        d = self.dim
        header = ["t", *(f"u_{j + 1}" for j in range(d)), *(f"z_{j + 1}" for j in range(d)), "residual"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, t in enumerate(self.times):
                row = [repr(float(t)), *(repr(float(v)) for v in self.states[i])]
                if i == 0:
                    row += [""] * (d + 1)
                else:
                    row += [repr(float(v)) for v in self.velocities[i - 1]]
                    row.append(repr(float(self.step_residuals[i - 1])))
                w.writerow(row)


def catching_up_step(
    A: SymmetricOperator,
    B: SymmetricOperator,
    C_next: ConvexSet,
    u_prev,
    opts: SolverOptions = SolverOptions(),
) -> tuple[np.ndarray, float]:
    """Solve -z in N_{C_next}(A z + B u_prev); returns (z, fixed-point gap at exit).

    Iterates y <- P_C(y - s A^{-1}(y - b)) with s = 1.8 beta(A) from y = P_C(b).
    Stops once the relative successive gap is below ``opts.tol`` and the
    normal-cone certificate holds at ``10 * opts.tol``.
    """
    b = B.apply(u_prev)
    beta = A.coercivity_constant()
    if not beta > 0:
        raise InvalidInputError(f"A is not coercive (beta = {beta:.3e})")
    s = 1.8 * beta
    cert_tol = 10.0 * opts.tol
    y = C_next.project(b)
    gap = math.inf
    certificate_failed = False
    for _ in range(opts.max_iter):
        z = A.solve(y - b)
        y_next = C_next.project(y - s * z)
        gap = float(np.linalg.norm(y_next - y))
        small = gap <= opts.tol * (1.0 + float(np.linalg.norm(y)))
        y = y_next
        if small:
            z = A.solve(y - b)
            if normal_cone_contains(C_next, A.apply(z) + b, -z, cert_tol):
                return z, gap
            certificate_failed = True
    if certificate_failed:
        raise InconsistencyError("catching-up step met the gap test but never the normal-cone certificate")
    raise ConvergenceError(f"catching-up step did not converge in {opts.max_iter} iterations", residual=gap)


def _check_family_grid(sets: MovingSet, times: np.ndarray) -> None:
    if not isinstance(sets, SampledFamily):
        return
    scale = max(1.0, float(times[-1]))
    for tf in sets.times:
        if tf > times[-1] + 1e-12 * scale:
            continue
        if np.min(np.abs(times - tf)) > 1e-12 * scale:
            raise InvalidInputError(f"solver grid does not contain family node t = {tf}")


def time_grid(T: float, n: int) -> np.ndarray:
    return np.arange(n + 1) * (T / n)


def solve(p: SweepingProblem, n: int, opts: SolverOptions = SolverOptions()) -> Trajectory:
    """Catching-up discretization on the uniform grid t_i = i T / n."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    p.check()
    times = time_grid(p.T, n)
    _check_family_grid(p.sets, times)
    mu = p.T / n
    d = p.A.dim
    states = np.empty((n + 1, d))
    velocities = np.empty((n, d))
    residuals = np.empty(n)
    states[0] = p.u0
    for i in range(n):
        C_next = p.sets.set_at(times[i + 1])
        try:
            z, res = catching_up_step(p.A, p.B, C_next, states[i], opts)
        except (ConvergenceError, InconsistencyError) as exc:
            exc.step = i + 1
            raise
        except SweepError as exc:
            raise type(exc)(f"step {i + 1}: {exc}") from exc
        velocities[i] = z
        residuals[i] = res
        states[i + 1] = states[i] + mu * z
    return Trajectory(times, states, velocities, residuals)


def viability_residual(traj: Trajectory, p: SweepingProblem) -> float:
    """max_i dist(C(t_{i+1}), A z_{i+1} + B u_i)."""
    worst = 0.0
    for i in range(traj.n):
        y = p.A.apply(traj.velocities[i]) + p.B.apply(traj.states[i])
        worst = max(worst, p.sets.set_at(traj.times[i + 1]).distance(y))
    return worst


def inclusion_certificates(traj: Trajectory, p: SweepingProblem, tol: float) -> np.ndarray:
    """Per-step flags for -z_{i+1} in N_{C(t_{i+1})}(A z_{i+1} + B u_i) at tolerance ``tol``."""
    flags = np.empty(traj.n, dtype=bool)
    for i in range(traj.n):
        z = traj.velocities[i]
        y = p.A.apply(z) + p.B.apply(traj.states[i])
        flags[i] = normal_cone_contains(p.sets.set_at(traj.times[i + 1]), y, -z, tol)
    return flags


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def velocity_bounds(p: SweepingProblem) -> tuple[float, float]:
    """(bound with the truncation factor 8, bound without it) on max_i |z_i|.

    Both are (k v(T) / beta) exp(|B| T / beta) with k = 8 and k = 1. The
    solver projects onto untruncated sets, so the k = 1 version applies.
    """
    beta = p.A.coercivity_constant()
    growth = _safe_exp(p.B.operator_norm() * p.T / beta)
    v_T = p.sets.modulus(0.0, p.T)
    sharp = v_T / beta * growth if v_T > 0 else 0.0
    return 8.0 * sharp, sharp


def interpolate(traj: Trajectory, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear state and piecewise-constant velocity at time ``t``.

    On (t_i, t_{i+1}] the velocity is z_{i+1}; at t = 0 it is z_1.
    """
    T = traj.T
    if not (0.0 <= t <= T):
        raise InvalidInputError(f"time {t} outside [0, {T}]")
    mu = T / traj.n
    k = int(np.searchsorted(traj.times, t, side="left"))
    if k <= traj.n and traj.times[k] == t:
        return traj.states[k].copy(), traj.velocities[max(k - 1, 0)].copy()
    i = min(max(k - 1, 0), traj.n - 1)
    frac = (t - traj.times[i]) / mu
    u = traj.states[i] + frac * (traj.states[i + 1] - traj.states[i])
    return u, traj.velocities[i].copy()


@dataclass
class ConvergenceRow:
    n: int
    err_vs_next: float | None
    ratio: float | None


def convergence_study(p: SweepingProblem, ns, opts: SolverOptions = SolverOptions(), solver=None):
    """Nested-refinement table: e_n = max over shared nodes |u^(n) - u^(2n)|, ratio e_n / e_2n.

    ``solver(n)`` may replace the catching-up solve (used for EVI problems).
    """
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidInputError("ns must be strictly increasing")
    run = solver if solver is not None else (lambda n: solve(p, n, opts))
    trajs = {n: run(n) for n in ns}
    errs: dict[int, float | None] = {}
    for a, b in zip(ns, ns[1:]):
        if b != 2 * a:
            raise InvalidInputError(f"refinements must be nested doublings, got {a} -> {b}")
        coarse, fine = trajs[a].states, trajs[b].states[::2]
        errs[a] = float(np.max(np.linalg.norm(coarse - fine, axis=1)))
    rows = []
    for k, n in enumerate(ns):
        e = errs.get(n)
        ratio = None
        if e is not None and k + 1 < len(ns) and errs.get(ns[k + 1]) is not None:
            nxt = errs[ns[k + 1]]
            ratio = e / nxt if nxt > 0 else None
        rows.append(ConvergenceRow(n, e, ratio))
    return rows, trajs


def write_convergence_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "err_vs_next", "ratio"])
        for r in rows:
            w.writerow(
                [
                    r.n,
                    "" if r.err_vs_next is None else repr(float(r.err_vs_next)),
                    "" if r.ratio is None else repr(float(r.ratio)),
                ]
            )
