"""Antiplane frictional contact on a rectangle, assembled into an EVI problem.

P1 finite elements on a structured grid (each cell split along its
lower-left/upper-right diagonal). Clamped (gamma1) nodes are eliminated;
loads and the friction integral use lumped masses, so the friction term is
exactly a weighted l1 norm of the nodal velocities on gamma3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidInputError
from .evi import (
    CrosscheckReport,
    EviProblem,
    FrictionFunctional,
    compatibility_margins,
    crosscheck,
    solve_evi,
)
from .moving_set import PiecewiseLinearPath, TimePath, constant_path, polynomial_path
from .operators import SymmetricOperator
from .sweeping import VIABILITY_TOL, SolverOptions, Trajectory

SIDES = ("bottom", "right", "top", "left")
TAGS = ("gamma1", "gamma2", "gamma3")
DEFAULT_BOUNDARY = {"left": "gamma1", "right": "gamma3", "top": "gamma2", "bottom": "gamma2"}


@dataclass
class ContactConfig:
    nx: int = 8
    ny: int = 8
    lx: float = 1.0
    ly: float = 1.0
    eta: float | np.ndarray = 1.0
    kappa: float | np.ndarray = 1.0
    boundary: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDARY))
    f0: TimePath = field(default_factory=lambda: constant_path(0.0))
    f2: TimePath = field(default_factory=lambda: constant_path(0.0))
    g: float | np.ndarray = 1.0
    u0: str | np.ndarray = "equilibrium"
    T: float = 1.0
    n: int = 200

    def cell_field(self, name: str) -> np.ndarray:
        value = np.asarray(getattr(self, name), dtype=float)
        if value.ndim == 0:
            return np.full((self.ny, self.nx), float(value))
        if value.shape != (self.ny, self.nx):
            raise InvalidInputError(
                f"{name} must be a scalar or a ({self.ny}, {self.nx}) per-cell array", field=f"materials.{name}"
            )
        return value

    def edge_tags(self) -> dict[str, list[str]]:
        counts = {"bottom": self.nx, "top": self.nx, "left": self.ny, "right": self.ny}
        tags = {}
        for side in SIDES:
            if side not in self.boundary:
                raise InvalidInputError(f"boundary side {side!r} has no tag", field=f"boundary.{side}")
            spec = self.boundary[side]
            per_edge = [spec] * counts[side] if isinstance(spec, str) else list(spec)
            if len(per_edge) != counts[side]:
                raise InvalidInputError(
                    f"boundary.{side} needs {counts[side]} edge tags, got {len(per_edge)}", field=f"boundary.{side}"
                )
            for tag in per_edge:
                if tag not in TAGS:
                    raise InvalidInputError(f"unknown boundary tag {tag!r}", field=f"boundary.{side}")
            tags[side] = per_edge
        extra = set(self.boundary) - set(SIDES)
        if extra:
            raise InvalidInputError(f"unknown boundary side(s) {sorted(extra)}", field="boundary")
        return tags

    def validate(self) -> None:
        """Raise InvalidInputError naming the offending field."""
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise InvalidInputError("grid needs nx, ny >= 1", field="grid.nx" if self.nx < 1 else "grid.ny")
        if not (self.lx > 0):
            raise InvalidInputError("lx must be positive", field="grid.lx")
        if not (self.ly > 0):
            raise InvalidInputError("ly must be positive", field="grid.ly")
        eta = self.cell_field("eta")
        if not np.all(np.isfinite(eta)) or np.min(eta) <= 0:
            raise InvalidInputError("viscosity eta must be >= eta* > 0 everywhere", field="materials.eta")
        kappa = self.cell_field("kappa")
        if not np.all(np.isfinite(kappa)) or np.min(kappa) < 0:
            raise InvalidInputError("elasticity kappa must be >= 0 everywhere", field="materials.kappa")
        g = np.asarray(self.g, dtype=float)
        if g.ndim not in (0, 2) or (g.ndim == 2 and g.shape != (self.ny + 1, self.nx + 1)):
            raise InvalidInputError(
                f"g must be a scalar or a ({self.ny + 1}, {self.nx + 1}) per-node array", field="friction.g"
            )
        if not np.all(np.isfinite(g)) or np.min(g) < 0:
            raise InvalidInputError("friction bound g must be >= 0", field="friction.g")
        tags = self.edge_tags()
        if not any("gamma1" in t for t in tags.values()):
            raise InvalidInputError("gamma1 (clamped boundary) must be nonempty", field="boundary")
        for name in ("f0", "f2"):
            path = getattr(self, name)
            if path.dim != 1:
                raise InvalidInputError(f"{name} must be a scalar time path", field=f"loads.{name}")
        if not (self.T > 0):
            raise InvalidInputError("horizon T must be positive", field="time.T")
        if int(self.n) < 1:
            raise InvalidInputError("n must be >= 1", field="time.n")


def node_id(i: int, j: int, nx: int) -> int:
    return j * (nx + 1) + i


def node_coords(nx, ny, lx, ly) -> np.ndarray:
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def triangles(nx: int, ny: int) -> list[tuple[int, int, int, int, int]]:
    """(v0, v1, v2, cell_i, cell_j), counterclockwise, diagonal from (i, j) to (i+1, j+1)."""
    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = node_id(i, j, nx), node_id(i + 1, j, nx)
            c, d = node_id(i + 1, j + 1, nx), node_id(i, j + 1, nx)
            tris.append((a, b, c, i, j))
            tris.append((a, c, d, i, j))
    return tris


def _p1_element(p: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient-gradient matrix (integrated) and area of a P1 triangle."""
    V = np.column_stack([np.ones(3), p])
    area = 0.5 * abs(np.linalg.det(V))
    grads = np.linalg.inv(V)[1:, :]
    return area * grads.T @ grads, area


def stiffness_matrix(nx, ny, lx, ly, coef) -> np.ndarray:
    """Full (all-node) P1 stiffness for the form int coef grad u . grad v."""
    coef = np.broadcast_to(np.asarray(coef, dtype=float), (ny, nx))
    xy = node_coords(nx, ny, lx, ly)
    K = np.zeros((len(xy), len(xy)))
    for v0, v1, v2, i, j in triangles(nx, ny):
        idx = [v0, v1, v2]
        ke, _ = _p1_element(xy[idx])
        K[np.ix_(idx, idx)] += coef[j, i] * ke
    return K


def lumped_mass(nx, ny, lx, ly) -> np.ndarray:
    xy = node_coords(nx, ny, lx, ly)
    m = np.zeros(len(xy))
    for v0, v1, v2, _, _ in triangles(nx, ny):
        _, area = _p1_element(xy[[v0, v1, v2]])
        m[[v0, v1, v2]] += area / 3.0
    return m


def boundary_edges(nx, ny) -> dict[str, list[tuple[int, int]]]:
    return {
        "bottom": [(node_id(i, 0, nx), node_id(i + 1, 0, nx)) for i in range(nx)],
        "top": [(node_id(i, ny, nx), node_id(i + 1, ny, nx)) for i in range(nx)],
        "left": [(node_id(0, j, nx), node_id(0, j + 1, nx)) for j in range(ny)],
        "right": [(node_id(nx, j, nx), node_id(nx, j + 1, nx)) for j in range(ny)],
    }


def boundary_masses(cfg: ContactConfig) -> dict[str, np.ndarray]:
    """Lumped boundary mass per tag: each edge gives half its length to each endpoint."""
    n_nodes = (cfg.nx + 1) * (cfg.ny + 1)
    lengths = {"bottom": cfg.lx / cfg.nx, "top": cfg.lx / cfg.nx, "left": cfg.ly / cfg.ny, "right": cfg.ly / cfg.ny}
    out = {tag: np.zeros(n_nodes) for tag in TAGS}
    tags = cfg.edge_tags()
    for side, edges in boundary_edges(cfg.nx, cfg.ny).items():
        for (a, b), tag in zip(edges, tags[side]):
            out[tag][[a, b]] += 0.5 * lengths[side]
    return out


@dataclass(frozen=True, eq=False)
class LoadPath(TimePath):
    """f(t) = f0(t) * body + f2(t) * traction, both scalar paths times fixed vectors."""

    f0: TimePath
    f2: TimePath
    body: np.ndarray
    traction: np.ndarray

    @property
    def dim(self) -> int:
        return self.body.shape[0]

    def __call__(self, t):
        return self.f0(t)[0] * self.body + self.f2(t)[0] * self.traction

    def derivative(self, t):
        return self.f0.derivative(t)[0] * self.body + self.f2.derivative(t)[0] * self.traction

    def arc_length(self, s, t):
        if t == s:
            return 0.0
        knots = []
        for p in (self.f0, self.f2):
            if isinstance(p, PiecewiseLinearPath):
                knots.extend(k for k in p.times if s < k < t)
        speed = lambda tau: float(np.linalg.norm(self.derivative(tau)))  # noqa: E731
        value, _ = integrate.quad(
            speed, s, t, epsabs=1e-10, epsrel=1e-12, limit=500, points=sorted(knots) or None
        )
        return float(value)


@dataclass(frozen=True, eq=False)
class ContactSystem:
    """Assembled problem plus the bookkeeping needed to report per-node results."""

    problem: EviProblem
    free_nodes: np.ndarray
    friction_dofs: np.ndarray
    friction_weights: np.ndarray
    config: ContactConfig

    @property
    def interior_dofs(self) -> np.ndarray:
        """Free dofs that carry no friction weight."""
        mask = np.ones(self.problem.dim, dtype=bool)
        mask[self.friction_dofs] = False
        return np.flatnonzero(mask)


def assemble_system(cfg: ContactConfig) -> ContactSystem:
    cfg.validate()
    nx, ny = int(cfg.nx), int(cfg.ny)
    n_nodes = (nx + 1) * (ny + 1)
    bmass = boundary_masses(cfg)
    clamped = np.zeros(n_nodes, dtype=bool)
    tags = cfg.edge_tags()
    for side, edges in boundary_edges(nx, ny).items():
        for (a, b), tag in zip(edges, tags[side]):
            if tag == "gamma1":
                clamped[[a, b]] = True
    free = np.flatnonzero(~clamped)
    ix = np.ix_(free, free)
    A = SymmetricOperator(stiffness_matrix(nx, ny, cfg.lx, cfg.ly, cfg.cell_field("eta"))[ix])
    B = SymmetricOperator(stiffness_matrix(nx, ny, cfg.lx, cfg.ly, cfg.cell_field("kappa"))[ix])
    m = lumped_mass(nx, ny, cfg.lx, cfg.ly)[free]
    m2 = bmass["gamma2"][free]
    m3 = bmass["gamma3"][free]
    g_nodes = np.broadcast_to(np.asarray(cfg.g, dtype=float), (ny + 1, nx + 1)).ravel()[free]
    weights = g_nodes * m3
    J = FrictionFunctional(weights)
    load = LoadPath(cfg.f0, cfg.f2, m, m2)

    if isinstance(cfg.u0, str):
        if cfg.u0 == "zero":
            u0 = np.zeros(len(free))
        elif cfg.u0 == "equilibrium":
            # B u0 = f(0) puts every node in equilibrium; only possible when B is invertible
            u0 = B.solve(load(0.0)) if B.coercivity_constant() > 1e-12 else np.zeros(len(free))
        else:
            raise InvalidInputError(f"unknown u0 mode {cfg.u0!r}", field="initial.u0")
    else:
        u0 = np.asarray(cfg.u0, dtype=float)
        if u0.shape == (n_nodes,):
            u0 = u0[free]
        if u0.shape != (len(free),):
            raise InvalidInputError(
                f"u0 needs {len(free)} free-node values or {n_nodes} grid values", field="initial.u0"
            )
    problem = EviProblem(A, B, J, load, u0, float(cfg.T))
    return ContactSystem(problem, free, np.flatnonzero(m3 > 0), weights, cfg)


def assemble(cfg: ContactConfig) -> EviProblem:
    return assemble_system(cfg).problem


def compatibility_violation(system: ContactSystem, tol: float = VIABILITY_TOL) -> tuple[int, float] | None:
    """(grid node, margin) of the worst equilibrium violation at t = 0, or None."""
    e = system.problem
    margins = compatibility_margins(e.B, e.u0, e.load(0.0), e.J)
    k = int(np.argmin(margins))
    if margins[k] >= -tol:
        return None
    return int(system.free_nodes[k]), float(margins[k])


STICK, SLIP = 0, 1


@dataclass
class StickSlipReport:
    """Per friction node and time node: regime and traction residual (A w + B u - f)_k."""

    times: np.ndarray
    node_index: np.ndarray
    states: np.ndarray
    traction: np.ndarray
    velocity: np.ndarray
    bound: np.ndarray
    equilibrium_residual: float

    def records(self):
        for i, t in enumerate(self.times):
            for k, node in enumerate(self.node_index):
                yield float(t), int(node), int(self.states[i, k]), float(self.traction[i, k])

    @property
    def all_stick(self) -> bool:
        return not np.any(self.states == SLIP)

    @property
    def any_slip(self) -> bool:
        return bool(np.any(self.states == SLIP))

    def traction_excess(self) -> float:
        """max over records of |traction| - bound (<= 0 means the friction bound holds)."""
        if self.traction.size == 0:
            return -np.inf
        return float(np.max(np.abs(self.traction) - self.bound[None, :]))

    def sign_violations(self) -> int:
        """Slip records whose traction does not oppose the velocity."""
        slip = self.states == SLIP
        return int(np.sum(slip & (self.traction * np.sign(self.velocity) >= 0)))

    def slip_onset(self) -> float | None:
        """Earliest time with a slipping friction node."""
        rows = np.flatnonzero(np.any(self.states == SLIP, axis=1))
        return float(self.times[rows[0]]) if rows.size else None

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,node_index,state,traction_residual\n")
            for t, node, state, tr in self.records():
                fh.write(f"{t!r},{node},{state},{tr!r}\n")


def stick_slip_report(system: ContactSystem, traj: Trajectory, tol: float) -> StickSlipReport:
    e = system.problem
    k3 = system.friction_dofs
    interior = system.interior_dofs
    n = traj.n
    traction = np.empty((n, len(k3)))
    states = np.empty((n, len(k3)), dtype=int)
    velocity = np.empty((n, len(k3)))
    eq_res = 0.0
    for i in range(n):
        w = traj.velocities[i]
        r = e.A.apply(w) + e.B.apply(traj.states[i]) - e.load(traj.times[i + 1])
        traction[i] = r[k3]
        velocity[i] = w[k3]
        states[i] = np.where(np.abs(w[k3]) > 10.0 * tol, SLIP, STICK)
        if interior.size:
            eq_res = max(eq_res, float(np.max(np.abs(r[interior]))))
    return StickSlipReport(
        traj.times[1:], system.free_nodes[k3], states, traction, velocity, system.friction_weights[k3], eq_res
    )


def run_contact(
    cfg: ContactConfig, opts: SolverOptions = SolverOptions(), with_crosscheck: bool = True
) -> tuple[Trajectory, StickSlipReport, CrosscheckReport | None]:
    """Solve the assembled EVI (and optionally its sweeping form) and classify stick/slip."""
    system = assemble_system(cfg)
    e = system.problem
    report = e.validate()
    if not report.passed:
        violation = compatibility_violation(system)
        if violation is not None:
            node, margin = violation
            raise InvalidInputError(
                f"initial state not in equilibrium at grid node {node}: margin {margin:.3e}", field="initial.u0"
            )
        raise InvalidInputError("contact problem is invalid:\n" + str(report))
    if with_crosscheck:
        report = crosscheck(e, int(cfg.n), opts)
        traj = report.evi
    else:
        report = None
        traj = solve_evi(e, int(cfg.n), opts)
    return traj, stick_slip_report(system, traj, opts.tol), report


def demo_config() -> ContactConfig:
    """Built-in 8x8 demo: ramped body force and traction, slip develops on gamma3."""
    return ContactConfig(
        nx=8,
        ny=8,
        lx=1.0,
        ly=1.0,
        eta=1.0,
        kappa=1.0,
        f0=polynomial_path([0.0, 1.0]),
        f2=polynomial_path([0.0, 0.5]),
        g=1.0,
        u0="equilibrium",
        T=1.0,
        n=200,
    )
