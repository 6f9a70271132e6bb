"""Command-line front end.

Commands: validate, run, crosscheck, converge, contact-demo. Exit codes: 0
success, 1 check or solver failure, 2 usage or parse error.

Config keys (TOML):

    [problem]   kind = "scalar-demo" | "translated-family" | "contact"
    [time]      T (required), n
    [solver]    n (overrides [time].n), tol, max_iter, equiv_tol, crosscheck
    [output]    dir (relative to the config file)
    [initial]   u0: list for translated-family; "equilibrium" | "zero" | list for contact

    scalar-demo:        [scalar] a, b, g, u0, f
    translated-family:  [operators] A, B (nested lists) or A_file, B_file
                        [set] type = "box" (lower, upper) | "ball" (center, radius); path
    contact:            [grid] nx, ny, lx, ly
                        [materials] eta, kappa (scalar or ny x nx per-cell list)
                        [boundary] left, right, top, bottom = "gamma1" | "gamma2" | "gamma3"
                                   or a per-edge list of tags
                        [loads] f0, f2   [friction] g (scalar or (ny+1) x (nx+1) per-node list)

A path value is a number (constant) or a table with ``type``: poly (coeffs,
lowest degree first), constant (value), harmonic (amplitude, omega, offset),
table (times, values) or csv (file; column 0 is time).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import contact as ct
from .convex import Ball, Box, ConvexSet
from .errors import ConvergenceError, InconsistencyError, InvalidInputError, SweepError
from .evi import EviProblem, FrictionFunctional, compatibility_margins, crosscheck, to_sweeping
from .moving_set import (
    ClosedFormPath,
    PiecewiseLinearPath,
    TimePath,
    TranslatedFamily,
    constant_path,
    load_path_csv,
    polynomial_path,
    validate_sp2,
)
from .operators import SymmetricOperator, load_matrix, validate_sp1
from .sweeping import (
    SolverOptions,
    SweepingProblem,
    convergence_study,
    solve,
    time_grid,
    velocity_bounds,
    viability_residual,
    write_convergence_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
KINDS = ("scalar-demo", "translated-family", "contact")


class ConfigError(Exception):
    """Unparseable config or a missing/mistyped field (exit status 2)."""


@dataclass
class RunConfig:
    kind: str
    opts: SolverOptions
    n: int
    crosscheck: bool
    out_dir: Path
    evi: EviProblem | None = None
    sweeping: SweepingProblem | None = None
    contact: ct.ContactConfig | None = None
    extra: dict = field(default_factory=dict)


def _get(table: dict, key: str, where: str, kind=float, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"missing field {where}.{key}")
        return default
    value = table[key]
    try:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field {where}.{key} has invalid value {value!r}") from None


def _array(value, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field {where} must be numeric") from None
    return arr


def parse_path(spec, where: str, base_dir: Path) -> TimePath:
    """Time path from a config value: a number (constant) or a table with ``type``.

    Types: ``poly`` (coeffs), ``constant`` (value), ``harmonic`` (amplitude,
    omega, offset), ``table`` (times, values), ``csv`` (file).
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return constant_path(float(spec))
    if not isinstance(spec, dict):
        raise ConfigError(f"field {where} must be a number or a path table")
    kind = _get(spec, "type", where, str)
    if kind == "poly":
        return polynomial_path(_array(_get(spec, "coeffs", where, list), f"{where}.coeffs"))
    if kind == "constant":
        return constant_path(_array(_get(spec, "value", where, lambda v: v), f"{where}.value"))
    if kind == "harmonic":
        amp = _get(spec, "amplitude", where)
        omega = _get(spec, "omega", where)
        offset = _get(spec, "offset", where, default=0.0)
        return ClosedFormPath(
            lambda t: np.array([offset + amp * math.sin(omega * t)]),
            lambda t: np.array([amp * omega * math.cos(omega * t)]),
        )
    if kind == "table":
        times = _array(_get(spec, "times", where, list), f"{where}.times")
        values = _array(_get(spec, "values", where, list), f"{where}.values")
        return PiecewiseLinearPath(times, values)
    if kind == "csv":
        file = base_dir / _get(spec, "file", where, str)
        if not file.exists():
            raise ConfigError(f"field {where}.file: {file} does not exist")
        return load_path_csv(file)
    raise ConfigError(f"field {where}.type: unknown path type {kind!r}")


def _operator(table: dict, key: str, where: str, base_dir: Path) -> SymmetricOperator:
    file_key = f"{key}_file"
    if file_key in table:
        file = base_dir / _get(table, file_key, where, str)
        if not file.exists():
            raise ConfigError(f"field {where}.{file_key}: {file} does not exist")
        return load_matrix(file)
    if key not in table:
        raise ConfigError(f"missing field {where}.{key}")
    m = _array(table[key], f"{where}.{key}")
    return SymmetricOperator(np.atleast_2d(m))


def _parse_set(table: dict, base_dir: Path) -> ConvexSet:
    kind = _get(table, "type", "set", str)
    if kind == "box":
        return Box(_array(_get(table, "lower", "set", list), "set.lower"), _array(_get(table, "upper", "set", list), "set.upper"))
    if kind == "ball":
        return Ball(_array(_get(table, "center", "set", list), "set.center"), _get(table, "radius", "set"))
    raise ConfigError(f"field set.type: unknown set type {kind!r}")


def _section(doc: dict, name: str, required: bool = True) -> dict:
    if name not in doc:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(doc[name], dict):
        raise ConfigError(f"[{name}] must be a table")
    return doc[name]


def load_config(path, n: int | None = None, tol: float | None = None, out: str | None = None) -> RunConfig:
    """Parse a TOML run config. Semantic invariants are checked later by ``validate``."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    problem = _section(doc, "problem")
    kind = _get(problem, "kind", "problem", str)
    if kind not in KINDS:
        raise ConfigError(f"field problem.kind must be one of {KINDS}, got {kind!r}")
    solver = _section(doc, "solver", required=False)
    time = _section(doc, "time")
    steps = n if n is not None else _get(solver, "n", "solver", int, default=None)
    if steps is None:
        steps = _get(time, "n", "time", int)
    try:
        opts = SolverOptions(
            tol=tol if tol is not None else _get(solver, "tol", "solver", default=1e-10),
            max_iter=_get(solver, "max_iter", "solver", int, default=50_000),
            equiv_tol=_get(solver, "equiv_tol", "solver", default=1e-6),
        )
    except InvalidInputError as exc:
        raise ConfigError(f"field {exc.field}: {exc}") from None
    if steps < 1:
        raise ConfigError("field solver.n must be >= 1")
    output = _section(doc, "output", required=False)
    out_dir = Path(out) if out is not None else base / _get(output, "dir", "output", str, default="out")
    cfg = RunConfig(kind, opts, steps, _get(solver, "crosscheck", "solver", bool, default=False), out_dir)
    T = _get(time, "T", "time")
    initial = _section(doc, "initial", required=False)

    if kind == "scalar-demo":
        sc = _section(doc, "scalar")
        A = SymmetricOperator([[_get(sc, "a", "scalar")]])
        B = SymmetricOperator([[_get(sc, "b", "scalar")]])
        g = _get(sc, "g", "scalar")
        if "f" not in sc:
            raise ConfigError("missing field scalar.f")
        load = parse_path(sc["f"], "scalar.f", base)
        u0 = _get(sc, "u0", "scalar", default=0.0)
        cfg.extra["g"] = g
        if g < 0:
            cfg.extra["invalid"] = InvalidInputError("friction bound must be >= 0", field="scalar.g")
            return cfg
        cfg.evi = EviProblem(A, B, FrictionFunctional([g]), load, [u0], T)
    elif kind == "translated-family":
        ops = _section(doc, "operators")
        A = _operator(ops, "A", "operators", base)
        B = _operator(ops, "B", "operators", base)
        st = _section(doc, "set")
        base_set = _parse_set(st, base)
        if "path" not in st:
            raise ConfigError("missing field set.path")
        family = TranslatedFamily(base_set, parse_path(st["path"], "set.path", base), T)
        u0 = _array(_get(initial, "u0", "initial", list), "initial.u0")
        try:
            cfg.sweeping = SweepingProblem(A, B, family, u0, T)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None
    else:
        grid = _section(doc, "grid")
        mat = _section(doc, "materials")
        bnd = _section(doc, "boundary", required=False)
        loads = _section(doc, "loads", required=False)
        fr = _section(doc, "friction")
        u0_spec = initial.get("u0", "equilibrium")
        if not isinstance(u0_spec, str):
            u0_spec = _array(u0_spec, "initial.u0")
        boundary = dict(ct.DEFAULT_BOUNDARY)
        boundary.update(bnd)
        cfg.contact = ct.ContactConfig(
            nx=_get(grid, "nx", "grid", int),
            ny=_get(grid, "ny", "grid", int),
            lx=_get(grid, "lx", "grid", default=1.0),
            ly=_get(grid, "ly", "grid", default=1.0),
            eta=_array(mat.get("eta", 1.0), "materials.eta"),
            kappa=_array(mat.get("kappa", 1.0), "materials.kappa"),
            boundary=boundary,
            f0=parse_path(loads.get("f0", 0.0), "loads.f0", base),
            f2=parse_path(loads.get("f2", 0.0), "loads.f2", base),
            g=_array(_get(fr, "g", "friction", lambda v: v), "friction.g"),
            u0=u0_spec,
            T=T,
            n=steps,
        )
    return cfg


def _fmt(x) -> str:
    return repr(float(x))


def _sweeping_form(cfg: RunConfig) -> SweepingProblem:
    if cfg.sweeping is not None:
        return cfg.sweeping
    return to_sweeping(cfg.evi)


def _prepare(cfg: RunConfig):
    """Build derived problems; returns (report lines, ok, contact system or None)."""
    lines: list[str] = []
    ok = True
    system = None
    if "invalid" in cfg.extra:
        exc = cfg.extra["invalid"]
        return [f"[FAIL] {exc.field}: {exc}"], False, None
    if cfg.kind == "contact":
        try:
            system = ct.assemble_system(cfg.contact)
        except InvalidInputError as exc:
            return [f"[FAIL] {exc.field or 'config'}: {exc}"], False, None
        cfg.evi = system.problem
        lines.append(f"[PASS] contact config invariants (free dofs: {system.problem.dim})")
    return lines, ok, system


def cmd_validate(cfg: RunConfig) -> int:
    lines, ok, system = _prepare(cfg)
    if not ok:
        print("\n".join(lines))
        return EXIT_FAIL
    A, B = (cfg.evi.A, cfg.evi.B) if cfg.evi is not None else (cfg.sweeping.A, cfg.sweeping.B)
    sp1 = validate_sp1(A, B)
    lines += [c.line() for c in sp1.checks]
    ok &= sp1.passed
    if cfg.evi is not None:
        e = cfg.evi
        margins = compatibility_margins(e.B, e.u0, e.load(0.0), e.J)
        k = int(np.argmin(margins))
        where = f"grid node {int(system.free_nodes[k])}" if system is not None else f"dof {k}"
        passed = margins[k] >= -1e-8
        ok &= passed
        lines.append(
            f"[{'PASS' if passed else 'FAIL'}] compatibility f(0) - B u0 in dJ(0) margin={margins[k]:.6g} (worst at {where})"
        )
        if not passed:
            print("\n".join(lines))
            return EXIT_FAIL
    p = _sweeping_form(cfg)
    gap = p.initial_viability_gap()
    viable = gap <= 1e-8
    ok &= viable
    lines.append(f"[{'PASS' if viable else 'FAIL'}] initial viability dist(B u0, C(0)) value={gap:.6g}")
    sp2 = validate_sp2(p.sets, time_grid(p.T, cfg.n))
    lines += [c.line() for c in sp2.checks]
    ok &= sp2.passed
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def _report_run(traj, p: SweepingProblem) -> list[str]:
    truncated, sharp = velocity_bounds(p)
    return [
        f"steps: {traj.n}",
        f"final_state_norm: {_fmt(np.linalg.norm(traj.states[-1]))}",
        f"max_velocity: {_fmt(traj.max_speed())}",
        f"velocity_bound_truncated: {_fmt(truncated)}",
        f"velocity_bound_sharp: {_fmt(sharp)}",
        f"viability_residual: {_fmt(viability_residual(traj, p))}",
    ]


def _solver_failure(exc: SweepError) -> int:
    step = getattr(exc, "step", None)
    suffix = f" at step {step}" if step is not None else ""
    print(f"solver failure{suffix}: {exc}", file=sys.stderr)
    return EXIT_FAIL


def cmd_run(cfg: RunConfig) -> int:
    lines, ok, system = _prepare(cfg)
    if not ok:
        print("\n".join(lines))
        return EXIT_FAIL
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.kind == "contact":
            traj, report, cc = ct.run_contact(cfg.contact, cfg.opts, with_crosscheck=cfg.crosscheck)
            report.to_csv(cfg.out_dir / "stickslip.csv")
            p = to_sweeping(cfg.evi)
        else:
            p = _sweeping_form(cfg)
            traj = solve(p, cfg.n, cfg.opts)
            report = cc = None
    except (ConvergenceError, InconsistencyError) as exc:
        return _solver_failure(exc)
    except InvalidInputError as exc:
        print(f"rejected input: {exc}", file=sys.stderr)
        return EXIT_FAIL
    traj.to_csv(cfg.out_dir / "trajectory.csv")
    out = _report_run(traj, p)
    if report is not None:
        onset = report.slip_onset()
        out += [
            f"slip_onset: {'none' if onset is None else _fmt(onset)}",
            f"equilibrium_residual: {_fmt(report.equilibrium_residual)}",
            f"traction_excess: {_fmt(report.traction_excess())}",
            f"sign_violations: {report.sign_violations()}",
        ]
    if cc is not None:
        out.append(f"crosscheck: {'pass' if cc.passed else 'fail'}")
    out.append(f"output_dir: {cfg.out_dir}")
    print("\n".join(out))
    return EXIT_OK if cc is None or cc.passed else EXIT_FAIL


def cmd_crosscheck(cfg: RunConfig) -> int:
    if cfg.kind == "translated-family":
        print("crosscheck needs an EVI form (kinds scalar-demo or contact)", file=sys.stderr)
        return EXIT_USAGE
    lines, ok, _ = _prepare(cfg)
    if not ok:
        print("\n".join(lines))
        return EXIT_FAIL
    try:
        report = crosscheck(cfg.evi, cfg.n, cfg.opts)
    except (ConvergenceError, InconsistencyError) as exc:
        return _solver_failure(exc)
    except InvalidInputError as exc:
        print(f"rejected input: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def parse_ns(text: str) -> list[int]:
    try:
        ns = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"--ns must be a comma-separated list of integers, got {text!r}") from None
    if len(ns) < 2:
        raise ConfigError("--ns needs at least two values")
    return ns


def cmd_converge(cfg: RunConfig, ns: list[int]) -> int:
    lines, ok, _ = _prepare(cfg)
    if not ok:
        print("\n".join(lines))
        return EXIT_FAIL
    try:
        rows, _ = convergence_study(_sweeping_form(cfg), ns, cfg.opts)
    except (ConvergenceError, InconsistencyError) as exc:
        return _solver_failure(exc)
    except InvalidInputError as exc:
        print(f"rejected input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(rows, cfg.out_dir / "convergence.csv")
    for r in rows:
        err = "" if r.err_vs_next is None else _fmt(r.err_vs_next)
        ratio = "" if r.ratio is None else _fmt(r.ratio)
        print(f"n: {r.n} err_vs_next: {err} ratio: {ratio}")
    return EXIT_OK


def cmd_contact_demo(out: Path, n: int | None, tol: float | None) -> int:
    demo = ct.demo_config()
    if n is not None:
        demo = replace(demo, n=n)
    opts = SolverOptions(tol=tol) if tol is not None else SolverOptions()
    cfg = RunConfig("contact", opts, demo.n, True, out, contact=demo)
    return cmd_run(cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="implicit-sweep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--out", help="output directory (overrides [output].dir)")
        p.add_argument("--n", type=int, help="number of time steps")
        p.add_argument("--tol", type=float, help="inner solver tolerance")

    common(sub.add_parser("validate", help="check operator, set-motion and compatibility assumptions"))
    common(sub.add_parser("run", help="solve and write trajectory.csv"))
    common(sub.add_parser("crosscheck", help="compare EVI and sweeping solutions"))
    conv = sub.add_parser("converge", help="nested refinement study, writes convergence.csv")
    common(conv)
    conv.add_argument("--ns", required=True, help="comma-separated nested step counts, e.g. 250,500,1000")
    common(sub.add_parser("contact-demo", help="run the built-in 8x8 contact demo"), config_required=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.n is not None and args.n < 1:
        print("error: --n must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.tol is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "contact-demo":
            return cmd_contact_demo(Path(args.out or "contact_demo_out"), args.n, args.tol)
        ns = parse_ns(args.ns) if args.command == "converge" else None
        cfg = load_config(args.config, n=args.n, tol=args.tol, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "validate":
        return cmd_validate(cfg)
    if args.command == "run":
        return cmd_run(cfg)
    if args.command == "crosscheck":
        return cmd_crosscheck(cfg)
    return cmd_converge(cfg, ns)


if __name__ == "__main__":
    sys.exit(main())
