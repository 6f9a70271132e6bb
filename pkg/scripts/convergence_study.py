"""Nested-refinement studies for the two scalar oracles.

Writes one CSV per problem with the self-convergence table and the error
against the exact solution.
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from implicit_sweep import Box, Reflect, SolverOptions, SweepingProblem, SymmetricOperator, TranslatedFamily
from implicit_sweep.moving_set import polynomial_path
from implicit_sweep.sweeping import convergence_study


def moving_interval():
    fam = TranslatedFamily(Box([0.0], [1.0]), polynomial_path([[0.0], [1.0]]), 1.0)
    p = SweepingProblem(SymmetricOperator.identity(1), SymmetricOperator.zeros(1), fam, [0.0], 1.0)
    return p, lambda t: t**2 / 2


def stick_slip():
    fam = TranslatedFamily(Reflect(Box([-1.0], [1.0])), polynomial_path([[0.0], [1.0]]), 3.0)
    one = SymmetricOperator.identity(1)
    p = SweepingProblem(one, one, fam, [0.0], 3.0)
    return p, lambda t: np.where(t <= 1.0, 0.0, t - 2.0 + np.exp(1.0 - t))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="250,500,1000,2000,4000")
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()
    ns = [int(v) for v in args.ns.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in (("moving_interval", moving_interval), ("stick_slip", stick_slip)):
        p, exact = build()
        rows, trajs = convergence_study(p, ns, SolverOptions())
        path = out / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "err_vs_next", "ratio", "err_vs_exact"])
            for r in rows:
                t = trajs[r.n]
                err = float(np.max(np.abs(t.states[:, 0] - exact(t.times))))
                w.writerow([r.n, "" if r.err_vs_next is None else repr(r.err_vs_next),
                            "" if r.ratio is None else repr(r.ratio), repr(err)])
                print(f"{name:16s} n={r.n:6d} err_vs_exact={err:.3e} ratio={r.ratio}")
        print(f"wrote {path}")
    print(f"stick-slip exact u(3) = {1 + math.exp(-2):.6f}")


if __name__ == "__main__":
    main()
