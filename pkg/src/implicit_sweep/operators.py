"""Dense symmetric operators for the viscosity (A) and elasticity (B) terms.

Everything here is finite dimensional: an operator is a dense symmetric
matrix, the coercivity constant is its smallest eigenvalue and the norm is
its largest eigenvalue in modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .errors import FactorizationError, InvalidInputError

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """Symmetric linear map on R^dim stored as a dense matrix.

    The input matrix is checked for symmetry entrywise and then replaced by
    its symmetric part, so assembly roundoff does not leak into the solvers.
    """

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidInputError(f"operator must be a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("operator has non-finite entries")
        gap = np.abs(m - m.T)
        if np.any(gap > SYMMETRY_TOL * (1.0 + np.abs(m))):
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            raise InvalidInputError(f"operator is not symmetric at ({i}, {j}): gap {gap[i, j]:.3e}")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def identity(cls, dim: int) -> SymmetricOperator:
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values) -> SymmetricOperator:
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, dim: int) -> SymmetricOperator:
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape != (self.dim,):
            raise InvalidInputError(f"expected vector of length {self.dim}, got shape {x.shape}")
        return x

    def apply(self, x) -> np.ndarray:
        return self.entries @ self._check_vector(x)

    __matmul__ = apply

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending spectrum from a dense symmetric eigensolve."""
        return sla.eigvalsh(self.entries)

    def coercivity_constant(self) -> float:
        """Largest beta with <Ax, x> >= beta |x|^2, i.e. the smallest eigenvalue."""
        return float(self.eigenvalues[0])

    def operator_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @cached_property
    def _cholesky(self):
        try:
            return sla.cho_factor(self.entries, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(f"operator is not positive definite: {exc}") from exc

    def solve(self, rhs) -> np.ndarray:
        """Solve op @ x = rhs by a cached Cholesky factorization."""
        rhs = self._check_vector(rhs)
        return sla.cho_solve(self._cholesky, rhs, check_finite=False)

    def quadratic_form(self, x) -> float:
        x = self._check_vector(x)
        return float(x @ (self.entries @ x))


def solve_spd(op: SymmetricOperator, rhs) -> np.ndarray:
    return op.solve(rhs)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        value = "" if self.value is None else f" value={self.value:.6g}"
        detail = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}{value}{detail}"


@dataclass
class ValidationReport:
    """Ordered list of named checks; passes iff every check passes."""

    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, detail="") -> Check:
        check = Check(name, bool(passed), value, detail)
        self.checks.append(check)
        return check

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def extend(self, other: ValidationReport) -> None:
        self.checks.extend(other.checks)

    def __str__(self):
        return "\n".join(c.line() for c in self.checks)


def validate_sp1(A: SymmetricOperator, B: SymmetricOperator, tol: float = 1e-12) -> ValidationReport:
    """Check that A is coercive and B is positive semidefinite.

    Symmetry holds by construction of SymmetricOperator, so those flags are
    recorded as passing.
    """
    if A.dim != B.dim:
        raise InvalidInputError(f"A has dim {A.dim} but B has dim {B.dim}")
    report = ValidationReport()
    report.add("A symmetric", True)
    report.add("B symmetric", True)
    beta = A.coercivity_constant()
    report.add("A coercive", beta > tol, beta, "beta = smallest eigenvalue of A")
    b_min = B.coercivity_constant()
    report.add("B positive semidefinite", b_min >= -tol, b_min, "smallest eigenvalue of B")
    report.add("norm of B", True, B.operator_norm())
    return report


def load_matrix(path) -> SymmetricOperator:
    """Read a matrix file: first line ``dim``, then ``dim`` rows of ``dim`` reals."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidInputError(f"{path}: empty matrix file")
    try:
        dim = int(lines[0].strip())
    except ValueError:
        raise InvalidInputError(f"{path}:1: expected integer dimension, got {lines[0]!r}") from None
    if len(lines) - 1 != dim:
        raise InvalidInputError(f"{path}: expected {dim} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=2):
        try:
            row = [float(v) for v in ln.split()]
        except ValueError:
            raise InvalidInputError(f"{path}:{k}: non-numeric entry") from None
        if len(row) != dim:
            raise InvalidInputError(f"{path}:{k}: expected {dim} entries, found {len(row)}")
        rows.append(row)
    return SymmetricOperator(np.array(rows))


def save_matrix(op: SymmetricOperator, path) -> None:
    rows = [" ".join(repr(float(v)) for v in row) for row in op.entries]
    Path(path).write_text("\n".join([str(op.dim), *rows]) + "\n")
