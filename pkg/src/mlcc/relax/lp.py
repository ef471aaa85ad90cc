"""Linear program container and the ``solve_lp`` entry point.

Two interchangeable backends satisfy the same contract: ``"highs"`` (scipy's
HiGHS bindings, sparse, used by default) and ``"simplex"`` (the dense
tableau in :mod:`mlcc.relax.simplex`, for small problems and cross-checks).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import InfeasibleLP, UnboundedLP
from .simplex import simplex

SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class LinearRow:
    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if len(self.indices) != len(self.coefs):
            raise ValueError("indices and coefs differ in length")

    def activity(self, x: np.ndarray) -> float:
        return float(np.dot(np.asarray(self.coefs), x[list(self.indices)]))

    def violation(self, x: np.ndarray) -> float:
        a = self.activity(x)
        if self.sense == "<=":
            return max(0.0, a - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - a)
        return abs(a - self.rhs)


@dataclass
class LinearProgramSpec:
    """``min objective.x`` over box bounds and sparse inequality rows."""

    num_vars: int
    objective: np.ndarray
    rows: list[LinearRow] = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.num_vars,):
            raise ValueError("objective length must equal num_vars")
        self.lower = np.zeros(self.num_vars) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.ones(self.num_vars) if self.upper is None else np.asarray(self.upper, dtype=float)
        if not (np.isfinite(self.lower).all() and np.isfinite(self.upper).all()):
            raise ValueError("variable bounds must be finite")
        for row in self.rows:
            self._check_row(row)

    def _check_row(self, row: LinearRow) -> None:
        if any(not 0 <= i < self.num_vars for i in row.indices):
            raise ValueError(f"row references a variable outside 0..{self.num_vars - 1}")

    def add_row(self, row: LinearRow) -> None:
        self._check_row(row)
        self.rows.append(row)

    def add_rows(self, rows: Sequence[LinearRow]) -> None:
        for row in rows:
            self.add_row(row)

    def max_violation(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        worst = float(max(np.max(self.lower - x, initial=0.0), np.max(x - self.upper, initial=0.0)))
        for row in self.rows:
            worst = max(worst, row.violation(x))
        return worst

    def dense(self) -> tuple[np.ndarray, list[str], np.ndarray]:
        A = np.zeros((len(self.rows), self.num_vars))
        for r, row in enumerate(self.rows):
            np.add.at(A[r], list(row.indices), row.coefs)
        return A, [row.sense for row in self.rows], np.array([row.rhs for row in self.rows])


class LPSolution(NamedTuple):
    x: np.ndarray
    value: float


def _split_rows(spec: LinearProgramSpec):
    data = {"<=": ([], [], [], []), "=": ([], [], [], [])}
    for row in spec.rows:
        sign = -1.0 if row.sense == ">=" else 1.0
        key = "=" if row.sense == "=" else "<="
        r_idx, c_idx, vals, rhs = data[key]
        r = len(rhs)
        r_idx.extend([r] * len(row.indices))
        c_idx.extend(row.indices)
        vals.extend(sign * c for c in row.coefs)
        rhs.append(sign * row.rhs)
    out = []
    for key in ("<=", "="):
        r_idx, c_idx, vals, rhs = data[key]
        if rhs:
            out.append((sp.csr_matrix((vals, (r_idx, c_idx)), shape=(len(rhs), spec.num_vars)), np.array(rhs)))
        else:
            out.append((None, None))
    return out


def _solve_highs(spec: LinearProgramSpec, tol: float) -> LPSolution:
    (A_ub, b_ub), (A_eq, b_eq) = _split_rows(spec)
    res = linprog(
        spec.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([spec.lower, spec.upper]),
        method="highs",
        options={"primal_feasibility_tolerance": max(tol, 1e-10), "dual_feasibility_tolerance": max(tol, 1e-10)},
    )
    if res.status == 2:
        raise InfeasibleLP(res.message)
    if res.status == 3:
        raise UnboundedLP(res.message)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    x = np.clip(res.x, spec.lower, spec.upper)
    return LPSolution(x, float(spec.objective @ x))


def _solve_simplex(spec: LinearProgramSpec, tol: float) -> LPSolution:
    A, senses, b = spec.dense()
    lo, hi = spec.lower, spec.upper
    # shift to y = x - lo >= 0 and add y <= hi - lo rows
    rhs = b - A @ lo if len(b) else b
    box = np.eye(spec.num_vars)
    A_full = np.vstack([A, box]) if len(b) else box
    b_full = np.concatenate([rhs, hi - lo])
    senses_full = senses + ["<="] * spec.num_vars
    y, _ = simplex(spec.objective, A_full, senses_full, b_full, tol=tol)
    x = np.clip(y + lo, lo, hi)
    return LPSolution(x, float(spec.objective @ x))


def solve_lp(spec: LinearProgramSpec, tol: float = 1e-9, backend: str = "highs") -> LPSolution:
    """Solve ``spec`` to optimality; returns ``(x, value)``.

    Raises :class:`InfeasibleLP` or :class:`UnboundedLP`. The returned point
    is feasible within ``tol`` up to the backend's own tolerances.
    """
    if backend == "highs":
        return _solve_highs(spec, tol)
    if backend == "simplex":
        return _solve_simplex(spec, tol)
    raise ValueError(f"unknown LP backend {backend!r}")
