"""Dense two-phase tableau simplex with Bland's rule.

Works on the standard form ``min c.x  s.t.  A x (<=|>=|=) b,  x >= 0``.
Meant for small problems: the tableau is a dense numpy array and every pivot
touches all of it.
"""

from __future__ import annotations

import numpy as np

from ..errors import InfeasibleLP, UnboundedLP


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run(T: np.ndarray, basis: list[int], ncols: int, tol: float, max_iter: int) -> None:
    """Minimise the objective stored in the last row over the first ``ncols`` columns."""
    m = len(basis)
    for _ in range(max_iter):
        obj = T[-1, :ncols]
        entering = next((j for j in range(ncols) if obj[j] < -tol), None)
        if entering is None:
            return
        col = T[:m, entering]
        rows = np.nonzero(col > tol)[0]
        if rows.size == 0:
            raise UnboundedLP("objective unbounded below")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows leave the one with the smallest basic index
        leave = min(ties, key=lambda r: basis[r])
        _pivot(T, leave, entering)
        basis[leave] = entering
    raise RuntimeError("simplex iteration limit reached")


def simplex(c, A, senses, b, tol: float = 1e-9, max_iter: int = 50_000) -> tuple[np.ndarray, float]:
    """Solve ``min c.x`` subject to rows ``A[i] x senses[i] b[i]`` and ``x >= 0``.

    Returns ``(x, value)``; raises :class:`InfeasibleLP` or :class:`UnboundedLP`.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.size)
    b = np.asarray(b, dtype=float)
    senses = list(senses)
    m, nv = A.shape

    # flip rows so every right-hand side is nonnegative
    A = A.copy()
    b = b.copy()
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]

    n_slack = sum(s != "=" for s in senses)
    n_art = sum(s != "<=" for s in senses)
    ncols = nv + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nv] = A
    T[:m, -1] = b
    basis = [0] * m
    artificial = []
    s_col, a_col = nv, nv + n_slack
    for i, sense in enumerate(senses):
        if sense == "<=":
            T[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if sense == ">=":
                T[i, s_col] = -1.0
                s_col += 1
            T[i, a_col] = 1.0
            basis[i] = a_col
            artificial.append(a_col)
            a_col += 1

    # phase 1: minimise the sum of artificials
    if artificial:
        T[-1, :] = 0.0
        T[-1, artificial] = 1.0
        for i, bcol in enumerate(basis):
            if bcol in artificial:
                T[-1] -= T[i]
        _run(T, basis, ncols, tol, max_iter)
        if -T[-1, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)) * 10:
            raise InfeasibleLP(f"phase 1 optimum {-T[-1, -1]:.3g} > 0")
        # drive artificials out of the basis where possible
        art = set(artificial)
        for i in range(m):
            if basis[i] in art:
                cand = [j for j in range(nv + n_slack) if abs(T[i, j]) > tol]
                if cand:
                    _pivot(T, i, cand[0])
                    basis[i] = cand[0]
        keep_cols = nv + n_slack
    else:
        keep_cols = ncols

    # phase 2 on the original columns; redundant rows keep a zero artificial
    T2 = np.zeros((m + 1, keep_cols + 1))
    T2[:m, :keep_cols] = T[:m, :keep_cols]
    T2[:m, -1] = T[:m, -1]
    T2[-1, :nv] = c
    for i, bcol in enumerate(basis):
        if bcol < keep_cols:
            T2[-1] -= T2[-1, bcol] * T2[i]
    live = [i for i in range(m) if basis[i] < keep_cols]
    T2 = T2[live + [m]]
    basis = [basis[i] for i in live]
    _run(T2, basis, keep_cols, tol, max_iter)

    x = np.zeros(keep_cols)
    for i, bcol in enumerate(basis):
        x[bcol] = T2[i, -1]
    x = x[:nv]
    return x, float(c @ x)
