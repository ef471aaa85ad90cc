"""Read and write :class:`LinearProgramSpec` in CPLEX LP text format.

Only the subset we emit is understood::

    \\ comment
    Minimize
     obj: 1 x0 + 0.5 x3
    Subject To
     c0: 1 x0 - 1 x1 - 1 x2 <= 0
    Bounds
     0 <= x0 <= 1
    End

Variables are named ``x<index>``; one row or bound per line; coefficients use
17 significant digits. Files load unchanged into CPLEX, Gurobi, HiGHS, GLPK
(``--lp``) and most other solvers.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .lp import LinearProgramSpec, LinearRow

_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+x(\d+)")


def _expr(indices, coefs) -> str:
    parts = []
    for i, c in zip(indices, coefs):
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c):.17g} x{i}")
    text = " ".join(parts) if parts else "+ 0 x0"
    return text[2:] if text.startswith("+ ") else text


def dumps_lp(spec: LinearProgramSpec, comment: str = "mlcc relaxation") -> str:
    nz = np.nonzero(spec.objective)[0]
    lines = [f"\\ {comment}", "Minimize", f" obj: {_expr(nz, spec.objective[nz])}", "Subject To"]
    for r, row in enumerate(spec.rows):
        lines.append(f" c{r}: {_expr(row.indices, row.coefs)} {row.sense} {row.rhs:.17g}")
    lines.append("Bounds")
    for i in range(spec.num_vars):
        lines.append(f" {spec.lower[i]:.17g} <= x{i} <= {spec.upper[i]:.17g}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _parse_expr(text: str) -> tuple[list[int], list[float]]:
    text = text.strip()
    if not text.startswith(("+", "-")):
        text = "+ " + text
    idx, coefs = [], []
    for sign, val, var in _TERM.findall(text):
        idx.append(int(var))
        coefs.append(float(val) * (-1.0 if sign == "-" else 1.0))
    return idx, coefs


def loads_lp(text: str) -> LinearProgramSpec:
    section = None
    obj: dict[int, float] = {}
    rows: list[LinearRow] = []
    bounds: dict[int, tuple[float, float]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        head = line.lower()
        if head in ("minimize", "subject to", "bounds", "end"):
            section = head
            continue
        if section == "minimize":
            idx, coefs = _parse_expr(line.split(":", 1)[1])
            obj.update(zip(idx, coefs))
        elif section == "subject to":
            body = line.split(":", 1)[1]
            m = re.match(r"(.*)\s(<=|>=|=)\s*(\S+)$", body)
            idx, coefs = _parse_expr(m.group(1))
            rows.append(LinearRow(tuple(idx), tuple(coefs), m.group(2), float(m.group(3))))
        elif section == "bounds":
            lo, var, hi = re.match(r"(\S+)\s*<=\s*x(\d+)\s*<=\s*(\S+)", line).groups()
            bounds[int(var)] = (float(lo), float(hi))
    nvars = 1 + max([*obj, *bounds, *(i for r in rows for i in r.indices)], default=-1)
    objective = np.zeros(nvars)
    for i, c in obj.items():
        objective[i] = c
    lower = np.array([bounds.get(i, (0.0, 1.0))[0] for i in range(nvars)])
    upper = np.array([bounds.get(i, (0.0, 1.0))[1] for i in range(nvars)])
    return LinearProgramSpec(nvars, objective, rows, lower, upper)


def write_lp(spec: LinearProgramSpec, path: str | Path, comment: str = "mlcc relaxation") -> None:
    Path(path).write_text(dumps_lp(spec, comment), encoding="utf-8")


def read_lp(path: str | Path) -> LinearProgramSpec:
    return loads_lp(Path(path).read_text(encoding="utf-8"))
