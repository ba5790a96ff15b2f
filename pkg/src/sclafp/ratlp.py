"""Exact rational linear programming.

Two-phase dense tableau simplex with Bland's rule.  Every optimal result
carries a dual vector, and :func:`check_certificate` verifies optimality by
substitution without trusting the solver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass
class LinearProgram:
    """``sense`` is ``"min"`` or ``"max"``.

    ``bounds`` holds one ``(lower, upper)`` pair per variable, ``None`` meaning
    unbounded on that side.  Missing bounds default to ``(0, None)``.
    """

    c: Sequence
    sense: str = "min"
    A_eq: Sequence[Sequence] = ()
    b_eq: Sequence = ()
    A_ub: Sequence[Sequence] = ()
    b_ub: Sequence = ()
    bounds: Optional[Sequence[tuple]] = None
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown sense {self.sense!r}")
        n = len(self.c)
        self.c = [_q(x) for x in self.c]
        self.A_eq = [[_q(x) for x in row] for row in self.A_eq]
        self.A_ub = [[_q(x) for x in row] for row in self.A_ub]
        self.b_eq = [_q(x) for x in self.b_eq]
        self.b_ub = [_q(x) for x in self.b_ub]
        if len(self.A_eq) != len(self.b_eq) or len(self.A_ub) != len(self.b_ub):
            raise ValueError("row count and right-hand side length differ")
        for row in list(self.A_eq) + list(self.A_ub):
            if len(row) != n:
                raise ValueError("constraint row has wrong length")
        if self.bounds is None:
            self.bounds = [(Fraction(0), None)] * n
        if len(self.bounds) != n:
            raise ValueError("bounds length differs from objective length")
        self.bounds = [
            (None if lo is None else _q(lo), None if hi is None else _q(hi))
            for lo, hi in self.bounds
        ]
        if self.names is None:
            self.names = [f"x{j}" for j in range(n)]

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass
class LPResult:
    """``dual`` is ``(y_eq, y_ub)``.  For a minimization ``y_ub <= 0``; for a
    maximization ``y_ub >= 0``.  Dual values for finite upper bounds on
    variables are in ``y_upper`` (same sign convention as ``y_ub``)."""

    status: str
    value: Optional[Fraction] = None
    primal: list = field(default_factory=list)
    dual: tuple = ((), ())
    y_upper: dict = field(default_factory=dict)
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _pivot(T, r, col):
    row = T[r]
    p = row[col]
    if p != 1:
        inv = 1 / p
        row = [x * inv for x in row]
        T[r] = row
    nz = [(j, x) for j, x in enumerate(row) if x]
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[col]
        if f:
            for j, x in nz:
                other[j] -= f * x


def _simplex(T, basis, ncols, allowed):
    """Minimize the objective stored in the last row of T.

    The objective row holds reduced costs; its last entry is minus the
    current objective value.  Returns False if unbounded.
    """
    obj = T[-1]
    m = len(T) - 1
    pivots = 0
    while True:
        col = next((j for j in range(ncols) if allowed[j] and obj[j] < 0), None)
        if col is None:
            return True, pivots
        best = None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False, pivots
        _pivot(T, best[1], col)
        basis[best[1]] = col
        pivots += 1
        obj = T[-1]


def solve(lp: LinearProgram) -> LPResult:
    n = lp.n
    sign = 1 if lp.sense == "min" else -1
    c = [sign * x for x in lp.c]

    # Column map: original variable j -> list of (standard column, coefficient)
    # together with a constant shift.
    cols = []
    shift = [Fraction(0)] * n
    upper_rows = []  # (j, width) for x' <= hi - lo
    ns = 0
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None:
            shift[j] = lo
            cols.append([(ns, Fraction(1))])
            if hi is not None:
                if hi < lo:
                    return LPResult(INFEASIBLE)
                upper_rows.append((j, ns, hi - lo))
            ns += 1
        elif hi is not None:
            shift[j] = hi
            cols.append([(ns, Fraction(-1))])
            ns += 1
        else:
            cols.append([(ns, Fraction(1)), (ns + 1, Fraction(-1))])
            ns += 2

    def expand(row):
        out = [Fraction(0)] * ns
        for j, a in enumerate(row):
            if a:
                for k, s in cols[j]:
                    out[k] += a * s
        return out

    def shifted(row, b):
        return b - sum((a * shift[j] for j, a in enumerate(row) if a), Fraction(0))

    rows = []  # (coefficients over standard columns, rhs, kind, index)
    for i, (row, b) in enumerate(zip(lp.A_eq, lp.b_eq)):
        rows.append((expand(row), shifted(row, b), "eq", i))
    for i, (row, b) in enumerate(zip(lp.A_ub, lp.b_ub)):
        rows.append((expand(row), shifted(row, b), "ub", i))
    for j, k, width in upper_rows:
        coeffs = [Fraction(0)] * ns
        coeffs[k] = Fraction(1)
        rows.append((coeffs, width, "upper", j))

    m = len(rows)
    nslack = sum(1 for r in rows if r[2] != "eq")
    # Column layout: structural | slacks | artificials | rhs
    T = []
    basis = []
    flips = []
    art_rows = []
    slack_at = ns
    width = ns + nslack + m
    for i, (coeffs, b, kind, _) in enumerate(rows):
        line = coeffs + [Fraction(0)] * (nslack + m) + [b]
        slack_col = None
        if kind != "eq":
            slack_col = slack_at
            line[slack_col] = Fraction(1)
            slack_at += 1
        flip = b < 0
        if flip:
            line = [-x for x in line]
        flips.append(flip)
        # every row carries an identity column so duals can be read off the end
        a = ns + nslack + i
        line[a] = Fraction(1)
        if slack_col is not None and not flip:
            basis.append(slack_col)
        else:
            basis.append(a)
            art_rows.append(i)
        T.append(line)

    art_start = ns + nslack
    total_cols = width
    pivots = 0
    if art_rows:
        obj = [Fraction(0)] * (total_cols + 1)
        for i in art_rows:
            for j, x in enumerate(T[i]):
                obj[j] -= x
        for i in art_rows:
            obj[art_start + i] = Fraction(0)
        T.append(obj)
        allowed = [j < art_start for j in range(total_cols)]
        _, p1 = _simplex(T, basis, total_cols, allowed)
        pivots += p1
        if T[-1][-1] != 0:
            return LPResult(INFEASIBLE, pivots=pivots)
        T.pop()
        # Drive zero-level artificials out of the basis; drop redundant rows.
        i = 0
        while i < len(T):
            if basis[i] >= art_start:
                col = next((j for j in range(art_start) if T[i][j] != 0), None)
                if col is None:
                    del T[i]
                    del basis[i]
                    continue
                _pivot(T, i, col)
                basis[i] = col
                pivots += 1
            i += 1

    obj = [Fraction(0)] * (total_cols + 1)
    cstd = [Fraction(0)] * ns
    for j in range(n):
        for k, s in cols[j]:
            cstd[k] += c[j] * s
    obj[:ns] = cstd
    for i, b in enumerate(basis):
        f = obj[b]
        if f:
            obj = [x - f * y for x, y in zip(obj, T[i])]
    T.append(obj)
    allowed = [j < art_start for j in range(total_cols)]
    ok, p2 = _simplex(T, basis, total_cols, allowed)
    pivots += p2
    if not ok:
        return LPResult(UNBOUNDED, pivots=pivots)

    xs = [Fraction(0)] * total_cols
    for i, b in enumerate(basis):
        xs[b] = T[i][-1]
    x = []
    for j in range(n):
        x.append(shift[j] + sum((s * xs[k] for k, s in cols[j]), Fraction(0)))
    value = sum((a * b for a, b in zip(lp.c, x)), Fraction(0))

    # Reduced costs of the identity columns are minus the row duals.
    y_std = [-T[-1][art_start + i] for i in range(m)]
    y_eq = [Fraction(0)] * len(lp.A_eq)
    y_ub = [Fraction(0)] * len(lp.A_ub)
    y_upper = {}
    for i, (_, _, kind, idx) in enumerate(rows):
        yv = -y_std[i] if flips[i] else y_std[i]
        yv *= sign
        if kind == "eq":
            y_eq[idx] = yv
        elif kind == "ub":
            y_ub[idx] = yv
        else:
            y_upper[idx] = yv
    return LPResult(OPTIMAL, value, x, (y_eq, y_ub), y_upper, pivots)


def check_certificate(lp: LinearProgram, res: LPResult) -> list[str]:
    """Verify primal feasibility, dual feasibility and zero duality gap.

    Returns a list of violated conditions; empty means certified optimal.
    """
    if not res.optimal:
        return ["result is not optimal"]
    problems = []
    x = res.primal
    y_eq, y_ub = res.dual
    for i, (row, b) in enumerate(zip(lp.A_eq, lp.b_eq)):
        if sum(a * v for a, v in zip(row, x)) != b:
            problems.append(f"equality row {i} violated")
    slack = []
    for i, (row, b) in enumerate(zip(lp.A_ub, lp.b_ub)):
        s = b - sum(a * v for a, v in zip(row, x))
        slack.append(s)
        if s < 0:
            problems.append(f"inequality row {i} violated")
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None and x[j] < lo or hi is not None and x[j] > hi:
            problems.append(f"bound on variable {j} violated")
    sgn = 1 if lp.sense == "min" else -1
    # Work with the minimization form: multipliers on <= rows are <= 0.
    yu = [sgn * v for v in y_ub]
    ye = [sgn * v for v in y_eq]
    yup = {j: sgn * v for j, v in res.y_upper.items()}
    c = [sgn * v for v in lp.c]
    for i, v in enumerate(yu):
        if v > 0:
            problems.append(f"dual sign wrong on inequality row {i}")
        if v and slack[i]:
            problems.append(f"complementary slackness fails on inequality row {i}")
    for j, v in yup.items():
        if v > 0:
            problems.append(f"dual sign wrong on upper bound {j}")
        if v and x[j] != lp.bounds[j][1]:
            problems.append(f"complementary slackness fails on upper bound {j}")
    dual_obj = sum((a * b for a, b in zip(ye, lp.b_eq)), Fraction(0))
    dual_obj += sum((a * b for a, b in zip(yu, lp.b_ub)), Fraction(0))
    for j in range(lp.n):
        r = c[j] - sum((row[j] * v for row, v in zip(lp.A_eq, ye)), Fraction(0))
        r -= sum((row[j] * v for row, v in zip(lp.A_ub, yu)), Fraction(0))
        lo, hi = lp.bounds[j]
        if lo is not None:
            r_up = yup.get(j, Fraction(0))
            r -= r_up
            dual_obj += r_up * hi if r_up else 0
            if r < 0:
                problems.append(f"reduced cost negative for variable {j}")
            if r and x[j] != lo:
                problems.append(f"complementary slackness fails on variable {j}")
            dual_obj += r * lo
        elif hi is not None:
            if r > 0:
                problems.append(f"reduced cost positive for variable {j}")
            if r and x[j] != hi:
                problems.append(f"complementary slackness fails on variable {j}")
            dual_obj += r * hi
        elif r != 0:
            problems.append(f"reduced cost nonzero for free variable {j}")
    primal_obj = sum((a * b for a, b in zip(c, x)), Fraction(0))
    if primal_obj != dual_obj:
        problems.append(f"duality gap {primal_obj - dual_obj}")
    return problems


# --- text format -----------------------------------------------------------

def _fmt(q: Fraction) -> str:
    return str(q)


def _expr(coeffs, names) -> str:
    parts = []
    for a, nm in zip(coeffs, names):
        if a:
            s = "-" if a < 0 else "+"
            parts.append(f"{s} {_fmt(abs(a))} {nm}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(lp: LinearProgram) -> str:
    """Serialize in the common CPLEX-style LP text format."""
    out = ["Minimize" if lp.sense == "min" else "Maximize"]
    out.append(" obj: " + _expr(lp.c, lp.names))
    out.append("Subject To")
    for i, (row, b) in enumerate(zip(lp.A_eq, lp.b_eq)):
        out.append(f" e{i}: {_expr(row, lp.names)} = {_fmt(b)}")
    for i, (row, b) in enumerate(zip(lp.A_ub, lp.b_ub)):
        out.append(f" u{i}: {_expr(row, lp.names)} <= {_fmt(b)}")
    out.append("Bounds")
    for (lo, hi), nm in zip(lp.bounds, lp.names):
        if lo is None and hi is None:
            out.append(f" {nm} free")
        elif lo is None:
            out.append(f" -inf <= {nm} <= {_fmt(hi)}")
        elif hi is None:
            if lo != 0:
                out.append(f" {nm} >= {_fmt(lo)}")
        else:
            out.append(f" {_fmt(lo)} <= {nm} <= {_fmt(hi)}")
    out.append("End")
    return "\n".join(out) + "\n"


_TERM = re.compile(r"([+-])?\s*(\d+(?:/\d+)?)?\s*([A-Za-z_][\w.]*)")
_NUM = r"-?\d+(?:/\d+)?"


def _parse_expr(text: str):
    terms = []
    text = text.strip()
    if text == "0":
        return terms
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse LP expression near {text[pos:]!r}")
        sgn = -1 if m.group(1) == "-" else 1
        coef = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        terms.append((m.group(3), sgn * coef))
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return terms


def read_lp(text: str) -> LinearProgram:
    """Parse the subset of LP text produced by :func:`write_lp`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("\\")]
    sense = None
    section = None
    obj = []
    cons = []
    bounds_lines = []
    for ln in lines:
        low = ln.lower()
        if low in ("minimize", "maximize"):
            sense = "min" if low == "minimize" else "max"
            section = "obj"
            continue
        if low == "subject to":
            section = "cons"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low == "end":
            break
        if section == "obj":
            obj = _parse_expr(ln.split(":", 1)[-1])
        elif section == "cons":
            body = ln.split(":", 1)[-1]
            m = re.match(r"(.*?)(<=|>=|=)\s*(" + _NUM + r")\s*$", body)
            if not m:
                raise ValueError(f"cannot parse constraint {ln!r}")
            cons.append((_parse_expr(m.group(1)), m.group(2), Fraction(m.group(3))))
        elif section == "bounds":
            bounds_lines.append(ln)
    if sense is None:
        raise ValueError("missing objective sense")
    names = []

    def idx(nm):
        if nm not in names:
            names.append(nm)
        return names.index(nm)

    for nm, _ in obj:
        idx(nm)
    for terms, _, _ in cons:
        for nm, _ in terms:
            idx(nm)
    bounds = {}
    for ln in bounds_lines:
        toks = ln.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[idx(toks[0])] = (None, None)
        elif len(toks) == 3 and toks[1] == ">=":
            bounds[idx(toks[0])] = (Fraction(toks[2]), None)
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            lo = None if toks[0].lower() == "-inf" else Fraction(toks[0])
            bounds[idx(toks[2])] = (lo, Fraction(toks[4]))
        else:
            raise ValueError(f"cannot parse bound {ln!r}")
    n = len(names)
    c = [Fraction(0)] * n
    for nm, a in obj:
        c[idx(nm)] += a
    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for terms, op, b in cons:
        row = [Fraction(0)] * n
        for nm, a in terms:
            row[idx(nm)] += a
        if op == "=":
            A_eq.append(row)
            b_eq.append(b)
        elif op == "<=":
            A_ub.append(row)
            b_ub.append(b)
        else:
            A_ub.append([-a for a in row])
            b_ub.append(-b)
    bl = [bounds.get(j, (Fraction(0), None)) for j in range(n)]
    return LinearProgram(c, sense, A_eq, b_eq, A_ub, b_ub, bl, names)
