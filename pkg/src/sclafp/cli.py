"""Command line front end, the closed-form oracle, exponent sweeps and fits."""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ._linalg import nullspace
from .master import SclOptions, scl
from .presentation import NotABoundary, ParseError, parse_chain, parse_group

DEFAULT_TEMPLATE = "abelian A = <a>; abelian B = <b>; amalg a^{p} = b^{q}"


def formula_scl_commutator(m: int, n: int, p, q) -> Fraction:
    """Closed form for scl([a^m, b^n]) in <a, b | a^p = b^q>.

    p or q may be None (infinity), which drops the relation: the free value 1/2.
    """
    if min(m, n, *(x for x in (p, q) if x is not None)) < 1:
        raise ValueError("all arguments must be positive")
    half = Fraction(1, 2)
    if p is None or q is None:
        return half
    return max(min(half - Fraction(m, math.lcm(m, p)), half - Fraction(n, math.lcm(n, q))), Fraction(0))


# -- quasipolynomials ------------------------------------------------------------

@dataclass
class Quasipolynomial:
    """P(n) = polys[n mod period](n); coefficients listed from the constant term up."""

    period: int
    polys: list

    def __call__(self, n: int) -> Fraction:
        coeffs = self.polys[n % self.period]
        return sum((Fraction(c) * n**e for e, c in enumerate(coeffs)), Fraction(0))

    def reduced(self) -> "Quasipolynomial":
        """The same function with the least period."""
        for d in range(1, self.period + 1):
            if self.period % d == 0 and all(
                _trim(self.polys[r]) == _trim(self.polys[r % d]) for r in range(self.period)
            ):
                return Quasipolynomial(d, [list(_trim(self.polys[r])) for r in range(d)])
        return self


def _trim(coeffs) -> tuple:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass
class QuasirationalFit:
    axis: str
    fixed: dict
    period: int
    numerator: Quasipolynomial
    denominator: Quasipolynomial
    onset: int
    tail: tuple  # (first, last) argument of the fitted tail
    checked: int  # cells reproduced

    def __call__(self, n: int) -> Fraction:
        return self.numerator(n) / self.denominator(n)

    def format(self) -> str:
        fixed = " ".join(f"{k}={_fmt_exp(v)}" for k, v in self.fixed.items())
        lines = [f"axis: {self.axis}", f"fixed: {fixed}", f"period: {self.period}",
                 f"onset: {self.onset}", f"tail: {self.tail[0]}..{self.tail[1]}"]
        for r in range(self.period):
            num = " ".join(str(c) for c in self.numerator.polys[r]) or "0"
            den = " ".join(str(c) for c in self.denominator.polys[r])
            lines.append(f"residue {r}: numerator {num} ; denominator {den}")
        return "\n".join(lines) + "\n"


class InsufficientData(ValueError):
    pass


def _fit_class(points, max_degree):
    """Least-degree P/Q through points, fitted on 2D+1 of them and checked on the rest."""
    for D in range(max_degree + 1):
        need = 2 * D + 1
        if len(points) < need + 1:
            return None
        train = points[:need]
        rows = []
        for n, v in train:
            rows.append([Fraction(n) ** e for e in range(D + 1)] + [-v * Fraction(n) ** e for e in range(D + 1)])
        for sol in nullspace(rows, 2 * (D + 1)):
            P, Q = list(sol[: D + 1]), list(sol[D + 1:])
            if not any(Q):
                continue
            lead = next(c for c in reversed(Q) if c)
            P = [Fraction(c) / lead for c in P]
            Q = [Fraction(c) / lead for c in Q]

            def ev(cs, n):
                return sum((c * n**e for e, c in enumerate(cs)), Fraction(0))

            if all(ev(Q, n) != 0 and ev(P, n) / ev(Q, n) == v for n, v in points):
                return list(_trim(P)), list(_trim(Q))
    return None


def fit_series(ns, values, max_period=6, max_degree=1, axis="p", fixed=None) -> Optional[QuasirationalFit]:
    """Fit the top half of a one-parameter series by a quasirational function.

    Returns the fit of least period whose every residue class is reproduced
    exactly, held-out cells included, or None.
    """
    pts = sorted(zip(ns, values))
    tail = pts[len(pts) // 2:]
    if len(tail) < 2 * (max_degree + 1) + 1:
        raise InsufficientData("too few cells in the tail")
    for period in range(1, max_period + 1):
        nums, dens = [], []
        for r in range(period):
            cls = [(n, Fraction(v)) for n, v in tail if n % period == r]
            f = _fit_class(cls, max_degree) if cls else None
            if f is None:
                break
            nums.append(f[0])
            dens.append(f[1])
        else:
            fit = QuasirationalFit(axis, dict(fixed or {}), period, Quasipolynomial(period, nums),
                                   Quasipolynomial(period, dens), tail[0][0], (tail[0][0], tail[-1][0]), len(tail))
            onset = tail[0][0]
            for n, v in reversed(pts[: len(pts) // 2]):
                if fit.denominator(n) == 0 or fit(n) != v:
                    break
                onset = n
            fit.onset = onset
            return fit
    return None


# -- sweeps ---------------------------------------------------------------------

@dataclass
class SweepCell:
    p: Optional[int]
    q: Optional[int]
    value: Optional[Fraction]
    status: str = "ok"
    bound: int = 0
    complete: bool = True


@dataclass
class SweepTable:
    word: str
    template: str
    cells: list = field(default_factory=list)

    def values(self, axis="p", **fixed):
        out = []
        for c in self.cells:
            if c.value is None:
                continue
            if all(getattr(c, k) == v for k, v in fixed.items()):
                out.append((getattr(c, axis), c.value))
        return sorted(out)

    def format(self) -> str:
        lines = [f"# word: {self.word}", f"# template: {self.template}", "p\tq\tscl\tbound\tcomplete\tstatus"]
        for c in self.cells:
            v = "-" if c.value is None else str(c.value)
            lines.append(f"{_fmt_exp(c.p)}\t{_fmt_exp(c.q)}\t{v}\t{c.bound}\t{int(c.complete)}\t{c.status}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "SweepTable":
        word, template, cells = "", DEFAULT_TEMPLATE, []
        for line in text.splitlines():
            if line.startswith("# word:"):
                word = line.split(":", 1)[1].strip()
            elif line.startswith("# template:"):
                template = line.split(":", 1)[1].strip()
            elif line and not line.startswith("#") and not line.startswith("p\t"):
                p, q, v, b, comp, status = line.split("\t", 5)
                cells.append(SweepCell(_parse_exp(p), _parse_exp(q), None if v == "-" else Fraction(v),
                                       status, int(b), comp == "1"))
        return cls(word, template, cells)


def _fmt_exp(x) -> str:
    return "inf" if x is None else str(x)


def _parse_exp(s: str):
    return None if s in ("inf", "∞") else int(s)


def _cell(args) -> SweepCell:
    word, template, p, q, bound = args
    text = template.replace("{p}", _fmt_exp(p)).replace("{q}", _fmt_exp(q))
    try:
        g = parse_group(text)
        sol = scl(g, parse_chain(word, g), SclOptions(bound=bound))
    except NotABoundary:
        return SweepCell(p, q, None, "skipped", bound)
    except Exception as e:  # recorded per cell
        return SweepCell(p, q, None, f"error: {e}", bound)
    return SweepCell(p, q, sol.value, "ok", bound, sol.complete_hint)


def sweep(word: str, ps, qs, opts: SclOptions = None, template: str = DEFAULT_TEMPLATE, jobs: int = 1) -> SweepTable:
    opts = opts or SclOptions()
    args = [(word, template, p, q, opts.bound) for p in ps for q in qs]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            cells = list(ex.map(_cell, args))
    else:
        cells = [_cell(a) for a in args]
    return SweepTable(word, template, cells)


def fit_quasirational(t: SweepTable, axis="p", max_period=6, max_degree=1) -> dict:
    """One fit per value of the other exponent; None where no fit exists."""
    other = "q" if axis == "p" else "p"
    out = {}
    for o in sorted({getattr(c, other) for c in t.cells}, key=lambda x: (x is None, x or 0)):
        series = t.values(axis, **{other: o})
        ns = [n for n, _ in series]
        vs = [v for _, v in series]
        out[o] = fit_series(ns, vs, max_period, max_degree, axis, {other: o})
    return out


# -- command line ---------------------------------------------------------------

def _range(text: str) -> list:
    """'2:12' (inclusive), '5', 'inf' or a comma list of those."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(_parse_exp(part))
    return out


def _read_group(text: str):
    if os.path.isfile(text):
        with open(text) as fh:
            text = fh.read()
    return parse_group(text)


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opts(args, **kw) -> SclOptions:
    return SclOptions(bound=args.bound, epsilon=Fraction(args.epsilon), **kw)


def cmd_compute(args):
    g = _read_group(args.group)
    sol = scl(g, parse_chain(args.chain, g), _opts(args, certificate=args.certificate,
                                                    explicit_discs=args.explicit_discs))
    lines = [f"scl: {sol.value}", f"raw: {sol.raw}"]
    for fd, vec in zip(sol.problem.factors, sol.vectors):
        lines.append(f"vector {g.factors[fd.factor.index].name}: " + " ".join(str(x) for x in vec))
    if sol.clamped:
        lines.append("clamped: raw value was negative")
    if not sol.complete_hint:
        lines.append("warning: disc enumeration may be incomplete")
    if sol.certificate is not None:
        cert = sol.certificate
        lines.append(f"certificate: N={cert.N} chi={cert.chi} bound={cert.bound}")
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(cert.to_json())
        else:
            lines.append(cert.to_json())
    elif args.output:
        _emit(args, "\n".join(lines) + "\n")
        return 0
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_certify(args):
    from .surfaces import SurfaceCertificate, certify

    g = _read_group(args.group)
    with open(args.certificate) as fh:
        cert = SurfaceCertificate.from_json(fh.read())
    value = None
    if args.check_value:
        value = scl(g, parse_chain(args.chain, g), _opts(args)).value
    rep = certify(cert, args.chain, g, value=value, epsilon=Fraction(args.epsilon) if value is not None else None)
    out = [("PASS" if rep.passed else "FAIL") + f" bound={rep.bound}"]
    if rep.gap is not None:
        out.append(f"gap: {rep.gap}")
    out += [f"{kind}: {msg}" for kind, msg in rep.problems]
    _emit(args, "\n".join(out) + "\n")
    return 0 if rep.passed else 1


def cmd_discs(args):
    from .master import build_problem

    g = _read_group(args.group)
    prob = build_problem(g, parse_chain(args.chain, g), _opts(args))
    out = []
    for i, fd in enumerate(prob.factors):
        out.append(f"factor {g.factors[i].name}: {len(fd.discs.vectors)} disc vertices"
                   + ("" if fd.discs.complete_hint else " (window may be too small)"))
        out.append("  sigma: " + " ".join(f"({s.t1},{s.t2})" for s in fd.factor.sigmas))
        for v in fd.discs.vectors:
            out.append("  disc " + " ".join(str(x) for x in v.sigma) + " | winding " + " ".join(str(x) for x in v.winding))
        for f in fd.functionals.functionals:
            out.append("  functional " + " ".join(str(x) for x in f))
    _emit(args, "\n".join(out) + "\n")
    return 0


def cmd_formula(args):
    _emit(args, f"{formula_scl_commutator(args.m, args.n, args.p, args.q)}\n")
    return 0


def cmd_sweep(args):
    t = sweep(args.word, _range(args.p), _range(args.q), _opts(args), args.template, args.jobs)
    _emit(args, t.format())
    return 0


def cmd_fit(args):
    with open(args.table) as fh:
        t = SweepTable.parse(fh.read())
    fits = fit_quasirational(t, args.axis, args.max_period, args.max_degree)
    other = "q" if args.axis == "p" else "p"
    out = []
    for o, fit in fits.items():
        out.append(fit.format() if fit else f"axis: {args.axis}\nfixed: {other}={_fmt_exp(o)}\nno fit\n")
    _emit(args, "\n".join(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sclafp", description="scl in amalgamated products of free abelian groups")
    ap.add_argument("--bound", type=int, default=8, help="state window for disc enumeration")
    ap.add_argument("--epsilon", default="1/1000", help="allowed certificate gap")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--output", help="write the result here instead of stdout (for compute --certificate: the JSON)")
    # the same flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    for flag, kind in (("--bound", int), ("--epsilon", str), ("--jobs", int), ("--output", str)):
        common.add_argument(flag, type=kind, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="scl of a chain")
    c.add_argument("group", help="presentation text or a file containing it")
    c.add_argument("chain")
    c.add_argument("--certificate", action="store_true", help="also emit a surface certificate")
    c.add_argument("--explicit-discs", action="store_true", help="one LP column per disc vector")
    c.add_argument("--multi", action="store_true", help="accepted for compatibility; any factor count works")
    c.set_defaults(func=cmd_compute)

    c = sub.add_parser("certify", parents=[common], help="check a surface certificate")
    c.add_argument("group")
    c.add_argument("chain")
    c.add_argument("certificate", help="certificate JSON file")
    c.add_argument("--check-value", action="store_true", help="recompute scl and compare the bound")
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("discs", parents=[common], help="disc vectors and Klein functionals per factor")
    c.add_argument("group")
    c.add_argument("chain")
    c.set_defaults(func=cmd_discs)

    c = sub.add_parser("formula", parents=[common], help="closed form for scl([a^m,b^n]) in <a,b|a^p=b^q>")
    for name in ("m", "n"):
        c.add_argument(name, type=int)
    for name in ("p", "q"):
        c.add_argument(name, type=_parse_exp, help="positive integer or inf")
    c.set_defaults(func=cmd_formula)

    c = sub.add_parser("sweep", parents=[common], help="scl over a grid of exponents")
    c.add_argument("word")
    c.add_argument("--p", required=True, help="range like 2:12, or a list; 'inf' allowed")
    c.add_argument("--q", required=True)
    c.add_argument("--template", default=DEFAULT_TEMPLATE, help="presentation with {p} and {q}")
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("fit", parents=[common], help="quasirational fit of a sweep table")
    c.add_argument("table")
    c.add_argument("--axis", choices=("p", "q"), default="p")
    c.add_argument("--max-period", type=int, default=6)
    c.add_argument("--max-degree", type=int, default=1)
    c.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, NotABoundary, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
