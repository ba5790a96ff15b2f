"""The scl linear program.

For a normal-form chain with integral coefficients, every admissible
surface of degree one (after projectivizing) is described by one edge
vector per factor, glued along compatible sigma-edges.  The program
minimizes the total of |v_i|/2 + v_ab,i - kappa_i(v_i), which estimates
-chi; scl is half the minimum, clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import ratlp
from .discs import factor_data, v_ab
from .edges import ChainEdges, compatibility_pairs, extract_tau_edges, factor_edges
from .presentation import (
    Chain,
    Factor,
    GroupSpec,
    NotABoundary,
    Word,
    combine,
    drop_trivial,
    normalize,
    parse_chain,
    parse_word,
)


class InfeasibleProgram(RuntimeError):
    pass


@dataclass
class SclOptions:
    bound: int = 8
    certificate: bool = False
    epsilon: Fraction = Fraction(1, 1000)
    max_doublings: int = 10
    explicit_discs: bool = False  # use one variable per disc vector instead of functionals


@dataclass
class SclProblem:
    group: GroupSpec
    source: Chain
    chain: Chain
    edges: Optional[ChainEdges]
    factors: list  # FactorData per factor
    pairs: list  # (SigmaEdge, SigmaEdge)
    lp: Optional[ratlp.LinearProgram]
    constant: Fraction  # objective offset from dummy edges
    sigma_index: list  # per factor: SigmaEdge -> column in its restricted basis
    dummy_values: list  # per factor: {column: value}
    z_vars: dict  # factor -> LP column
    t_vars: dict = field(default_factory=dict)  # (factor, disc index) -> LP column
    quotient: bool = False

    def factor_vector(self, i: int, x) -> tuple:
        """Sigma coordinates of factor i at the LP point x."""
        fd = self.factors[i]
        out = [Fraction(0)] * fd.cone.nsigma
        for p, (sa, sb) in enumerate(self.pairs):
            for s in (sa, sb):
                if s.factor == i:
                    out[self.sigma_index[i][s]] += x[p]
        for c, val in self.dummy_values[i].items():
            out[c] = val
        return tuple(out)


@dataclass
class SclSolution:
    value: Fraction
    raw: Fraction
    clamped: bool
    vectors: list  # per factor: sigma coordinates (for the normalized chain)
    duals: tuple
    problem: SclProblem
    complete_hint: bool = True
    certificate: object = None
    lp_result: object = None


def build_problem(g: GroupSpec, c: Chain, opts: SclOptions = None, winding=None,
                  normalized: Chain = None) -> SclProblem:
    opts = opts or SclOptions()
    chain = normalized if normalized is not None else normalize(drop_trivial(c, g), g)
    if not chain:
        return SclProblem(g, c, chain, None, [], [], None, Fraction(0), [], [], {})
    edges = extract_tau_edges(chain, g)
    fes = factor_edges(g, edges)
    if winding is not None:
        for fe, w in zip(fes, winding):
            fe.winding = w
    fds = [factor_data(fe, opts.bound) for fe in fes]
    sigma_index = [{s: k for k, s in enumerate(fd.factor.sigmas)} for fd in fds]
    pairs = compatibility_pairs(*[fd.factor.sigmas for fd in fds], edges=edges)
    npairs = len(pairs)
    # membership: for every restricted genuine sigma, which pair variable
    var_of = [dict() for _ in fds]
    for p, (sa, sb) in enumerate(pairs):
        var_of[sa.factor][sigma_index[sa.factor][sa]] = p
        var_of[sb.factor][sigma_index[sb.factor][sb]] = p
    dummy_values = []
    constant = Fraction(0)
    for i, fd in enumerate(fds):
        vals = {}
        for k, s in enumerate(fd.factor.sigmas):
            if s.dummy:
                vals[k] = edges.coefficient[s.t1]
        dummy_values.append(vals)
        constant += v_ab([vals.get(k, 0) for k in range(fd.cone.nsigma)], fd.discs, fd.cone)

    ncols = npairs
    z_vars, t_vars = {}, {}
    for i, fd in enumerate(fds):
        if opts.explicit_discs:
            for d in range(len(fd.discs.vectors)):
                t_vars[i, d] = ncols
                ncols += 1
        elif fd.functionals.functionals:
            z_vars[i] = ncols
            ncols += 1

    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for i, fd in enumerate(fds):
        for t in fd.factor.taus:
            if t.abelian_loop:
                continue
            for end in ("t1", "t2"):
                row = [Fraction(0)] * ncols
                for k, s in enumerate(fd.factor.sigmas):
                    if getattr(s, end) == t.id and k in var_of[i]:
                        row[var_of[i][k]] += 1
                A_eq.append(row)
                b_eq.append(edges.coefficient[t.id])
        if opts.explicit_discs:
            for k in range(fd.cone.nsigma):
                row = [Fraction(0)] * ncols
                for d, vec in enumerate(fd.discs.vectors):
                    row[t_vars[i, d]] += vec.sigma[k]
                if k in var_of[i]:
                    row[var_of[i][k]] -= 1
                A_ub.append(row)
                b_ub.append(dummy_values[i].get(k, Fraction(0)))
        elif i in z_vars:
            for f in fd.functionals.functionals:
                row = [Fraction(0)] * ncols
                row[z_vars[i]] = Fraction(1)
                rhs = Fraction(0)
                for k, fk in enumerate(f):
                    if k in var_of[i]:
                        row[var_of[i][k]] -= fk
                    elif k in dummy_values[i]:
                        rhs += fk * dummy_values[i][k]
                A_ub.append(row)
                b_ub.append(rhs)
    cost = [Fraction(1)] * npairs + [Fraction(-1)] * (ncols - npairs)
    names = [f"x{p}" for p in range(npairs)] + [f"z{i}" for i in z_vars] + [f"t{i}_{d}" for i, d in t_vars]
    lp = ratlp.LinearProgram(cost, "min", A_eq, b_eq, A_ub, b_ub, names=names)
    return SclProblem(g, c, chain, edges, fds, pairs, lp, constant, sigma_index, dummy_values, z_vars, t_vars)


def scl(g: GroupSpec, c, opts: SclOptions = None, **kw) -> SclSolution:
    opts = opts or SclOptions()
    if isinstance(c, str):
        c = parse_chain(c, g)
    prob = build_problem(g, c, opts, **kw)
    return solve_problem(prob, opts)


def solve_problem(prob: SclProblem, opts: SclOptions) -> SclSolution:
    if prob.lp is None:
        sol = SclSolution(Fraction(0), Fraction(0), False, [], ((), ()), prob)
        if opts.certificate:
            from .surfaces import build_certificate

            sol.certificate = build_certificate(sol, opts)
        return sol
    res = ratlp.solve(prob.lp)
    if not res.optimal:
        raise InfeasibleProgram(f"scl program is {res.status}")
    raw = (res.value + prob.constant) / 2 / prob.chain.scale
    vectors = [prob.factor_vector(i, res.primal) for i in range(len(prob.factors))]
    complete = all(fd.discs.complete_hint for fd in prob.factors)
    sol = SclSolution(max(raw, Fraction(0)), raw, raw < 0, vectors, res.dual, prob, complete, None, res)
    if opts.certificate:
        if prob.quotient:
            raise ValueError("certificates are only built for amalgamated products")
        from .surfaces import build_certificate

        sol.certificate = build_certificate(sol, opts)
    return sol


def scl_multi(g: GroupSpec, c, opts: SclOptions = None) -> SclSolution:
    """scl over any number of factors sharing one central Z^k."""
    if len(g.factors) < 2:
        opts = opts or SclOptions()
    return scl(g, c, opts)


def _cyclic_group(orders) -> GroupSpec:
    names = [chr(ord("a") + i) for i in range(len(orders))]
    factors = tuple(Factor(f"Z{i}", (n,)) for i, n in enumerate(names))
    exps = tuple((o,) for o in orders)
    return GroupSpec(factors, 1, exps, tuple((0,) for _ in orders))


def scl_cyclic(orders, w, opts: SclOptions = None) -> SclSolution:
    """scl of a word in the free product of cyclic groups Z/p_i (None = infinite).

    Generators are named a, b, c, ... in factor order.  With all orders finite
    the word is lifted to the amalgam of copies of Z over the common central
    element, corrected by a central power so that the lift is a boundary.
    With some orders infinite the finite factors are treated as torsion
    directly: discs may wind around a^{p} but nothing is glued.
    """
    opts = opts or SclOptions()
    orders = [None if o in (None, float("inf")) else int(o) for o in orders]
    if any(o is not None and o < 1 for o in orders):
        raise ValueError("orders must be positive")
    finite = [o for o in orders if o is not None]
    g = _cyclic_group(orders if len(finite) in (0, len(orders)) else [None] * len(orders))
    word = parse_word(w, g) if isinstance(w, str) else w
    sums = word.exponent_sums(g)
    for e, o in zip(sums, orders):
        if (o is None and e != 0) or (o is not None and e % o):
            raise NotABoundary("word is not a boundary in the free product of cyclic groups")
    if len(finite) == len(orders) and orders:
        s = sum(Fraction(e, o) for e, o in zip(sums, orders))
        if s:
            word = Word.from_syllables(list(word.syllables) + [(0, (int(-s * orders[0]),))])
        return scl(g, combine([(1, word)]), opts)
    if not finite:
        return scl(g, combine([(1, word)]), opts)
    # torsion model: kill every exponent sum directly (legal since a^p = 1)
    fixes = [(i, (-e,)) for i, e in enumerate(sums) if e]
    word = Word.from_syllables(list(word.syllables) + fixes)
    chain = combine([(1, word)])
    winding = [((0, o),) if o is not None else (None,) for o in orders]
    prob = build_problem(g, chain, opts, winding=winding, normalized=chain)
    prob.quotient = True
    return solve_problem(prob, opts)
