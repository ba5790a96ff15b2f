import itertools
import math
from fractions import Fraction as F

import pytest

from helpers import torus
from sclafp import ratlp
from sclafp.cli import formula_scl_commutator
from sclafp.master import SclOptions, build_problem, scl, scl_cyclic, scl_multi, solve_problem
from sclafp.presentation import NotABoundary, parse_chain, parse_group

SHARED = "abelian A = <a,b>; abelian B = <c,d>; amalg b = c"


@pytest.mark.parametrize("m,n,p,q", [(1, 1, 5, 7), (2, 1, 4, 6), (1, 3, 2, 9), (4, 4, 6, 8), (3, 2, 3, 2)])
def test_commutator_formula_cells(m, n, p, q):
    assert scl(torus(p, q), f"[a^{m},b^{n}]").value == formula_scl_commutator(m, n, p, q)


def test_formula_grid_small():
    for p, q in itertools.product(range(2, 8), repeat=2):
        g = torus(p, q)
        for m, n in itertools.product(range(1, 4), repeat=2):
            assert scl(g, f"[a^{m},b^{n}]").value == formula_scl_commutator(m, n, p, q), (m, n, p, q)


def test_b3_commutator_vanishes():
    sol = scl(torus(2, 3), "[a,b]")
    assert sol.value == 0


def test_trivial_word_is_clamped():
    # a^2 is central in <a,b | a^2 = b^3>, so [a^2, b] = 1 and bounds a disc
    sol = scl(torus(2, 3), "[a^2,b]")
    assert sol.raw == F(-1, 2)
    assert sol.value == 0 and sol.clamped


def test_shared_subgroup_commutator():
    g = parse_group(SHARED)
    sol = scl(g, "[b,d]")
    assert sol.value == 0 and sol.raw == F(-1, 2)
    used = [sum(1 for x, s in zip(v, fd.factor.sigmas) if x and not s.dummy)
            for v, fd in zip(sol.vectors, sol.problem.factors)]
    assert used == [2, 2]
    active = [p for p in range(len(sol.problem.pairs)) if sol.lp_result.primal[p]]
    assert len(active) == 2


def test_value_is_max_of_raw_and_zero():
    for text in ("[a,b]", "[a^2,b]", "[a,b^3]", "[a,b] + [a^2,b^3]"):
        sol = scl(torus(2, 3), text)
        assert sol.value >= 0
        assert sol.value == max(sol.raw, 0)
        assert sol.clamped == (sol.raw < 0)


def test_not_a_boundary():
    with pytest.raises(NotABoundary):
        scl(torus(2, 3), "a b")


def test_single_factor():
    g = parse_group("abelian A = <a,b>; amalg a")
    prob = build_problem(g, parse_chain("a + b + A B", g))
    assert len(prob.factors) == 1 and prob.pairs == []
    assert scl_multi(g, "a + b + A B").value == 0


def test_unused_third_factor():
    g3 = parse_group("abelian A = <a>; abelian B = <b>; abelian C = <c>; amalg a^5 = b^7 = c^3")
    assert scl_multi(g3, "[a,b]").value == scl(torus(5, 7), "[a,b]").value == F(3, 10)


def test_three_factors_with_central_fix():
    g = parse_group("abelian A = <a>; abelian B = <b>; abelian C = <c>; amalg a^2 = b^3 = c^5")
    v = scl_multi(g, "[a,b][b,c]").value
    # the same group presented with the factors in another order
    h = parse_group("abelian C = <c>; abelian A = <a>; abelian B = <b>; amalg c^5 = a^2 = b^3")
    assert scl_multi(h, "[a,b][b,c]").value == v
    assert scl_cyclic((2, 3, 5), "[a,b][b,c]").value == v


@pytest.mark.parametrize("w,val", [("a b c A B C", F(1, 2)), ("[a,b][b,c]", F(1, 4)),
                                   ("[a,c]", F(1, 6)), ("a c b C A B", F(1, 4))])
def test_factor_order_invariance(w, val):
    orders = (3, 4, 5)
    names = "abc"
    results = set()
    for perm in itertools.permutations(range(3)):
        facs = "; ".join(f"abelian {names[i].upper()} = <{names[i]}>" for i in perm)
        amalg = " = ".join(f"{names[i]}^{orders[i]}" for i in perm)
        results.add(scl_multi(parse_group(f"{facs}; amalg {amalg}"), w).value)
    assert results == {val}


def test_three_factor_degenerate_middle():
    # b^1 makes the middle factor the centre itself, so [a^m, c^n] behaves as in two factors
    for p, r, m, n in [(3, 4, 1, 1), (4, 6, 2, 3), (5, 2, 1, 1)]:
        g = parse_group(f"abelian A = <a>; abelian B = <b>; abelian C = <c>; amalg a^{p} = b = c^{r}")
        assert scl_multi(g, f"[a^{m},c^{n}]").value == formula_scl_commutator(m, n, p, r)


HOMOGENEITY_WORDS = ["[a,b]", "[a^2,b]", "[a,b^2]", "a b A B a B A b", "[a^3,b^2]"]


@pytest.mark.parametrize("w", HOMOGENEITY_WORDS)
def test_chain_multiple_scales(w):
    g = torus(3, 4)
    base = scl(g, w).value
    for n in (2, 3):
        assert scl(g, f"{n}*({w})").value == n * base


@pytest.mark.parametrize("w", ["[a,b]", "[a^2,b]", "[a,b^2]"])
def test_word_power_scales(w):
    g = torus(3, 4)
    assert scl(g, f"({w})^2").value == 2 * scl(g, w).value


@pytest.mark.parametrize("rel,chain", [("a^3 = b^4", "[a,b]"), ("a^4 = b^3", "a^3 B^2 a b + A^2 B A^2 b^2"),
                                       ("a^3 = b^5", "a^3 B^2 A^3 b^2 + A^2 b^3 a^2 B^3"),
                                       ("a^2 = b^2", "a b A B a B A b"), ("a^6 = b^4", "[a^4,b^2]")])
def test_explicit_discs_agree_with_functionals(rel, chain):
    g = parse_group(f"abelian A = <a>; abelian B = <b>; amalg {rel}")
    a = scl(g, chain).value
    b = scl(g, chain, SclOptions(explicit_discs=True)).value
    assert a == b


def test_fewer_discs_never_lower_the_value():
    g = torus(6, 4)
    chain = parse_chain("[a^4,b^2]", g)
    opts = SclOptions(explicit_discs=True)
    prob = build_problem(g, chain, opts)
    full = solve_problem(prob, opts).value
    for (i, d), col in prob.t_vars.items():
        lp = prob.lp
        row = [F(0)] * len(lp.c)
        row[col] = F(1)
        prob.lp = ratlp.LinearProgram(lp.c, lp.sense, list(lp.A_eq) + [row], list(lp.b_eq) + [0],
                                      lp.A_ub, lp.b_ub, names=lp.names)
        assert solve_problem(prob, opts).value >= full
        prob.lp = lp


def test_cyclic_examples():
    assert scl_cyclic((2, 3), "[a,b]").value == 0
    for p, q in [(3, 3), (3, 7), (5, 4)]:
        assert scl_cyclic((p, q), "[a,b]").value == F(1, 2) - F(1, min(p, q))
    assert scl_cyclic((None, None), "[a,b]").value == F(1, 2)


def test_cyclic_needs_boundary():
    with pytest.raises(NotABoundary):
        scl_cyclic((2, 3), "a b")
    with pytest.raises(NotABoundary):
        scl_cyclic((None, 3), "a b^3")


def test_cyclic_torsion_mode():
    # Z/p * Z: [a^4, b] has scl 1/2 - 4/lcm(4, p)
    for p in (5, 6, 8):
        assert scl_cyclic((p, None), "[a^4,b]").value == F(1, 2) - F(4, math.lcm(4, p))


def test_rational_chain_coefficients():
    g = torus(5, 7)
    assert scl(g, "1/2 [a,b]").value == F(3, 20)
