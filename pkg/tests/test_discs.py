import math
import random
from fractions import Fraction as F

import pytest

from helpers import e_columns, factor_of, random_cone_point, torus, vec
from sclafp import ratlp
from sclafp.cones import VBAR, build_cone, cdd_sigma_rays
from sclafp.discs import (
    EmptyBound,
    chi_o_vec,
    enumerate_disc_vectors,
    factor_data,
    klein,
    klein_functionals,
)
from sclafp.edges import count_components
from sclafp.presentation import parse_group


def commutator_data(m, p):
    fe = factor_of(torus(p, 7), f"[a^{m},b]")
    fd = factor_data(fe)
    return fd, e_columns(fd.factor, (m,), (-m,))


def sigmas(fd):
    return [tuple(v.sigma) for v in fd.discs.vectors]


def test_fig_adisc_vector():
    fd, e = commutator_data(4, 6)
    assert tuple(vec(4, e, [3, 0, 0, 0])) in sigmas(fd)
    v = next(v for v in fd.discs.vectors if tuple(v.sigma) == tuple(vec(4, e, [3, 0, 0, 0])))
    assert v.winding == (2,)


@pytest.mark.parametrize("m,p", [(1, 2), (2, 3), (3, 6), (4, 5), (2, 8)])
def test_e2_plus_e3_is_a_disc(m, p):
    fd, e = commutator_data(m, p)
    assert tuple(vec(4, e, [0, 1, 1, 0])) in sigmas(fd)


def test_shared_subgroup_discs():
    g = parse_group("abelian A = <a,b>; abelian B = <c,d>; amalg b = c")
    fe = factor_of(g, "b d B D", 0)
    fd = factor_data(fe)
    e = e_columns(fd.factor, (0, 1), (0, -1))
    got = {tuple(v.sigma): v.winding for v in fd.discs.vectors}
    assert got[tuple(vec(4, e, [1, 0, 0, 0]))] == (1,)
    assert got[tuple(vec(4, e, [0, 0, 0, 1]))] == (-1,)


def test_members_are_discs_in_the_cone():
    for m, p in [(4, 6), (2, 3), (3, 4)]:
        fd, _ = commutator_data(m, p)
        for v in fd.discs.vectors:
            assert all(x.denominator == 1 for x in v.sigma + v.winding)
            assert fd.cone.contains(v)
            assert count_components(fd.factor.gamma, v.sigma) == 1


def test_vertex_minimality():
    fd, _ = commutator_data(4, 6)
    rays = cdd_sigma_rays(fd.cone)
    pts = sigmas(fd)
    for i, v in enumerate(pts):
        others = [u for j, u in enumerate(pts) if j != i]
        # v = sum lam_j u_j + sum mu_r r with sum lam = 1 would make v redundant
        cols = others + rays
        A = [[c[k] for c in cols] for k in range(len(v))]
        A.append([1] * len(others) + [0] * len(rays))
        res = ratlp.solve(ratlp.LinearProgram([0] * len(cols), "min", A_eq=A, b_eq=list(v) + [1]))
        assert not res.optimal


def _formula_kappa(m, p, e):
    c = F(m, math.lcm(m, p))
    return lambda v: c * v[e[0]] + F(1, 2) * v[e[1]] + F(1, 2) * v[e[2]] + c * v[e[3]]


@pytest.mark.parametrize("m,p", [(1, 2), (1, 5), (2, 3), (4, 6), (3, 9)])
def test_kappa_matches_closed_form(m, p):
    fd, e = commutator_data(m, p)
    kf = _formula_kappa(m, p, e)
    rays = cdd_sigma_rays(fd.cone)
    rng = random.Random(m * 100 + p)
    for _ in range(12):
        v = random_cone_point(rays, rng)
        assert klein(v, fd.discs, fd.cone) == kf(v)
        assert fd.functionals(v) == kf(v)


def test_kappa_examples():
    fd, e = commutator_data(2, 3)
    assert klein(vec(4, e, [0, 1, 1, 0]), fd.discs, fd.cone) == 1
    assert klein([0] * 4, fd.discs, fd.cone) == 0


def test_kappa_outside_cone():
    fd, e = commutator_data(2, 3)
    with pytest.raises(ValueError):
        klein(vec(4, e, [0, 1, 0, 0]), fd.discs, fd.cone)


def test_functionals_support_discs():
    for m, p in [(4, 6), (1, 2), (3, 4)]:
        fd, _ = commutator_data(m, p)
        for f in fd.functionals.functionals:
            vals = [sum(a * b for a, b in zip(f, v.sigma)) for v in fd.discs.vectors]
            assert min(vals) == 1


def test_single_disc_functional_is_linear_on_its_ray():
    fd, e = commutator_data(1, 2)
    w = vec(4, e, [0, 1, 1, 0])
    for lam in (F(1, 3), F(2), F(7, 2)):
        assert fd.functionals([lam * x for x in w]) == lam


def test_chi_o_examples():
    m, p = 4, 6
    fd, e = commutator_data(m, p)
    assert chi_o_vec(vec(4, e, [0, 1, 1, 0]), fd.discs, fd.cone) == 0
    L = math.lcm(m, p)
    assert chi_o_vec(vec(4, e, [F(L, m), 0, 0, 0]), fd.discs, fd.cone) == 1 - F(L, 2 * m)
    assert chi_o_vec([0] * 4, fd.discs, fd.cone) == 0


def test_bound_zero_rejected():
    fd, _ = commutator_data(1, 2)
    with pytest.raises(EmptyBound):
        enumerate_disc_vectors(fd.cone, fd.factor.gamma, 0)


def test_empty_disc_set_gives_zero_kappa():
    fd, e = commutator_data(1, 2)
    from sclafp.discs import DiscVectorSet

    empty = DiscVectorSet([], 8, True)
    assert klein_functionals(empty, fd.cone).functionals == []
    assert klein(vec(4, e, [0, 1, 1, 0]), empty, fd.cone) == 0


def test_dummy_loops_in_amalgamating_span_are_discs():
    g = torus(3, 5)
    fe = factor_of(g, "a^3 + A^4 b a B", 0)
    fd = factor_data(fe)
    assert fd.discs.vectors and fd.discs.dummy_multiplicity


def test_enumeration_monotone_in_bound():
    g = parse_group("abelian A = <a,b>; abelian B = <c,d>; amalg b^2 = c^3")
    fe = factor_of(g, "a b^2 d a^-1 B^2 D", 0)
    cs = build_cone(fe, VBAR)
    small = enumerate_disc_vectors(cs, fe.gamma, 1)
    big = enumerate_disc_vectors(cs, fe.gamma, 8)
    rays = cdd_sigma_rays(cs)
    rng = random.Random(5)
    for _ in range(15):
        v = random_cone_point(rays, rng)
        assert klein(v, big, cs) >= klein(v, small, cs)
