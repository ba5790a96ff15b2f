import itertools

from hypothesis import given, settings, strategies as st

from sclafp.edges import (
    TauEdge,
    build_gamma,
    build_sigma_basis,
    compatibility_pairs,
    count_components,
    extract_tau_edges,
    factor_edges,
    partner,
)
from sclafp.presentation import Chain, normalize, parse_chain, parse_group, parse_word


def torus(p, q):
    return parse_group(f"abelian A = <a>; abelian B = <b>; amalg a^{p} = b^{q}")


def segments(edges, f):
    return sorted(t.segment for t in edges.by_factor[f])


def test_commutator_tau_edges():
    g = torus(3, 5)
    e = extract_tau_edges(parse_chain("[a,b]", g), g)
    assert segments(e, 0) == [(-1,), (1,)]
    assert segments(e, 1) == [(-1,), (1,)]


def test_power_commutator_tau_edges():
    for m, n in [(1, 2), (3, 2), (4, 1)]:
        g = torus(6, 9)
        e = extract_tau_edges(parse_chain(f"[a^{m},b^{n}]", g), g)
        assert segments(e, 0) == [(-m,), (m,)]
        assert segments(e, 1) == [(-n,), (n,)]


def test_pure_words_are_abelian_loops():
    g = torus(3, 5)
    a3, A3 = parse_word("a^3", g), parse_word("A^3", g)
    # built directly: combining would cancel a^3 against its inverse
    e = extract_tau_edges(Chain(((1, a3), (1, A3))), g)
    assert len(e.by_factor[0]) == 2
    assert all(t.abelian_loop for t in e.by_factor[0])
    assert not e.next


def test_cyclic_neighbours():
    g = torus(3, 5)
    e = extract_tau_edges(parse_chain("a b^2 A B^2", g), g)
    for t in e.taus:
        assert e.prev[e.next[t.id]] == t.id
        assert e.tau(e.next[t.id]).factor != t.factor


def _taus(n, loops=()):
    return [TauEdge(i, 0, (1,), 0, i, abelian_loop=i in loops) for i in range(n)]


def test_sigma_basis_sizes():
    assert len(build_sigma_basis(_taus(2))) == 4
    one = build_sigma_basis(_taus(1, loops={0}))
    assert len(one) == 1 and one[0].dummy
    assert len(build_sigma_basis(_taus(3))) == 9


def test_gamma_shapes():
    taus = _taus(1, loops={0})
    gr = build_gamma(taus, build_sigma_basis(taus))
    assert gr.vertices == [0] and [(s.t1, s.t2) for s in gr.edges] == [(0, 0)]
    taus = _taus(3)
    gr = build_gamma(taus, build_sigma_basis(taus))
    assert sorted((s.t1, s.t2) for s in gr.edges) == sorted(itertools.product(range(3), repeat=2))


def test_gamma_dump():
    taus = _taus(2)
    gr = build_gamma(taus, build_sigma_basis(taus))
    lines = gr.dump([1, 0, 2, 0]).splitlines()
    assert lines[0] == "0 0 1" and lines[2] == "1 0 2"


def _e_basis(m):
    """e1..e4 of the [a^m, .] factor, located by segment rather than position."""
    g = torus(6, 5)
    e = extract_tau_edges(parse_chain(f"[a^{m},b]", g), g)
    fe = factor_edges(g, e)[0]
    pos = {t.segment: t.id for t in fe.taus}
    plus, minus = pos[(m,)], pos[(-m,)]
    order = [(plus, plus), (plus, minus), (minus, plus), (minus, minus)]
    col = {s.pair: k for k, s in enumerate(fe.sigmas)}
    return fe, [col[p] for p in order]


def _vec(fe, cols, coeffs):
    v = [0] * len(fe.sigmas)
    for c, x in zip(cols, coeffs):
        v[c] += x
    return v


def test_component_examples():
    fe, cols = _e_basis(2)
    assert count_components(fe.gamma, _vec(fe, cols, [0, 1, 1, 0])) == 1
    assert count_components(fe.gamma, _vec(fe, cols, [1, 0, 0, 1])) == 2
    assert count_components(fe.gamma, _vec(fe, cols, [0, 0, 0, 0])) == 0


vec3 = st.lists(st.integers(0, 3), min_size=9, max_size=9)


@settings(max_examples=80, deadline=None)
@given(vec3, st.integers(1, 5))
def test_components_scale_invariant(v, n):
    taus = _taus(3)
    gr = build_gamma(taus, build_sigma_basis(taus))
    assert count_components(gr, [n * x for x in v]) == count_components(gr, v)


@settings(max_examples=80, deadline=None)
@given(vec3, vec3)
def test_components_subadditive(u, v):
    taus = _taus(3)
    gr = build_gamma(taus, build_sigma_basis(taus))
    s = [a + b for a, b in zip(u, v)]
    assert count_components(gr, s) <= count_components(gr, u) + count_components(gr, v)


CHAINS = [
    ("a^2 = b^3", "[a,b]"),
    ("a^4 = b^3", "a^3 B^2 a b + A^2 B A^2 b^2"),
    ("a^3 = b^4", "[a^2,b] + [a,b^3]"),
    ("a^2 = b^5", "a b A b^2 a B^3 A"),
]


def test_every_genuine_sigma_in_exactly_one_pair():
    for rel, text in CHAINS:
        g = parse_group(f"abelian A = <a>; abelian B = <b>; amalg {rel}")
        c = normalize(parse_chain(text, g), g)
        e = extract_tau_edges(c, g)
        fes = factor_edges(g, e)
        pairs = compatibility_pairs(*[fe.sigmas for fe in fes], edges=e)
        count = {}
        for sa, sb in pairs:
            for s in (sa, sb):
                count[s] = count.get(s, 0) + 1
        for fe in fes:
            for s in fe.sigmas:
                if not s.dummy:
                    assert count.get(s) == 1
                    assert partner(partner(s, e), e) == s


def test_three_factor_passthrough():
    g = parse_group("abelian A = <a>; abelian B = <b>; abelian C = <c>; amalg a^2 = b^3 = c^5")
    c = normalize(parse_chain("[a,c]", g), g)
    e = extract_tau_edges(c, g)
    mid = e.by_factor[1]
    assert mid and all(t.passthrough and not any(t.segment) for t in mid)
