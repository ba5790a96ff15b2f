"""Disc vectors, the Klein function and the vector Euler characteristic.

A disc vector is the edge-count vector of a closed walk in Gamma whose
visited tau-classes sum into the lattice spanned by the central elements
(and vanish in the non-amalgamating directions).  Rather than listing
lattice points, the hull conv(D) + Vbar is grown by cutting planes: for each
facet a.x >= 1 of the current hull, a shortest closed walk in a covering
graph of Gamma (states track partial homology sums) finds the disc that
violates it most, if any.  When no facet is violated the hull is exact for
all discs representable inside the state window.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import cdd

from . import ratlp
from ._linalg import dot, int_rank, kernel_projector, primitive
from .cones import (
    VBAR,
    ConeSystem,
    EdgeVector,
    build_cone,
    cdd_sigma_rays,
    homology_constraints,
    sigma_constraints,
)
from .edges import FactorEdges, GammaGraph, build_gamma, count_components


class EmptyBound(ValueError):
    pass


@dataclass
class DiscVectorSet:
    vectors: list  # EdgeVector, integral
    bound: int
    complete_hint: bool
    dummy_multiplicity: dict = field(default_factory=dict)  # sigma index -> n_tau


@dataclass
class KleinFunctionals:
    functionals: list  # tuples over sigma coordinates

    def __call__(self, sigma) -> Fraction:
        if not self.functionals:
            return Fraction(0)
        return min(dot(f, sigma) for f in self.functionals)


def restrict(fe: FactorEdges) -> FactorEdges:
    """Drop sigma-edges that can never carry weight (no partner)."""
    sig = [s for s, u in zip(fe.sigmas, fe.usable) if u]
    return FactorEdges(fe.index, fe.taus, sig, build_gamma(fe.taus, sig), fe.winding, fe.rank, [True] * len(sig))


# -- the covering graph of Gamma --------------------------------------------------

class _StateSpace:
    """Closed walks of Gamma whose visited classes sum into the disc lattice."""

    def __init__(self, cs: ConeSystem, window: int):
        fe = cs.factor
        self.cs = cs
        self.mods = [(w[0], w[1]) for w in fe.winding if w is not None]
        amalg = {l for l, _ in self.mods}
        self.lin = [l for l in range(fe.rank) if l not in amalg]
        self.window = window
        self.verts = [t for t in fe.taus if not t.abelian_loop]
        self.cls = {t.id: t.segment for t in fe.taus}
        self.out = {t.id: [] for t in self.verts}
        for c, s in enumerate(fe.sigmas):
            if not s.dummy:
                self.out[s.t1].append((s.t2, c))
        self.truncated = False
        self._explore()

    def key(self, tid, s):
        return (tid, s)

    def step(self, s, tid):
        c = self.cls[tid]
        mod = tuple((x + c[l]) % abs(r) for x, (l, r) in zip(s[0], self.mods))
        lin = tuple(x + c[l] for x, l in zip(s[1], self.lin))
        return (mod, lin)

    def start(self, tid):
        return self.step((tuple(0 for _ in self.mods), tuple(0 for _ in self.lin)), tid)

    def _explore(self):
        nodes = {}
        arcs = []
        queue = deque()
        for t in self.verts:
            n = (t.id, self.start(t.id))
            if n not in nodes:
                nodes[n] = len(nodes)
                queue.append(n)
        while queue:
            tid, s = queue.popleft()
            for t2, c in self.out[tid]:
                s2 = self.step(s, t2)
                if any(abs(x) > self.window for x in s2[1]):
                    self.truncated = True
                    continue
                n2 = (t2, s2)
                if n2 not in nodes:
                    nodes[n2] = len(nodes)
                    queue.append(n2)
                arcs.append((nodes[tid, s], nodes[n2], c))
        self.nodes = nodes
        self.arcs = arcs
        self.sources = [nodes[t.id, self.start(t.id)] for t in self.verts]
        self.adj = [[] for _ in nodes]
        for u, v, c in arcs:
            self.adj[u].append((v, c))

    def shortest_closed_walk(self, weights):
        """Minimum-weight closed walk through a source state, as (weight, sigma counts)."""
        best = None
        n = len(self.nodes)
        for src in self.sources:
            dist = [None] * n
            pred = [None] * n
            dist[src] = 0
            inq = [False] * n
            q = deque([src])
            inq[src] = True
            close = None
            while q:
                u = q.popleft()
                inq[u] = False
                du = dist[u]
                for v, c in self.adj[u]:
                    nd = du + weights[c]
                    if v == src:
                        if close is None or nd < close[0]:
                            close = (nd, u, c)
                        continue
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        pred[v] = (u, c)
                        if not inq[v]:
                            inq[v] = True
                            q.append(v)
            if close is None:
                continue
            if best is None or close[0] < best[0]:
                counts = [0] * len(weights)
                counts[close[2]] += 1
                u = close[1]
                while u != src:
                    pu, c = pred[u]
                    counts[c] += 1
                    u = pu
                best = (close[0], tuple(counts))
        return best


# -- hull ---------------------------------------------------------------------

def _hull_facets(points, rays, dim, with_lin=False):
    """Inequalities a.x >= beta of conv(points) + cone(rays)."""
    rows = [[1] + list(p) for p in points] + [[0] + list(r) for r in rays]
    mat = cdd.Matrix(rows, number_type="fraction")
    mat.rep_type = cdd.RepType.GENERATOR
    ineq = cdd.Polyhedron(mat).get_inequalities()
    out, lin = [], []
    for i in range(ineq.row_size):
        row = ineq[i]
        a = tuple(Fraction(x) for x in row[1:])
        if i in ineq.lin_set:
            lin.append(a)
        elif any(a):
            out.append((a, -Fraction(row[0])))
    return (out, lin) if with_lin else out


def _hull_vertices(points, facets, lin, dim):
    """Points of the generating set that are vertices, given the facets."""
    scaled = []
    for a, beta in facets:
        row = primitive(list(a) + [beta])
        scaled.append((row[:-1], row[-1]))
    lin = [list(primitive(a)) for a in lin]
    out = []
    for p in points:
        p = [int(x) for x in p]
        tight = [list(a) for a, beta in scaled if sum(x * y for x, y in zip(a, p)) == beta]
        if int_rank(tight + lin) == dim:
            out.append(tuple(p))
    return out


def _dummy_discs(cs: ConeSystem):
    """Multiples n*d_tau of dummy edges whose loop class lies in the disc lattice."""
    fe = cs.factor
    amalg = {w[0]: w[1] for w in fe.winding if w is not None}
    out = {}
    for c, s in enumerate(fe.sigmas):
        if not s.dummy:
            continue
        cls = next(t.segment for t in fe.taus if t.id == s.t1)
        if any(x for l, x in enumerate(cls) if l not in amalg):
            continue
        n = 1
        for l, r in amalg.items():
            n = math.lcm(n, Fraction(cls[l], r).denominator)
        out[c] = n
    return out


def _iterate(cs: ConeSystem, rays, seeds, space):
    ns = cs.nsigma
    found = set(seeds)
    if not found:
        return []
    genuine = [c for c, s in enumerate(cs.factor.sigmas) if not s.dummy]
    while True:
        facets, lin = _hull_facets(sorted(found), rays, ns, with_lin=True)
        added = False
        for a, beta in facets:
            if beta <= 0:
                continue
            f = [x / beta for x in a]
            den = math.lcm(1, *(f[c].denominator for c in genuine))
            weights = [int(x * den) for x in f]
            hit = space.shortest_closed_walk(weights)
            if hit is not None and hit[0] < den and hit[1] not in found:
                found.add(hit[1])
                added = True
        if not added:
            return _hull_vertices(sorted(found), facets, lin, ns)


def enumerate_disc_vectors(cs: ConeSystem, gr: GammaGraph = None, bound: int = 8) -> DiscVectorSet:
    """Hull vertices of the disc vectors of a Vbar cone.

    ``bound`` limits the partial homology sums tracked in non-amalgamating
    directions.  Factors without such directions are handled exactly; for
    the others the window is doubled until the vertex set is unchanged
    twice in a row (``complete_hint``) or a fixed number of doublings fail.
    """
    if bound <= 0:
        raise EmptyBound("bound must be positive")
    if cs.variant != VBAR:
        raise ValueError("disc vectors live in the Vbar cone")
    key = (cs.factor.signature(), bound)
    return _enumerate_cached(key, cs)


_CACHE = {}


def _enumerate_cached(key, cs):
    if key in _CACHE:
        return _CACHE[key]
    res = _enumerate(cs, key[1])
    _CACHE[key] = res
    return res


def _enumerate(cs: ConeSystem, bound: int) -> DiscVectorSet:
    ns = cs.nsigma
    rays = cdd_sigma_rays(cs)
    dummies = _dummy_discs(cs)
    dummy_vecs = []
    for c, n in dummies.items():
        v = [0] * ns
        v[c] = n
        dummy_vecs.append(tuple(v))

    def run(window):
        space = _StateSpace(cs, window)
        seeds = set(dummy_vecs)
        lin = homology_constraints(cs)
        gr = cs.factor.gamma
        for r in rays:
            if any(r[c] for c in dummies) or any(dot(row, r) for row in lin):
                continue
            if count_components(gr, r) != 1:
                continue
            w = cs.winding_of(r)
            scale = math.lcm(1, *(x.denominator for x in w))
            seeds.add(tuple(scale * x for x in r))
        if not any(v for v in seeds if not any(v[c] for c in dummies)):
            hit = space.shortest_closed_walk([1] * ns)
            if hit is not None:
                seeds.add(hit[1])
        return sorted(_iterate(cs, rays, seeds, space)), space.truncated

    window = bound
    verts, truncated = run(window)
    complete = not truncated
    stable = 0
    doublings = 0
    while not complete and doublings < 5:
        window *= 2
        doublings += 1
        nv, truncated = run(window)
        if not truncated:
            verts, complete = nv, True
            break
        stable = stable + 1 if nv == verts else 0
        verts = nv
        if stable >= 2:
            complete = True
    vecs = [EdgeVector(tuple(Fraction(x) for x in v), cs.winding_of(v)) for v in verts]
    return DiscVectorSet(vecs, window, complete, dummies)


def klein_functionals(d: DiscVectorSet, cs: ConeSystem) -> KleinFunctionals:
    if not d.vectors:
        return KleinFunctionals([])
    rays = cdd_sigma_rays(cs)
    pts = [tuple(v.sigma) for v in d.vectors]
    eqs = sigma_constraints(cs)
    # canonical representative: functionals only matter on the cone's span
    proj = kernel_projector(eqs, cs.nsigma)
    out = []
    for a, beta in _hull_facets(pts, rays, cs.nsigma):
        if beta > 0:
            out.append(proj([x / beta for x in a]))
    return KleinFunctionals(sorted(set(out)))


def _as_vector(v, cs: ConeSystem) -> EdgeVector:
    if not isinstance(v, EdgeVector):
        v = EdgeVector.of(v)
    if not v.winding:
        v = EdgeVector(v.sigma, cs.winding_of(v.sigma))
    return v


def _check_in_cone(v: EdgeVector, cs: ConeSystem):
    if not cs.contains(v):
        raise ValueError("vector is not in the cone")


def klein_representation(v, d: DiscVectorSet, cs: ConeSystem):
    """An acceptable representation of maximal disc mass: (kappa, t per disc)."""
    v = _as_vector(v, cs)
    _check_in_cone(v, cs)
    if not d.vectors or not any(v.sigma):
        return Fraction(0), [Fraction(0)] * len(d.vectors)
    m = len(d.vectors)
    A = [[d.vectors[i].sigma[c] for i in range(m)] for c in range(cs.nsigma)]
    lp = ratlp.LinearProgram([1] * m, "max", A_ub=A, b_ub=list(v.sigma))
    res = ratlp.solve(lp)
    return res.value, res.primal


def klein(v, d: DiscVectorSet, cs: ConeSystem) -> Fraction:
    return klein_representation(v, d, cs)[0]


def v_ab(v, d: DiscVectorSet, cs: ConeSystem) -> Fraction:
    """Dummy mass counted in disc units: one per copy of the smallest disc on that loop."""
    sigma = v.sigma if isinstance(v, EdgeVector) else v
    return sum((Fraction(sigma[c]) / n for c, n in d.dummy_multiplicity.items()), Fraction(0))


def genuine_size(v, cs: ConeSystem) -> Fraction:
    sigma = v.sigma if isinstance(v, EdgeVector) else v
    return sum((Fraction(x) for x, s in zip(sigma, cs.factor.sigmas) if not s.dummy), Fraction(0))


def chi_o_vec(v, d: DiscVectorSet, cs: ConeSystem) -> Fraction:
    v = _as_vector(v, cs)
    return klein(v, d, cs) - genuine_size(v, cs) / 2 - v_ab(v, d, cs)


@dataclass
class FactorData:
    """Cone, discs and functionals for one (restricted) factor."""

    factor: FactorEdges
    cone: ConeSystem
    discs: DiscVectorSet
    functionals: KleinFunctionals


_FD_CACHE = {}


def factor_data(fe: FactorEdges, bound: int = 8) -> FactorData:
    rfe = restrict(fe)
    key = (rfe.signature(), bound)
    hit = _FD_CACHE.get(key)
    if hit is not None:
        # reuse the computation, rebinding it to this factor's tau ids
        cs = build_cone(rfe, VBAR)
        dv = DiscVectorSet(
            [EdgeVector(v.sigma, v.winding) for v in hit.discs.vectors],
            hit.discs.bound,
            hit.discs.complete_hint,
            dict(hit.discs.dummy_multiplicity),
        )
        return FactorData(rfe, cs, dv, hit.functionals)
    cs = build_cone(rfe, VBAR)
    dv = enumerate_disc_vectors(cs, rfe.gamma, bound)
    kf = klein_functionals(dv, cs)
    fd = FactorData(rfe, cs, dv, kf)
    _FD_CACHE[key] = fd
    return fd
