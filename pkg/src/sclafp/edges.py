"""tau-edges, sigma-edges, compatibility and the graph Gamma."""

from __future__ import annotations

from dataclasses import dataclass, field

from .presentation import Chain, GroupSpec, is_normal


class NotNormal(ValueError):
    pass


@dataclass(frozen=True)
class TauEdge:
    id: int
    factor: int
    segment: tuple  # exponent vector over the factor's generators
    term: int
    position: int
    abelian_loop: bool = False
    passthrough: bool = False  # empty segment crossing an intermediate factor


@dataclass(frozen=True, order=True)
class SigmaEdge:
    factor: int
    t1: int
    t2: int
    dummy: bool = False

    @property
    def pair(self):
        return (self.t1, self.t2)


@dataclass
class ChainEdges:
    """All tau-edges of a normal-form chain with their cyclic neighbours."""

    taus: list
    by_factor: list
    next: dict
    prev: dict
    coefficient: dict  # tau id -> coefficient of its word

    def tau(self, tid: int) -> TauEdge:
        return self.taus[tid]


def extract_tau_edges(c: Chain, g: GroupSpec) -> ChainEdges:
    if not is_normal(c, g):
        raise NotNormal("chain is not in normal form")
    taus, nxt, prv, coef = [], {}, {}, {}
    by_factor = [[] for _ in g.factors]
    for t, (co, w) in enumerate(c.terms):
        ids = []
        syl = w.syllables
        for pos, (f, vec) in enumerate(syl):
            tau = TauEdge(len(taus), f, vec, t, pos, abelian_loop=w.pure)
            taus.append(tau)
            by_factor[f].append(tau)
            coef[tau.id] = co
            ids.append(tau.id)
            if w.pure:
                continue
            # factors sit on a line of cylinders; crossing from i to j passes
            # through every factor strictly between them
            nf = syl[(pos + 1) % len(syl)][0]
            step = 1 if nf > f else -1
            for m in range(f + step, nf, step):
                zero = tuple(0 for _ in range(g.factors[m].rank))
                tau = TauEdge(len(taus), m, zero, t, pos, passthrough=True)
                taus.append(tau)
                by_factor[m].append(tau)
                coef[tau.id] = co
                ids.append(tau.id)
        if not w.pure:
            for a, b in zip(ids, ids[1:] + ids[:1]):
                nxt[a] = b
                prv[b] = a
    return ChainEdges(taus, by_factor, nxt, prv, coef)


def build_sigma_basis(taus) -> list:
    taus = list(taus)
    if not taus:
        return []
    f = taus[0].factor
    real = [t for t in taus if not t.abelian_loop]
    out = [SigmaEdge(f, a.id, b.id) for a in real for b in real]
    out += [SigmaEdge(f, t.id, t.id, dummy=True) for t in taus if t.abelian_loop]
    return out


def partner(s: SigmaEdge, edges: ChainEdges):
    """The sigma-edge on the far side of the cut locus, or None."""
    if s.dummy:
        return None
    a = edges.next[s.t1]
    b = edges.prev[s.t2]
    fa = edges.tau(a).factor
    if edges.tau(b).factor != fa:
        return None
    return SigmaEdge(fa, b, a)


def compatibility_pairs(*sides, edges: ChainEdges) -> list:
    """Pairs (s, partner(s)) among the given sigma lists, each listed once.

    A sigma-edge (t1, t2) is glued to (prev(t2), next(t1)).  With three or
    more factors some sigma-edges have no partner; they are left out and
    must carry zero weight.
    """
    present = {s for side in sides for s in side}
    out = []
    for side in sides:
        for s in side:
            p = partner(s, edges)
            if p is not None and p in present and s.factor < p.factor:
                out.append((s, p))
    return out


@dataclass
class GammaGraph:
    vertices: list
    edges: list
    dummy_loops: set = field(default_factory=set)

    def dump(self, weights=None) -> str:
        lines = []
        for k, s in enumerate(self.edges):
            w = 1 if weights is None else weights[k]
            lines.append(f"{s.t1} {s.t2} {w}")
        return "\n".join(lines) + ("\n" if lines else "")


def build_gamma(taus, sigmas) -> GammaGraph:
    return GammaGraph([t.id for t in taus], list(sigmas))


class _DSU:
    def __init__(self):
        self.p = {}

    def find(self, x):
        self.p.setdefault(x, x)
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[ra] = rb
            return True
        return False


def count_components(gr: GammaGraph, v) -> int:
    """Components of the subgraph spanned by edges of positive weight."""
    if any(x < 0 for x in v):
        raise ValueError("weights must be nonnegative")
    dsu = _DSU()
    for s, x in zip(gr.edges, v):
        if x > 0:
            dsu.union(s.t1, s.t2)
    return len({dsu.find(x) for x in dsu.p})


@dataclass
class FactorEdges:
    """Everything the cone and disc code needs about one factor."""

    index: int
    taus: list
    sigmas: list
    gamma: GammaGraph
    winding: tuple  # per coordinate: (local generator, r) or None
    rank: int
    usable: list  # per sigma: False for genuine edges without a partner

    @property
    def classes(self) -> dict:
        return {t.id: t.segment for t in self.taus}

    def signature(self) -> tuple:
        """Hashable description determining the cone and disc data up to renaming."""
        pos = {t.id: k for k, t in enumerate(self.taus)}
        return (
            tuple((t.segment, t.abelian_loop) for t in self.taus),
            tuple((pos[s.t1], pos[s.t2], s.dummy) for s, u in zip(self.sigmas, self.usable) if u),
            self.winding,
            self.rank,
        )


def factor_edges(g: GroupSpec, edges: ChainEdges) -> list:
    out = []
    for i, taus in enumerate(edges.by_factor):
        sig = build_sigma_basis(taus)
        usable = [s.dummy or partner(s, edges) is not None for s in sig]
        out.append(
            FactorEdges(i, list(taus), sig, build_gamma(taus, sig), g.winding(i), g.factors[i].rank, usable)
        )
    return out
