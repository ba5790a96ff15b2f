"""The cones of edge vectors attached to one factor.

Coordinates are the factor's sigma-edges followed by one signed winding
coordinate per amalgamating direction.  A winding w_j stands for w_j copies
of the central element g_j^{r_j}, whose class is subtracted from h.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import cdd
import networkx as nx

from ._linalg import dot, primitive, rank
from .edges import FactorEdges, GammaGraph

V, VBAR, V0 = "V", "Vbar", "V0"


@dataclass(frozen=True)
class EdgeVector:
    sigma: tuple
    winding: tuple = ()

    @classmethod
    def of(cls, sigma, winding=()):
        return cls(tuple(Fraction(x) for x in sigma), tuple(Fraction(x) for x in winding))

    def __add__(self, other):
        return EdgeVector(
            tuple(a + b for a, b in zip(self.sigma, other.sigma)),
            tuple(a + b for a, b in zip(self.winding, other.winding)),
        )

    def __rmul__(self, lam):
        lam = Fraction(lam)
        return EdgeVector(tuple(lam * a for a in self.sigma), tuple(lam * a for a in self.winding))


@dataclass
class ConeSystem:
    factor: FactorEdges
    variant: str
    boundary_rows: list  # one per tau-edge, over sigma + winding columns
    homology_rows: list  # one per factor generator
    winding_fixed: list  # coordinates j whose winding is constrained to 0

    @property
    def nsigma(self) -> int:
        return len(self.factor.sigmas)

    @property
    def k(self) -> int:
        return len(self.factor.winding)

    @property
    def lin_gens(self) -> list:
        """Generators of the factor not used as an amalgamating direction."""
        amalg = {w[0] for w in self.factor.winding if w is not None}
        return [l for l in range(self.factor.rank) if l not in amalg]

    def equality_rows(self) -> list:
        rows = list(self.boundary_rows) + list(self.homology_rows)
        n = self.nsigma + self.k
        for j in self.winding_fixed:
            r = [Fraction(0)] * n
            r[self.nsigma + j] = Fraction(1)
            rows.append(r)
        return rows

    def contains(self, v: EdgeVector) -> bool:
        if any(x < 0 for x in v.sigma):
            return False
        x = list(v.sigma) + list(v.winding)
        return all(dot(r, x) == 0 for r in self.equality_rows())

    def winding_of(self, sigma) -> tuple:
        """Winding making h vanish, given h already vanishes off amalgamating directions."""
        h = _h_sigma(self.factor, sigma)
        out = []
        for w in self.factor.winding:
            out.append(Fraction(0) if w is None else h[w[0]] / w[1])
        return tuple(out)

    def export(self) -> str:
        """Plain-text constraint matrix: one equality row per line, then the sign pattern."""
        lines = [" ".join(str(x) for x in r) + " = 0" for r in self.equality_rows()]
        signs = ["+"] * self.nsigma + ["free"] * self.k
        lines.append("# sign: " + " ".join(signs))
        return "\n".join(lines) + "\n"


def _class_map(fe: FactorEdges):
    return {t.id: t.segment for t in fe.taus}


def _h_sigma(fe: FactorEdges, sigma) -> list:
    cls = _class_map(fe)
    h = [Fraction(0)] * fe.rank
    for s, x in zip(fe.sigmas, sigma):
        if x:
            for l in range(fe.rank):
                h[l] += Fraction(x) * Fraction(cls[s.t1][l] + cls[s.t2][l], 2)
    return h


def boundary_map(v: EdgeVector, cs: ConeSystem) -> list:
    idx = {t.id: k for k, t in enumerate(cs.factor.taus)}
    out = [Fraction(0)] * len(idx)
    for s, x in zip(cs.factor.sigmas, v.sigma):
        out[idx[s.t1]] += x
        out[idx[s.t2]] -= x
    return out


def homology_map(v: EdgeVector, cs: ConeSystem) -> list:
    h = _h_sigma(cs.factor, v.sigma)
    for j, w in enumerate(cs.factor.winding):
        if w is not None and j < len(v.winding):
            h[w[0]] -= w[1] * v.winding[j]
    return h


def build_cone(fe: FactorEdges, variant: str = VBAR) -> ConeSystem:
    if variant not in (V, VBAR, V0):
        raise ValueError(f"unknown cone variant {variant!r}")
    ns, k = len(fe.sigmas), len(fe.winding)
    idx = {t.id: n for n, t in enumerate(fe.taus)}
    brows = [[Fraction(0)] * (ns + k) for _ in fe.taus]
    for c, s in enumerate(fe.sigmas):
        brows[idx[s.t1]][c] += 1
        brows[idx[s.t2]][c] -= 1
    cls = _class_map(fe)
    hrows = [[Fraction(0)] * (ns + k) for _ in range(fe.rank)]
    for c, s in enumerate(fe.sigmas):
        for l in range(fe.rank):
            hrows[l][c] = Fraction(cls[s.t1][l] + cls[s.t2][l], 2)
    for j, w in enumerate(fe.winding):
        if w is not None:
            hrows[w[0]][ns + j] = Fraction(-w[1])
    fixed = [j for j, w in enumerate(fe.winding) if w is None or variant != VBAR]
    return ConeSystem(fe, variant, brows, hrows, fixed)


# -- rays ---------------------------------------------------------------------

def homology_constraints(cs: ConeSystem) -> list:
    """Homology rows that survive elimination of the free winding coordinates."""
    ns = cs.nsigma
    free_dirs = set()
    if cs.variant == VBAR:
        free_dirs = {w[0] for w in cs.factor.winding if w is not None}
    rows = [r[:ns] for l, r in enumerate(cs.homology_rows) if l not in free_dirs]
    return [r for r in rows if any(r)]


def sigma_constraints(cs: ConeSystem) -> list:
    """Equalities cutting out the sigma-projection of the cone (winding eliminated)."""
    rows = [r[:cs.nsigma] for r in cs.boundary_rows]
    return [r for r in rows if any(r)] + homology_constraints(cs)


def is_extremal(cs: ConeSystem, sigma) -> bool:
    """Rank test: tight constraints at sigma have rank n - 1."""
    ns = cs.nsigma
    rows = sigma_constraints(cs)
    for c in range(ns):
        if sigma[c] == 0:
            u = [Fraction(0)] * ns
            u[c] = Fraction(1)
            rows.append(u)
    return any(sigma) and rank(rows) == ns - 1


def cdd_sigma_rays(cs: ConeSystem) -> list:
    """Extremal rays of the sigma-projection by double description."""
    ns = cs.nsigma
    if ns == 0:
        return []
    eqs = sigma_constraints(cs)
    rows = [[0] + list(r) for r in eqs]
    rows += [[0] + [1 if c == j else 0 for c in range(ns)] for j in range(ns)]
    mat = cdd.Matrix(rows, number_type="fraction")
    mat.rep_type = cdd.RepType.INEQUALITY
    if eqs:
        mat.lin_set = frozenset(range(len(eqs)))
    gens = cdd.Polyhedron(mat).get_generators()
    out = []
    for i in range(gens.row_size):
        row = gens[i]
        if row[0] == 0 and any(row[1:]):
            out.append(primitive(row[1:]))
    return sorted(set(out))


def _cycle_vectors(cs: ConeSystem, gr: GammaGraph):
    col = {(s.t1, s.t2): c for c, s in enumerate(gr.edges)}
    G = nx.DiGraph()
    G.add_nodes_from(gr.vertices)
    G.add_edges_from(col)
    for cyc in nx.simple_cycles(G):
        v = [0] * len(gr.edges)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            v[col[a, b]] += 1
        yield tuple(v)


def extremal_rays(cs: ConeSystem, gr: GammaGraph) -> list:
    """Primitive integral rays (sigma, winding) spanning the cone.

    Rays come from embedded cycles of Gamma: cycles with no homology off
    the amalgamating directions (paired with the winding that kills their
    homology), and positive combinations of two cycles whose remaining
    homology points in opposite directions.  When that residual homology is
    more than one-dimensional, combinations of two cycles need not suffice
    and the rays are obtained by double description instead.
    """
    if cs.nsigma == 0:
        return []
    ns = cs.nsigma
    lin_rows = homology_constraints(cs)
    cycles = list(_cycle_vectors(cs, gr))
    residual = [tuple(dot(r, c) for r in lin_rows) for c in cycles]
    if rank([list(x) for x in residual if any(x)]) > 1:
        sig = cdd_sigma_rays(cs)
    else:
        cands = {primitive(c) for c, h in zip(cycles, residual) if not any(h)}
        pos = [(c, h) for c, h in zip(cycles, residual) if any(h)]
        for a in range(len(pos)):
            for b in range(a + 1, len(pos)):
                (c1, h1), (c2, h2) = pos[a], pos[b]
                ref = next(x for x in h1 if x)
                k1 = ref
                k2 = next(y for x, y in zip(h1, h2) if x)
                if k2 * k1 >= 0:
                    continue
                comb = [abs(k2) * x + abs(k1) * y for x, y in zip(c1, c2)]
                if all(dot(r, comb) == 0 for r in lin_rows):
                    cands.add(primitive(comb))
        sig = sorted(c for c in cands if is_extremal(cs, c))
    out = []
    for s in sig:
        w = cs.winding_of(s) if cs.variant == VBAR else tuple(Fraction(0) for _ in range(cs.k))
        full = primitive(list(s) + list(w))
        out.append(EdgeVector(full[:ns], full[ns:]))
    return out
