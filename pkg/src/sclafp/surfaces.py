"""Admissible surfaces: gluing equations, sigma-loops, doubling, certificates.

A certificate is a purely combinatorial surface.  Pieces are planar
surfaces living over one factor; each boundary circuit of a piece is a
cyclic list of tau-edge ids, consecutive entries forming a sigma-edge.
Genuine sigma-edges are arcs glued in pairs across the cylinder between
adjacent factors, each pair carrying an integer winding label in Z^k;
sigma-loops join two pieces along a whole circle.  A piece maps to its
torus exactly when its tau classes plus incident labels cancel, and the
Euler characteristic is read off as
    chi = sum over pieces (2 - circuits - loop ends) - glued arc pairs.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .discs import klein_representation
from .edges import ChainEdges, SigmaEdge, _DSU, extract_tau_edges, partner
from .presentation import GroupSpec, drop_trivial, normalize, parse_chain, parse_group


class InconsistentSystem(ValueError):
    pass


# -- gluing equations ----------------------------------------------------------

@dataclass
class GluingSystem:
    """Blocks of 0/1 rows over shared columns, one block per factor.

    Row r of block b reads sum_c M_b[r][c] * l_c = rhs[b][r], with l_c and
    the right-hand sides in Z^k.
    """

    ncols: int
    blocks: list  # per block: list of rows, each a dict column -> 1
    rhs: list  # per block: list of k-tuples
    k: int = 1

    def validate(self):
        seen = defaultdict(list)
        for b, rows in enumerate(self.blocks):
            per = defaultdict(int)
            for row in rows:
                for c, x in row.items():
                    if x not in (0, 1) or not 0 <= c < self.ncols:
                        raise ValueError("block entries must be 0 or 1 on valid columns")
                    per[c] += x
            for c, n in per.items():
                if n != 1:
                    raise ValueError(f"column {c} appears {n} times in block {b}")
                seen[c].append(b)
        return seen

    def rows(self):
        for b, rows in enumerate(self.blocks):
            for r, row in enumerate(rows):
                yield b, r, row, self.rhs[b][r]

    def check(self, solution) -> bool:
        for _, _, row, rhs in self.rows():
            for j in range(self.k):
                if sum(x * solution[c][j] for c, x in row.items()) != rhs[j]:
                    return False
        return True


@dataclass
class GluingSolution:
    labels: list  # per column: k-tuple of ints
    reduced: list  # (pivot column, reduced row, composition) per independent row
    zero_rows: list  # compositions of rows that reduced to zero


def solve_gluing(gs: GluingSystem) -> GluingSolution:
    """Integral solution by block-ordered elimination with unit pivots.

    Rows are taken block by block.  Each is reduced against the earlier
    pivot rows; the reduced rows keep entries in {-1, 0, 1}, so back
    substitution stays integral.  Compositions record which original rows
    (block, row) were combined, with their signs.
    """
    gs.validate()
    k = gs.k
    pivots = []  # (col, row dict, rhs list, composition)
    pivot_at = {}
    zero_rows = []
    for b, r, row, rhs in gs.rows():
        cur = {c: x for c, x in row.items() if x}
        val = list(rhs)
        comp = {(b, r): 1}
        while True:
            hit = next((c for c in cur if c in pivot_at), None)
            if hit is None:
                break
            pc, prow, prhs, pcomp = pivots[pivot_at[hit]]
            f = cur[hit] * prow[hit]  # pivot entries are +-1
            for c, x in prow.items():
                y = cur.get(c, 0) - f * x
                if y:
                    cur[c] = y
                else:
                    cur.pop(c, None)
            val = [v - f * w for v, w in zip(val, prhs)]
            for key, s in pcomp.items():
                y = comp.get(key, 0) - f * s
                if y:
                    comp[key] = y
                else:
                    comp.pop(key)
        if not cur:
            if any(val):
                raise InconsistentSystem("gluing equations are inconsistent")
            zero_rows.append(comp)
            continue
        if any(abs(x) != 1 for x in cur.values()):
            raise AssertionError("reduced row left {-1,0,1}")
        pc = min(cur)
        pivot_at[pc] = len(pivots)
        pivots.append((pc, cur, val, comp))
    labels = [[0] * k for _ in range(gs.ncols)]
    for pc, row, val, _ in reversed(pivots):
        s = list(val)
        for c, x in row.items():
            if c != pc:
                for j in range(k):
                    s[j] -= x * labels[c][j]
        labels[pc] = [x * row[pc] for x in s]
    reduced = [(pc, dict(row), comp) for pc, row, _, comp in pivots]
    return GluingSolution([tuple(l) for l in labels], reduced, zero_rows)


def _solve_tree(npieces, columns, demand, k):
    """Labels on a graph: column (u, v) adds +l at u and -l at v; wants sum = demand.

    A spanning forest carries all the labels; other columns get 0.
    """
    adj = defaultdict(list)
    for c, (u, v) in enumerate(columns):
        adj[u].append((v, c, 1))
        adj[v].append((u, c, -1))
    labels = [(0,) * k for _ in columns]
    seen = [False] * npieces
    for root in range(npieces):
        if seen[root]:
            continue
        seen[root] = True
        order, parent = [root], {root: None}
        q = deque([root])
        while q:
            u = q.popleft()
            for v, c, s in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = (u, c, s)
                    order.append(v)
                    q.append(v)
        need = {u: list(demand[u]) for u in order}
        for u in reversed(order):
            if parent[u] is None:
                if any(need[u]):
                    raise InconsistentSystem("gluing equations are inconsistent")
                continue
            p, c, s = parent[u]
            # edge seen from u has sign -s; it must supply need[u]
            lab = tuple(-s * x for x in need[u])
            labels[c] = lab
            for j in range(k):
                need[p][j] -= s * lab[j]
    return labels


# -- sigma-loops ---------------------------------------------------------------

@dataclass
class LoopComponent:
    imbalance: tuple  # sum of piece windings, in Z^k
    members: dict  # factor -> a representative piece


def _zero_sum_partition(vecs):
    """Partition indices into the largest number of zero-sum groups."""
    n = len(vecs)
    if n == 0:
        return []
    if n > 10:
        # greedy: cancel opposite pairs, lump the rest
        rest = list(range(n))
        groups = []
        used = set()
        for i in rest:
            if i in used:
                continue
            neg = tuple(-x for x in vecs[i])
            j = next((j for j in rest if j not in used and j != i and vecs[j] == neg), None)
            if j is not None:
                used.update((i, j))
                groups.append([i, j])
        left = [i for i in rest if i not in used]
        if left:
            groups.append(left)
        return groups
    k = len(vecs[0])
    sums = {}
    for mask in range(1 << n):
        s = [0] * k
        for i in range(n):
            if mask >> i & 1:
                for j in range(k):
                    s[j] += vecs[i][j]
        sums[mask] = tuple(s)
    best = {0: (0, None)}

    def solve(mask):
        if mask in best:
            return best[mask][0]
        low = mask & -mask
        rest = mask ^ low
        top = (-1, None)
        sub = rest
        while True:
            s = sub | low
            if not any(sums[s]) and not any(sums[mask ^ s]):
                v = 1 + solve(mask ^ s)
                if v > top[0]:
                    top = (v, s)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = top
        return top[0]

    full = (1 << n) - 1
    solve(full)
    groups, mask = [], full
    while mask:
        s = best[mask][1]
        groups.append([i for i in range(n) if s >> i & 1])
        mask ^= s
    return groups


def minimize_loops(components) -> list:
    """sigma-loops making every component balanced, each loop separating.

    Imbalanced components are split into as many zero-sum groups as
    possible (exactly for up to 10 of them); each group is then joined by a
    tree of loops between pieces of adjacent factors, borrowing a balanced
    component as a bridge when two members have no adjacent factors.
    Returns loops as (lower piece, upper piece).
    """
    imb = [i for i, c in enumerate(components) if any(c.imbalance)]
    groups = [[imb[i] for i in g] for g in _zero_sum_partition([components[i].imbalance for i in imb])]
    owner = {}
    for gi, g in enumerate(groups):
        for c in g:
            owner[c] = gi
    loops = []
    used = set()

    def link(a_set, c):
        for fa, pa in (kv for a in a_set for kv in components[a].members.items()):
            for fb, pb in components[c].members.items():
                if abs(fa - fb) == 1:
                    return (pa, pb) if fa < fb else (pb, pa)
        return None

    for gi, g in enumerate(groups):
        if gi in used:
            continue
        used.add(gi)
        connected = [g[0]]
        todo = list(g[1:])
        while todo:
            hit = None
            for c in todo:
                lk = link(connected, c)
                if lk:
                    hit = (c, lk)
                    break
            if hit is None:
                # bridge through some other component, balanced or from another group
                others = [c for c in range(len(components)) if c not in connected and c not in todo]
                bridge = next((c for c in others if link(connected, c)), None)
                if bridge is None:
                    raise InconsistentSystem("no adjacent factors to carry a sigma-loop")
                if bridge in owner and owner[bridge] not in used:
                    used.add(owner[bridge])
                    todo.extend(x for x in groups[owner[bridge]] if x != bridge)
                hit = (bridge, link(connected, bridge))
            c, (lo, hi) = hit
            loops.append((lo, hi))
            connected.append(c)
            if c in todo:
                todo.remove(c)
    return loops


def insert_sigma_loops(windings_a, windings_b) -> list:
    """The naive construction: unit-labelled loops between A and B pieces.

    ``windings_*`` hold the central winding of each piece's tau-edges.  A
    loop (a, b, label) adds +label to piece a and -label to piece b; after
    insertion every piece balances.  Surplus +-e_j pairs on one side are
    sent to a single piece on the other side.
    """
    k = len((windings_a or windings_b)[0]) if (windings_a or windings_b) else 0
    units_a = defaultdict(list)
    units_b = defaultdict(list)
    for p, w in enumerate(windings_a):
        for j, x in enumerate(w):
            for _ in range(abs(x)):
                units_a[j, -1 if x > 0 else 1].append(p)
    for q, w in enumerate(windings_b):
        for j, x in enumerate(w):
            for _ in range(abs(x)):
                units_b[j, 1 if x > 0 else -1].append(q)
    loops = []

    def unit(j, s):
        return tuple(s if i == j else 0 for i in range(k))

    for key in set(units_a) | set(units_b):
        la, lb = units_a[key], units_b[key]
        while la and lb:
            loops.append((la.pop(), lb.pop(), unit(*key)))
    for j in range(k):
        for units, side in ((units_a, "a"), (units_b, "b")):
            plus, minus = units[j, 1], units[j, -1]
            if len(plus) != len(minus):
                raise InconsistentSystem("loop charges do not balance")
            if not plus:
                continue
            if side == "a":
                if not windings_b:
                    raise InconsistentSystem("no piece on the other side")
                for p, m in zip(plus, minus):
                    loops.append((p, 0, unit(j, 1)))
                    loops.append((m, 0, unit(j, -1)))
            else:
                if not windings_a:
                    raise InconsistentSystem("no piece on the other side")
                for q, m in zip(plus, minus):
                    loops.append((0, q, unit(j, 1)))
                    loops.append((0, m, unit(j, -1)))
    return loops


# -- certificates --------------------------------------------------------------

@dataclass
class Piece:
    factor: int
    circuits: list  # lists of tau ids

    @property
    def boundary(self) -> int:
        return len(self.circuits)


@dataclass
class SurfaceCertificate:
    group: str
    chain: str
    scale: Fraction
    N: int
    pieces: list
    arcs: list  # ((piece, circuit, pos), (piece, circuit, pos), label); first slot on the lower factor
    loops: list  # (lower piece, upper piece, label)
    chi: int = 0
    chi_minus: int = 0
    bound: Fraction = Fraction(0)
    raw_bound: Fraction = Fraction(0)
    value: Optional[Fraction] = None
    doublings: int = 0

    def loop_ends(self) -> list:
        ends = [0] * len(self.pieces)
        for a, b, _ in self.loops:
            ends[a] += 1
            ends[b] += 1
        return ends

    def piece_chi(self) -> list:
        ends = self.loop_ends()
        return [2 - p.boundary - e for p, e in zip(self.pieces, ends)]

    def recount(self):
        """Recompute chi, chi^- and the bound from the combinatorics."""
        pc = self.piece_chi()
        dsu = _DSU()
        for i in range(len(self.pieces)):
            dsu.find(i)
        for (a, _, _), (b, _, _), _ in self.arcs:
            dsu.union(a, b)
        for a, b, _ in self.loops:
            dsu.union(a, b)
        comp = defaultdict(int)
        for i, x in enumerate(pc):
            comp[dsu.find(i)] += x
        for (a, _, _), _, _ in self.arcs:
            comp[dsu.find(a)] -= 1
        chi = sum(comp.values())
        chi_minus = sum(min(0, x) for x in comp.values())
        denom = 2 * self.N * self.scale
        return chi, chi_minus, Fraction(-chi_minus) / denom, Fraction(-chi) / denom

    def finalize(self):
        self.chi, self.chi_minus, self.bound, self.raw_bound = self.recount()
        return self

    def to_json(self) -> str:
        doc = {
            "group": self.group,
            "chain": self.chain,
            "scale": str(self.scale),
            "N": self.N,
            "doublings": self.doublings,
            "chi": self.chi,
            "chi_minus": self.chi_minus,
            "bound": str(self.bound),
            "raw_bound": str(self.raw_bound),
            "value": None if self.value is None else str(self.value),
            "pieces": [
                {"factor": p.factor, "circuits": p.circuits, "chi": x}
                for p, x in zip(self.pieces, self.piece_chi())
            ],
            "arcs": [[list(a), list(b), list(l)] for a, b, l in self.arcs],
            "loops": [[a, b, list(l)] for a, b, l in self.loops],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SurfaceCertificate":
        d = json.loads(text)
        return cls(
            d["group"],
            d["chain"],
            Fraction(d["scale"]),
            int(d["N"]),
            [Piece(p["factor"], [list(c) for c in p["circuits"]]) for p in d["pieces"]],
            [(tuple(a), tuple(b), tuple(l)) for a, b, l in d["arcs"]],
            [(a, b, tuple(l)) for a, b, l in d["loops"]],
            int(d["chi"]),
            int(d["chi_minus"]),
            Fraction(d["bound"]),
            Fraction(d["raw_bound"]),
            None if d.get("value") is None else Fraction(d["value"]),
            int(d.get("doublings", 0)),
        )


def _euler_circuits(edges):
    """Closed walks covering a balanced multigraph, one per connected component.

    ``edges`` maps (u, v) -> multiplicity.  Returns lists of vertices.
    """
    out_edges = defaultdict(list)
    for (u, v), m in sorted(edges.items()):
        if m:
            out_edges[u].append([v, m])
    comps = _DSU()
    for (u, v), m in edges.items():
        if m:
            comps.union(u, v)
    circuits = []
    done = set()
    for start in sorted(out_edges):
        root = comps.find(start)
        if root in done:
            continue
        done.add(root)
        stack, walk = [start], []
        while stack:
            u = stack[-1]
            adj = out_edges[u]
            while adj and adj[-1][1] == 0:
                adj.pop()
            if adj:
                e = adj[-1]
                e[1] -= 1
                stack.append(e[0])
            else:
                walk.append(stack.pop())
        walk.reverse()
        circuits.append(walk[:-1])
    return circuits


def _winding(g: GroupSpec, edges: ChainEdges, piece: Piece):
    """Central winding of a piece's tau-edges, and their non-central class."""
    f = piece.factor
    rank = g.factors[f].rank
    cls = [0] * rank
    for circ in piece.circuits:
        for t in circ:
            for l, x in enumerate(edges.tau(t).segment):
                cls[l] += x
    wind = []
    for w in g.winding(f):
        if w is None:
            wind.append(Fraction(0))
        else:
            wind.append(Fraction(cls[w[0]], w[1]))
            cls[w[0]] = 0
    return wind, cls


def _factor_sigma_counts(sol, i, scale):
    prob = sol.problem
    fd = prob.factors[i]
    return {(s.t1, s.t2): scale * x for s, x in zip(fd.factor.sigmas, sol.vectors[i])}


def _lcm_den(values) -> int:
    return math.lcm(1, *(Fraction(x).denominator for x in values))


def _representations(sol):
    out = []
    for i, fd in enumerate(sol.problem.factors):
        v = sol.vectors[i]
        if any(v):
            _, t = klein_representation(v, fd.discs, fd.cone)
        else:
            t = [Fraction(0)] * len(fd.discs.vectors)
        out.append(t)
    return out


def base_degree(sol, reps=None) -> int:
    """Least N making all pieces integral with integral windings."""
    reps = reps if reps is not None else _representations(sol)
    dens = []
    for i, fd in enumerate(sol.problem.factors):
        dens.append(_lcm_den(sol.vectors[i]))
        dens.append(_lcm_den(reps[i]))
    N = math.lcm(1, *dens)
    for i, fd in enumerate(sol.problem.factors):
        res = list(sol.vectors[i])
        for t, d in zip(reps[i], fd.discs.vectors):
            res = [a - t * b for a, b in zip(res, d.sigma)]
        w = fd.cone.winding_of([N * x for x in res])
        N *= _lcm_den(w)
    return N


def assemble(sol, N: int, reps=None) -> SurfaceCertificate:
    """Surface of degree N: discs first, then one residual piece per factor."""
    prob = sol.problem
    g = prob.group
    edges = prob.edges
    reps = reps if reps is not None else _representations(sol)
    pieces = []
    for i, fd in enumerate(prob.factors):
        res = [N * x for x in sol.vectors[i]]
        for t, d in zip(reps[i], fd.discs.vectors):
            count = N * t
            if count.denominator != 1:
                raise ValueError("degree does not clear disc multiplicities")
            if not count:
                continue
            res = [a - count * b for a, b in zip(res, d.sigma)]
            circ = _euler_circuits({(s.t1, s.t2): int(x) for s, x in zip(fd.factor.sigmas, d.sigma)})
            if len(circ) != 1:
                raise AssertionError("disc vector with disconnected support")
            for _ in range(int(count)):
                pieces.append(Piece(i, [list(circ[0])]))
        if any(x < 0 or Fraction(x).denominator != 1 for x in res):
            raise ValueError("degree does not clear the residual")
        if any(res):
            circ = _euler_circuits({(s.t1, s.t2): int(x) for s, x in zip(fd.factor.sigmas, res)})
            pieces.append(Piece(i, [list(c) for c in circ]))

    # arc slots by sigma type
    slots = defaultdict(list)
    for pi, p in enumerate(pieces):
        for ci, circ in enumerate(p.circuits):
            for pos, t in enumerate(circ):
                u = circ[(pos + 1) % len(circ)]
                if not edges.tau(t).abelian_loop:
                    slots[p.factor, t, u].append((pi, ci, pos))
    dsu = _DSU()
    for pi in range(len(pieces)):
        dsu.find(pi)
    arcs = []
    for sa, sb in prob.pairs:
        la = slots.pop((sa.factor, sa.t1, sa.t2), [])
        lb = slots.pop((sb.factor, sb.t1, sb.t2), [])
        if len(la) != len(lb):
            raise AssertionError("arc counts differ across a compatibility pair")
        lb = list(lb)
        for a in la:
            pick = len(lb) - 1
            ra = dsu.find(a[0])
            for m in range(len(lb) - 1, max(-1, len(lb) - 65), -1):
                if dsu.find(lb[m][0]) != ra:
                    pick = m
                    break
            b = lb[pick]
            lb[pick] = lb[-1]
            lb.pop()
            dsu.union(a[0], b[0])
            arcs.append((a, b))
    if any(slots.values()):
        raise AssertionError("sigma-edges without a partner carry weight")

    cert = SurfaceCertificate(g.serialize(), prob.chain.format(g), prob.chain.scale, N, pieces, [], [])
    _label(cert, g, edges, arcs)
    return cert


def _active(g: GroupSpec):
    return [j for j in range(g.amalg_rank) if g.active(j)]


def _label(cert, g, edges, arcs, loops=None):
    """Choose sigma-loops (unless given) and solve for all winding labels."""
    pieces = cert.pieces
    k = g.amalg_rank
    wind = []
    for p in pieces:
        w, rest = _winding(g, edges, p)
        if any(rest) or any(x.denominator != 1 for x in w):
            raise AssertionError("piece does not map to its torus")
        wind.append(tuple(int(x) for x in w))
    if loops is None:
        dsu = _DSU()
        for i in range(len(pieces)):
            dsu.find(i)
        for a, b in arcs:
            dsu.union(a[0], b[0])
        comps = {}
        for i in range(len(pieces)):
            r = dsu.find(i)
            c = comps.setdefault(r, LoopComponent([0] * k, {}))
            c.imbalance = [x + y for x, y in zip(c.imbalance, wind[i])]
            c.members.setdefault(pieces[i].factor, i)
        comp_list = [LoopComponent(tuple(c.imbalance), c.members) for c in comps.values()]
        loops = minimize_loops(comp_list)
    columns = [(a[0], b[0]) for a, b in arcs] + list(loops)
    demand = [tuple(-x for x in w) for w in wind]
    labels = _solve_tree(len(pieces), columns, demand, k)
    cert.arcs = [(a, b, labels[c]) for c, (a, b) in enumerate(arcs)]
    cert.loops = [(lo, hi, labels[len(arcs) + m]) for m, (lo, hi) in enumerate(loops)]
    return cert


def gluing_system(cert: SurfaceCertificate, g: GroupSpec, edges: ChainEdges) -> GluingSystem:
    """The certificate's label equations in the 0/1 block form."""
    nb = len(g.factors)
    rows = {}
    blocks = [[] for _ in range(nb)]
    rhs = [[] for _ in range(nb)]
    for pi, p in enumerate(cert.pieces):
        rows[pi] = (p.factor, len(blocks[p.factor]))
        blocks[p.factor].append({})
        w, _ = _winding(g, edges, p)
        sign = 1 if p.factor % 2 else -1
        rhs[p.factor].append(tuple(int(sign * x) for x in w))
    cols = [(a[0], b[0]) for a, b, _ in cert.arcs] + [(a, b) for a, b, _ in cert.loops]
    for c, (u, v) in enumerate(cols):
        for pi in (u, v):
            b, r = rows[pi]
            blocks[b][r][c] = blocks[b][r].get(c, 0) + 1
    return GluingSystem(len(cols), blocks, rhs, g.amalg_rank)


# -- doubling and the degree search ---------------------------------------------

def double_surface(cert: SurfaceCertificate, g: GroupSpec = None) -> SurfaceCertificate:
    """The same surface at degree 2N.

    A piece with several boundary circuits is realized once more, each
    circuit run around twice, so both lifts of its component meet in it and
    chi of that piece does not double.  Single-circuit pieces are copied; in
    a component made only of those, one arc pair on a cycle of the piece
    graph is cross-wired between the copies to join them.  An imbalanced
    component without such a cycle has one of its pieces merged instead, so
    every component needing loops stays connected and the loop count cannot
    grow.  sigma-loops are then chosen afresh.
    """
    g = g or parse_group(cert.group)
    if cert.chain == "0":
        out = SurfaceCertificate(cert.group, cert.chain, cert.scale, 2 * cert.N, [], [], [],
                                 value=cert.value, doublings=cert.doublings + 1)
        return out.finalize()
    chain = parse_chain(cert.chain, g)
    edges = extract_tau_edges(chain, g)
    n = len(cert.pieces)
    merged = [len(p.circuits) >= 2 for p in cert.pieces]
    graph = defaultdict(list)
    dsu = _DSU()
    for i in range(n):
        dsu.find(i)
    for idx, (a, b, _) in enumerate(cert.arcs):
        graph[a[0]].append((b[0], idx))
        graph[b[0]].append((a[0], idx))
        dsu.union(a[0], b[0])
    bridges = _bridges(n, graph)
    imbalance = defaultdict(lambda: [0] * g.amalg_rank)
    for i, p in enumerate(cert.pieces):
        w, _ = _winding(g, edges, p)
        imbalance[dsu.find(i)] = [x + y for x, y in zip(imbalance[dsu.find(i)], w)]
    joined = {dsu.find(i) for i in range(n) if merged[i]}
    joined |= {dsu.find(a[0]) for idx, (a, _, _) in enumerate(cert.arcs) if idx not in bridges}
    for i in range(n):
        r = dsu.find(i)
        if r not in joined and any(imbalance[r]):
            joined.add(r)
            merged[i] = True
    pieces, where = [], {}
    for i, p in enumerate(cert.pieces):
        if merged[i]:
            where[i, 0] = where[i, 1] = len(pieces)
            pieces.append(Piece(p.factor, [list(c) + list(c) for c in p.circuits]))
    for copy in (0, 1):
        for i, p in enumerate(cert.pieces):
            if not merged[i]:
                where[i, copy] = len(pieces)
                pieces.append(Piece(p.factor, [list(c) for c in p.circuits]))

    def lift(slot, copy):
        pi, ci, pos = slot
        shift = len(cert.pieces[pi].circuits[ci]) if merged[pi] and copy else 0
        return (where[pi, copy], ci, pos + shift)

    arcs = []
    for a, b, _ in cert.arcs:
        arcs.append([lift(a, 0), lift(b, 0)])
        arcs.append([lift(a, 1), lift(b, 1)])
    done = {dsu.find(i) for i in range(n) if merged[i]}
    for idx, (a, b, _) in enumerate(cert.arcs):
        r = dsu.find(a[0])
        if idx in bridges or r in done:
            continue
        done.add(r)
        x, y = arcs[2 * idx], arcs[2 * idx + 1]
        x[1], y[1] = y[1], x[1]
    out = SurfaceCertificate(cert.group, cert.chain, cert.scale, 2 * cert.N, pieces, [], [],
                             value=cert.value, doublings=cert.doublings + 1)
    _label(out, g, edges, [tuple(x) for x in arcs])
    return out.finalize()


def _bridges(n, graph) -> set:
    """Arc indices that are bridges of the piece multigraph."""
    disc, low = {}, {}
    out = set()
    timer = itertools.count()
    for root in range(n):
        if root in disc:
            continue
        disc[root] = low[root] = next(timer)
        stack = [(root, -1, iter(graph[root]))]
        while stack:
            u, via, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if low[u] > disc[p]:
                        out.add(via)
                continue
            v, idx = nxt
            if idx == via:
                continue
            if v in disc:
                low[u] = min(low[u], disc[v])
            else:
                disc[v] = low[v] = next(timer)
                stack.append((v, idx, iter(graph[v])))
    return out


def build_certificate(sol, opts) -> SurfaceCertificate:
    """Certificate whose bound is within opts.epsilon of the computed value.

    The degree starts at the least integral N0 and is doubled as needed,
    at most opts.max_doublings times.  The number of doublings is read off
    the gap at N0, since the non-disc part of chi does not grow with N.
    """
    prob = sol.problem
    if prob.lp is None:
        g = prob.group
        cert = SurfaceCertificate(g.serialize(), "0", prob.chain.scale, 1, [], [], [], value=sol.value)
        return cert.finalize()
    reps = _representations(sol)
    N0 = base_degree(sol, reps)
    cert = assemble(sol, N0, reps).finalize()
    gap = cert.bound - sol.value
    d = 0
    if gap > opts.epsilon:
        est = math.ceil(math.log2(gap / opts.epsilon))
        d = max(0, min(opts.max_doublings, est))
        if d:
            cert = assemble(sol, N0 << d, reps).finalize()
        while cert.bound - sol.value > opts.epsilon and d < opts.max_doublings:
            d += 1
            cert = assemble(sol, N0 << d, reps).finalize()
    cert.doublings = d
    cert.value = sol.value
    return cert


# -- checking ------------------------------------------------------------------

@dataclass
class CertifyReport:
    passed: bool
    problems: list = field(default_factory=list)  # (kind, message)
    bound: Optional[Fraction] = None
    gap: Optional[Fraction] = None

    def kinds(self) -> set:
        return {k for k, _ in self.problems}


def certify(cert: SurfaceCertificate, chain, g: GroupSpec, value=None, epsilon=None) -> CertifyReport:
    """Check every certificate invariant independently of how it was built."""
    probs = []

    def bad(kind, msg):
        probs.append((kind, msg))

    if isinstance(chain, str):
        chain = parse_chain(chain, g)
    norm = normalize(drop_trivial(chain, g), g)
    if (norm.format(g) if norm else "0") != cert.chain:
        bad("chain", "certificate chain is not the normal form of the given chain")
        return CertifyReport(False, probs)
    if norm.scale != cert.scale:
        bad("chain", "scale differs")
    if not norm:
        return CertifyReport(not probs, probs, Fraction(0))
    edges = extract_tau_edges(norm, g)
    ntau = len(edges.taus)

    # circuits
    occ = {}
    for pi, p in enumerate(cert.pieces):
        if not 0 <= p.factor < len(g.factors):
            bad("piece", f"piece {pi} has no factor {p.factor}")
            continue
        for ci, circ in enumerate(p.circuits):
            if not circ:
                bad("piece", f"empty circuit in piece {pi}")
            for pos, t in enumerate(circ):
                if not 0 <= t < ntau or edges.tau(t).factor != p.factor:
                    bad("piece", f"tau {t} is not in factor {p.factor}")
                    continue
                u = circ[(pos + 1) % len(circ)]
                if 0 <= u < ntau:
                    lt, lu = edges.tau(t).abelian_loop, edges.tau(u).abelian_loop
                    if (lt or lu) and t != u:
                        bad("piece", f"abelian loop {t} chained to another tau")
                occ[pi, ci, pos] = t
    if probs:
        return CertifyReport(False, probs)

    # arcs
    arc_of = {}
    for n, (a, b, lab) in enumerate(cert.arcs):
        for s in (a, b):
            if tuple(s) not in occ:
                bad("arc", f"arc {n} refers to a missing slot {s}")
            elif tuple(s) in arc_of:
                bad("arc", f"slot {s} is glued twice")
            else:
                arc_of[tuple(s)] = (n, a if s is b else b)
        if len(lab) != g.amalg_rank:
            bad("label", f"arc {n} label has wrong length")
    if probs:
        return CertifyReport(False, probs)
    for (pi, ci, pos), t in occ.items():
        if not edges.tau(t).abelian_loop and (pi, ci, pos) not in arc_of:
            bad("arc", f"sigma-edge at {(pi, ci, pos)} is not glued")

    def sigma(slot):
        pi, ci, pos = slot
        circ = cert.pieces[pi].circuits[ci]
        return SigmaEdge(cert.pieces[pi].factor, circ[pos], circ[(pos + 1) % len(circ)])

    active = set(_active(g))
    for n, (a, b, lab) in enumerate(cert.arcs):
        sa, sb = sigma(tuple(a)), sigma(tuple(b))
        if partner(sa, edges) != sb or partner(sb, edges) != sa:
            bad("compatibility", f"arc {n} glues incompatible sigma-edges")
        if sa.factor >= sb.factor:
            bad("compatibility", f"arc {n} is not listed lower factor first")
        if any(x for j, x in enumerate(lab) if j not in active):
            bad("label", f"arc {n} winds in an inactive direction")
    for n, (a, b, lab) in enumerate(cert.loops):
        if not (0 <= a < len(cert.pieces) and 0 <= b < len(cert.pieces)):
            bad("loop", f"loop {n} refers to a missing piece")
        elif cert.pieces[b].factor - cert.pieces[a].factor != 1:
            bad("loop", f"loop {n} does not join adjacent factors")
        if len(lab) != g.amalg_rank or any(x for j, x in enumerate(lab) if j not in active):
            bad("label", f"loop {n} has a bad label")
    if probs:
        return CertifyReport(False, probs)

    # label balance per piece
    contrib = [[Fraction(0)] * g.factors[p.factor].rank for p in cert.pieces]
    for pi, p in enumerate(cert.pieces):
        for circ in p.circuits:
            for t in circ:
                for l, x in enumerate(edges.tau(t).segment):
                    contrib[pi][l] += x

    def add(pi, lab, s):
        for j, w in enumerate(g.winding(cert.pieces[pi].factor)):
            if w is not None:
                contrib[pi][w[0]] += s * w[1] * lab[j]

    for a, b, lab in cert.arcs:
        add(a[0], lab, 1)
        add(b[0], lab, -1)
    for a, b, lab in cert.loops:
        add(a, lab, 1)
        add(b, lab, -1)
    for pi, c in enumerate(contrib):
        if any(c):
            bad("balance", f"piece {pi} does not close up in its torus (label imbalance)")

    # boundary
    succ = {}
    for slot, t in occ.items():
        pi, ci, pos = slot
        if edges.tau(t).abelian_loop:
            circ = cert.pieces[pi].circuits[ci]
            succ[slot] = (pi, ci, (pos + 1) % len(circ))
        else:
            _, other = arc_of[slot]
            opi, oci, opos = other
            ocirc = cert.pieces[opi].circuits[oci]
            succ[slot] = (opi, oci, (opos + 1) % len(ocirc))
    degree = defaultdict(int)
    seen = set()
    first_tau = {}
    for t in edges.taus:
        first_tau.setdefault(t.term, t.id)
    for start in occ:
        if start in seen:
            continue
        slot = start
        while slot not in seen:
            seen.add(slot)
            t = occ[slot]
            nxt = succ[slot]
            u = occ[nxt]
            tau = edges.tau(t)
            want = t if tau.abelian_loop else edges.next[t]
            if u != want:
                bad("boundary", f"boundary leaves its word after tau {t}")
            if first_tau[tau.term] == t:
                degree[tau.term] += 1
            slot = nxt
    for term, (coef, _) in enumerate(norm.terms):
        if degree[term] != cert.N * coef:
            bad("boundary", f"word {term} is covered {degree[term]} times, expected {cert.N * coef}")

    # separating loops: loops must form a forest over arc-components
    dsu = _DSU()
    for i in range(len(cert.pieces)):
        dsu.find(i)
    for a, b, _ in cert.arcs:
        dsu.union(a[0], b[0])
    for n, (a, b, _) in enumerate(cert.loops):
        if not dsu.union(a, b):
            bad("loop", f"loop {n} is not separating")

    chi, chi_minus, bound, raw = cert.recount()
    if (chi, chi_minus, bound, raw) != (cert.chi, cert.chi_minus, cert.bound, cert.raw_bound):
        bad("chi", "Euler characteristic miscounted")
    gap = None
    if value is not None:
        gap = bound - Fraction(value)
        if gap < 0:
            bad("bound", "bound is below the computed value")
        if epsilon is not None and gap > epsilon:
            bad("gap", f"bound exceeds the value by {gap}")
    return CertifyReport(not probs, probs, bound, gap)
