"""Shared fixtures: factors of commutator chains with the e1..e4 basis located by segment."""

from fractions import Fraction as F
import random

from sclafp import ratlp
from sclafp.edges import extract_tau_edges, factor_edges
from sclafp.presentation import normalize, parse_chain, parse_group


def torus(p, q):
    return parse_group(f"abelian A = <a>; abelian B = <b>; amalg a^{p} = b^{q}")


def factor_of(group, chain, i=0):
    c = normalize(parse_chain(chain, group), group)
    e = extract_tau_edges(c, group)
    return factor_edges(group, e)[i]


def e_columns(fe, plus_seg, minus_seg):
    """Columns of e1=(+,+), e2=(+,-), e3=(-,+), e4=(-,-)."""
    pos = {t.segment: t.id for t in fe.taus}
    plus, minus = pos[plus_seg], pos[minus_seg]
    col = {s.pair: k for k, s in enumerate(fe.sigmas)}
    return [col[(plus, plus)], col[(plus, minus)], col[(minus, plus)], col[(minus, minus)]]


def vec(n, cols, coeffs):
    v = [F(0)] * n
    for c, x in zip(cols, coeffs):
        v[c] += F(x)
    return v


def random_cone_point(rays, rng: random.Random, terms=3):
    """Nonnegative rational combination of the given sigma rays."""
    n = len(rays[0])
    v = [F(0)] * n
    for _ in range(rng.randint(1, terms)):
        r = rng.choice(rays)
        lam = F(rng.randint(1, 9), rng.randint(1, 4))
        v = [a + lam * b for a, b in zip(v, r)]
    return v


def in_cone_of(v, gens):
    """v is a nonnegative combination of gens (LP feasibility)."""
    if not gens:
        return not any(v)
    m = len(gens)
    A = [[gens[j][c] for j in range(m)] for c in range(len(v))]
    res = ratlp.solve(ratlp.LinearProgram([0] * m, "min", A_eq=A, b_eq=list(v)))
    return res.optimal


def planted_gluing_system(rng: random.Random, nblocks=2, k=1):
    """Block system in which every column sits once in each of two adjacent blocks.

    Right-hand sides come from a hidden integral solution, returned alongside.
    """
    from sclafp.surfaces import GluingSystem

    owners = []  # column -> (lower block, upper block)
    for b in range(nblocks - 1):
        owners += [(b, b + 1)] * rng.randint(1, 6)
    rng.shuffle(owners)
    ncols = len(owners)
    blocks = []
    for b in range(nblocks):
        cols = [c for c, o in enumerate(owners) if b in o]
        rng.shuffle(cols)
        nrows = rng.randint(1, max(1, len(cols)))
        rows = [{} for _ in range(nrows)]
        for i, c in enumerate(cols):
            rows[i if i < nrows else rng.randrange(nrows)][c] = 1
        blocks.append([r for r in rows if r])
    plant = [tuple(rng.randint(-4, 4) for _ in range(k)) for _ in range(ncols)]
    rhs = [[tuple(sum(plant[c][j] for c in row) for j in range(k)) for row in rows] for rows in blocks]
    return GluingSystem(ncols, blocks, rhs, k), plant


ACCEPTANCE = {}  # criterion number -> (title, passed)


class criterion:
    """Record PASS/FAIL for an acceptance criterion and print a line for it."""

    def __init__(self, number, title):
        self.number, self.title = number, title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        ACCEPTANCE[self.number] = (self.title, ok)
        print(f"{'PASS' if ok else 'FAIL'} criterion {self.number}: {self.title}")
        return False
