"""Group presentations, cyclic words and rational chains.

A group is a list of free abelian factors glued along k amalgamating
coordinates: in coordinate j one generator g_{i,j} of each factor i is chosen
and the relations g_{i,j}^{r_{i,j}} = g_{i',j}^{r_{i',j}} are imposed.  An
exponent of ``inf`` drops factor i from coordinate j; a coordinate with fewer
than two finite exponents imposes no relation at all.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional

from ._linalg import rref


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: Optional[int] = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} at position {pos}: {text[pos:pos + 20]!r}"
        super().__init__(message)


class GroupSpecError(ValueError):
    pass


class NotABoundary(ValueError):
    pass


INF = None  # exponent sentinel for "no amalgamation in this coordinate"

_GEN = re.compile(r"[a-z][0-9]*")


@dataclass(frozen=True)
class Factor:
    name: str
    gens: tuple

    @property
    def rank(self) -> int:
        return len(self.gens)


@dataclass(frozen=True)
class GroupSpec:
    factors: tuple
    amalg_rank: int
    exponents: tuple  # exponents[i][j]: int, or None for the infinity sentinel
    amalg_gens: tuple  # amalg_gens[i][j]: local generator index in factor i

    def __post_init__(self):
        k = self.amalg_rank
        if k < 1:
            raise GroupSpecError("amalgamation rank must be at least 1")
        names = [g for f in self.factors for g in f.gens]
        if len(set(names)) != len(names):
            raise GroupSpecError("generator names are not unique")
        for g in names:
            if not _GEN.fullmatch(g):
                raise GroupSpecError(f"bad generator name {g!r}")
        if len({f.name for f in self.factors}) != len(self.factors):
            raise GroupSpecError("factor names are not unique")
        if len(self.exponents) != len(self.factors) or len(self.amalg_gens) != len(self.factors):
            raise GroupSpecError("one exponent row per factor is required")
        for i, f in enumerate(self.factors):
            if f.rank < k:
                raise GroupSpecError(f"factor {f.name} has rank {f.rank} < {k}")
            if len(self.exponents[i]) != k or len(self.amalg_gens[i]) != k:
                raise GroupSpecError(f"factor {f.name} needs {k} amalgamating exponents")
            for r in self.exponents[i]:
                if r is not None and (not isinstance(r, int) or r == 0):
                    raise GroupSpecError("exponents must be nonzero integers")
            if len(set(self.amalg_gens[i])) != k:
                raise GroupSpecError(f"factor {f.name} uses a generator in two coordinates")
        for j in range(k):
            finite = sum(1 for i in range(len(self.factors)) if self.exponents[i][j] is not None)
            if 2 <= finite < len(self.factors):
                raise GroupSpecError(
                    f"coordinate {j} amalgamates only some factors; mixed amalgamation is unsupported"
                )

    # -- lookups ------------------------------------------------------------
    @cached_property
    def gen_names(self) -> tuple:
        return tuple(g for f in self.factors for g in f.gens)

    @cached_property
    def locate(self) -> dict:
        """generator name -> (factor index, local index)"""
        return {g: (i, l) for i, f in enumerate(self.factors) for l, g in enumerate(f.gens)}

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for f in self.factors:
            out.append(acc)
            acc += f.rank
        return tuple(out)

    def active(self, j: int) -> bool:
        """Whether coordinate j imposes an amalgamation relation."""
        return all(row[j] is not None for row in self.exponents) and len(self.factors) >= 2

    def winding(self, i: int) -> tuple:
        """Per coordinate j: (local generator, r) for factor i, or None."""
        return tuple(
            (self.amalg_gens[i][j], self.exponents[i][j]) if self.active(j) else None
            for j in range(self.amalg_rank)
        )

    def relation_vectors(self) -> list:
        n = len(self.gen_names)
        rows = []
        for j in range(self.amalg_rank):
            if not self.active(j):
                continue
            for i in range(len(self.factors) - 1):
                v = [Fraction(0)] * n
                v[self.offsets[i] + self.amalg_gens[i][j]] += self.exponents[i][j]
                v[self.offsets[i + 1] + self.amalg_gens[i + 1][j]] -= self.exponents[i + 1][j]
                rows.append(v)
        return rows

    def serialize(self) -> str:
        lines = [f"abelian {f.name} = <{','.join(f.gens)}>" for f in self.factors]
        for j in range(self.amalg_rank):
            parts = []
            for i, f in enumerate(self.factors):
                r = self.exponents[i][j]
                parts.append(f"{f.gens[self.amalg_gens[i][j]]}^{'inf' if r is None else r}")
            lines.append("amalg " + " = ".join(parts))
        return "\n".join(lines) + "\n"


def parse_group(text: str) -> GroupSpec:
    factors = []
    clauses = []
    pos = 0
    for raw in re.split(r"(;|\n)", text):
        start = pos
        pos += len(raw)
        stmt = raw.split("#", 1)[0]
        if raw in (";", "\n") or not stmt.strip():
            continue
        lead = len(stmt) - len(stmt.lstrip())
        m = re.fullmatch(r"\s*abelian\s+(\w+)\s*=\s*<\s*([^>]*)>\s*", stmt)
        if m:
            gens = tuple(g.strip() for g in m.group(2).split(",") if g.strip())
            for g in gens:
                if not _GEN.fullmatch(g):
                    raise ParseError(f"bad generator name {g!r}", text, start + stmt.index(g))
            if not gens:
                raise ParseError("factor with no generators", text, start + lead)
            factors.append(Factor(m.group(1), gens))
            continue
        m = re.fullmatch(r"\s*amalg\s+(.*)", stmt)
        if m:
            items = []
            body_at = start + m.start(1)
            for piece in re.finditer(r"[^=]+", m.group(1)):
                tok = piece.group(0).strip()
                mm = re.fullmatch(r"([a-z][0-9]*)\s*(?:\^\s*(-?\d+|inf|∞))?", tok)
                if not mm:
                    raise ParseError("bad amalgamation term", text, body_at + piece.start())
                e = mm.group(2)
                if e is None:
                    r = 1
                elif e in ("inf", "∞"):
                    r = None
                else:
                    r = int(e)
                    if r == 0:
                        raise ParseError("zero exponent", text, body_at + piece.start())
                items.append((mm.group(1), r, body_at + piece.start()))
            clauses.append(items)
            continue
        raise ParseError("unrecognized statement", text, start + lead)
    if not factors:
        raise ParseError("no factors declared", text, 0)
    if not clauses:
        raise ParseError("no amalg clause", text, len(text))
    locate = {g: i for i, f in enumerate(factors) for g in f.gens}
    exps = [[] for _ in factors]
    agens = [[] for _ in factors]
    for items in clauses:
        seen = set()
        for g, r, p in items:
            if g not in locate:
                raise ParseError(f"unknown generator {g!r}", text, p)
            i = locate[g]
            if i in seen:
                raise ParseError("two generators of one factor in an amalg clause", text, p)
            seen.add(i)
            exps[i].append(r)
            agens[i].append(factors[i].gens.index(g))
        if len(seen) != len(factors):
            raise ParseError("amalg clause must name one generator per factor", text, items[0][2])
    return GroupSpec(
        tuple(factors),
        len(clauses),
        tuple(tuple(e) for e in exps),
        tuple(tuple(a) for a in agens),
    )


# -- words ------------------------------------------------------------------

def _reduce(syllables):
    """Merge adjacent same-factor syllables (cyclically) and drop trivial ones."""
    out = []
    for f, v in syllables:
        if not any(v):
            continue
        if out and out[-1][0] == f:
            vv = tuple(a + b for a, b in zip(out.pop()[1], v))
            if any(vv):
                out.append((f, vv))
        else:
            out.append((f, v))
    while len(out) >= 2 and out[0][0] == out[-1][0]:
        f, v = out.pop()
        vv = tuple(a + b for a, b in zip(out[0][1], v))
        if any(vv):
            out[0] = (f, vv)
        else:
            out.pop(0)
    return out


@dataclass(frozen=True, order=True)
class Word:
    """A cyclic word stored as its least rotation of factor syllables.

    Factors are abelian, so a maximal run of one factor's letters is recorded
    as its exponent vector.
    """

    syllables: tuple

    @classmethod
    def from_syllables(cls, syllables) -> "Word":
        red = _reduce([(f, tuple(int(x) for x in v)) for f, v in syllables])
        if not red:
            return cls(())
        n = len(red)
        best = min(tuple(red[s:] + red[:s]) for s in range(n))
        return cls(best)

    @classmethod
    def from_letters(cls, letters, g: GroupSpec) -> "Word":
        syl = []
        for name, e in letters:
            i, l = g.locate[name]
            v = [0] * g.factors[i].rank
            v[l] = e
            syl.append((i, tuple(v)))
        return cls.from_syllables(syl)

    def __bool__(self):
        return bool(self.syllables)

    def __len__(self):
        return len(self.syllables)

    @property
    def pure(self) -> bool:
        return len(self.syllables) == 1

    def factors_used(self) -> set:
        return {f for f, _ in self.syllables}

    def inverse(self) -> "Word":
        return Word.from_syllables([(f, tuple(-x for x in v)) for f, v in reversed(self.syllables)])

    def power(self, n: int) -> "Word":
        if n < 0:
            return self.inverse().power(-n)
        return Word.from_syllables(list(self.syllables) * n)

    def letters(self, g: GroupSpec) -> list:
        out = []
        for f, v in self.syllables:
            for l, e in enumerate(v):
                if e:
                    out.append((g.factors[f].gens[l], e))
        return out

    def exponent_sums(self, g: GroupSpec) -> list:
        out = [0] * len(g.gen_names)
        for f, v in self.syllables:
            for l, e in enumerate(v):
                out[g.offsets[f] + l] += e
        return out

    def format(self, g: GroupSpec) -> str:
        parts = []
        for name, e in self.letters(g):
            s = name if e > 0 else name[0].upper() + name[1:]
            parts.append(s if abs(e) == 1 else f"{s}^{abs(e)}")
        return " ".join(parts)


@dataclass(frozen=True)
class Chain:
    """Positive rational combination of distinct cyclic words.

    ``scale`` records the factor by which this chain was multiplied relative
    to the chain the user supplied: scl(user chain) = scl(self) / scale.
    """

    terms: tuple
    scale: Fraction = Fraction(1)

    def __bool__(self):
        return bool(self.terms)

    @property
    def integral(self) -> bool:
        return all(c.denominator == 1 for c, _ in self.terms)

    def scaled(self, lam) -> "Chain":
        lam = Fraction(lam)
        if lam <= 0:
            raise ValueError("scale must be positive")
        return Chain(tuple((c * lam, w) for c, w in self.terms), self.scale * lam)

    def format(self, g: GroupSpec) -> str:
        out = []
        for c, w in self.terms:
            body = w.format(g)
            out.append(body if c == 1 else f"{c} * {body}")
        return " + ".join(out) if out else "0"


def combine(pairs, scale=Fraction(1)) -> Chain:
    """Combine like terms, identifying w^-1 with -w, and make coefficients positive."""
    acc = {}
    order = []
    for c, w in pairs:
        c = Fraction(c)
        if not w or c == 0:
            continue
        inv = w.inverse()
        if inv == w:
            continue  # w = -w in the space of boundaries, so it is zero
        if inv in acc:
            w, c = inv, -c
        if w not in acc:
            acc[w] = Fraction(0)
            order.append(w)
        acc[w] += c
    terms = []
    for w in order:
        c = acc[w]
        if c > 0:
            terms.append((c, w))
        elif c < 0:
            terms.append((-c, w.inverse()))
    return Chain(tuple(terms), Fraction(scale))


# -- chain grammar ------------------------------------------------------------

class _ChainParser:
    def __init__(self, text: str, g: GroupSpec):
        self.text = text
        self.g = g
        self.pos = 0

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def error(self, msg):
        raise ParseError(msg, self.text, self.pos)

    def integer(self):
        self.ws()
        m = re.compile(r"-?\d+").match(self.text, self.pos)
        if not m:
            self.error("expected integer")
        self.pos = m.end()
        return int(m.group(0))

    def exponent(self):
        if self.peek() == "^":
            self.pos += 1
            return self.integer()
        return 1

    def atom(self):
        ch = self.peek()
        if ch == "[":
            self.pos += 1
            x = self.word()
            if self.peek() != ",":
                self.error("expected ','")
            self.pos += 1
            y = self.word()
            if self.peek() != "]":
                self.error("expected ']'")
            self.pos += 1
            body = x + y + _inv(x) + _inv(y)
            return _pow(body, self.exponent())
        if ch == "(":
            self.pos += 1
            x = self.word()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return _pow(x, self.exponent())
        m = re.compile(r"[A-Za-z][0-9]*").match(self.text, self.pos)
        if not m:
            self.error("expected generator")
        tok = m.group(0)
        name = tok[0].lower() + tok[1:]
        if name not in self.g.locate:
            self.error(f"unknown generator {name!r}")
        self.pos = m.end()
        e = self.exponent()
        if tok[0].isupper():
            e = -e
        return [(name, e)] if e else []

    def word(self):
        out = []
        while self.peek() and (self.peek().isalpha() or self.peek() in "[("):
            out.extend(self.atom())
        return out

    def chain(self):
        terms = []
        sign = 1
        first = True
        while True:
            ch = self.peek()
            if ch in "+-":
                sign = -1 if ch == "-" else 1
                self.pos += 1
            elif not first:
                break
            coef = Fraction(1)
            self.ws()
            m = re.compile(r"\d+(?:/\d+)?").match(self.text, self.pos)
            if m:
                coef = Fraction(m.group(0))
                self.pos = m.end()
                if self.peek() == "*":
                    self.pos += 1
            start = self.pos
            letters = self.word()
            if self.pos == start:
                self.error("expected word")
            terms.append((sign * coef, letters))
            first = False
            sign = 1
            if not self.peek():
                break
        if self.peek():
            self.error("unexpected character")
        return terms


def _inv(letters):
    return [(n, -e) for n, e in reversed(letters)]


def _pow(letters, n):
    if n < 0:
        return _inv(letters) * (-n)
    return letters * n


def parse_word(text: str, g: GroupSpec) -> Word:
    p = _ChainParser(text, g)
    letters = p.word()
    if p.peek():
        p.error("unexpected character")
    return Word.from_letters(letters, g)


def parse_chain(text: str, g: GroupSpec) -> Chain:
    terms = _ChainParser(text, g).chain()
    chain = combine((c, Word.from_letters(ls, g)) for c, ls in terms)
    if not chain:
        raise ParseError("empty chain after reduction")
    return chain


# -- homology -------------------------------------------------------------------

@dataclass(frozen=True)
class HomologyClass:
    coordinates: tuple

    @property
    def is_zero(self) -> bool:
        return not any(self.coordinates)

    def __add__(self, other):
        return HomologyClass(tuple(a + b for a, b in zip(self.coordinates, other.coordinates)))

    def __rmul__(self, lam):
        return HomologyClass(tuple(Fraction(lam) * a for a in self.coordinates))


def reduce_class(vec, g: GroupSpec) -> HomologyClass:
    basis, piv = rref(g.relation_vectors()) if g.relation_vectors() else ([], [])
    v = [Fraction(x) for x in vec]
    for row, c in zip(basis, piv):
        if v[c]:
            f = v[c]
            v = [x - f * y for x, y in zip(v, row)]
    return HomologyClass(tuple(v))


def exponent_sums(c: Chain, g: GroupSpec) -> list:
    out = [Fraction(0)] * len(g.gen_names)
    for coef, w in c.terms:
        for k, e in enumerate(w.exponent_sums(g)):
            out[k] += coef * e
    return out


def homology_class(c: Chain, g: GroupSpec) -> HomologyClass:
    return reduce_class(exponent_sums(c, g), g)


# -- normal form ----------------------------------------------------------------

def _lcm_den(values) -> int:
    return math.lcm(1, *(Fraction(v).denominator for v in values))


def normalize(c: Chain, g: GroupSpec) -> Chain:
    """Rewrite an integral multiple of c so every generator's exponent sum is zero.

    The excess of each amalgamating generator is a multiple of the central
    element in that coordinate; it is removed by multiplying the first term
    (left to right) that touches the factor by a central power.  Homogeneous
    quasimorphisms are additive on commuting pairs and the inserted central
    powers cancel in total, so scl is unchanged.  Terms lying in one factor
    stay in that factor.
    """
    if not homology_class(c, g).is_zero:
        raise NotABoundary("chain is not null-homologous")
    chain = c.scaled(_lcm_den(co for co, _ in c.terms))
    e = exponent_sums(chain, g)
    need = {}  # (factor, coordinate) -> y with e[g_ij] = r_ij * y
    for i in range(len(g.factors)):
        for j in range(g.amalg_rank):
            if g.active(j):
                y = Fraction(e[g.offsets[i] + g.amalg_gens[i][j]], g.exponents[i][j])
                if y:
                    need[i, j] = y
    d = _lcm_den(need.values())
    chain = chain.scaled(d)
    need = {key: y * d for key, y in need.items()}
    if not need:
        return combine(chain.terms, chain.scale)

    terms = [[coef, w] for coef, w in chain.terms]
    inserts = {}  # term index -> list of (factor, local generator, amount per unit coefficient)
    for (i, j), y in need.items():
        cands = [t for t, (_, w) in enumerate(terms) if i in w.factors_used()]
        mixed = [t for t in cands if not terms[t][1].pure]
        t = (mixed or cands)[0]
        inserts.setdefault(t, []).append((i, j, y))

    extra = []
    for t, items in inserts.items():
        coef, w = terms[t]
        if all(y % coef == 0 for _, _, y in items):
            per_copy = [(i, g.amalg_gens[i][j], -g.exponents[i][j] * (y / coef)) for i, j, y in items]
            terms[t][1] = _insert(w, per_copy, g)
        else:
            terms[t][0] = coef - 1
            one = [(i, g.amalg_gens[i][j], -g.exponents[i][j] * y) for i, j, y in items]
            extra.append((Fraction(1), _insert(w, one, g)))
    return combine([(c_, w) for c_, w in terms] + extra, chain.scale)


def _insert(w: Word, items, g: GroupSpec) -> Word:
    syl = [list(s) for s in w.syllables]
    for i, l, amount in items:
        amount = int(amount)
        for s in syl:
            if s[0] == i:
                v = list(s[1])
                v[l] += amount
                s[1] = tuple(v)
                break
        else:
            v = [0] * g.factors[i].rank
            v[l] = amount
            syl.append([i, tuple(v)])
    return Word.from_syllables([tuple(s) for s in syl])


def _central_part(g: GroupSpec, f: int, vec):
    """Coordinates in Z^k of a syllable lying in the amalgamated subgroup, else None."""
    v = list(vec)
    z = [0] * g.amalg_rank
    for j in range(g.amalg_rank):
        if g.active(j):
            l, r = g.amalg_gens[f][j], g.exponents[f][j]
            if v[l] % r:
                return None
            z[j], v[l] = v[l] // r, 0
    return None if any(v) else z


def is_trivial(w: Word, g: GroupSpec) -> bool:
    """Word problem: the amalgamated subgroup is central, so its syllables slide into a neighbour.

    Once no syllable lies in it, a word alternating between factors is nontrivial.
    """
    syl = [(f, tuple(v)) for f, v in w.syllables]
    while len(syl) >= 2:
        idx = next((n for n, (f, v) in enumerate(syl) if _central_part(g, f, v) is not None), None)
        if idx is None:
            return False
        f, v = syl.pop(idx)
        z = _central_part(g, f, v)
        f2, v2 = syl[idx % len(syl)]
        v2 = list(v2)
        for j, x in enumerate(z):
            if x:
                v2[g.amalg_gens[f2][j]] += g.exponents[f2][j] * x
        syl[idx % len(syl)] = (f2, tuple(v2))
        syl = _reduce(syl)
    return not syl


def drop_trivial(c: Chain, g: GroupSpec) -> Chain:
    """Remove terms equal to 1 in G, unless nothing would be left.

    Only a trivial word bounds a disc in a torsion-free group, so once they
    are gone no admissible surface has a disc component and -chi agrees
    with -chi^-.
    """
    keep = [(co, w) for co, w in c.terms if not is_trivial(w, g)]
    if not keep or len(keep) == len(c.terms):
        return c
    return combine(keep, c.scale)


def is_normal(c: Chain, g: GroupSpec) -> bool:
    return c.integral and not any(exponent_sums(c, g))
