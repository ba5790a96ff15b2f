"""Small exact linear algebra helpers over Fraction."""

from __future__ import annotations

import math
from fractions import Fraction


def rref(rows):
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    rows = [[Fraction(x) for x in r] for r in rows]
    piv = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        piv.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], piv


def rank(rows) -> int:
    return len(rref(rows)[1]) if rows else 0


def nullspace(rows, n):
    """Basis of {x : rows . x = 0} in Q^n."""
    red, piv = rref(rows) if rows else ([], [])
    free = [j for j in range(n) if j not in piv]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, p in zip(red, piv):
            x[p] = -row[f]
        basis.append(x)
    return basis


def primitive(vec):
    """Scale a rational vector to the primitive integral vector on its ray."""
    vec = [Fraction(x) for x in vec]
    den = math.lcm(1, *(x.denominator for x in vec))
    ints = [int(x * den) for x in vec]
    g = math.gcd(*ints) if any(ints) else 1
    return tuple(x // g for x in ints)


def int_rank(rows) -> int:
    """Rank of an integer matrix by fraction-free elimination."""
    rows = [list(r) for r in rows if any(r)]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r]
        for i in range(r + 1, len(rows)):
            q = rows[i]
            if q[c]:
                f, h = p[c], q[c]
                q = [f * x - h * y for x, y in zip(q, p)]
                g = math.gcd(*q)
                rows[i] = [x // g for x in q] if g > 1 else q
        r += 1
        if r == len(rows):
            break
    return r


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def solve_square(M, rhs):
    n = len(M)
    A = [[Fraction(x) for x in M[i]] + [Fraction(rhs[i])] for i in range(n)]
    for c in range(n):
        p = next(i for i in range(c, n) if A[i][c] != 0)
        A[c], A[p] = A[p], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for i in range(n):
            if i != c and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return [A[i][n] for i in range(n)]


def kernel_projector(rows, n):
    """Orthogonal projection onto {x : rows . x = 0}, as a function of f."""
    basis = nullspace(rows, n)
    if not basis:
        zero = tuple(Fraction(0) for _ in range(n))
        return lambda f: zero
    gram = [[dot(a, b) for b in basis] for a in basis]
    k = len(basis)
    # columns of the inverse Gram matrix, then P = B^T G^-1 B
    inv = [solve_square(gram, [Fraction(int(i == j)) for i in range(k)]) for j in range(k)]
    M = [[sum((inv[b][a] * basis[b][c] for b in range(k)), Fraction(0)) for c in range(n)] for a in range(k)]
    P = [[sum((basis[a][r] * M[a][c] for a in range(k)), Fraction(0)) for c in range(n)] for r in range(n)]

    def proj(f):
        f = [Fraction(x) for x in f]
        return tuple(dot(row, f) for row in P)

    return proj


def project_to_kernel(f, rows, n):
    """Orthogonal projection of f onto {x : rows . x = 0}."""
    return kernel_projector(rows, n)(f)
