"""Exact LLL reduction and Babai's nearest-plane CVP approximation.

Rational arithmetic throughout; meant for the small (<= 16) dimensions the
threshold-sharing layer needs, not for cryptanalysis-sized lattices.
"""

from fractions import Fraction
from math import floor


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(basis):
    """Return (B*, mu) for the row basis, unnormalised."""
    n = len(basis)
    ortho = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            denom = dot(ortho[j], ortho[j])
            mu[i][j] = dot(basis[i], ortho[j]) / denom if denom else Fraction(0)
            v = [a - mu[i][j] * b for a, b in zip(v, ortho[j])]
        ortho.append(v)
    return ortho, mu


def round_half_up(x):
    return floor(x + Fraction(1, 2))


def lll_reduce(basis, delta=Fraction(3, 4)):
    """LLL-reduce a list of integer row vectors; returns a new list."""
    b = [list(row) for row in basis]
    n = len(b)
    ortho, mu = gram_schmidt(b)
    norms = [dot(v, v) for v in ortho]
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            c = round_half_up(mu[k][j])
            if c:
                b[k] = [x - c * y for x, y in zip(b[k], b[j])]
                for i in range(j + 1):
                    mu[k][i] -= c * (mu[j][i] if i < j else 1)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            ortho, mu = gram_schmidt(b)
            norms = [dot(v, v) for v in ortho]
            k = max(k - 1, 1)
    return b


def babai_nearest_plane(basis, target):
    """Lattice vector near ``target``; ``basis`` should already be reduced."""
    ortho, _ = gram_schmidt(basis)
    residual = [Fraction(x) for x in target]
    for i in range(len(basis) - 1, -1, -1):
        denom = dot(ortho[i], ortho[i])
        if not denom:
            continue
        c = round_half_up(dot(residual, ortho[i]) / denom)
        if c:
            residual = [r - c * x for r, x in zip(residual, basis[i])]
    return [int(t - r) for t, r in zip(target, residual)]
