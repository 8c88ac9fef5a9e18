"""Sparse multivariate polynomials as ``{exponent_tuple: coefficient}`` dicts.

Coefficients are any ring elements closed under + and * (Fraction or
ExactScalar).  Zero coefficients are dropped eagerly.
"""
from itertools import product
from math import factorial


def padd(p, q, scale=1):
    out = dict(p)
    for e, c in q.items():
        v = out.get(e, 0) + scale * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def pscale(p, c):
    if not c:
        return {}
    out = {}
    for e, v in p.items():
        w = v * c
        if w:
            out[e] = w
    return out


def pmul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = out.get(e, 0) + c1 * c2
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def ppow(p, n, nvars):
    out = {(0,) * nvars: 1}
    for _ in range(n):
        out = pmul(out, p)
    return out


def pderiv(p, i):
    out = {}
    for e, c in p.items():
        if e[i]:
            f = list(e)
            f[i] -= 1
            out[tuple(f)] = c * e[i]
    return out


def pmono(nvars, idx, coeff=1):
    e = [0] * nvars
    for i in (idx if isinstance(idx, (tuple, list)) else (idx,)):
        e[i] += 1
    return {tuple(e): coeff}


def peval(p, point):
    total = 0
    for e, c in p.items():
        term = c
        for x, k in zip(point, e):
            if k:
                term = term * x**k
        total = total + term
    return total


def monomials(nvars, degree):
    """All exponent tuples of total degree ``degree`` (lex order)."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for first in range(degree, -1, -1):
        for rest in monomials(nvars - 1, degree - first):
            out.append((first,) + rest)
    return out


def multinomial(alpha):
    n = factorial(sum(alpha))
    for a in alpha:
        n //= factorial(a)
    return n


def bimonomials(n1, d1, n2, d2):
    return [a + b for a, b in product(monomials(n1, d1), monomials(n2, d2))]
