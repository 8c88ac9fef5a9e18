"""Exact multilinear algebra on tensor powers of small quadratic / hermitian spaces.

Words are tuples of 0-based letter indices.  In the unitary case a word of a
bidegree (b1, b2) tensor has length b1 + b2: the first b1 slots live in V,
the remaining b2 slots live in the conjugate space.

Harmonic projection is the projection onto the joint kernel of all
contractions along the span of all expansions.  For a nondegenerate form
the two pieces are orthogonal complements, so the projection is
self-adjoint for the pairing.
"""
from fractions import Fraction
from itertools import combinations, combinations_with_replacement, permutations
from math import factorial
import random

from .exact import ExactScalar, ZERO, ONE, I as IUNIT
from .linsolve import solve_rational, solve_gaussian, rank_rational
from . import poly as P


class UsageError(ValueError):
    pass


class InternalError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# signature / model space

def _mat_inverse(G):
    n = len(G)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(G)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise UsageError("degenerate Gram matrix")
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return tuple(tuple(row[n:]) for row in A)


class Signature:
    """Model space: case tag, sign vector, and (orthogonal case) a Gram matrix.

    The Gram matrix defaults to diag(eps); a non-diagonal rational Gram is
    allowed so that weight bases such as (e1, e2+ie3, e2-ie3) can be used.
    """

    def __init__(self, case, eps, gram=None, letters=None):
        if case not in ("orthogonal", "unitary"):
            raise UsageError(f"unknown case {case!r}")
        self.case = case
        self.eps = tuple(int(e) for e in eps)
        m = len(self.eps)
        if gram is None:
            gram = tuple(tuple(Fraction(self.eps[i]) if i == j else Fraction(0)
                               for j in range(m)) for i in range(m))
        elif case == "unitary":
            raise UsageError("unitary signatures use an orthonormal basis")
        self.gram = tuple(tuple(Fraction(x) for x in row) for row in gram)
        self.ginv = _mat_inverse(self.gram)
        self.letters = tuple(letters) if letters else tuple(str(i + 1) for i in range(m))
        self._partners = [[(c, self.gram[a][c]) for c in range(m) if self.gram[a][c]]
                          for a in range(m)]
        self._dual = [(a, c, self.ginv[a][c]) for a in range(m) for c in range(m)
                      if self.ginv[a][c]]

    @property
    def m(self):
        return len(self.eps)

    def is_diagonal(self):
        return all(self.gram[i][j] == 0 for i in range(self.m) for j in range(self.m) if i != j)

    def form(self, x, y):
        """Bilinear (orth) or sesquilinear-in-y (unitary) form of coordinate vectors."""
        if self.case == "orthogonal":
            return sum((x[a] * self.gram[a][c] * y[c] for a in range(self.m)
                        for c in range(self.m) if self.gram[a][c]), ZERO)
        return sum((ExactScalar.coerce(x[a]) * ExactScalar.coerce(y[a]).conj() * self.eps[a]
                    for a in range(self.m)), ZERO)

    def key(self):
        return (self.case, self.eps, self.gram)

    def __eq__(self, other):
        return isinstance(other, Signature) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Signature({self.case}, {self.eps})"


ORTH_SPLIT = Signature("orthogonal", (1, -1, -1))
ORTH_DEF = Signature("orthogonal", (1, 1, 1))
UNIT_SPLIT = Signature("unitary", (1, -1))
UNIT_DEF = Signature("unitary", (1, 1))


# ---------------------------------------------------------------------------
# tensors

def _deg_len(case, degree):
    if case == "orthogonal":
        if not isinstance(degree, int) or degree < 0:
            raise UsageError(f"bad orthogonal degree {degree!r}")
        return degree
    b1, b2 = degree
    if b1 < 0 or b2 < 0:
        raise UsageError(f"bad bidegree {degree!r}")
    return b1 + b2


class TensorElement:
    __slots__ = ("sig", "degree", "coeffs")

    def __init__(self, sig, degree, coeffs=None):
        self.sig = sig
        self.degree = degree if sig.case == "orthogonal" else tuple(degree)
        n = _deg_len(sig.case, self.degree)
        c = {}
        for w, v in (coeffs or {}).items():
            w = tuple(w)
            if len(w) != n:
                raise UsageError(f"word {w} does not have length {n}")
            v = ExactScalar.coerce(v)
            if v:
                c[w] = c.get(w, ZERO) + v
                if not c[w]:
                    del c[w]
        self.coeffs = c

    @property
    def case(self):
        return self.sig.case

    @property
    def length(self):
        return _deg_len(self.sig.case, self.degree)

    def _like(self, coeffs, degree=None):
        return TensorElement(self.sig, self.degree if degree is None else degree, coeffs)

    def __add__(self, other):
        self._check(other)
        c = dict(self.coeffs)
        for w, v in other.coeffs.items():
            c[w] = c.get(w, ZERO) + v
        return self._like(c)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, s):
        s = ExactScalar.coerce(s)
        return self._like({w: v * s for w, v in self.coeffs.items()})

    def __rmul__(self, s):
        return self.scale(s)

    def _check(self, other):
        if self.sig != other.sig or self.degree != other.degree:
            raise UsageError("tensor degree / signature mismatch")

    def __eq__(self, other):
        return (isinstance(other, TensorElement) and self.sig == other.sig
                and self.degree == other.degree and self.coeffs == other.coeffs)

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "0"
        L = self.sig.letters
        parts = []
        for w in sorted(self.coeffs):
            if self.case == "unitary":
                b1 = self.degree[0]
                name = "".join(f"{L[a]}'" for a in w[:b1]) + "".join(f'{L[a]}"' for a in w[b1:])
            else:
                name = "".join(f"e{L[a]}" for a in w) or "1"
            parts.append(f"({self.coeffs[w]}){name}")
        return " + ".join(parts)

    def map_scalars(self, f):
        return self._like({w: f(v) for w, v in self.coeffs.items()})


def basis_word(sig, word, degree=None):
    if degree is None:
        degree = len(word)
    return TensorElement(sig, degree, {tuple(word): ONE})


def scalar_tensor(sig, value=1):
    degree = 0 if sig.case == "orthogonal" else (0, 0)
    return TensorElement(sig, degree, {(): value})


def power(sig, x, b, b2=None):
    """x^{(x)b} (orthogonal) or x^{(x)b} (x) conj(x)^{(x)b2} (unitary)."""
    x = [ExactScalar.coerce(v) for v in x]
    if sig.case == "orthogonal":
        coeffs = {}
        for w in _all_words(sig.m, b):
            v = ONE
            for a in w:
                v = v * x[a]
            if v:
                coeffs[w] = v
        return TensorElement(sig, b, coeffs)
    xb = [v.conj() for v in x]
    coeffs = {}
    for w in _all_words(sig.m, b + b2):
        v = ONE
        for k, a in enumerate(w):
            v = v * (x[a] if k < b else xb[a])
        if v:
            coeffs[w] = v
    return TensorElement(sig, (b, b2), coeffs)


def _all_words(m, n):
    if n == 0:
        return [()]
    out = [()]
    for _ in range(n):
        out = [w + (a,) for w in out for a in range(m)]
    return out


# ---------------------------------------------------------------------------
# rational-component plumbing: every structural map here is Q-linear with
# rational matrix, so it acts on the (pi, sqrt2, re/im) components separately.

def _split(coeffs):
    parts = {}
    for w, v in coeffs.items():
        for (k, s), (a, b) in v.terms().items():
            if a:
                parts.setdefault((k, s, 0), {})[w] = a
            if b:
                parts.setdefault((k, s, 1), {})[w] = b
    return parts


def _unit(key):
    k, s, part = key
    return ExactScalar.gauss(0 if part else 1, 1 if part else 0, pi=k, sqrt2=s)


def _merge(parts):
    out = {}
    for key, d in parts.items():
        u = _unit(key)
        for w, v in d.items():
            if v:
                out[w] = out.get(w, ZERO) + u * v
    return {w: v for w, v in out.items() if v}


# ---------------------------------------------------------------------------
# symmetrization

def _orbit_key(case, degree, w):
    if case == "orthogonal":
        return tuple(sorted(w))
    b1 = degree[0]
    return tuple(sorted(w[:b1])) + tuple(sorted(w[b1:]))


def _orbit_size(case, degree, key):
    if case == "orthogonal":
        return P.multinomial(_content(key))
    b1 = degree[0]
    return P.multinomial(_content(key[:b1])) * P.multinomial(_content(key[b1:]))


def _content(word):
    counts = {}
    for a in word:
        counts[a] = counts.get(a, 0) + 1
    return tuple(counts.values())


def _orbit_words(case, degree, key):
    if case == "orthogonal":
        return set(permutations(key))
    b1 = degree[0]
    return {a + b for a in set(permutations(key[:b1])) for b in set(permutations(key[b1:]))}


def symmetrize(t):
    """Average over all slot permutations (per factor in the unitary case)."""
    sums = {}
    for w, v in t.coeffs.items():
        k = _orbit_key(t.case, t.degree, w)
        sums[k] = sums.get(k, ZERO) + v
    out = {}
    for k, v in sums.items():
        if not v:
            continue
        avg = v * Fraction(1, _orbit_size(t.case, t.degree, k))
        for w in _orbit_words(t.case, t.degree, k):
            out[w] = avg
    return t._like(out)


def is_symmetric(t):
    groups = {}
    for w, v in t.coeffs.items():
        k = _orbit_key(t.case, t.degree, w)
        vals, n = groups.get(k, (set(), 0))
        vals.add(v)
        groups[k] = (vals, n + 1)
    return all(len(vals) == 1 and n == _orbit_size(t.case, t.degree, k)
               for k, (vals, n) in groups.items())


# ---------------------------------------------------------------------------
# contraction / expansion

def _check_pair(t_len, i, j):
    if not (0 <= i < j < t_len):
        raise UsageError(f"invalid slot pair ({i + 1},{j + 1}) for length {t_len}")


def contract(t, pair):
    """Contract a slot pair (1-based).

    Orthogonal: ``pair = (i, j)`` with i < j.  Unitary: ``pair = (i, j)`` with
    i a slot of the first factor and j a slot of the conjugate factor, each
    counted inside its own factor.
    """
    sig = t.sig
    if t.case == "orthogonal":
        i, j = pair[0] - 1, pair[1] - 1
        _check_pair(t.length, i, j)
        out = {}
        for w, v in t.coeffs.items():
            g = sig.gram[w[i]][w[j]]
            if g:
                u = w[:i] + w[i + 1:j] + w[j + 1:]
                out[u] = out.get(u, ZERO) + v * g
        return TensorElement(sig, t.degree - 2, out)
    b1, b2 = t.degree
    i, j = pair[0] - 1, pair[1] - 1
    if not (0 <= i < b1 and 0 <= j < b2):
        raise UsageError(f"invalid unitary slot pair {pair} for bidegree {t.degree}")
    jj = b1 + j
    out = {}
    for w, v in t.coeffs.items():
        if w[i] == w[jj]:
            u = w[:i] + w[i + 1:jj] + w[jj + 1:]
            out[u] = out.get(u, ZERO) + v * sig.eps[w[i]]
    return TensorElement(sig, (b1 - 1, b2 - 1), out)


def expand(t, pair):
    """Insert the dual tensor of the form at output slots ``pair`` (1-based)."""
    sig = t.sig
    if t.case == "orthogonal":
        n = t.length + 2
        i, j = pair[0] - 1, pair[1] - 1
        _check_pair(n, i, j)
        out = {}
        for w, v in t.coeffs.items():
            for a, c, g in sig._dual:
                u = list(w)
                u.insert(i, a)
                u.insert(j, c)
                u = tuple(u)
                out[u] = out.get(u, ZERO) + v * g
        return TensorElement(sig, n, out)
    b1, b2 = t.degree
    i, j = pair[0] - 1, pair[1] - 1
    if not (0 <= i <= b1 and 0 <= j <= b2):
        raise UsageError(f"invalid unitary slot pair {pair} for output bidegree {(b1 + 1, b2 + 1)}")
    out = {}
    for w, v in t.coeffs.items():
        for a in range(sig.m):
            left = list(w[:b1])
            right = list(w[b1:])
            left.insert(i, a)
            right.insert(j, a)
            u = tuple(left + right)
            out[u] = out.get(u, ZERO) + v * sig.eps[a]
    return TensorElement(sig, (b1 + 1, b2 + 1), out)


def all_pairs(t_or_degree, case=None):
    degree = t_or_degree.degree if isinstance(t_or_degree, TensorElement) else t_or_degree
    if isinstance(degree, int):
        return [(i + 1, j + 1) for i, j in combinations(range(degree), 2)]
    b1, b2 = degree
    return [(i + 1, j + 1) for i in range(b1) for j in range(b2)]


# ---------------------------------------------------------------------------
# harmonic projection

def _no_contractions(t):
    if t.case == "orthogonal":
        return t.degree < 2
    return min(t.degree) == 0


def harmonic_project(t, method="auto"):
    """Projection onto the joint kernel of the contractions.

    ``method``: "auto" uses the polynomial (Fischer decomposition) route for
    symmetric input and the direct tensor solve otherwise; "tensor" forces the
    direct route, which serves as an independent cross-check.
    """
    if _no_contractions(t):
        return t
    parts = _split(t.coeffs)
    use_poly = method == "polynomial" or (method == "auto" and is_symmetric(t))
    out = {}
    for key, d in parts.items():
        out[key] = (_project_poly(t.sig, t.degree, d) if use_poly
                    else _project_tensor(t.sig, t.degree, d))
    return t._like(_merge(out))


def _poly_data(sig, degree):
    """Variables, Laplacian and quadratic form for the polynomial model."""
    m = sig.m
    if sig.case == "orthogonal":
        nv = m
        lap = [(a, c, sig.gram[a][c]) for a in range(m) for c in range(m) if sig.gram[a][c]]
        Q = {}
        for a, c, g in sig._dual:
            Q = P.padd(Q, P.pmono(nv, (a, c), g))
        return nv, lap, Q
    nv = 2 * m
    lap = [(a, m + a, Fraction(sig.eps[a])) for a in range(m)]
    Q = {}
    for a in range(m):
        Q = P.padd(Q, P.pmono(nv, (a, m + a), Fraction(sig.eps[a])))
    return nv, lap, Q


def _laplace(p, lap):
    out = {}
    for a, c, g in lap:
        out = P.padd(out, P.pderiv(P.pderiv(p, a), c), g)
    return out


def _word_to_exp(sig, degree, w):
    m = sig.m
    if sig.case == "orthogonal":
        e = [0] * m
        for a in w:
            e[a] += 1
        return tuple(e)
    b1 = degree[0]
    e = [0] * (2 * m)
    for k, a in enumerate(w):
        e[a if k < b1 else m + a] += 1
    return tuple(e)


def _exp_to_words(sig, degree, e):
    m = sig.m
    if sig.case == "orthogonal":
        key = tuple(a for a in range(m) for _ in range(e[a]))
        return _orbit_words("orthogonal", degree, key), P.multinomial(e)
    k1 = tuple(a for a in range(m) for _ in range(e[a]))
    k2 = tuple(a for a in range(m) for _ in range(e[m + a]))
    return (_orbit_words("unitary", degree, k1 + k2),
            P.multinomial(e[:m]) * P.multinomial(e[m:]))


def _lower_monomials(sig, degree):
    m = sig.m
    if sig.case == "orthogonal":
        return P.monomials(m, degree - 2)
    return P.bimonomials(m, degree[0] - 1, m, degree[1] - 1)


def _project_poly(sig, degree, d):
    p = {}
    for w, v in d.items():
        e = _word_to_exp(sig, degree, w)
        p[e] = p.get(e, 0) + v
    h = _fischer(sig, degree, {e: v for e, v in p.items() if v})
    out = {}
    for e, v in h.items():
        words, mult = _exp_to_words(sig, degree, e)
        val = Fraction(v) / mult
        for w in words:
            out[w] = val
    return out


def _rational_contract(sig, degree, d, pair):
    t = TensorElement(sig, degree, {w: v for w, v in d.items()})
    return contract(t, pair)


def _project_tensor(sig, degree, d):
    """Solve C_J(t - sum_I A_I s_I) = 0 for all J, directly on words."""
    m = sig.m
    if sig.case == "orthogonal":
        lower = degree - 2
    else:
        lower = (degree[0] - 1, degree[1] - 1)
    lower_words = _all_words(m, _deg_len(sig.case, lower))
    in_pairs = all_pairs(degree)
    t = TensorElement(sig, degree, d)
    # columns: (I, v) -> A_I e_v ; rows: (J, u) of C_J(.)
    col_vecs = {}
    for I in in_pairs:
        for v in lower_words:
            Av = expand(basis_word(sig, v, lower), I)
            col_vecs[(I, v)] = Av
    rows_by_key = {}
    for col, Av in col_vecs.items():
        for J in in_pairs:
            CJ = contract(Av, J)
            for u, val in CJ.coeffs.items():
                rows_by_key.setdefault((J, u), {})[col] = val.to_fraction()
    rhs_by_key = {}
    for J in in_pairs:
        for u, val in contract(t, J).coeffs.items():
            rhs_by_key[(J, u)] = val.to_fraction()
            rows_by_key.setdefault((J, u), {})
    keys = sorted(rows_by_key)
    rows = [rows_by_key[k] for k in keys]
    rhs = [rhs_by_key.get(k, Fraction(0)) for k in keys]
    sol, _ = solve_rational(rows, rhs, list(col_vecs))
    if sol is None:
        raise InternalError("harmonic projection system inconsistent")
    out = {w: Fraction(v.to_fraction()) for w, v in t.coeffs.items()}
    for col, s in sol.items():
        if s:
            for w, val in col_vecs[col].coeffs.items():
                out[w] = out.get(w, Fraction(0)) - s * val.to_fraction()
    return {w: v for w, v in out.items() if v}


# ---------------------------------------------------------------------------
# pairing

def schur_pair(t1, t2):
    """Slotwise form pairing; sesquilinear in the second argument (unitary)."""
    if t1.sig != t2.sig or t1.degree != t2.degree:
        raise UsageError("schur_pair: degree or signature mismatch")
    sig = t1.sig
    total = ZERO
    if t1.case == "unitary":
        for w, v in t1.coeffs.items():
            u = t2.coeffs.get(w)
            if u is not None:
                sgn = 1
                for a in w:
                    sgn *= sig.eps[a]
                total = total + v * u.conj() * sgn
        return total
    c2 = t2.coeffs
    for w, v in t1.coeffs.items():
        partial = [((), ONE)]
        for a in w:
            partial = [(pw + (c,), pv * g) for pw, pv in partial for c, g in sig._partners[a]]
        for pw, pv in partial:
            u = c2.get(pw)
            if u is not None:
                total = total + v * u * pv
    return total


# ---------------------------------------------------------------------------
# isometries (for invariance checks)

def apply_linear(t, g):
    """Apply the linear map with matrix ``g`` (columns = images of basis) slotwise.

    In the unitary case the conjugate slots receive the entrywise conjugate.
    """
    sig = t.sig
    m = sig.m
    g = [[ExactScalar.coerce(g[r][c]) for c in range(m)] for r in range(m)]
    gbar = [[x.conj() for x in row] for row in g]
    b1 = t.degree[0] if t.case == "unitary" else t.length
    cur = dict(t.coeffs)
    # one slot at a time: n * m^n work instead of m^(2n)
    for k in range(t.length):
        M = g if k < b1 else gbar
        nxt = {}
        for w, v in cur.items():
            a = w[k]
            for r in range(m):
                c = M[r][a]
                if c:
                    u = w[:k] + (r,) + w[k + 1:]
                    s = nxt.get(u)
                    nxt[u] = v * c if s is None else s + v * c
        cur = {w: v for w, v in nxt.items() if v}
    return t._like(cur)


def reflection(sig, v):
    """Reflection in the (anisotropic) vector ``v``: x - 2 (x,v)/(v,v) v."""
    v = [ExactScalar.coerce(x) for x in v]
    vv = sig.form(v, v)
    if not vv:
        raise UsageError("reflection in an isotropic vector")
    m = sig.m
    cols = []
    for a in range(m):
        e = [ONE if i == a else ZERO for i in range(m)]
        c = sig.form(e, v) * 2 / vv
        cols.append([e[i] - c * v[i] for i in range(m)])
    return [[cols[c][r] for c in range(m)] for r in range(m)]


def is_isometry(sig, g):
    m = sig.m
    for a in range(m):
        for c in range(m):
            ga = [g[r][a] for r in range(m)]
            gc = [g[r][c] for r in range(m)]
            ea = [ONE if i == a else ZERO for i in range(m)]
            ec = [ONE if i == c else ZERO for i in range(m)]
            if sig.form(ga, gc) != sig.form(ea, ec):
                return False
    return True


# ---------------------------------------------------------------------------
# Q_lambda

class BigradedPolynomial:
    """Polynomial in (T11, T12, T21, T22) with ExactScalar coefficients."""

    NAMES = ("T11", "T12", "T21", "T22")

    def __init__(self, terms):
        self.terms = {tuple(e): ExactScalar.coerce(c) for e, c in terms.items()
                      if ExactScalar.coerce(c)}

    def __call__(self, T11, T12, T21, T22):
        return P.peval(self.terms, [ExactScalar.coerce(x) for x in (T11, T12, T21, T22)])

    def bidegrees(self):
        return {(2 * e[0] + e[1] + e[2], 2 * e[3] + e[1] + e[2]) for e in self.terms}

    def swap12(self):
        return BigradedPolynomial({(e[0], e[2], e[1], e[3]): c for e, c in self.terms.items()})

    def conj_swap12(self):
        return BigradedPolynomial({(e[0], e[2], e[1], e[3]): c.conj() for e, c in self.terms.items()})

    def __add__(self, o):
        return BigradedPolynomial(P.padd(self.terms, o.terms))

    def __sub__(self, o):
        return BigradedPolynomial(P.padd(self.terms, o.terms, -1))

    def __mul__(self, o):
        if isinstance(o, BigradedPolynomial):
            return BigradedPolynomial(P.pmul(self.terms, o.terms))
        return BigradedPolynomial(P.pscale(self.terms, ExactScalar.coerce(o)))

    __rmul__ = __mul__

    def __eq__(self, o):
        return isinstance(o, BigradedPolynomial) and self.terms == o.terms

    def is_zero(self):
        return not self.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        out = []
        for e in sorted(self.terms, reverse=True):
            mon = "*".join(f"{n}^{k}" if k > 1 else n for n, k in zip(self.NAMES, e) if k) or "1"
            out.append(f"({self.terms[e]})*{mon}")
        return " + ".join(out)


def _sym_s_power(n):
    """((T12+T21)/2)^n as an exponent dict on (T11,T12,T21,T22)."""
    s = {(0, 1, 0, 0): Fraction(1, 2), (0, 0, 1, 0): Fraction(1, 2)}
    return P.ppow(s, n, 4)


def orth_Q_basis(b):
    """Basis (T11 T22)^a s^(b-2a), s = (T12+T21)/2."""
    out = []
    for a in range(b // 2 + 1):
        mono = P.pmul({(a, 0, 0, a): Fraction(1)}, _sym_s_power(b - 2 * a))
        out.append(mono)
    return out


def unit_Q_basis(b1, b2):
    return [{(a, b1 - a, b2 - a, a): Fraction(1)} for a in range(min(b1, b2) + 1)]


def _rand_frac(rng, lo=-5, hi=5, den=4):
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def harmonic_power_poly(sig, x, b, b2=None):
    """Polynomial of [x^b] (resp. [x^b (x) conj(x)^b2]) without building words.

    Polynomial coefficient of u^alpha = multinomial(alpha) * tensor coefficient.
    """
    x = [ExactScalar.coerce(v) for v in x]
    m = sig.m
    if sig.case == "orthogonal":
        lin = {tuple(int(i == a) for i in range(m)): x[a] for a in range(m) if x[a]}
        p = P.ppow(lin, b, m)
        degree = b
    else:
        lin1 = {tuple(int(i == a) for i in range(2 * m)): x[a] for a in range(m) if x[a]}
        lin2 = {tuple(int(i == m + a) for i in range(2 * m)): x[a].conj() for a in range(m) if x[a]}
        p = P.pmul(P.ppow(lin1, b, 2 * m), P.ppow(lin2, b2, 2 * m))
        degree = (b, b2)
    p = {e: ExactScalar.coerce(v) for e, v in p.items()}
    if (sig.case == "orthogonal" and b < 2) or (sig.case == "unitary" and min(b, b2) == 0):
        return p
    parts = {}
    for e, v in p.items():
        for (k, s), (re, im) in v.terms().items():
            if re:
                parts.setdefault((k, s, 0), {})[e] = re
            if im:
                parts.setdefault((k, s, 1), {})[e] = im
    out = {}
    for key, d in parts.items():
        h = _fischer(sig, degree, d)
        u = _unit(key)
        for e, v in h.items():
            out[e] = out.get(e, ZERO) + u * v
    return {e: v for e, v in out.items() if v}


def _fischer(sig, degree, p):
    nv, lap, Q = _poly_data(sig, degree)
    target = _laplace(p, lap)
    if not target:
        return dict(p)
    cols = _lower_monomials(sig, degree)
    images = {beta: _laplace(P.pmul(Q, {beta: Fraction(1)}), lap) for beta in cols}
    row_keys = set(target)
    for img in images.values():
        row_keys |= set(img)
    row_keys = sorted(row_keys)
    rows = [{beta: images[beta][rk] for beta in cols if rk in images[beta]} for rk in row_keys]
    rhs = [target.get(rk, 0) for rk in row_keys]
    sol, _ = solve_rational(rows, rhs, cols)
    if sol is None:
        raise InternalError("Fischer decomposition system inconsistent")
    return P.padd(p, P.pmul(Q, {beta: v for beta, v in sol.items() if v}), -1)


def poly_pair(sig, h1, h2):
    """Schur pairing of two symmetric tensors given by their polynomials (diagonal form)."""
    if not sig.is_diagonal():
        raise UsageError("poly_pair needs an orthonormal basis")
    m = sig.m
    total = ZERO
    for e, v in h1.items():
        u = h2.get(e)
        if u is None:
            continue
        if sig.case == "orthogonal":
            sgn = 1
            for a in range(m):
                sgn *= sig.eps[a] ** e[a]
            total = total + v * u * Fraction(sgn, P.multinomial(e))
        else:
            sgn = 1
            for a in range(m):
                sgn *= sig.eps[a] ** (e[a] + e[m + a])
            total = total + v * u.conj() * Fraction(sgn, P.multinomial(e[:m]) * P.multinomial(e[m:]))
    return total


def pairing_sample(sig, x, y, b, b2=None, route="polynomial"):
    """([x^b],[y^b]) (or the bidegree analogue); ``route="tensor"`` builds full words."""
    if route == "polynomial" and sig.is_diagonal():
        return poly_pair(sig, harmonic_power_poly(sig, x, b, b2), harmonic_power_poly(sig, y, b, b2))
    if sig.case == "orthogonal":
        hx = harmonic_project(power(sig, x, b))
        hy = harmonic_project(power(sig, y, b))
    else:
        hx = harmonic_project(power(sig, x, b, b2))
        hy = harmonic_project(power(sig, y, b, b2))
    return schur_pair(hx, hy)


def compute_Q_lambda(sig, b, b2=None, seed=0, samples=None, route="polynomial"):
    """Interpolate Q_lambda exactly from Schur pairings at seeded rational samples.

    Returns ``(BigradedPolynomial, diagnostics)``; raises InternalError if the
    overdetermined system is inconsistent or not uniquely solvable.
    """
    rng = random.Random(seed)
    if sig.case == "orthogonal":
        basis = orth_Q_basis(b)
    else:
        basis = unit_Q_basis(b, b2)
    n = len(basis)
    nsamp = samples or (n + 3)
    rows, rhs = [], []
    for _ in range(nsamp):
        if sig.case == "orthogonal":
            x = [_rand_frac(rng) for _ in range(sig.m)]
            y = [_rand_frac(rng) for _ in range(sig.m)]
        else:
            x = [ExactScalar.gauss(_rand_frac(rng), _rand_frac(rng)) for _ in range(sig.m)]
            y = [ExactScalar.gauss(_rand_frac(rng), _rand_frac(rng)) for _ in range(sig.m)]
        T = [sig.form(x, x), sig.form(x, y), sig.form(y, x), sig.form(y, y)]
        val = pairing_sample(sig, x, y, b, b2, route)
        row = {}
        for k, mono in enumerate(basis):
            v = P.peval(mono, T)
            v = ExactScalar.coerce(v)
            if v:
                row[k] = v
        rows.append(row)
        rhs.append(val)
    # every entry must be rational x (pi^0): pairings of rational vectors are
    grows = [{k: _gpair(v) for k, v in r.items()} for r in rows]
    grhs = [_gpair(v) for v in rhs]
    sol, rank = solve_gaussian(grows, grhs)
    if sol is None:
        raise InternalError("Q_lambda interpolation inconsistent")
    if rank != 2 * n:
        raise InternalError(f"Q_lambda interpolation not unique (rank {rank} < {2 * n})")
    Q = {}
    for k, (re, im) in sol.items():
        Q = P.padd(Q, P.pscale({e: ExactScalar.coerce(c) for e, c in basis[k].items()},
                               ExactScalar.gauss(re, im)))
    return BigradedPolynomial(Q), {"samples": nsamp, "unknowns": n, "rank": rank // 2}


def _gpair(v):
    v = ExactScalar.coerce(v)
    if any(k for k in v.pi_exponents()) or any(s for s in v.sqrt2_parities()):
        raise InternalError("non-rational pairing value")
    return v.coefficient(0, 0)


def q_lambda(sig, b, b2=None, seed=0):
    Q, _ = compute_Q_lambda(sig, b, b2, seed=seed)
    return Q(1, 1, 1, 1)


# ---------------------------------------------------------------------------
# semistandard fillings of a single row

def enumerate_fillings(b, m):
    return [tuple(c) for c in combinations_with_replacement(range(1, m + 1), b)]


# ---------------------------------------------------------------------------
# property suite (exact)

def _rand_tensor(rng, sig, degree, symmetric=False):
    coeffs = {w: (_rand_frac(rng) if sig.case == "orthogonal"
                  else ExactScalar.gauss(_rand_frac(rng), _rand_frac(rng)))
              for w in _all_words(sig.m, _deg_len(sig.case, degree)) if rng.random() < 0.6}
    t = TensorElement(sig, degree, coeffs)
    return symmetrize(t) if symmetric else t


def _rand_isometries(rng, sig, n=3):
    out = []
    while len(out) < n:
        v = [_rand_frac(rng) for _ in range(sig.m)]
        if sig.case == "unitary":
            v = [ExactScalar.gauss(a, _rand_frac(rng)) for a in v]
        if sig.form(v, v):
            out.append(reflection(sig, v))
    return out


def property_suite(case, max_degree, seed=0, sig=None):
    """Exact checks of the multilinear-algebra invariants up to a degree cap.

    Returns {name: bool} plus a count of instances; every entry must be True.
    """
    rng = random.Random(seed)
    sig = sig or (ORTH_SPLIT if case == "orthogonal" else UNIT_SPLIT)
    if case == "orthogonal":
        degrees = list(range(max_degree + 1))
    else:
        degrees = [(a, c) for a in range(max_degree[0] + 1) for c in range(max_degree[1] + 1)]
    res = {"symmetrize_idempotent": True, "harmonic_kernel": True, "harmonic_idempotent": True,
           "harmonic_kernel_general": True, "harmonic_kills_expansions": True, "pairing_invariant": True,
           "Q_unique": True, "q_nonzero": True, "contract_expand_trace": True}
    isos = _rand_isometries(rng, sig)
    for gm in isos:
        if not is_isometry(sig, gm):
            raise InternalError("reflection is not an isometry")
    one = scalar_tensor(sig)
    first = (1, 2) if case == "orthogonal" else (1, 1)
    res["contract_expand_trace"] = contract(expand(one, first), first) == one.scale(sig.m)
    count = 0
    for d in degrees:
        t = _rand_tensor(rng, sig, d)
        s = symmetrize(t)
        res["symmetrize_idempotent"] &= symmetrize(s) == s
        h = harmonic_project(s)
        res["harmonic_kernel"] &= all(contract(h, pr).is_zero() for pr in all_pairs(h))
        res["harmonic_idempotent"] &= harmonic_project(h) == h
        if _deg_len(case, d) <= 4:
            ht = harmonic_project(t, method="tensor")
            res["harmonic_kernel_general"] &= all(contract(ht, pr).is_zero() for pr in all_pairs(ht))
        if all_pairs(d):
            lower = d - 2 if case == "orthogonal" else (d[0] - 1, d[1] - 1)
            low = _rand_tensor(rng, sig, lower, symmetric=True)
            res["harmonic_kills_expansions"] &= harmonic_project(symmetrize(expand(low, first))).is_zero()
        h2 = harmonic_project(_rand_tensor(rng, sig, d, symmetric=True))
        p0 = schur_pair(h, h2)
        for gm in isos:
            res["pairing_invariant"] &= schur_pair(apply_linear(h, gm), apply_linear(h2, gm)) == p0
        b, b2 = (d, None) if case == "orthogonal" else d
        Q0, _ = compute_Q_lambda(sig, b, b2, seed=seed)
        Q1, _ = compute_Q_lambda(sig, b, b2, seed=seed + 1, samples=len(
            orth_Q_basis(b) if case == "orthogonal" else unit_Q_basis(b, b2)) + 5)
        res["Q_unique"] &= Q0 == Q1
        res["q_nonzero"] &= bool(Q0(1, 1, 1, 1))
        count += 1
    res = {k: bool(v) for k, v in res.items()}
    return res, {"degrees": count, "isometries": len(isos)}
