"""Generic exact Fock-space elements: polynomial (x) exterior (x) tensor word.

A FockElement stores ``{(monomial, ext, word): ExactScalar}`` where
``monomial`` is an exponent tuple over the model's Fock variables, ``ext`` a
strictly increasing tuple of exterior generator indices and ``word`` a tensor
word as in :mod:`schur_tensor`.  The tensor degree is a property of the whole
element.

Operators are built from a few primitives:

* ``PolyOp``  : sum of  c * z^a * d^b  acting on the polynomial factor,
* ``ext_left`` : left exterior multiplication by a linear form,
* ``rho``     : a letter map extended to words as a derivation,
* ``insert`` : insertion of letters at fixed slots.
"""
from itertools import permutations

from .exact import ExactScalar, ZERO, ONE


class FockModel:
    """Static description of a Fock model.

    ``letter_charge[t][a]`` is the charge vector of letter ``a`` in slot type
    ``t`` (orthogonal models have a single slot type).
    """

    def __init__(self, name, case, var_names, ext_names, letter_names, tensor_sig,
                 var_charge, ext_charge, letter_charge):
        self.name = name
        self.case = case
        self.var_names = tuple(var_names)
        self.ext_names = tuple(ext_names)
        self.letter_names = letter_names
        self.tensor_sig = tensor_sig
        self.var_charge = tuple(tuple(c) for c in var_charge)
        self.ext_charge = tuple(tuple(c) for c in ext_charge)
        self.letter_charge = letter_charge
        self.nv = len(self.var_names)

    def slot_type(self, degree, k):
        if self.case == "orthogonal":
            return 0
        return 0 if k < degree[0] else 1

    def word_length(self, degree):
        return degree if self.case == "orthogonal" else degree[0] + degree[1]

    def charge(self, mono, ext, word, degree):
        dim = len(self.var_charge[0])
        c = [0] * dim
        for v, e in enumerate(mono):
            if e:
                for i in range(dim):
                    c[i] += e * self.var_charge[v][i]
        for g in ext:
            for i in range(dim):
                c[i] += self.ext_charge[g][i]
        for k, a in enumerate(word):
            lc = self.letter_charge[self.slot_type(degree, k)][a]
            for i in range(dim):
                c[i] += lc[i]
        return tuple(c)

    def __repr__(self):
        return f"FockModel({self.name})"


class FockElement:
    __slots__ = ("model", "degree", "terms")

    def __init__(self, model, degree, terms=None):
        self.model = model
        self.degree = degree if model.case == "orthogonal" else tuple(degree)
        t = {}
        for k, v in (terms or {}).items():
            v = ExactScalar.coerce(v)
            if v:
                s = t.get(k, ZERO) + v
                if s:
                    t[k] = s
                else:
                    t.pop(k, None)
        self.terms = t

    @classmethod
    def _raw(cls, model, degree, terms):
        obj = cls.__new__(cls)
        obj.model = model
        obj.degree = degree
        obj.terms = terms
        return obj

    def zero_like(self, degree=None):
        return FockElement._raw(self.model, self.degree if degree is None else degree, {})

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        t = dict(self.terms)
        _accumulate(t, other.terms.items())
        return FockElement._raw(self.model, self.degree, t)

    __radd__ = __add__

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, s):
        s = ExactScalar.coerce(s)
        if not s:
            return self.zero_like()
        return FockElement._raw(self.model, self.degree, {k: v * s for k, v in self.terms.items()})

    def __rmul__(self, s):
        return self.scale(s)

    def _check(self, other):
        if other.model is not self.model or other.degree != self.degree:
            raise ValueError(f"incompatible Fock elements: {self.degree} vs {other.degree}")

    def __eq__(self, other):
        return (isinstance(other, FockElement) and self.model is other.model
                and self.degree == other.degree and self.terms == other.terms)

    def is_zero(self):
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # --- presentation -----------------------------------------------------
    def canonical(self):
        """Canonical text form (sorted keys), used for hashing and golden files."""
        m = self.model
        lines = []
        for (mono, ext, word) in sorted(self.terms):
            v = self.terms[(mono, ext, word)]
            mon = "*".join(f"{m.var_names[i]}^{e}" if e > 1 else m.var_names[i]
                           for i, e in enumerate(mono) if e) or "1"
            ex = "^".join(m.ext_names[g] for g in ext) or "1"
            wd = self._word_str(word) or "1"
            lines.append(f"{v} | {mon} | {ex} | {wd}")
        return "\n".join(lines) if lines else "0"

    def _word_str(self, word):
        m = self.model
        return " ".join(m.letter_names[m.slot_type(self.degree, k)][a] for k, a in enumerate(word))

    def __repr__(self):
        return f"FockElement[{self.model.name}, deg={self.degree}]\n{self.canonical()}"

    def max_fock_degree(self):
        return max((sum(k[0]) for k in self.terms), default=0)

    def fock_degrees(self):
        return sorted({sum(k[0]) for k in self.terms})

    def ext_degrees(self):
        return sorted({len(k[1]) for k in self.terms})

    def charges(self):
        return {self.model.charge(mo, ex, wo, self.degree) for (mo, ex, wo) in self.terms}


def _accumulate(t, items):
    for k, v in items:
        s = t.get(k)
        s = v if s is None else s + v
        if s:
            t[k] = s
        else:
            t.pop(k, None)


# ---------------------------------------------------------------------------
# primitive operators

class PolyOp:
    """Sum of terms  c * prod(z_mult) * prod(d_deriv)  (derivatives act first)."""

    def __init__(self, terms):
        self.terms = [(ExactScalar.coerce(c), tuple(mult), tuple(der)) for c, mult, der in terms]

    def __add__(self, other):
        return PolyOp(self.terms + other.terms)

    def scaled(self, s):
        s = ExactScalar.coerce(s)
        return PolyOp([(c * s, m, d) for c, m, d in self.terms])

    def apply_mono(self, mono):
        out = []
        for c, mult, der in self.terms:
            e = list(mono)
            coef = 1
            ok = True
            for v in der:
                if e[v] == 0:
                    ok = False
                    break
                coef *= e[v]
                e[v] -= 1
            if not ok:
                continue
            for v in mult:
                e[v] += 1
            out.append((tuple(e), c * coef))
        return out


def apply_poly(x, op):
    t = {}
    cache = {}
    for (mono, ext, word), v in x.terms.items():
        res = cache.get(mono)
        if res is None:
            res = cache[mono] = op.apply_mono(mono)
        _accumulate(t, (((m2, ext, word), v * c) for m2, c in res))
    return FockElement._raw(x.model, x.degree, t)


def wedge_left(g, ext):
    """g ^ ext for a single generator; returns (sign, new_ext) or None."""
    if g in ext:
        return None
    pos = sum(1 for a in ext if a < g)
    new = ext[:pos] + (g,) + ext[pos:]
    return (-1 if pos % 2 else 1), new


def apply_ext(x, form):
    """Left exterior multiplication by  sum_g form[g] * g."""
    t = {}
    for (mono, ext, word), v in x.terms.items():
        for g, c in form.items():
            r = wedge_left(g, ext)
            if r is None:
                continue
            sgn, new = r
            _accumulate(t, [((mono, new, word), v * c * sgn)])
    return FockElement._raw(x.model, x.degree, t)


def apply_rho(x, maps):
    """Derivation action on words: ``maps[slot_type][letter] = [(coef, letter'), ...]``."""
    m = x.model
    t = {}
    for (mono, ext, word), v in x.terms.items():
        for k, a in enumerate(word):
            for c, a2 in maps[m.slot_type(x.degree, k)].get(a, ()):
                w2 = word[:k] + (a2,) + word[k + 1:]
                _accumulate(t, [((mono, ext, w2), v * c)])
    return FockElement._raw(x.model, x.degree, t)


def apply_insert(x, pieces, new_degree):
    """Insert letters: ``pieces`` is a list of (coef, {position: letter}, PolyOp or None).

    Positions refer to the output word; they are filled in increasing order.
    """
    t = {}
    for coef, placement, op in pieces:
        src = x if op is None else apply_poly(x, op)
        positions = sorted(placement)
        for (mono, ext, word), v in src.terms.items():
            w = list(word)
            for p in positions:
                w.insert(p, placement[p])
            _accumulate(t, [((mono, ext, tuple(w)), v * coef)])
    return FockElement._raw(x.model, new_degree, t)


def map_tensor_parts(x, fn, new_degree=None):
    """Apply a linear map on tensor words (given as TensorElement -> TensorElement)."""
    from .schur_tensor import TensorElement
    groups = {}
    for (mono, ext, word), v in x.terms.items():
        groups.setdefault((mono, ext), {})[word] = v
    t = {}
    out_degree = x.degree
    for (mono, ext), coeffs in groups.items():
        te = fn(TensorElement(x.model.tensor_sig, x.degree, coeffs))
        out_degree = te.degree
        _accumulate(t, (((mono, ext, w), v) for w, v in te.coeffs.items()))
    if new_degree is not None:
        out_degree = new_degree
    return FockElement._raw(x.model, out_degree, t)


def substitute(x, target_model, var_map, ext_map, letter_maps):
    """Linear change of variables / generators / letters into another model.

    ``var_map[i]`` is a list of (coef, j); likewise for exterior generators and
    for letters (per slot type).
    """
    from . import poly as P
    nv = target_model.nv
    t = {}
    for (mono, ext, word), v in x.terms.items():
        pol = {(0,) * nv: ONE}
        for i, e in enumerate(mono):
            lin = {}
            for c, j in var_map[i]:
                lin = P.padd(lin, P.pmono(nv, j, ExactScalar.coerce(c)))
            for _ in range(e):
                pol = P.pmul(pol, lin)
        exts = [((), ONE)]
        for g in reversed(ext):
            new = []
            for c, h in ext_map[g]:
                for e2, v2 in exts:
                    r = wedge_left(h, e2)
                    if r is not None:
                        new.append((r[1], v2 * c * r[0]))
            exts = new
        words = [((), ONE)]
        for k, a in enumerate(word):
            st = x.model.slot_type(x.degree, k)
            words = [(w + (b,), wv * c) for w, wv in words for c, b in letter_maps[st][a]]
        for mono2, pv in pol.items():
            for e2, ev in exts:
                for w2, wv in words:
                    _accumulate(t, [((mono2, e2, w2), v * pv * ev * wv)])
    return FockElement(target_model, x.degree, t)


def symmetrize_blocks(x, blocks):
    """Average over permutations inside each block of slot indices."""
    from math import factorial
    t = {}
    n = 1
    for b in blocks:
        n *= factorial(len(b))
    inv = ExactScalar.coerce(1) / n
    for (mono, ext, word), v in x.terms.items():
        for w2 in _block_perms(word, blocks):
            _accumulate(t, [((mono, ext, w2), v * inv)])
    return FockElement._raw(x.model, x.degree, t)


def _block_perms(word, blocks):
    out = [list(word)]
    for b in blocks:
        new = []
        for w in out:
            for perm in permutations([w[i] for i in b]):
                w2 = list(w)
                for i, a in zip(b, perm):
                    w2[i] = a
                new.append(w2)
        out = new
    return [tuple(w) for w in out]


def canonical_word(word, blocks):
    w = list(word)
    for b in blocks:
        letters = sorted(w[i] for i in b)
        for i, a in zip(b, letters):
            w[i] = a
    return tuple(w)
