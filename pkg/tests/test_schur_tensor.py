import random
from fractions import Fraction as F
from math import comb

import pytest

from weilcheck import schur_tensor as st
from weilcheck.exact import ExactScalar, ONE

ORTH, UNIT = st.ORTH_SPLIT, st.UNIT_SPLIT


def _bp(terms):
    return st.BigradedPolynomial({e: ExactScalar.coerce(c) for e, c in terms.items()})


# --- Q_lambda -----------------------------------------------------------

def test_Q_degree_zero():
    Q, _ = st.compute_Q_lambda(ORTH, 0)
    assert Q == _bp({(0, 0, 0, 0): 1})
    assert Q(1, 1, 1, 1) == ONE


def test_Q_degree_one():
    Q, _ = st.compute_Q_lambda(ORTH, 1)
    assert Q == _bp({(0, 1, 0, 0): F(1, 2), (0, 0, 1, 0): F(1, 2)})
    assert st.q_lambda(ORTH, 1) == ONE


def test_Q_degree_two_and_brute_force():
    Q, _ = st.compute_Q_lambda(ORTH, 2)
    # ((T12+T21)/2)^2 - T11 T22 / 3
    want = _bp({(0, 2, 0, 0): F(1, 4), (0, 1, 1, 0): F(1, 2), (0, 0, 2, 0): F(1, 4),
                (1, 0, 0, 1): F(-1, 3)})
    assert Q == want
    assert Q(1, 1, 1, 1) == ExactScalar.coerce(F(2, 3))
    # tensor route: full words, harmonic_project by direct solve
    rng = random.Random(3)
    for _ in range(3):
        x = [F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)]
        y = [F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(3)]
        T = [ORTH.form(x, x), ORTH.form(x, y), ORTH.form(y, x), ORTH.form(y, y)]
        assert st.pairing_sample(ORTH, x, y, 2, route="tensor") == Q(*T)


def test_Q_unitary_one_one():
    Q, _ = st.compute_Q_lambda(UNIT, 1, 1)
    assert Q == _bp({(1, 0, 0, 1): F(-1, 2), (0, 1, 1, 0): 1})
    assert st.q_lambda(UNIT, 1, 1) == ExactScalar.coerce(F(1, 2))


@pytest.mark.parametrize("b", range(7))
def test_q_nonzero_and_seed_independent_orth(b):
    Q0, _ = st.compute_Q_lambda(ORTH, b, seed=0)
    Q1, _ = st.compute_Q_lambda(ORTH, b, seed=11, samples=len(st.orth_Q_basis(b)) + 6)
    assert Q0 == Q1
    assert Q0(1, 1, 1, 1)


def test_Q_polynomial_vs_tensor_route_unitary():
    a, _ = st.compute_Q_lambda(UNIT, 2, 1, route="polynomial")
    b, _ = st.compute_Q_lambda(UNIT, 2, 1, route="tensor")
    assert a == b


# --- fillings -----------------------------------------------------------

def test_fillings_small():
    assert st.enumerate_fillings(1, 3) == [(1,), (2,), (3,)]
    assert st.enumerate_fillings(2, 2) == [(1, 1), (1, 2), (2, 2)]


@pytest.mark.parametrize("b,m", [(b, m) for b in range(6) for m in range(1, 4)])
def test_fillings_count_stars_and_bars(b, m):
    fs = st.enumerate_fillings(b, m)
    assert len(fs) == comb(b + m - 1, b)
    assert fs == sorted(fs)
    assert all(list(f) == sorted(f) for f in fs)


# --- tensors ------------------------------------------------------------

def test_contract_expand_scalar_is_dimension():
    for sig, pr in ((ORTH, (1, 2)), (UNIT, (1, 1))):
        one = st.scalar_tensor(sig)
        assert st.contract(st.expand(one, pr), pr) == one.scale(sig.m)


def test_bad_slot_pair():
    t = st.basis_word(ORTH, (0, 1))
    with pytest.raises(st.UsageError):
        st.contract(t, (1, 3))
    with pytest.raises(st.UsageError):
        st.TensorElement(ORTH, 2, {(0,): 1})


def test_harmonic_of_square_of_e1():
    h = st.harmonic_project(st.symmetrize(st.basis_word(ORTH, (0, 0))))
    assert all(st.contract(h, p).is_zero() for p in st.all_pairs(h))
    # e1e1 minus its trace part: e1e1 + (e2e2 + e3e3)/3 ... with eps = (1,-1,-1)
    assert h.coeffs[(0, 0)] == ExactScalar.coerce(F(2, 3))
    assert h.coeffs[(1, 1)] == ExactScalar.coerce(F(1, 3))


def test_harmonic_routes_agree_symmetric():
    rng = random.Random(5)
    t = st._rand_tensor(rng, ORTH, 3, symmetric=True)
    assert st.harmonic_project(t, "polynomial") == st.harmonic_project(t, "tensor")


def test_harmonic_kills_expansions_unitary():
    rng = random.Random(1)
    low = st._rand_tensor(rng, UNIT, (1, 1), symmetric=True)
    assert st.harmonic_project(st.symmetrize(st.expand(low, (1, 1)))).is_zero()


def test_pairing_invariance_reflection():
    rng = random.Random(2)
    g = st.reflection(ORTH, [F(1), F(1, 2), F(-1, 3)])
    assert st.is_isometry(ORTH, g)
    h1 = st.harmonic_project(st._rand_tensor(rng, ORTH, 3, symmetric=True))
    h2 = st.harmonic_project(st._rand_tensor(rng, ORTH, 3, symmetric=True))
    assert st.schur_pair(st.apply_linear(h1, g), st.apply_linear(h2, g)) == st.schur_pair(h1, h2)


def test_isotropic_reflection_rejected():
    with pytest.raises(st.UsageError):
        st.reflection(ORTH, [F(1), F(1), F(0)])


def test_property_suite_small_orth():
    res, info = st.property_suite("orthogonal", 3, seed=4)
    assert all(res.values()), res
    assert info["degrees"] == 4


def test_property_suite_small_unit():
    res, _ = st.property_suite("unitary", (2, 2), seed=4)
    assert all(res.values()), res
