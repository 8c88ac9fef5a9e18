import random
from fractions import Fraction as F

import pytest

from weilcheck import fock_weil as fw
from weilcheck.exact import ExactScalar, PI, I, SQRT2
from weilcheck.fock import FockElement, apply_poly, symmetrize_blocks


def g(re, im=0, pi=0, sqrt2=0):
    return ExactScalar.gauss(re, im, pi=pi, sqrt2=sqrt2)


def mono(model, **e):
    return tuple(e.get(v, 0) for v in model.var_names)


# --- closed forms -------------------------------------------------------

def test_phi0_orthogonal_coordinate_basis():
    m = fw.ORTH_STD
    want = FockElement(m, 0, {((2, 0, 0), (0, 1), ()): g(F(-1, 8), pi=-2)})
    assert fw.phi("orthogonal", 0, m) == want


def test_phi0_weight_basis_matches_coordinate_basis():
    assert fw.to_standard(fw.phi0("orthogonal")) == fw.phi("orthogonal", 0, fw.ORTH_STD)


def test_nu0_is_one():
    n = fw.nu0("orthogonal")
    assert n.terms == {((0, 0, 0), (), ()): g(1)}


def test_nu_unitary_10():
    n = fw.nu("unitary", (1, 0))
    # -i / (2 sqrt2 pi) z'1 (x) e'1
    c = g(0, F(-1, 2), pi=-1) / SQRT2
    assert n.terms == {((1, 0, 0, 0), (), (0,)): c}


# --- raising operator ---------------------------------------------------

def test_E_nu0_is_nu1():
    assert fw.apply_E("orthogonal", fw.nu0("orthogonal")) == fw.nu("orthogonal", 1)


@pytest.mark.parametrize("b", range(5))
def test_E_powers(b):
    x, y = fw.phi0("orthogonal"), fw.nu0("orthogonal")
    for _ in range(b):
        x, y = fw.apply_E("orthogonal", x), fw.apply_E("orthogonal", y)
    assert x == fw.phi("orthogonal", b)
    assert y == fw.nu("orthogonal", b)


def test_E_unitary_both_sides():
    x = fw.nu("unitary", (0, 0))
    x = fw.apply_E("unitary", fw.apply_E("unitary", x, "u"), "ubar")
    assert x == fw.nu("unitary", (1, 1))


def test_E_zero():
    z = fw.nu0("orthogonal").zero_like()
    assert fw.apply_E("orthogonal", z).is_zero()


# --- omega(L) -----------------------------------------------------------

def test_omega_L_nu0():
    m = fw.ORTH_STD
    got = apply_poly(fw.nu("orthogonal", 0, m), fw.omega_L_std_op())
    c = g(F(1, 8), pi=-1)
    assert got == FockElement(m, 0, {((0, 2, 0), (), ()): c, ((0, 0, 2), (), ()): c})
    # weight basis: z2^2 + z3^2 = z+ z-
    w = fw.weil_lower("orthogonal", fw.nu0("orthogonal"))
    assert w.terms == {((0, 1, 1), (), ()): c}


def test_omega_L_phi0_closed_form():
    # omega(L) phi_0 = (-1/8pi^2)(-4pi + (1/8pi) z1^2 z+ z-) w12^w13
    got = fw.weil_lower("orthogonal", fw.phi0("orthogonal"))
    om = fw.OMEGA_ORTH
    want = FockElement(fw.ORTH, 0, {
        ((0, 0, 0), (0, 1), ()): g(F(-1, 8), pi=-2) * g(-4, pi=1) * om,
        ((2, 1, 1), (0, 1), ()): g(F(-1, 8), pi=-2) * g(F(1, 8), pi=-1) * om})
    assert got == want


def test_omega_L_linear():
    a, b = fw.nu("orthogonal", 2), fw.phi("orthogonal", 2)
    c = fw.apply_E("orthogonal", fw.nu("orthogonal", 1))
    s = g(3, 1)
    lhs = fw.weil_lower("orthogonal", a + c.scale(s))
    assert lhs == fw.weil_lower("orthogonal", a) + fw.weil_lower("orthogonal", c).scale(s)


def test_omega_L_commutes_with_symmetrization():
    x = fw.apply_E("orthogonal", fw.phi("orthogonal", 2))
    blocks = [tuple(range(3))]
    assert fw.weil_lower("orthogonal", symmetrize_blocks(x, blocks)) == \
        symmetrize_blocks(fw.weil_lower("orthogonal", x), blocks)


# --- Gauss-Manin ---------------------------------------------------------

def test_nabla_on_empty_word():
    assert fw.gm_apply("nabla'", fw.nu0("orthogonal")).is_zero()


def test_gm_top_degree_vanishes():
    for c in ("d'", "dbar'", "nabla'", "nablabar'"):
        assert fw.gm_apply(c, fw.phi("orthogonal", 1)).is_zero()


@pytest.mark.parametrize("case,b,deg", [("orthogonal", 1, 2), ("orthogonal", 2, 3),
                                        ("unitary", (1, 1), 2)])
def test_D_squared(case, b, deg):
    assert fw.verify_D_squared(case, b, deg).passed


def test_DDc_definitions_agree_on_nu1():
    n = fw.nu("orthogonal", 1)
    assert fw.minus_DDc_proof(n) == fw.minus_DDc_def(n)


# --- holomorphy ---------------------------------------------------------

@pytest.mark.parametrize("b", range(4))
def test_holomorphy_orth(b):
    r = fw.verify_holomorphy("orthogonal", b)
    assert r.passed, r.to_dict()
    assert r.details.get("projected_identity", True)


@pytest.mark.parametrize("b", [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)])
def test_holomorphy_unit(b):
    assert fw.verify_holomorphy("unitary", b).passed


def test_holomorphy_mutation_reports_difference_and_repair():
    r = fw.verify_holomorphy("orthogonal", 2, "flip_potential")
    assert not r.passed
    assert not r.difference.is_zero()
    assert "difference" in r.to_dict()
    assert r.details["repairs"] == ["default"]


def test_printed_unitary_potential_fails():
    r = fw.verify_holomorphy("unitary", (1, 1), "printed")
    assert not r.passed
    assert "default" in r.details["repairs"]


# --- invariance / pullback / dual route ---------------------------------

@pytest.mark.parametrize("b", [(0, 0), (1, 0), (2, 1)])
def test_invariance(b):
    assert fw.verify_invariance_unitary(b).passed


def test_pullback():
    r = fw.verify_pullback(1, 1)
    assert r.passed and r.details["checked"] == 1
    assert fw.verify_pullback(2, 1).passed
    assert fw.verify_pullback(1, 0).details.get("vacuous")
    assert fw.verify_pullback(0, 0).passed


@pytest.mark.parametrize("b", range(3))
def test_dual_route(b):
    r = fw.verify_dual_route(b)
    assert r.passed, r.details


# --- cohomology ---------------------------------------------------------

def test_cohomology_b1():
    assert fw.verify_cohomology_identity("orthogonal", "varsigma", 1, 1).passed
    assert fw.verify_cohomology_identity("orthogonal", "lower", 1).passed


def test_cohomology_unitary_part2():
    assert fw.verify_cohomology_identity("unitary", "part2", (1, 1)).passed


def test_zero_difference_has_zero_witness():
    ok, info = fw.exactness_check(fw.nu0("orthogonal").zero_like())
    assert ok and info["eta"] == "0"


def test_cohomology_sign_finding():
    """Printed relation sign fails from b = 2; the opposite sign holds."""
    assert not fw.verify_cohomology_identity("orthogonal", "varsigma", 2, 1, "printed").passed
    assert fw.verify_cohomology_identity("orthogonal", "varsigma", 2, 1, "opposite").passed
    assert not fw.verify_cohomology_identity("unitary", "part1", (1, 1), 1, "printed").passed
    assert fw.verify_cohomology_identity("unitary", "part1", (1, 1), 1, "opposite").passed


def test_non_exact_form_rejected():
    # phi_0 itself is not D-exact among invariants (it represents a nonzero class)
    ok, _ = fw.exactness_check(fw.phi0("orthogonal"))
    assert not ok


# --- genus two ----------------------------------------------------------

def test_genus2_b0_b1():
    r0 = fw.decompose_genus2("orthogonal", 0)
    assert r0.passed and r0.details["P_flat"] in ("0", "(0)")
    r1 = fw.decompose_genus2("orthogonal", 1)
    assert r1.passed and r1.details["q_lambda"] == "1"


def test_genus2_b2_witness():
    std = fw.decompose_genus2("orthogonal", 2, "t11t22-t12t21")
    rev = fw.decompose_genus2("orthogonal", 2, "t12t21-t11t22")
    assert std.details["q_lambda"] == rev.details["q_lambda"] == "2/3"
    assert std.details["P_flat_at_ones"] == "1/2"
    assert rev.details["P_flat_at_ones"] == "-1/2"
    assert std.details["c_equals_inverse_q"] and std.details["lower_bidegree"]


@pytest.mark.parametrize("b", [(1, 1), (2, 1), (2, 2)])
def test_genus2_unit(b):
    r = fw.decompose_genus2("unitary", b)
    assert r.passed and r.details["reconstruction_exact"]


def test_canonical_form_stable():
    a = fw.phi("unitary", (2, 1)).canonical()
    b = fw.phi("unitary", (2, 1)).canonical()
    assert a == b and a.count("\n") == 0
