import json
import math

import numpy as np
import pytest

from weilcheck import domain_geometry as dg
from weilcheck import green_numeric as gn
from weilcheck.cli import green_points
from weilcheck.schur_tensor import UsageError

PI = math.pi
OV = lambda *a: dg.ModelVector("orthogonal", tuple(float(v) for v in a))
UV = lambda *a: dg.ModelVector("unitary", tuple(complex(v) for v in a))

ORTH_PAIR = (OV(0.7, -0.4, 0.3), OV(1.1, 0.2, 0.9))       # both with special points
ORTH_NEG = (OV(1.0, 0.3, -0.2), OV(0.4, 0.9, 0.5))        # x2 of negative norm
UNIT_PAIR = (UV(0.9, 0.1j), UV(1.3, 1.1 + 0.3j))


# --- spec / profiles ----------------------------------------------------

def test_quadrature_spec_validation():
    with pytest.raises(UsageError):
        gn.QuadratureSpec(rtol=0)
    with pytest.raises(UsageError):
        gn.QuadratureSpec(t_policy="magic")
    assert gn.QuadratureSpec().as_dict()["eps"] == 1e-2


def test_profiles_low_degree():
    ys = np.linspace(-1.3, 1.7, 9)
    assert np.allclose(gn.profiles("orthogonal", 0).evaluate("h", ys), 1)
    assert np.allclose(gn.profiles("orthogonal", 1).evaluate("h", ys), ys)
    assert np.allclose(gn.profiles("orthogonal", 2).evaluate("h", ys), ys ** 2 - 1 / (4 * PI))
    assert np.allclose(gn.profiles("orthogonal", 0).evaluate("p", ys), 4 * PI * ys ** 2 - 1)
    z = np.array([0.3 + 0.2j, -0.7j, 1.1])
    assert np.allclose(gn.profiles("unitary", (0, 0)).evaluate("p", z), 2 * PI * abs(z) ** 2 - 1)
    assert np.allclose(gn.profiles("unitary", (1, 1)).evaluate("h", z), abs(z) ** 2 - 1 / (2 * PI))


@pytest.mark.parametrize("b", range(6))
def test_profile_recurrence_finite_difference(b):
    """h_{b+1} = x h_b - h_b'/(4 pi), with h_b' by central differences."""
    x = np.linspace(-1.5, 1.5, 13)
    h = 1e-5
    hb = lambda t: gn.profiles("orthogonal", b).evaluate("h", t)
    want = x * hb(x) - (hb(x + h) - hb(x - h)) / (2 * h) / (4 * PI)
    assert np.allclose(gn.profiles("orthogonal", b + 1).evaluate("h", x), want, atol=1e-8)
    assert gn.profiles("orthogonal", b).degree("h") == b


def test_nu_profile_at_zero():
    # vanishes at the origin exactly for odd b; even b keeps the constant term
    for b in range(7):
        v = gn.profiles("orthogonal", b).evaluate("h", np.array([0.0]))[0]
        if b % 2:
            assert v == 0
        else:
            assert v != 0
    assert gn.profiles("orthogonal", 2).evaluate("h", np.array([0.0]))[0] == pytest.approx(-1 / (4 * PI))


# --- kernels ------------------------------------------------------------

def test_kernel_weight_zero_origin():
    z = np.zeros(3)
    assert gn.kernel_Psi("orthogonal", 0, z, z, 1) == pytest.approx(-1.0)


def test_kernel_sum_symmetric():
    rng = np.random.default_rng(1)
    for _ in range(5):
        a, b = rng.normal(size=3), rng.normal(size=3)
        assert gn.kernel_Psi("orthogonal", 2, a, b) == pytest.approx(gn.kernel_Psi("orthogonal", 2, b, a))


def test_kernel_b2_against_closed_form():
    a = np.array([0.5, 0.25, -0.75])
    b = np.array([-1.25, 0.5, 0.125])
    h2 = lambda t: t * t - 1 / (4 * PI)
    p2 = lambda t: 4 * PI * t ** 4 - 6 * t * t + 3 / (4 * PI)
    g = math.exp(-PI * (a @ a + b @ b)) * 2 / 3
    assert gn.kernel_Psi("orthogonal", 2, a, b, 1) == pytest.approx(g * h2(a[0]) * p2(b[0]), rel=1e-12)
    assert gn.kernel_Psi("orthogonal", 2, a, b, 2) == pytest.approx(g * p2(a[0]) * h2(b[0]), rel=1e-12)


# --- Green function -----------------------------------------------------

@pytest.mark.parametrize("case,lam", [("orthogonal", 0), ("orthogonal", 2), ("unitary", (1, 1))])
def test_green_dual_method(case, lam):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        if case == "orthogonal":
            x = OV(*rng.normal(size=3))
            p = dg.DomainPoint(case, tuple(rng.normal(size=2)), int(rng.choice([1, -1])))
        else:
            x = UV(*(rng.normal(size=2) + 1j * rng.normal(size=2)))
            p = dg.DomainPoint(case, tuple(rng.uniform(-0.6, 0.6, 2)))
        a = gn.green_profile(case, lam, x, p)
        b = gn.green_profile(case, lam, x, p, "quadrature")
        worst = max(worst, abs(a - b) / abs(b))
    assert worst < 1e-9


def test_green_smooth_for_negative_vector():
    x = OV(0.3, 1.0, 0.2)
    vals = [v[3] for v in gn.green_grid("orthogonal", 1, x, n=15)]
    assert np.all(np.isfinite(vals))


def test_green_singular_at_special_point():
    # x = e1 vanishes exactly on the negative plane at the base point
    with pytest.raises(gn.SingularityError):
        gn.green_profile("orthogonal", 0, OV(1, 0, 0), dg.DomainPoint.base("orthogonal"))
    with pytest.raises(gn.SingularityError):
        gn.green_profile("orthogonal", 0, OV(1, 0, 0), dg.DomainPoint.base("orthogonal"), "quadrature")


@pytest.mark.parametrize("case,lam,x", [("orthogonal", 0, OV(1.2, 0.3, -0.1)),
                                        ("orthogonal", 1, OV(1.2, 0.3, -0.1)),
                                        ("orthogonal", 2, OV(1.0, -0.2, 0.4)),
                                        ("unitary", (1, 1), UV(1.0, 0.3 + 0.2j))])
def test_log_well_bounded(case, lam, x):
    p, _ = dg.special_points(x)[0]
    d = [gn.log_defect(case, lam, x, p, r) for r in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert max(abs(a - b) for a, b in zip(d, d[1:])) < 1e-2 * max(1.0, abs(d[0]))
    # without the log correction the value blows up
    cl, _ = dg.polar_cloud(case, p, [1e-5, 1e-2], [0.7])
    g = gn.green_cloud(case, lam, x, cl)
    assert abs(g[0]) > 2 * abs(g[1])


def test_green_bad_inputs():
    p = dg.DomainPoint.base("unitary")
    with pytest.raises(UsageError):
        gn.green_profile("orthogonal", 0, OV(1, 0, 0), p)
    with pytest.raises(UsageError):
        gn.green_profile("unitary", (0, 0), UV(1, 0), p, method="bogus")
    with pytest.raises(UsageError):
        OV(1, float("inf"), 0)


# --- star / exchange ----------------------------------------------------

@pytest.fixture(scope="module")
def star_orth():
    return gn.star_integral(*ORTH_PAIR, 1)


def test_star_report_shape(star_orth):
    r = star_orth
    assert r.total == pytest.approx(r.delta + r.tail, rel=1e-14)
    assert r.error >= 0
    d = r.as_dict()
    assert d["schema"] == "weilcheck.star/1"
    json.dumps(d)
    assert set(r.components) >= {"delta+1", "delta-1", "tail+1", "tail-1"}


def test_star_components_conjugate(star_orth):
    c = star_orth.components
    assert c["tail+1"] == pytest.approx(np.conj(c["tail-1"]), rel=1e-8)
    assert abs(star_orth.total.imag) < 1e-6 * abs(star_orth.total)


def test_star_equals_exchange_orth(star_orth):
    e = gn.exchange_rhs(*ORTH_PAIR, 1)
    assert abs(star_orth.total - e) / abs(e) < 1e-3


def test_star_equals_exchange_unit():
    s = gn.star_integral(*UNIT_PAIR, (1, 0)).total
    e = gn.exchange_rhs(*UNIT_PAIR, (1, 0))
    assert abs(s - e) / abs(e) < 1e-3


def test_star_swap_symmetric():
    a = gn.star_integral(*ORTH_NEG, 0).total
    b = gn.star_integral(ORTH_NEG[1], ORTH_NEG[0], 0).total
    assert abs(a - b) / abs(a) < 1e-3


def test_star_preconditions():
    with pytest.raises(gn.PreconditionError):
        gn.star_integral(OV(1, 0, 0), OV(2, 0, 0), 0)          # degenerate
    with pytest.raises(gn.PreconditionError):
        gn.star_integral(OV(0, 1, 0), OV(0, 0, 1), 0)          # det T > 0


def test_orbital_route():
    x1, x2 = ORTH_NEG
    e = gn.exchange_rhs(x1, x2, 0)
    o = gn.exchange_from_orbital(x1, x2, 0)
    assert abs(o - e) / abs(e) < 1e-3


def test_orbital_equivariant():
    x1, x2 = ORTH_NEG
    h = dg.frame_at(dg.DomainPoint("orthogonal", (0.4, -0.9), 1))
    a = gn.orbital_scaled(x1, x2, 1, 2.0)
    b = gn.orbital_scaled(OV(*(h @ x1.array)), OV(*(h @ x2.array)), 1, 2.0)
    assert abs(a - b) < 1e-8 * abs(a)


def test_exchange_decay_and_tail():
    x1, x2 = UNIT_PAIR
    rate, _ = gn.exchange_decay_rate(x1, x2, (1, 1))
    assert rate > 0
    t64 = gn.whittaker_tail(x1, x2, (1, 1), 64.0)
    t128 = gn.whittaker_tail(x1, x2, (1, 1), 128.0)
    assert abs(t64) < 1e-6 and abs(t128) <= abs(t64)


# --- weight-zero constant ------------------------------------------------

def test_realize_moment():
    for case, T in (("orthogonal", np.array([[0.3, 0.2], [0.2, -0.7]])),
                    ("unitary", np.array([[0.4, 0.3 + 0.2j], [0.3 - 0.2j, -0.2]]))):
        x1, x2 = gn.realize_moment(case, T)
        assert np.allclose(dg.moment_matrix(case, x1, x2), T)
    with pytest.raises(gn.PreconditionError):
        gn.realize_moment("orthogonal", np.diag([0.5, 0.5]))       # no positive 2-planes


def test_weil_index_conventions():
    assert gn.weil_index("orthogonal", "J") == pytest.approx(1j)
    assert gn.weil_index("orthogonal", "J_inv") == pytest.approx(-1j)
    with pytest.raises(UsageError):
        gn.weil_index("orthogonal", "K")


def test_fiber_jacobian_independent_of_T():
    vals = [gn.fiber_jacobian(*gn.realize_moment("orthogonal", T))
            for T in (np.diag([0.5, -0.5]), np.diag([1.0, -0.25]), np.array([[-0.3, 0.4], [0.4, 0.2]]))]
    assert np.allclose(vals, math.sqrt(2))


def test_lambda0_oracle_finite_and_continuous():
    a = gn.lambda0_oracle(np.diag([0.5, -0.5]))
    assert np.isfinite(a) and abs(a) > 0
    b = gn.lambda0_oracle(np.diag([0.5, -0.51]))
    assert abs(a - b) < 0.1 * abs(a)
    with pytest.raises(gn.PreconditionError):
        gn.lambda0_oracle(np.diag([0.5, 0.5]))


def test_weight_zero_ratio_orthogonal():
    T = np.diag([0.5, -0.5])
    x1, x2 = gn.realize_moment("orthogonal", T)
    r = gn.star_integral(x1, x2, 0).total / gn.lambda0_oracle(T)
    assert abs(r / gn.expected_ratio("orthogonal") - 1) < 1e-3


def test_weight_zero_ratio_unitary_is_quarter():
    """Records the unitary normalization conflict: ratio is 1/4 of the expected constant."""
    T = np.diag([0.5, -0.5])
    x1, x2 = gn.realize_moment("unitary", T)
    r = gn.star_integral(x1, x2, (0, 0)).total / gn.lambda0_oracle(T, "unitary")
    assert r / gn.expected_ratio("unitary") == pytest.approx(0.25, rel=1e-6)


# --- Green equation -----------------------------------------------------

@pytest.mark.parametrize("case,lam,tol", [("orthogonal", 0, 1e-4), ("orthogonal", 2, 1e-3),
                                          ("unitary", (1, 1), 1e-3)])
def test_green_equation(case, lam, tol):
    for x, p in green_points(case, lam, 4, seed=3):
        d = gn.greens_equation_residual(x, p, lam, details=True)
        assert d["residual"] < tol
        assert 1.7 < d["order"] < 2.3
        assert d["richardson"] < d["residual"]


@pytest.mark.parametrize("case,lam", [("orthogonal", 1), ("unitary", (1, 0))])
def test_green_equation_negative_control(case, lam):
    """Dropping the transversal Hodge terms must break the identity."""
    for x, p in green_points(case, lam, 3, seed=5):
        good = gn.greens_equation_residual(x, p, lam, details=True)
        bad = gn.greens_equation_residual(x, p, lam, details=True, transversal=False)
        assert bad["residual"] > 30 * good["residual"]
        assert bad["residual"] > 1e-2 * bad["scale"]


def test_green_equation_near_divisor():
    x = OV(1.2, 0.3, -0.1)
    p, _ = dg.special_points(x)[0]
    q = gn.chart_point("orthogonal", p.disk() + 1e-3, p.component)
    with pytest.raises(gn.PreconditionError):
        gn.greens_equation_residual(x, q, 0)


# --- boundary decay -----------------------------------------------------

@pytest.mark.parametrize("case,lam,x", [("orthogonal", 0, OV(1, 0, 0)), ("orthogonal", 2, OV(1, 0, 0)),
                                        ("unitary", (0, 0), UV(1, 0)), ("unitary", (1, 1), UV(1, 0))])
def test_decay_unit_vector(case, lam, x):
    r = gn.boundary_decay_probe(x, lam)
    assert r["super_polynomial"]
    far = gn.boundary_decay_probe(x, lam, rhos=(9.0, 10.0))["max_abs"][-1]
    assert far < 1e-20


def test_decay_unitary_negative_vector():
    assert gn.boundary_decay_probe(UV(0.2 - 0.1j, 0.9), (1, 0))["super_polynomial"]


def test_no_decay_for_negative_orthogonal_vector():
    """Finding: along the geodesic orthogonal to x the profile is constant."""
    x = OV(0.4, 0.9, 0.5)
    r = gn.boundary_decay_probe(x, 0)
    assert not r["super_polynomial"]
    assert max(r["max_abs"]) == pytest.approx(min(r["max_abs"]), rel=1e-9)


# --- grids --------------------------------------------------------------

def test_kernel_grid_isotropy_symmetric():
    # x1, x2 in span(e1, e2): the rotation fixing e1 and sending e3 -> -e3 is a symmetry
    x1, x2 = OV(1.0, 0.3, 0.0), OV(0.4, 1.2, 0.0)
    rows = gn.kernel_grid("orthogonal", 0, x1, x2, n=9)
    val = {(round(a, 9), round(b, 9)): re for a, b, _, re, _ in rows}
    for (a, b), v in val.items():
        assert v == pytest.approx(val[(a, round(-b, 9) + 0.0)], rel=1e-9, abs=1e-300)


def test_green_grid_log_well():
    x = OV(1.0, 0.0, 0.0)                       # special point at the centre of the disk
    rows = gn.green_grid("orthogonal", 0, x, n=11, extent=0.5)
    r = {round(math.hypot(a, b), 6): re for a, b, _, re, _ in rows}
    assert r[0.0] == float("inf")
    rs = sorted(k for k in r if k > 0)
    assert all(r[a] >= r[b] for a, b in zip(rs, rs[1:]))
