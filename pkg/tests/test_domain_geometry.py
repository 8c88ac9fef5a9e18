import math

import numpy as np
import pytest

from weilcheck import domain_geometry as dg
from weilcheck.schur_tensor import UsageError

rng = np.random.default_rng(0)


def rand_point(case, scale=1.5):
    if case == "orthogonal":
        return dg.DomainPoint(case, tuple(rng.normal(size=2) * scale), int(rng.choice([1, -1])))
    r, t = rng.uniform(0, 0.9), rng.uniform(0, 2 * math.pi)
    return dg.DomainPoint(case, (r * math.cos(t), r * math.sin(t)))


def test_base_frame_identity():
    assert np.allclose(dg.frame_at(dg.DomainPoint.base("orthogonal")), np.eye(3))
    assert np.allclose(dg.frame_at(dg.DomainPoint.base("unitary")), np.eye(2))


@pytest.mark.parametrize("case", ["orthogonal", "unitary"])
def test_frames_are_isometries(case):
    for _ in range(100):
        assert dg.frame_residual(rand_point(case)) < dg.FRAME_TOL


def test_frame_moves_base_vector():
    G = np.diag([1.0, -1.0, -1.0])
    for _ in range(100):
        p = rand_point("orthogonal")
        hinv = dg.inverse_frame(p)
        assert np.allclose(hinv @ p.v, [1, 0, 0], atol=1e-12)
        assert np.allclose(hinv @ dg.frame_at(p), np.eye(3), atol=1e-11)
        # v(p) is a unit positive vector with the chart coordinates
        assert abs(p.v @ G @ p.v - 1) < 1e-12
        assert np.allclose(p.v[1:], p.coords)


def test_bad_points():
    with pytest.raises(UsageError):
        dg.DomainPoint("unitary", (0.8, 0.7))
    with pytest.raises(UsageError):
        dg.DomainPoint("orthogonal", (0.0, 0.0), 2)
    with pytest.raises(UsageError):
        dg.ModelVector("orthogonal", (1.0, float("nan"), 0.0))


def test_special_points_examples():
    sp = dg.special_points(dg.ModelVector("orthogonal", (1.0, 0.0, 0.0)))
    assert sorted(p.component for p, _ in sp) == [-1, 1]
    assert all(np.allclose(p.coords, 0) for p, _ in sp)
    sp = dg.special_points(dg.ModelVector("unitary", (1.0, 0.0)))
    assert len(sp) == 1 and abs(sp[0][0].w) < 1e-15
    assert dg.special_points(dg.ModelVector("orthogonal", (0.3, 1.0, 0.2))) == []
    assert dg.special_points(dg.ModelVector("unitary", (0.2, 0.9))) == []
    with pytest.raises(UsageError):
        dg.special_points(dg.ModelVector("orthogonal", (0.0, 0.0, 0.0)))


def test_special_point_is_perpendicular():
    x = dg.ModelVector("unitary", (1.0 + 0.2j, 0.3 - 0.4j))
    (p, _), = dg.special_points(x)
    y = dg.base_coordinates("unitary", x.array, dg.point_cloud([p]))[0]
    assert abs(y[1]) < 1e-14          # no negative-line component at its own point


def test_special_points_equivariant():
    x = np.array([1.3, 0.2, -0.5])
    for _ in range(10):
        h = dg.frame_at(rand_point("orthogonal"))
        sp = dg.special_points(dg.ModelVector("orthogonal", tuple(h @ x)))
        want = h @ x / math.sqrt(dg.form("orthogonal", x, x))
        want = want if want[0] > 0 else -want
        assert all(np.allclose(p.v, want) for p, _ in sp)


def test_density_positive_and_closed_form():
    for case in ("orthogonal", "unitary"):
        for _ in range(50):
            p = rand_point(case)
            for chart in ("hyperboloid", "disk"):
                d = dg.measure_density(p, chart)
                assert d > 0
                assert abs(d - dg.density_closed_form(p, chart)) < 1e-10 * d


def test_unitary_density_at_origin():
    # (i/2pi) xi ^ xibar = (1/pi) du dv in the disk chart
    assert dg.measure_density(dg.DomainPoint.base("unitary")) == pytest.approx(1 / math.pi)


@pytest.mark.parametrize("case", ["orthogonal", "unitary"])
def test_polar_jacobian_matches_transported_density(case):
    """Numerical Jacobian of (r, theta) -> chart times Omega density = polar density."""
    center = rand_point(case, 0.8)
    h = 1e-6
    for r, t in [(0.3, 0.4), (1.1, 2.0), (2.0, 5.0)]:
        pts = [dg.polar_cloud(case, center, [rr], [tt]) for rr, tt in ((r, t), (r + h, t), (r, t + h))]
        jac = pts[0][1][0]
        if case == "orthogonal":
            c = [cl.frames[0][1:, 0] for cl, _ in pts]
            dens = dg.measure_density(dg.DomainPoint(case, tuple(c[0]), pts[0][0].component))
        else:
            # frame (1, w; conj w, 1)/s: w from the first row
            ws = [cl.frames[0][0, 1] / cl.frames[0][0, 0] for cl, _ in pts]
            c = [np.array([w.real, w.imag]) for w in ws]
            dens = dg.measure_density(dg.DomainPoint(case, tuple(c[0])))
        J = abs(np.linalg.det(np.stack([(c[1] - c[0]) / h, (c[2] - c[0]) / h])))
        assert J * dens == pytest.approx(jac, rel=1e-4)


def test_ball_volume_frame_independent():
    """Omega-volume of a geodesic ball of radius 1 via chart quadrature at two centres."""
    def volume(center):
        # integrate the chart density over the chart image of the ball
        n = 400
        g = np.linspace(-3.5, 3.5, n)
        dA = (g[1] - g[0]) ** 2
        tot = 0.0
        cv = center.v
        G = np.diag([1.0, -1.0, -1.0])
        for a in g:
            for b in g:
                v = np.array([math.sqrt(1 + a * a + b * b), a, b])
                if math.acosh(max(1.0, v @ G @ cv)) < 1.0:
                    tot += dA / (2 * math.pi * v[0])
        return tot
    exact = (math.cosh(1.0) - 1.0)      # int_0^1 sinh r dr * 2pi / 2pi
    v0 = volume(dg.DomainPoint.base("orthogonal"))
    v1 = volume(dg.DomainPoint("orthogonal", (0.7, -0.4)))
    assert v0 == pytest.approx(exact, rel=2e-2)
    assert v1 == pytest.approx(v0, rel=2e-2)


@pytest.mark.parametrize("case,degree", [("orthogonal", 1), ("orthogonal", 2), ("unitary", (1, 1)),
                                         ("unitary", (2, 1))])
def test_hodge_projectors_family(case, degree):
    p = rand_point(case)
    Ps = dg.hodge_projectors(p, degree)
    n = next(iter(Ps.values())).shape[0]
    # projectors are not orthogonal matrices away from the base: scale the tolerance
    tol = 1e-12 * max(np.max(np.abs(P)) for P in Ps.values()) ** 2
    assert np.allclose(sum(Ps.values()), np.eye(n), atol=tol)
    for k, P in Ps.items():
        assert np.allclose(P @ P, P, atol=tol)
        for k2, P2 in Ps.items():
            if k2 != k:
                assert np.allclose(P @ P2, 0, atol=tol)


def test_hodge_base_degree_one():
    P = dg.hodge_projectors(dg.DomainPoint.base("orthogonal"), 1)
    assert np.allclose(P[0], np.diag([1.0, 0.0, 0.0]))
    assert np.allclose(dg.hodge_projectors(dg.DomainPoint.base("orthogonal"), 0)[0], [[1.0]])


@pytest.mark.parametrize("case,degree,x", [
    ("orthogonal", 2, (1.2, 0.3, -0.4)),
    ("unitary", (1, 1), (1.0 + 0.1j, 0.3 - 0.2j)),
    ("unitary", (2, 1), (0.9, 0.4j))])
def test_divisor_coefficient_is_type_00(case, degree, x):
    mv = dg.ModelVector(case, x)
    p, _ = dg.special_points(mv)[0]
    a = mv.array
    if case == "orthogonal":
        vec = np.ones(1)
        for _ in range(degree):
            vec = np.kron(vec, a)
    else:
        vec = np.ones(1, dtype=complex)
        for _ in range(degree[0]):
            vec = np.kron(vec, a)
        for _ in range(degree[1]):
            vec = np.kron(vec, np.conj(a))
    P = dg.hodge_projectors(p, degree)
    assert np.allclose(P[0] @ vec, vec, atol=1e-12)


def test_components_exchanged_by_orientation():
    p = dg.DomainPoint("orthogonal", (0.3, 0.5), 1)
    q = dg.DomainPoint("orthogonal", (0.3, 0.5), -1)
    assert np.allclose(p.v, q.v)
    assert p.disk() == pytest.approx(np.conj(q.disk()))


def test_export_grid(tmp_path):
    path = tmp_path / "g.csv"
    dg.export_grid(path, "unitary", n=5)
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",")[0] in ("u", "x2", "a")
    assert len(lines) > 1
