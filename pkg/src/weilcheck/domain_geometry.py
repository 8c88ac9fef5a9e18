"""Charts, frames and invariant measures on the two rank-one symmetric domains.

Orthogonal case: V = R^3 with form diag(1,-1,-1).  A point of the domain is
an oriented negative 2-plane, i.e. a unit positive vector v (first
coordinate > 0) together with an orientation flag ``component`` in {+1,-1}.
Hyperboloid chart: v = (sqrt(1+x2^2+x3^2), x2, x3).  A conformal (Poincare
disk) chart zeta = (x2 + i*c*x3)/(1+v1), c = component, is holomorphic for
the complex structure in which the (1,-1) Hodge line f2 + i f3 varies
holomorphically.

Unitary case: V = C^2 with hermitian form diag(1,-1).  The negative line at
w (|w|<1) is spanned by (w, 1); the positive line by (1, conj(w)).

Scalar pairings of invariant forms only ever need the base-frame
coordinates y = h_p^{-1} x of the vectors involved, so most callers go
through :func:`base_coordinates`, which is vectorised over point arrays.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .schur_tensor import UsageError

J3 = np.diag([1.0, -1.0, -1.0])
J2 = np.diag([1.0, -1.0])
FRAME_TOL = 1e-12


def form(case, x, y):
    """(x, y) for the model form; hermitian forms are linear in the first slot."""
    x = np.asarray(x)
    y = np.asarray(y)
    if case == "orthogonal":
        return x[..., 0] * y[..., 0] - x[..., 1] * y[..., 1] - x[..., 2] * y[..., 2]
    return x[..., 0] * np.conj(y[..., 0]) - x[..., 1] * np.conj(y[..., 1])


@dataclass(frozen=True)
class ModelVector:
    case: str
    coords: tuple

    def __post_init__(self):
        a = np.asarray(self.coords, dtype=complex if self.case == "unitary" else float)
        n = 3 if self.case == "orthogonal" else 2
        if a.shape != (n,) or not np.all(np.isfinite(a)):
            raise UsageError(f"bad {self.case} model vector {self.coords!r}")

    @property
    def array(self):
        return np.asarray(self.coords, dtype=complex if self.case == "unitary" else float)

    def norm2(self):
        """(x, x); twice the moment T(x)."""
        return float(np.real(form(self.case, self.array, self.array)))


def as_array(case, x):
    if isinstance(x, ModelVector):
        return x.array
    return np.asarray(x, dtype=complex if case == "unitary" else float)


def moment_matrix(case, x1, x2):
    """T(x1, x2) = (1/2) ((x_i, x_j))."""
    a, b = as_array(case, x1), as_array(case, x2)
    M = 0.5 * np.array([[form(case, a, a), form(case, a, b)],
                        [form(case, b, a), form(case, b, b)]])
    return M.real if case == "orthogonal" else M


# ---------------------------------------------------------------------------
# points

@dataclass(frozen=True)
class DomainPoint:
    case: str
    coords: tuple            # (x2, x3) for orthogonal, (Re w, Im w) for unitary
    component: int = 1
    _frame: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.case == "orthogonal":
            if self.component not in (1, -1):
                raise UsageError("component flag must be +1 or -1")
        elif self.case == "unitary":
            if abs(complex(*self.coords)) >= 1:
                raise UsageError("unitary point must satisfy |w| < 1")
        else:
            raise UsageError(f"unknown case {self.case!r}")
        object.__setattr__(self, "_frame", _frame(self.case, self.coords, self.component))

    @property
    def w(self):
        return complex(*self.coords)

    @property
    def v(self):
        """Unit positive vector (orthogonal) / unit positive vector (1, conj w)/s (unitary)."""
        return self._frame[:, 0].copy()

    @property
    def frame(self):
        return self._frame.copy()

    @classmethod
    def base(cls, case, component=1):
        return cls(case, (0.0, 0.0), component)

    @classmethod
    def from_vector(cls, v, component=1):
        v = np.asarray(v, dtype=float)
        v = v / math.sqrt(form("orthogonal", v, v))
        if v[0] < 0:
            v = -v
        return cls("orthogonal", (float(v[1]), float(v[2])), component)

    @classmethod
    def from_disk(cls, zeta, component=1):
        """Orthogonal point from its conformal coordinate."""
        zeta = complex(zeta)
        r2 = abs(zeta) ** 2
        if r2 >= 1:
            raise UsageError("disk coordinate must satisfy |zeta| < 1")
        s = 2.0 / (1.0 - r2)
        return cls("orthogonal", (s * zeta.real, component * s * zeta.imag), component)

    def disk(self):
        """Holomorphic coordinate of the point."""
        if self.case == "unitary":
            return self.w
        x2, x3 = self.coords
        v1 = math.sqrt(1.0 + x2 * x2 + x3 * x3)
        return complex(x2, self.component * x3) / (1.0 + v1)


def _boost(x2, x3):
    v1 = math.sqrt(1.0 + x2 * x2 + x3 * x3)
    s = np.array([x2, x3])
    B = np.empty((3, 3))
    B[0, 0] = v1
    B[0, 1:] = s
    B[1:, 0] = s
    B[1:, 1:] = np.eye(2) + np.outer(s, s) / (1.0 + v1)
    return B


def _frame(case, coords, component):
    if case == "orthogonal":
        B = _boost(*coords)
        if component == -1:
            B = B @ np.diag([1.0, 1.0, -1.0])
        return B
    w = complex(*coords)
    s = math.sqrt(1.0 - abs(w) ** 2)
    return np.array([[1.0, w], [np.conj(w), 1.0]], dtype=complex) / s


def frame_at(p):
    """Canonical transvection h with h.(base) = p (orientation-compatible)."""
    return p.frame


def frame_residual(p):
    """max |h^* G h - G| for the model Gram matrix G."""
    h = p._frame
    G = J3 if p.case == "orthogonal" else J2
    return float(np.max(np.abs(np.conj(h.T) @ G @ h - G)))


def inverse_frame(p):
    h = p._frame
    G = J3 if p.case == "orthogonal" else J2
    return G @ np.conj(h.T) @ G


# ---------------------------------------------------------------------------
# vectorised point clouds

class PointCloud:
    """Arrays of domain points in one component with their frames.

    ``frames`` has shape (N, n, n).  Used by all quadrature routines.
    """

    def __init__(self, case, frames, component=1):
        self.case = case
        self.frames = frames
        self.component = component

    def __len__(self):
        return self.frames.shape[0]

    @property
    def v(self):
        return self.frames[:, :, 0]


def boosts(vs, component=1):
    """Vectorised canonical boosts for unit positive vectors vs (N, 3)."""
    vs = np.asarray(vs, dtype=float)
    v1 = vs[:, 0]
    s = vs[:, 1:]
    N = vs.shape[0]
    B = np.empty((N, 3, 3))
    B[:, 0, 0] = v1
    B[:, 0, 1:] = s
    B[:, 1:, 0] = s
    B[:, 1:, 1:] = np.eye(2)[None] + s[:, :, None] * s[:, None, :] / (1.0 + v1)[:, None, None]
    if component == -1:
        B[:, :, 2] *= -1.0
    return B


def transvections(ws):
    ws = np.asarray(ws, dtype=complex)
    s = np.sqrt(1.0 - np.abs(ws) ** 2)
    H = np.empty((ws.shape[0], 2, 2), dtype=complex)
    H[:, 0, 0] = 1.0 / s
    H[:, 0, 1] = ws / s
    H[:, 1, 0] = np.conj(ws) / s
    H[:, 1, 1] = 1.0 / s
    return H


def base_coordinates(case, x, cloud):
    """y = h_p^{-1} x for every point of the cloud; shape (N, n).

    Invariant forms are evaluated away from the base point by group
    translation, so this is the only place frames enter the numerics.
    """
    x = as_array(case, x)
    G = J3 if case == "orthogonal" else J2
    # h^{-1} = G h^* G
    hx = np.einsum("nji,j->ni", np.conj(cloud.frames), G @ x)
    return hx * np.diag(G)[None, :]


def rotation_at(cloud, theta):
    """The isotropy rotation by theta at every point (acting on V)."""
    case = cloud.case
    if case == "orthogonal":
        c, s = math.cos(theta), math.sin(theta)
        Rb = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    else:
        Rb = np.diag([1.0, np.exp(1j * theta)])
    H = cloud.frames
    G = J3 if case == "orthogonal" else J2
    Hinv = G[None] @ np.conj(np.transpose(H, (0, 2, 1))) @ G[None]
    return H @ Rb[None] @ Hinv


# ---------------------------------------------------------------------------
# special points

def special_points(x):
    """Points of the domain perpendicular to x (with the transported x-word tag)."""
    if not isinstance(x, ModelVector):
        raise UsageError("special_points expects a ModelVector")
    a = x.array
    if not np.any(a):
        raise UsageError("special_points: x must be nonzero")
    n2 = x.norm2()
    if n2 <= 0:
        return []
    if x.case == "orthogonal":
        return [(DomainPoint.from_vector(a, c), "x^b") for c in (1, -1)]
    w = np.conj(a[1]) / np.conj(a[0])
    return [(DomainPoint("unitary", (w.real, w.imag)), "x^b'*conj(x)^b''")]


# ---------------------------------------------------------------------------
# invariant measure

BASE_DENSITY = {"orthogonal": 1.0 / (2.0 * math.pi), "unitary": 1.0 / math.pi}


def measure_density(p, chart="hyperboloid"):
    """Density of Omega against the chart's coordinate area element.

    The base-fibre value (1/2pi for omega12^omega13, 1/pi for (i/2pi) xi^xibar
    in the disk chart) is transported with frame_at: density(p) =
    base / |det d(chart o h_p)| at the base point.
    """
    h = p._frame
    if p.case == "unitary":
        # w(eps) = (h00 eps + h01)/(h10 eps + h11); complex-linear in eps
        dw = (h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]) / h[1, 1] ** 2
        return BASE_DENSITY["unitary"] / abs(dw) ** 2
    f2, f3 = h[:, 1], h[:, 2]
    if chart == "hyperboloid":
        jac = f2[1] * f3[2] - f2[2] * f3[1]
    elif chart == "disk":
        v = h[:, 0]
        c = p.component

        def dzeta(f):
            # zeta = (x2 + i c x3)/(1 + v1); differentiate along v + eps f
            num = complex(v[1], c * v[2])
            den = 1.0 + v[0]
            return complex(f[1], c * f[2]) / den - num * f[0] / den ** 2
        a, b = dzeta(f2), dzeta(f3)
        jac = a.real * b.imag - a.imag * b.real
    else:
        raise UsageError(f"unknown chart {chart!r}")
    return BASE_DENSITY["orthogonal"] / abs(jac)


def density_closed_form(p, chart="hyperboloid"):
    """Closed forms used to cross-check :func:`measure_density`."""
    if p.case == "unitary":
        return 1.0 / (math.pi * (1.0 - abs(p.w) ** 2) ** 2)
    if chart == "hyperboloid":
        return 1.0 / (2.0 * math.pi * p.v[0])
    z = p.disk()
    return 2.0 / (math.pi * (1.0 - abs(z) ** 2) ** 2)


def polar_cloud(case, center, radii, thetas):
    """Geodesic polar coordinates around ``center``.

    Orthogonal: v = h_c (cosh r, sinh r cos t, sinh r sin t), Omega = sinh r dr dt / 2pi.
    Unitary: w = h_c . (tanh r e^{it}), Omega = sinh r cosh r dr dt / pi.
    Returns (PointCloud, jacobian array) with the jacobian being the Omega
    density in (r, t); the caller supplies quadrature weights.
    """
    R, TH = np.meshgrid(np.asarray(radii, float), np.asarray(thetas, float), indexing="ij")
    R, TH = R.ravel(), TH.ravel()
    hc = center._frame
    if case == "orthogonal":
        local = np.stack([np.cosh(R), np.sinh(R) * np.cos(TH), np.sinh(R) * np.sin(TH)], axis=1)
        vs = local @ hc.T
        # the component of the centre is carried by its frame orientation
        comp = center.component
        fr = boosts(vs, comp)
        jac = np.sinh(R) / (2.0 * math.pi)
        return PointCloud(case, fr, comp), jac
    z = np.tanh(R) * np.exp(1j * TH)
    ws = (hc[0, 0] * z + hc[0, 1]) / (hc[1, 0] * z + hc[1, 1])
    fr = transvections(ws)
    jac = np.sinh(R) * np.cosh(R) / math.pi
    return PointCloud(case, fr, 1), jac


def point_cloud(points):
    """PointCloud from a list of DomainPoints (single component)."""
    comps = {p.component for p in points}
    if len(comps) != 1:
        raise UsageError("point_cloud: mixed components")
    return PointCloud(points[0].case, np.stack([p._frame for p in points]), comps.pop())


# ---------------------------------------------------------------------------
# Hodge decomposition of coefficient tensors

def tensor_rep(case, g, degree):
    """Matrix of g acting slotwise on full tensors (conjugate on the second factor)."""
    if case == "orthogonal":
        b, mats = degree, [g] * degree
    else:
        b1, b2 = degree
        mats = [g] * b1 + [np.conj(g)] * b2
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def type_range(case, degree):
    B = degree if case == "orthogonal" else degree[0] + degree[1]
    return range(-B, B + 1)


def hodge_projectors(p, degree, schur=None):
    """Projectors P^{(k,-k)} on the coefficient tensors at p.

    Types are eigen-characters of the isotropy rotation at p: in the
    orthogonal case f2 + i f3 (the (1,-1) line) has eigenvalue e^{-i theta},
    in the unitary case the negative line has e^{+i theta} on V and the
    conjugate on the second tensor factor.  Exact averaging over 2B+1 angles.
    ``schur`` (a matrix) restricts the family to a Schur summand.
    """
    cloud = PointCloud(p.case, p._frame[None], p.component)
    return hodge_projectors_cloud(cloud, degree, schur)[0]


def hodge_projectors_cloud(cloud, degree, schur=None):
    case = cloud.case
    ks = list(type_range(case, degree))
    N = 2 * len(ks) + 1
    sign = 1 if case == "orthogonal" else -1
    out = [dict() for _ in range(len(cloud))]
    reps = []
    for j in range(N):
        th = 2 * math.pi * j / N
        Rs = rotation_at(cloud, th)
        reps.append((th, [tensor_rep(case, R, degree) for R in Rs]))
    for n in range(len(cloud)):
        for k in ks:
            P = sum(np.exp(sign * 1j * k * th) * mats[n] for th, mats in reps) / N
            if schur is not None:
                P = P @ schur
            out[n][k] = P
    return out


def hodge_type(case, k):
    return (k, -k)


# ---------------------------------------------------------------------------
# export

def export_grid(path, case, extent=3.0, n=41, component=1):
    """CSV of chart coordinates and Omega density on a square (or disk) grid."""
    rows = []
    lin = np.linspace(-extent, extent, n) if case == "orthogonal" else np.linspace(-0.95, 0.95, n)
    for a in lin:
        for b in lin:
            if case == "unitary" and a * a + b * b >= 0.9025:
                continue
            p = DomainPoint(case, (float(a), float(b)), component)
            rows.append((f"{a:.6f}", f"{b:.6f}", component, f"{measure_density(p):.12e}"))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["u", "v", "component", "density"])
        wr.writerows(rows)
    return path
