"""Max of |g(x)| on geodesic circles around the special point (or base point).

Positive-norm orthogonal vectors and all unitary vectors decay
super-polynomially; an orthogonal vector of negative norm gives a flat profile.
"""
from weilcheck import domain_geometry as dg
from weilcheck import green_numeric as gn

vecs = [("orthogonal", 0, (1.0, 0.3, -0.2)), ("orthogonal", 0, (0.4, 0.9, 0.5)),
        ("unitary", (1, 1), (0.2 - 0.1j, 0.9))]
for case, lam, x in vecs:
    r = gn.boundary_decay_probe(dg.ModelVector(case, x), lam)
    tail = " ".join(f"{v:.2e}" for v in r["max_abs"][-4:])
    print(f"{case:10s} x={x}: last maxima {tail}  super-polynomial={r['super_polynomial']}")
