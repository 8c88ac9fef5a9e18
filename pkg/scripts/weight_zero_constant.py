"""Star integral over the weight-zero oracle for a few moment matrices.

The orthogonal ratio matches the expected constant; the unitary ratio sits at
exactly one quarter of it for every T, i.e. a normalization offset.
"""
import numpy as np

from weilcheck import green_numeric as gn

Ts = {"orthogonal": [np.diag([0.5, -0.5]), np.array([[0.2, 0.5], [0.5, -0.1]])],
      "unitary": [np.diag([0.5, -0.5]), np.array([[0.4, 0.3 + 0.2j], [0.3 - 0.2j, -0.2]])]}
for case, mats in Ts.items():
    lam = 0 if case == "orthogonal" else (0, 0)
    for T in mats:
        x1, x2 = gn.realize_moment(case, T)
        star = gn.star_integral(x1, x2, lam).total
        r = star / gn.lambda0_oracle(T, case) / gn.expected_ratio(case)
        print(f"{case:10s} det T={np.linalg.det(T).real:+.3f}  ratio/expected = {r.real:.9f}{r.imag:+.1e}i")
