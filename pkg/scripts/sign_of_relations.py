"""Cohomology relations under both signs of the relation constant.

Prints, for each weight, whether the printed sign and the opposite sign give
D-exact differences.  The printed sign breaks from b = 2 (orthogonal) and
from b', b'' >= 1 (unitary part 1).
"""
from weilcheck import fock_weil as fw

for b in range(4):
    row = [all(r.passed for r in fw.cohomology_suite("orthogonal", b, s)) for s in ("printed", "opposite")]
    print(f"orthogonal b={b}: printed={row[0]} opposite={row[1]}")
for b in [(0, 1), (1, 0), (1, 1), (2, 1)]:
    row = [all(r.passed for r in fw.cohomology_suite("unitary", b, s)) for s in ("printed", "opposite")]
    print(f"unitary b={b}: printed={row[0]} opposite={row[1]}")
