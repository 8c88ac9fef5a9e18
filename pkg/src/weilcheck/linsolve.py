"""Exact sparse linear solves over Q and Q(i), backed by FLINT rational matrices.

Systems arrive as lists of sparse rows ``{column_key: coefficient}``; column
keys are arbitrary hashables.  Gaussian systems are embedded in a real system
of twice the size, [[Re, -Im], [Im, Re]].
"""
from fractions import Fraction

import flint


def _fq(x):
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def _tofrac(q):
    return Fraction(int(q.p), int(q.q))


def solve_rational(rows, rhs, columns=None):
    """Solve ``sum_c rows[r][c] * x[c] = rhs[r]`` over Q.

    Returns ``(solution_dict or None, rank)``; the solution sets free
    variables to zero.  ``None`` means the system is inconsistent.
    """
    if columns is None:
        seen = {}
        for r in rows:
            for c in r:
                seen.setdefault(c, len(seen))
        columns = list(seen)
    col_index = {c: i for i, c in enumerate(columns)}
    n, m = len(rows), len(columns)
    if n == 0:
        return ({c: Fraction(0) for c in columns}, 0)
    M = flint.fmpq_mat(n, m + 1)
    for i, r in enumerate(rows):
        for c, v in r.items():
            if v:
                M[i, col_index[c]] = _fq(v)
        if rhs[i]:
            M[i, m] = _fq(rhs[i])
    R, rank = M.rref()
    sol = {c: Fraction(0) for c in columns}
    for i in range(rank):
        # locate pivot
        piv = None
        for j in range(m + 1):
            if R[i, j] != 0:
                piv = j
                break
        if piv == m:
            return None, rank
        sol[columns[piv]] = _tofrac(R[i, m])
    return sol, rank


def rank_rational(rows, columns=None):
    if columns is None:
        seen = {}
        for r in rows:
            for c in r:
                seen.setdefault(c, len(seen))
        columns = list(seen)
    if not rows or not columns:
        return 0
    col_index = {c: i for i, c in enumerate(columns)}
    M = flint.fmpq_mat(len(rows), len(columns))
    for i, r in enumerate(rows):
        for c, v in r.items():
            if v:
                M[i, col_index[c]] = _fq(v)
    return M.rref()[1]


def solve_gaussian(rows, rhs):
    """Solve a sparse system with Gaussian-rational entries.

    ``rows[r][c]`` and ``rhs[r]`` are pairs ``(re, im)`` of Fractions.
    Returns ``(solution {c: (re, im)} or None, rank_of_real_embedding)``.
    """
    real_rows, real_rhs = [], []
    for r, (br, bi) in zip(rows, rhs):
        row_re, row_im = {}, {}
        for c, (ar, ai) in r.items():
            if ar:
                row_re[(c, 0)] = ar
                row_im[(c, 1)] = ar
            if ai:
                row_re[(c, 1)] = -ai
                row_im[(c, 0)] = ai
        real_rows.append(row_re)
        real_rhs.append(br)
        real_rows.append(row_im)
        real_rhs.append(bi)
    cols = []
    seen = set()
    for r in rows:
        for c in r:
            if c not in seen:
                seen.add(c)
                cols.append(c)
    columns = [(c, 0) for c in cols] + [(c, 1) for c in cols]
    sol, rank = solve_rational(real_rows, real_rhs, columns)
    if sol is None:
        return None, rank
    return {c: (sol[(c, 0)], sol[(c, 1)]) for c in cols}, rank
