"""Tiny dense exact simplex (phase one only) used for polytope/cell
intersection tests.  Bland's rule, ``Fraction`` arithmetic."""
from __future__ import annotations

from fractions import Fraction


def feasible(A, b) -> bool:
    """Is ``{y >= 0 : A y <= b}`` nonempty?  ``A`` is a list of rows."""
    m = len(A)
    if m == 0:
        return True
    nvar = len(A[0])
    # columns: y (nvar), slacks (m), artificials (one per row with b < 0)
    neg = [i for i in range(m) if b[i] < 0]
    ncol = nvar + m + len(neg)
    rows = []
    basis = []
    art_col = {}
    for k, i in enumerate(neg):
        art_col[i] = nvar + m + k
    for i in range(m):
        row = [Fraction(0)] * (ncol + 1)
        sign = -1 if i in art_col else 1
        for j in range(nvar):
            row[j] = sign * Fraction(A[i][j])
        row[nvar + i] = Fraction(sign)
        row[ncol] = sign * Fraction(b[i])
        if i in art_col:
            row[art_col[i]] = Fraction(1)
            basis.append(art_col[i])
        else:
            basis.append(nvar + i)
        rows.append(row)
    if not neg:
        return True
    # objective: minimize the sum of artificials, written in reduced form
    obj = [Fraction(0)] * (ncol + 1)
    for i in neg:
        for j in range(ncol + 1):
            obj[j] -= rows[i][j]
    for c in art_col.values():
        obj[c] = Fraction(0)

    while True:
        enter = next((j for j in range(ncol) if obj[j] < 0), None)
        if enter is None:
            break
        best, leave = None, None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][ncol] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            # cannot happen for a phase-one problem bounded below by zero
            raise ArithmeticError("phase-one simplex reported unbounded")
        piv = rows[leave][enter]
        prow = [x / piv for x in rows[leave]]
        rows[leave] = prow
        for i in range(m):
            if i != leave and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], prow)]
        f = obj[enter]
        obj = [x - f * y for x, y in zip(obj, prow)]
        basis[leave] = enter
    return obj[ncol] == 0
