"""Linear algebra over the exact expression field.

Determinants use fraction-free Bareiss elimination (denominators are
cleared row by row first); inverses and reduced row echelon forms use
Gauss-Jordan with deterministic lowest-index pivoting so outputs are
reproducible.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from ..symexpr.core import Context, DivisionByZero, Expr

__all__ = ["mat_det", "mat_inverse", "mat_mul", "rref", "nullspace", "SingularMatrix"]


class SingularMatrix(DivisionByZero):
    pass


Matrix = List[List[Expr]]


def _ctx_of(m: Sequence[Sequence[Expr]]) -> Context:
    return m[0][0].ctx


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    ctx = _ctx_of(a)
    rows, inner, cols = len(a), len(b), len(b[0])
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = ctx.zero()
            for k in range(inner):
                if a[i][k].num_t and b[k][j].num_t:
                    acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(row)
    return out


def mat_det(m: Sequence[Sequence[Expr]]) -> Expr:
    """Bareiss determinant. Rows are scaled to clear denominators first."""
    n = len(m)
    ctx = _ctx_of(m)
    if n == 0:
        return ctx.one()
    work: List[List[Expr]] = []
    scale = ctx.one()
    one_t = ctx.one().den_t
    for row in m:
        factor = ctx.one()
        for e in row:
            if e.den_t != one_t:
                factor = factor * Expr(e.ctx, e.den_t, one_t)
        if factor != ctx.one():
            scale = scale * factor
            work.append([e * factor for e in row])
        else:
            work.append(list(row))
    sign = 1
    prev = ctx.one()
    for k in range(n - 1):
        if not work[k][k].num_t:
            pivot_row = None
            for r in range(k + 1, n):
                if work[r][k].num_t:
                    pivot_row = r
                    break
            if pivot_row is None:
                return ctx.zero()
            work[k], work[pivot_row] = work[pivot_row], work[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = work[i][j] * work[k][k] - work[i][k] * work[k][j]
                work[i][j] = num / prev
            work[i][k] = ctx.zero()
        prev = work[k][k]
    det = work[n - 1][n - 1]
    if sign < 0:
        det = -det
    return det / scale


def mat_inverse(m: Sequence[Sequence[Expr]]) -> Matrix:
    """Gauss-Jordan inverse with lowest-index pivoting."""
    n = len(m)
    ctx = _ctx_of(m)
    a = [list(row) for row in m]
    inv = [[ctx.one() if i == j else ctx.zero() for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if a[r][col].num_t:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrix("matrix does not normalize to an invertible one")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            inv[col], inv[pivot] = inv[pivot], inv[col]
        pv = a[col][col].inverse()
        a[col] = [x * pv for x in a[col]]
        inv[col] = [x * pv for x in inv[col]]
        for r in range(n):
            if r == col or not a[r][col].num_t:
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return inv


def rref(
    m: Sequence[Sequence[Expr]],
    prefer_const_pivots: bool = False,
) -> Tuple[Matrix, List[int], Matrix, List[Expr]]:
    """Reduced row echelon form.

    Returns (R, pivot_columns, T, pivot_values) with R == T @ m; pivots are
    chosen lowest column index first, then lowest row; pivot_values records
    the exact pivot expressions (their vanishing locus is where the generic
    computation degenerates).  With ``prefer_const_pivots`` columns holding a
    nonzero constant entry are used first (lowest such column), which keeps
    normal forms free of spurious denominators; remaining columns follow in
    index order.
    """
    rows = len(m)
    if rows == 0:
        return [], [], [], []
    cols = len(m[0])
    ctx = _ctx_of(m)
    a = [list(r) for r in m]
    t = [[ctx.one() if i == j else ctx.zero() for j in range(rows)] for i in range(rows)]
    pivots: List[int] = []
    pivot_values: List[Expr] = []
    r = 0
    remaining = list(range(cols))
    while r < rows and remaining:
        col = sel = None
        if prefer_const_pivots:
            for c in remaining:
                for rr in range(r, rows):
                    if a[rr][c].num_t and a[rr][c].is_const():
                        col, sel = c, rr
                        break
                if col is not None:
                    break
        if col is None:
            for c in remaining:
                for rr in range(r, rows):
                    if a[rr][c].num_t:
                        col, sel = c, rr
                        break
                if col is not None:
                    break
        if col is None:
            break
        remaining.remove(col)
        a[r], a[sel] = a[sel], a[r]
        t[r], t[sel] = t[sel], t[r]
        pv = a[r][col]
        pivot_values.append(pv)
        inv = pv.inverse()
        a[r] = [x * inv for x in a[r]]
        t[r] = [x * inv for x in t[r]]
        for rr in range(rows):
            if rr == r or not a[rr][col].num_t:
                continue
            f = a[rr][col]
            a[rr] = [x - f * y for x, y in zip(a[rr], a[r])]
            t[rr] = [x - f * y for x, y in zip(t[rr], t[r])]
        pivots.append(col)
        r += 1
    return a, pivots, t, pivot_values


def nullspace(m: Sequence[Sequence[Expr]]) -> Tuple[List[List[Expr]], List[Expr]]:
    """Basis of the right kernel over the fraction field, deterministic.

    Returns (vectors, pivot_values).
    """
    if not m:
        return [], []
    cols = len(m[0])
    ctx = _ctx_of(m)
    R, pivots, _t, pivot_values = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    vectors = []
    for fc in free:
        v = [ctx.zero()] * cols
        v[fc] = ctx.one()
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][fc]
        vectors.append(v)
    return vectors, pivot_values
