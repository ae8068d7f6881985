"""Ideal reduction, coframe changes, Pfaffian systems and derived flags."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..symexpr import poly as P
from ..symexpr.core import Expr, _build, _common
from .forms import BasisMismatch, ExteriorError, Form
from .linalg import SingularMatrix, mat_inverse, mat_mul, nullspace, rref

__all__ = ["CoframeChange", "Pfaffian", "reduce_mod", "derived_system", "derived_flag"]


class CoframeChange:
    """Invertible matrix P expressing a new coframe in an old one: new = P @ old."""

    def __init__(self, basis, matrix: Sequence[Sequence[Expr]]) -> None:
        n = basis.n
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ExteriorError("coframe change must be square of basis size")
        self.basis = basis
        self.matrix = [list(row) for row in matrix]
        try:
            self.inverse = mat_inverse(self.matrix)
        except SingularMatrix:
            raise SingularMatrix("coframe change does not normalize to invertible")

    @classmethod
    def from_forms(cls, basis, new_forms: Sequence[Form]) -> "CoframeChange":
        rows = []
        for f in new_forms:
            if f.basis is not basis or f.degree != 1:
                raise BasisMismatch("new coframe forms must be 1-forms on the basis")
            rows.append(f.coeff_vector())
        return cls(basis, rows)

    def new_covector(self, i: int) -> Form:
        return Form(self.basis, 1, {(j,): c for j, c in enumerate(self.matrix[i]) if c.num_t})

    def apply(self, form: Form, direction: str = "forward") -> Form:
        """Re-express a form: 'forward' writes old-basis components in the new
        coframe (labels keep referring to the old basis indices)."""
        if direction == "forward":
            table_matrix = self.inverse
        elif direction == "back":
            table_matrix = self.matrix
        else:
            raise ExteriorError("direction must be 'forward' or 'back'")
        table = [
            Form(self.basis, 1, {(k,): c for k, c in enumerate(row) if c.num_t})
            for row in table_matrix
        ]
        return form.substitute_basis(self.basis, table)


@dataclass
class Reduction:
    reduced: Form
    witnesses: Optional[List[Form]] = None
    pivot_values: Optional[List[Expr]] = None


def _gen_matrix(gens: Sequence[Form]):
    basis = gens[0].basis
    for g in gens:
        if g.basis is not basis:
            raise BasisMismatch("generators on different bases")
        if g.degree != 1:
            raise ExteriorError("ideal generators must be 1-forms")
    return [g.coeff_vector() for g in gens], basis


def reduce_mod(a: Form, gens: Sequence[Form], debug: bool = False) -> Form:
    """Normal form of ``a`` modulo the algebraic ideal of the 1-forms ``gens``.

    Monomials are rewritten in a basis extending the generators (pivots
    lowest-index-first) and every monomial containing a generator is
    dropped.  ``reduce_mod(a, gens) == 0`` iff ``a`` lies in the algebraic
    ideal.  With ``debug=True`` returns a Reduction carrying witness
    1-forms h_i with  a == reduced + sum_i gens_i ^ h_i.
    """
    red = reduce_mod_full(a, gens, debug)
    return red if debug else red.reduced


def reduce_mod_full(a: Form, gens: Sequence[Form], debug: bool = False) -> Reduction:
    if not gens:
        return Reduction(a)
    rows, basis = _gen_matrix(gens)
    ctx = basis.ctx
    R, pivots, T, pivot_values = rref(rows, prefer_const_pivots=True)
    if len(pivots) < len(gens):
        raise ExteriorError("dependent generators in reduce_mod")
    # substitution table: pivot covector -> -sum over free columns; free -> itself
    table = []
    pivot_of = {pc: i for i, pc in enumerate(pivots)}
    for col in range(basis.n):
        if col in pivot_of:
            i = pivot_of[col]
            comps = {}
            for j in range(basis.n):
                if j in pivot_of or not R[i][j].num_t:
                    continue
                comps[(j,)] = -R[i][j]
            table.append(Form(basis, 1, comps))
        else:
            table.append(Form.basis_covector(basis, col))
    reduced = a.substitute_basis(basis, table)
    if not debug:
        return Reduction(reduced, pivot_values=pivot_values)

    # witnesses: difference expanded against the RREF generators, then mapped
    # back through T to the original generators
    ghat = [
        Form(basis, 1, {(j,): c for j, c in enumerate(R[i]) if c.num_t})
        for i in range(len(gens))
    ]
    diff = a - reduced
    remaining = diff
    h_hat: List[Form] = []
    for i, pc in enumerate(pivots):
        # coefficient forms of ghat_i: every monomial of `remaining` containing
        # pc contributes; ghat_i = e_pc + (free-column tail)
        collect: Dict[Tuple[int, ...], Expr] = {}
        for idx, c in remaining.comps_t:
            if pc in idx:
                pos = idx.index(pc)
                rest = idx[:pos] + idx[pos + 1 :]
                sign = -1 if pos % 2 else 1
                val = c if sign > 0 else -c
                prev = collect.get(rest)
                collect[rest] = val if prev is None else prev + val
        h = Form(basis, a.degree - 1, collect)
        h_hat.append(h)
        remaining = remaining - ghat[i].wedge(h)
    if not remaining.is_zero():
        raise ExteriorError("internal witness reconstruction failure")
    # h for original gens: a - red = sum ghat_i ^ hhat_i = sum (T g)_i ^ hhat_i
    hs: List[Form] = []
    for j in range(len(gens)):
        acc = Form.zero(basis, a.degree - 1)
        for i in range(len(gens)):
            if T[i][j].num_t:
                acc = acc + h_hat[i].scale(T[i][j])
        hs.append(acc)
    return Reduction(reduced, witnesses=hs, pivot_values=pivot_values)


class Pfaffian:
    """A Pfaffian system: finitely many pointwise independent 1-forms."""

    def __init__(self, gens: Sequence[Form], check_rank: bool = True) -> None:
        gens = list(gens)
        if gens:
            rows, basis = _gen_matrix(gens)
            self.basis = basis
            if check_rank:
                _r, pivots, _t, _pv = rref(rows)
                if len(pivots) != len(gens):
                    raise ExteriorError("Pfaffian generators are generically dependent")
        else:
            self.basis = None
        self.gens = gens

    @property
    def rank(self) -> int:
        return len(self.gens)

    def __iter__(self):
        return iter(self.gens)


def _normalize_generator(basis, coeffs: List[Expr]) -> Form:
    """Deterministic presentation: clear denominators, primitive, sign-fixed."""
    ctx = basis.ctx
    den = ctx.one()
    one_t = ctx.one().den_t
    for c in coeffs:
        if c.num_t and c.den_t != one_t:
            den = den * Expr(ctx, c.den_t, one_t)
    coeffs = [c * den for c in coeffs]
    # divide by polynomial gcd of the numerators
    g = None
    trivial = False
    for c in coeffs:
        if not c.num_t:
            continue
        g = c.num if g is None else P.p_gcd(*_common(g, c.num))
        if P.p_is_const(g) and abs(P.p_const_value(g)) == 1:
            trivial = True
            break
    if g is not None and not trivial:
        ge = _build(ctx, g, P.p_const(1, 0))
        coeffs = [c / ge for c in coeffs]
    lead = next((c for c in coeffs if c.num_t), None)
    if lead is not None and P.p_leading(lead.num)[1] < 0:
        coeffs = [-c for c in coeffs]
    return Form(basis, 1, {(i,): c for i, c in enumerate(coeffs) if c.num_t})


def derived_system(I: Pfaffian) -> Tuple[Pfaffian, List[Expr]]:
    """First derived system: kernel of theta -> d(theta) mod I.

    Returns (system, pivot_denominator_caveats); ranks are generic (over the
    fraction field), with the pivot expressions recording where the generic
    answer may degenerate.
    """
    if not I.gens:
        return Pfaffian([]), []
    basis = I.basis
    ctx = basis.ctx
    reductions = []
    caveats: List[Expr] = []
    for g in I.gens:
        red = reduce_mod_full(g.d(), I.gens)
        reductions.append(red.reduced)
        if red.pivot_values:
            caveats.extend(red.pivot_values)
    # linear system over the coefficient monomials
    monomials = sorted({idx for r in reductions for idx, _c in r.comps_t})
    if not monomials:
        return Pfaffian(list(I.gens), check_rank=False), caveats
    rows = []
    for idx in monomials:
        rows.append([r.coeff(idx) for r in reductions])
    vectors, pivot_values = nullspace(rows)
    caveats.extend(pivot_values)
    out = []
    for v in vectors:
        coeffs = [ctx.zero()] * basis.n
        for ci, g in zip(v, I.gens):
            if not ci.num_t:
                continue
            for (j,), c in g.comps_t:
                coeffs[j] = coeffs[j] + ci * c
        out.append(_normalize_generator(basis, coeffs))
    return Pfaffian(out, check_rank=False), caveats


def derived_flag(I: Pfaffian, max_steps: int = 12) -> List[int]:
    """Ranks [rank I, rank I', rank I'', ...] until stabilization."""
    ranks = [I.rank]
    cur = I
    for _ in range(max_steps):
        nxt, _cav = derived_system(cur)
        ranks.append(nxt.rank)
        if nxt.rank == cur.rank:
            break
        cur = nxt
        if nxt.rank == 0:
            break
    # drop the repeated stabilizing entry when nothing changed
    if len(ranks) >= 2 and ranks[-1] == ranks[-2]:
        ranks.pop()
    return ranks
