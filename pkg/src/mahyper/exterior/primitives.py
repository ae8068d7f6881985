"""Primitives of closed forms on a coordinate chart.

The construction integrates one coordinate at a time: a closed form is
written as dv ^ beta + gamma (no dv in beta, gamma), the antiderivative of
beta in v is subtracted, and closedness guarantees the remainder no longer
involves v.  This keeps every worked example inside the rational class;
the radial homotopy formula would instead produce arctangents of square
roots on the same inputs.  Every primitive is verified by d before it is
returned.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..symexpr.antideriv import NotIntegrable, antiderivative
from ..symexpr.core import DivisionByZero, Expr
from .forms import ChartBasis, ExteriorError, Form

__all__ = ["NotClosed", "potential", "poincare_primitive", "admissible_base"]


class NotClosed(ExteriorError):
    pass


def _check_chart(form: Form) -> ChartBasis:
    if form.basis.kind != "chart":
        raise ExteriorError("primitives are defined on coordinate charts only")
    return form.basis


def potential(a: Form, base: Optional[Dict[str, Fraction]] = None) -> Expr:
    """F with dF == a for a closed chart 1-form; raises NotClosed/NotIntegrable.

    When the result is free of transcendental atoms it is normalized to
    vanish at the (possibly shifted) base point; otherwise the additive
    constant is left at the value produced by the antiderivative table.
    """
    basis = _check_chart(a)
    if a.degree != 1:
        raise ExteriorError("potential expects a 1-form")
    if not a.d().is_zero():
        raise NotClosed("the form is not closed")
    ctx = basis.ctx
    total = ctx.zero()
    cur = a
    for pos in range(basis.n):
        f = cur.coeff((pos,))
        if not f.num_t:
            continue
        name = ctx.atoms[basis.coord_indices[pos]].name
        F = antiderivative(f, name)
        total = total + F
        cur = cur - basis.d_scalar(F)
    if not cur.is_zero():
        raise NotIntegrable("staircase primitive left a residual 1-form")
    total = _normalize_at_base(total, base)
    residual = basis.d_scalar(total) - a
    if not residual.is_zero():
        raise NotIntegrable("verification d(potential) failed")
    return total


def poincare_primitive(a: Form, base: Optional[Dict[str, Fraction]] = None) -> Form:
    """Form b with db == a for a closed chart k-form, k >= 2."""
    basis = _check_chart(a)
    if a.degree < 2:
        raise ExteriorError("poincare_primitive expects degree >= 2")
    if a.degree < basis.n and not a.d().is_zero():
        raise NotClosed("the form is not closed")
    ctx = basis.ctx
    out = Form.zero(basis, a.degree - 1)
    cur = a
    for pos in range(basis.n):
        name = ctx.atoms[basis.coord_indices[pos]].name
        beta_comps = {}
        for idx, c in cur.comps_t:
            if idx and idx[0] == pos:
                beta_comps[idx[1:]] = c
        if not beta_comps:
            continue
        H_comps = {}
        for idx, c in beta_comps.items():
            F = antiderivative(c, name)
            if F.num_t:
                H_comps[idx] = F
        H = Form(basis, a.degree - 1, H_comps)
        out = out + H
        cur = cur - H.d()
    if not cur.is_zero():
        raise NotIntegrable("staircase primitive left a residual form")
    residual = out.d() - a
    if not residual.is_zero():
        raise NotIntegrable("verification d(primitive) failed")
    return out


def _normalize_at_base(F: Expr, base: Optional[Dict[str, Fraction]]) -> Expr:
    ctx = F.ctx
    from ..symexpr.core import COORDINATE, PARAMETER

    for idx in F.atoms_used():
        if ctx.atoms[idx].kind not in (COORDINATE, PARAMETER):
            return F  # transcendental part: constant left as constructed
        if ctx.atoms[idx].kind == PARAMETER:
            return F
    point = admissible_base(ctx, [F], base)
    if point is None:
        return F
    return F - ctx.const(F.eval_fraction(point))


def admissible_base(
    ctx,
    exprs: List[Expr],
    base: Optional[Dict[str, Fraction]] = None,
    max_shifts: int = 8,
) -> Optional[Dict[str, Fraction]]:
    """Base point for definite normalizations: the supplied point or the
    origin, shifted by +1 in coordinates whose value sits on a denominator
    zero of one of ``exprs``."""
    point = {ctx.atoms[ci].name: Fraction(0) for ci in ctx.coords}
    if base:
        point.update({k: Fraction(v) for k, v in base.items()})
    one_t = ctx.one().den_t
    for _ in range(max_shifts):
        bad: List[str] = []
        for e in exprs:
            den = Expr(ctx, e.den_t, one_t)
            try:
                value = den.eval_fraction(point)
            except Exception:
                return None
            if value == 0:
                for idx in den.atoms_used():
                    name = ctx.atoms[idx].name
                    if name in point and name not in bad:
                        bad.append(name)
        if not bad:
            return point
        for name in bad:
            point[name] = point[name] + 1
    return None
