"""Rule-table antiderivatives in a single coordinate.

Supported class: rational functions of the integration variable whose
denominator splits into linear and quadratic factors (over the field
generated by the remaining atoms).  Outputs are rational functions plus
``log``/``arctan`` scalars, which enter the context as defined atoms with
declared partial derivatives.  Everything else raises
:class:`NotIntegrable`.  Every result is checked by differentiation
before it is returned.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import poly as P
from .core import (
    COORDINATE,
    CapabilityError,
    Context,
    Expr,
    SymexprError,
    _common,
)

__all__ = ["NotIntegrable", "antiderivative"]


class NotIntegrable(CapabilityError):
    """The integrand is outside the antiderivative rule table."""


# ---------------------------------------------------------------------------
# univariate polynomials over the Expr field (coefficients free of v)

UPoly = List[Expr]


def _utrim(u: UPoly) -> UPoly:
    while u and not u[-1].num_t:
        u.pop()
    return u


def _udeg(u: UPoly) -> int:
    return len(u) - 1


def _uadd(a: UPoly, b: UPoly) -> UPoly:
    n = max(len(a), len(b))
    ctx = (a[0] if a else b[0]).ctx
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else ctx.zero()
        y = b[i] if i < len(b) else ctx.zero()
        out.append(x + y)
    return _utrim(out)


def _uscale(a: UPoly, c: Expr) -> UPoly:
    return _utrim([x * c for x in a])


def _umul(a: UPoly, b: UPoly) -> UPoly:
    if not a or not b:
        return []
    ctx = a[0].ctx
    out = [ctx.zero()] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x.num_t:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return _utrim(out)


def _udivmod(a: UPoly, b: UPoly) -> Tuple[UPoly, UPoly]:
    if not b:
        raise ZeroDivisionError
    ctx = b[0].ctx
    rem = list(a)
    quot = [ctx.zero()] * max(0, len(a) - len(b) + 1)
    lead = b[-1]
    while _utrim(rem) and len(rem) >= len(b):
        k = len(rem) - len(b)
        c = rem[-1] / lead
        quot[k] = quot[k] + c
        for i, y in enumerate(b):
            rem[k + i] = rem[k + i] - c * y
        rem.pop()
    return _utrim(quot), _utrim(rem)


def _ugcd(a: UPoly, b: UPoly) -> UPoly:
    a, b = list(a), list(b)
    while _utrim(b):
        _, r = _udivmod(a, b)
        a, b = b, r
    a = _utrim(a)
    if a:
        a = _uscale(a, a[-1].inverse())  # monic
    return a


def _uegcd(a: UPoly, b: UPoly) -> Tuple[UPoly, UPoly, UPoly]:
    """(g, s, t) with s*a + t*b == g, g monic."""
    ctx = (a or b)[0].ctx
    one, zero = [ctx.one()], []
    r0, r1 = list(a), list(b)
    s0, s1 = list(one), list(zero)
    t0, t1 = list(zero), list(one)
    while _utrim(r1):
        q, r = _udivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _uadd(s0, _uscale(_umul(q, s1), ctx.const(-1)))
        t0, t1 = t1, _uadd(t0, _uscale(_umul(q, t1), ctx.const(-1)))
    r0 = _utrim(r0)
    if not r0:
        raise ZeroDivisionError("egcd of zero polynomials")
    c = r0[-1].inverse()
    return _uscale(r0, c), _uscale(s0, c), _uscale(t0, c)


def _to_upoly(ctx: Context, p, v_index: int) -> UPoly:
    """Polynomial (dict) -> univariate in atom v_index with Expr coefficients."""
    if not p:
        return []
    by_pow = P.p_coeffs_in(P.pad(p, max(len(next(iter(p))), v_index + 1)), v_index)
    n = max(by_pow) + 1
    out = [ctx.zero()] * n
    one = P.p_const(1, 0)
    for e, coeff in by_pow.items():
        out[e] = Expr(ctx, tuple(P.p_sorted_terms(coeff)), tuple(P.p_sorted_terms(one)))
    return _utrim(out)


def _from_upoly(ctx: Context, u: UPoly, v: Expr) -> Expr:
    total = ctx.zero()
    vp = ctx.one()
    for i, c in enumerate(u):
        if i:
            vp = vp * v
        if c.num_t:
            total = total + c * vp
    return total


# ---------------------------------------------------------------------------
# log / arctan scalars


def _defined_cache(ctx: Context) -> Dict:
    cache = getattr(ctx, "_antideriv_atoms", None)
    if cache is None:
        cache = {}
        setattr(ctx, "_antideriv_atoms", cache)
    return cache


def _log_atom(ctx: Context, g: Expr) -> Expr:
    cache = _defined_cache(ctx)
    key = ("log", g.num_t, g.den_t)
    name = cache.get(key)
    if name is None:
        partials = {}
        for ci in ctx.coords:
            dg = g.diff_index(ci)
            if dg.num_t:
                partials[ctx.atoms[ci].name] = dg / g
        name = ctx.fresh_name("log_")
        ctx.defined_scalar(name, partials, recipe=("log", g))
        cache[key] = name
    return ctx.sym(name)


def _atan_atom(ctx: Context, h: Expr) -> Expr:
    cache = _defined_cache(ctx)
    key = ("atan", h.num_t, h.den_t)
    name = cache.get(key)
    if name is None:
        partials = {}
        denom = ctx.one() + h * h
        for ci in ctx.coords:
            dh = h.diff_index(ci)
            if dh.num_t:
                partials[ctx.atoms[ci].name] = dh / denom
        name = ctx.fresh_name("atan_")
        ctx.defined_scalar(name, partials, recipe=("atan", h))
        cache[key] = name
    return ctx.sym(name)


def _expr_sqrt(e: Expr) -> Optional[Expr]:
    """Exact square root of an Expr within the rational class, or None."""
    if not e.num_t:
        return e.ctx.zero()
    prod = P.p_mul(*_common(e.num, e.den))
    r = P.p_sqrt(prod)
    if r is None:
        return None
    one = P.p_const(1, 0)
    ctx = e.ctx
    num = Expr(ctx, tuple(P.p_sorted_terms(r)), tuple(P.p_sorted_terms(one)))
    den = Expr(ctx, tuple(P.p_sorted_terms(e.den)), tuple(P.p_sorted_terms(one)))
    return num / den


# ---------------------------------------------------------------------------


def antiderivative(e: Expr, v: str) -> Expr:
    """F with diff(F, v) == e, or raise NotIntegrable."""
    ctx = e.ctx
    av = ctx.atom(v)
    if av.kind != COORDINATE:
        raise SymexprError(f"{v!r} is not a coordinate")
    vi = av.index

    # every atom other than v itself must be constant in v
    for idx in e.atoms_used():
        if idx == vi:
            continue
        if ctx.atom_chain(idx, vi).num_t:
            raise NotIntegrable(
                f"integrand depends on {v!r} through atom {ctx.atoms[idx].name!r}"
            )

    result = _integrate_rational(e, vi)

    check = result.diff_index(vi) - e
    if check.num_t:
        raise NotIntegrable("verification by differentiation failed")
    return result


def _integrate_rational(e: Expr, vi: int) -> Expr:
    ctx = e.ctx
    vexpr = ctx.sym(ctx.atoms[vi].name)
    num_u = _to_upoly(ctx, e.num, vi)
    den_u = _to_upoly(ctx, e.den, vi)
    if not num_u:
        return ctx.zero()

    if _udeg(den_u) == 0:
        scale = den_u[0].inverse()
        total = ctx.zero()
        for k, c in enumerate(num_u):
            if c.num_t:
                total = total + c * scale * vexpr ** (k + 1) / (k + 1)
        return total

    quot, rem = _udivmod(num_u, den_u)
    total = ctx.zero()
    for k, c in enumerate(quot):
        if c.num_t:
            total = total + c * vexpr ** (k + 1) / (k + 1)
    if not rem:
        return total

    # factor the original denominator over ZZ; split off the v-free part
    content, factors = P.p_factor_list(e.den)
    vfree = ctx.const(Fraction(content))
    vparts: List[Tuple[UPoly, int]] = []
    for g, m in factors:
        gu = _to_upoly(ctx, g, vi)
        if _udeg(gu) == 0:
            vfree = vfree * gu[0] ** m
        elif _udeg(gu) <= 2:
            vparts.append((gu, m))
        else:
            raise NotIntegrable("denominator factor of degree > 2 in the variable")

    rem = _uscale(rem, vfree.inverse())
    pieces = _partial_fractions(rem, vparts)
    for (g, _m), nums in zip(vparts, pieces):
        for k, nk in enumerate(nums, start=1):
            if _utrim(list(nk)):
                total = total + _integrate_piece(nk, g, k, vexpr)
    return total


def _partial_fractions(
    num: UPoly, factors: List[Tuple[UPoly, int]]
) -> List[List[UPoly]]:
    """num / prod(g_i^m_i) -> per-factor numerators [n_1..n_m] for powers 1..m."""
    ctx = num[0].ctx
    out: List[List[UPoly]] = []
    rest_num = list(num)
    rest_factors = list(factors)
    while rest_factors:
        g, m = rest_factors.pop(0)
        gm = [ctx.one()]
        for _ in range(m):
            gm = _umul(gm, g)
        other = [ctx.one()]
        for h, k in rest_factors:
            for _ in range(k):
                other = _umul(other, h)
        if _udeg(other) == 0:
            b_num = _uscale(rest_num, other[0].inverse())
            out.append(_split_powers(b_num, g, m))
            break
        _one, s, t = _uegcd(gm, other)
        # num/(gm*other) = (num*t mod gm)/gm + carry/other
        _, b = _udivmod(_umul(rest_num, t), gm)
        carry_num = _uadd(rest_num, _uscale(_umul(b, other), ctx.const(-1)))
        carry, r = _udivmod(carry_num, gm)
        if _utrim(r):
            raise NotIntegrable("partial fraction split failed")
        out.append(_split_powers(b, g, m))
        rest_num = carry
    return out


def _split_powers(b: UPoly, g: UPoly, m: int) -> List[UPoly]:
    """b/g^m -> numerators n_k with b/g^m = sum n_k/g^k, deg n_k < deg g."""
    parts: List[UPoly] = []
    cur = list(b)
    for _ in range(m):
        cur, r = _udivmod(cur, g)
        parts.append(r)
    if _utrim(cur):
        raise NotIntegrable("numerator degree too large in power split")
    # parts[0] pairs with g^m, parts[m-1] with g^1
    return list(reversed(parts))


def _integrate_piece(n: UPoly, g: UPoly, k: int, v: Expr) -> Expr:
    """Integral of n(v)/g(v)^k dv for deg g in {1, 2}, deg n < deg g."""
    ctx = v.ctx
    gexpr = _from_upoly(ctx, g, v)
    if _udeg(g) == 1:
        beta, alpha = (g + [ctx.zero(), ctx.zero()])[0:2]
        c = n[0] if n else ctx.zero()
        if k == 1:
            return (c / alpha) * _log_atom(ctx, gexpr)
        return (c / alpha) * gexpr ** (1 - k) / (1 - k)

    gamma, beta, alpha = (g + [ctx.zero()] * 3)[0:3]
    c0 = n[0] if len(n) > 0 else ctx.zero()
    c1 = n[1] if len(n) > 1 else ctx.zero()
    total = ctx.zero()
    # derivative part: n = (c1/(2 alpha)) g' + r
    dcoef = c1 / (2 * alpha)
    if dcoef.num_t:
        if k == 1:
            total = total + dcoef * _log_atom(ctx, gexpr)
        else:
            total = total + dcoef * gexpr ** (1 - k) / (1 - k)
    r = c0 - dcoef * beta
    if r.num_t:
        total = total + r * _int_inverse_quadratic(g, k, v)
    return total


def _int_inverse_quadratic(g: UPoly, k: int, v: Expr) -> Expr:
    """Integral of dv/g^k for quadratic g, by Hermite reduction down to arctan."""
    ctx = v.ctx
    gamma, beta, alpha = (g + [ctx.zero()] * 3)[0:3]
    if k == 1:
        # 1/g = 1/(alpha (v+h)^2 + s') with arctan answer requiring sqrt
        delta = 4 * alpha * gamma - beta * beta
        if not delta.num_t:
            # perfect square denominator: g = alpha (v + beta/(2 alpha))^2
            shifted = v + beta / (2 * alpha)
            return (-1) * (alpha * shifted).inverse()
        root = _expr_sqrt(delta)
        if root is None:
            raise NotIntegrable("arctan form needs a square discriminant")
        arg = (2 * alpha * v + beta) / root
        return (2 / root) * _atan_atom(ctx, arg)
    delta = 4 * alpha * gamma - beta * beta
    if not delta.num_t:
        raise NotIntegrable("repeated perfect-square quadratic factor")
    gexpr = _from_upoly(ctx, g, v)
    lead = (2 * alpha * v + beta) / ((k - 1) * delta * gexpr ** (k - 1))
    rest = (2 * (2 * k - 3) * alpha) / ((k - 1) * delta)
    return lead + rest * _int_inverse_quadratic(g, k - 1, v)
