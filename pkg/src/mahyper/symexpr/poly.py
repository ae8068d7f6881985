"""Sparse multivariate polynomials with integer coefficients.

A polynomial is a dict mapping dense exponent tuples to nonzero ints.  All
tuples in one polynomial have the same width (the atom count of the owning
context at the time of the operation); ``pad`` widens older values.  The
monomial order used everywhere (rendering, leading terms, Bareiss pivots) is
graded lexicographic with earlier-registered atoms more significant:
``key(m) = (deg(m), m)`` compared descending.

GCD and factorization are delegated to sympy's sparse polynomial rings over
ZZ; everything else is implemented here.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd
from typing import Dict, Iterable, List, Optional, Tuple

import sympy
from sympy.polys.rings import ring as _sympy_ring

Mono = Tuple[int, ...]
Poly = Dict[Mono, int]


def pad(p: Poly, width: int) -> Poly:
    """Widen exponent tuples to ``width`` (no-op if already wide enough)."""
    if not p:
        return p
    w = len(next(iter(p)))
    if w == width:
        return p
    if w > width:
        raise ValueError("cannot shrink polynomial width")
    tail = (0,) * (width - w)
    return {m + tail: c for m, c in p.items()}


def p_zero() -> Poly:
    return {}


def p_const(c: int, width: int) -> Poly:
    if c == 0:
        return {}
    return {(0,) * width: c}


def p_atom(index: int, width: int, exp: int = 1) -> Poly:
    m = [0] * width
    m[index] = exp
    return {tuple(m): 1}


def p_is_const(p: Poly) -> bool:
    return len(p) == 0 or (len(p) == 1 and not any(next(iter(p))))


def p_const_value(p: Poly) -> int:
    """Value of a constant polynomial (0 for the empty dict)."""
    if not p:
        return 0
    ((m, c),) = p.items()
    if any(m):
        raise ValueError("polynomial is not constant")
    return c


def p_add(a: Poly, b: Poly) -> Poly:
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, 0) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def p_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def p_sub(a: Poly, b: Poly) -> Poly:
    return p_add(a, p_neg(b))


def mono_mul(m1: Mono, m2: Mono) -> Mono:
    return tuple(x + y for x, y in zip(m1, m2))


def p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = mono_mul(m1, m2)
            s = out.get(m, 0) + c1 * c2
            if s:
                out[m] = s
            else:
                del out[m]
    return out


def p_mul_int(a: Poly, c: int) -> Poly:
    if c == 0:
        return {}
    if c == 1:
        return dict(a)
    return {m: k * c for m, k in a.items()}


def p_mul_mono(a: Poly, mono: Mono, c: int = 1) -> Poly:
    if c == 0:
        return {}
    return {mono_mul(m, mono): k * c for m, k in a.items()}


def p_pow(a: Poly, n: int) -> Poly:
    if n < 0:
        raise ValueError("negative power at the polynomial level")
    if not a:
        if n == 0:
            raise ValueError("0**0 at the polynomial level")
        return {}
    width = len(next(iter(a)))
    out = p_const(1, width)
    base = a
    while n:
        if n & 1:
            out = p_mul(out, base)
        base = p_mul(base, base) if n > 1 else base
        n >>= 1
    return out


def mono_key(m: Mono) -> Tuple[int, Mono]:
    return (sum(m), m)


def p_leading(a: Poly) -> Tuple[Mono, int]:
    """Leading (monomial, coefficient) in graded-lex order."""
    m = max(a, key=mono_key)
    return m, a[m]


def p_sorted_terms(a: Poly) -> List[Tuple[Mono, int]]:
    return sorted(a.items(), key=lambda t: mono_key(t[0]), reverse=True)


def p_content(a: Poly) -> int:
    g = 0
    for c in a.values():
        g = int_gcd(g, abs(c))
        if g == 1:
            return 1
    return g


def p_div_int(a: Poly, c: int) -> Poly:
    if c == 1:
        return dict(a)
    out = {}
    for m, k in a.items():
        q, r = divmod(k, c)
        if r:
            raise ValueError("inexact integer division of polynomial")
        out[m] = q
    return out


def p_degree_in(a: Poly, index: int) -> int:
    if not a:
        return 0
    return max(m[index] for m in a)


def p_max_degrees(a: Poly) -> Mono:
    """Componentwise max exponent over all monomials (the zero tuple if empty)."""
    if not a:
        return ()
    it = iter(a)
    acc = list(next(it))
    for m in it:
        for i, e in enumerate(m):
            if e > acc[i]:
                acc[i] = e
    return tuple(acc)


def p_atoms_used(a: Poly) -> Tuple[int, ...]:
    return tuple(i for i, e in enumerate(p_max_degrees(a)) if e > 0)


def p_coeffs_in(a: Poly, index: int) -> Dict[int, Poly]:
    """View ``a`` as a univariate polynomial in atom ``index``.

    Returns {power: coefficient-poly}; coefficient polys keep full width with
    a zero exponent in the ``index`` slot.
    """
    out: Dict[int, Poly] = {}
    for m, c in a.items():
        e = m[index]
        mm = list(m)
        mm[index] = 0
        out.setdefault(e, {})[tuple(mm)] = c
    return out


def p_diff(a: Poly, index: int) -> Poly:
    out: Poly = {}
    for m, c in a.items():
        e = m[index]
        if e:
            mm = list(m)
            mm[index] = e - 1
            key = tuple(mm)
            s = out.get(key, 0) + c * e
            if s:
                out[key] = s
            else:
                del out[key]
    return out


def p_eval_float(a: Poly, vals: List[float]) -> float:
    total = 0.0
    for m, c in a.items():
        t = float(c)
        for i, e in enumerate(m):
            if e:
                t *= vals[i] ** e
        total += t
    return total


def p_eval_fraction(a: Poly, vals: List[Fraction]) -> Fraction:
    total = Fraction(0)
    for m, c in a.items():
        t = Fraction(c)
        for i, e in enumerate(m):
            if e:
                t *= vals[i] ** e
        total += t
    return total


def p_divexact(a: Poly, b: Poly) -> Optional[Poly]:
    """Exact quotient a/b, or None when b does not divide a."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if not a:
        return {}
    if p_is_const(b):
        c = p_const_value(b)
        try:
            return p_div_int(a, c)
        except ValueError:
            return None
    width = len(next(iter(a)))
    rem = dict(a)
    quot: Poly = {}
    lm_b, lc_b = p_leading(b)
    while rem:
        lm_r, lc_r = p_leading(rem)
        diff = tuple(x - y for x, y in zip(lm_r, lm_b))
        if any(e < 0 for e in diff):
            return None
        q, r = divmod(lc_r, lc_b)
        if r:
            return None
        quot[diff] = q
        rem = p_sub(rem, p_mul_mono(b, diff, q))
    return quot


# sympy ring cache, keyed by generator count
_RINGS: Dict[int, tuple] = {}


def _get_ring(n: int):
    got = _RINGS.get(n)
    if got is None:
        names = " ".join(f"g{i}" for i in range(n))
        R = _sympy_ring(names, sympy.ZZ)[0] if n else None
        got = _RINGS[n] = (R,)
    return got[0]


def _to_sympy(a: Poly, n: int):
    R = _get_ring(n)
    return R.from_dict({m: c for m, c in a.items()})


def _from_sympy(f, n: int) -> Poly:
    return {tuple(m): int(c) for m, c in f.to_dict().items()}


def p_gcd(a: Poly, b: Poly) -> Poly:
    """GCD over ZZ (content included), positive leading coefficient."""
    if not a:
        return _positive_leading(dict(b))
    if not b:
        return _positive_leading(dict(a))
    width = len(next(iter(a)))
    if p_is_const(a) or p_is_const(b):
        g = int_gcd(p_content(a), p_content(b))
        return p_const(g, width)
    # cheap path: identical up to sign
    if a == b:
        return _positive_leading(dict(a))
    n = width
    fa = _to_sympy(a, n)
    fb = _to_sympy(b, n)
    return _from_sympy(fa.gcd(fb), n)


def _positive_leading(a: Poly) -> Poly:
    if a and p_leading(a)[1] < 0:
        return p_neg(a)
    return a


def p_factor_list(a: Poly) -> Tuple[int, List[Tuple[Poly, int]]]:
    """Irreducible factorization over ZZ via sympy: (integer content incl. sign, [(factor, exp)])."""
    if not a:
        return 0, []
    width = len(next(iter(a)))
    if p_is_const(a):
        return p_const_value(a), []
    f = _to_sympy(a, width)
    coeff, factors = f.factor_list()
    out = []
    for g, e in factors:
        out.append((_from_sympy(g, width), int(e)))
    return int(coeff), out


def p_sqrt(a: Poly) -> Optional[Poly]:
    """Exact square root of a polynomial, or None. Positive leading coefficient."""
    if not a:
        return {}
    c, factors = p_factor_list(a)
    if c < 0:
        return None
    r = sympy.Integer(c).sqrt()
    if not r.is_Integer:
        return None
    width = len(next(iter(a)))
    out = p_const(int(r), width)
    for g, e in factors:
        if e % 2:
            return None
        out = p_mul(out, p_pow(g, e // 2))
    return _positive_leading(out)
