"""Exact scalar expressions over a registry of named atoms.

An :class:`Expr` is a canonical fraction of two integer-coefficient
polynomials over the atoms of a :class:`Context`.  Canonical means:

* numerator and denominator share no polynomial factor and no integer
  content (``gcd(num, den) == 1`` over ZZ),
* the denominator has a positive leading coefficient (graded-lex order,
  earlier-registered atoms more significant),
* every atom carrying a square relation ``a**2 == rel`` appears to degree
  at most one in the numerator and not at all in the denominator
  (denominators are rationalized by conjugation),
* exponent tuples are trimmed to the smallest width that covers the atoms
  actually used, so canonical forms are stable under later atom
  registrations.

Structural equality of canonical forms therefore coincides with
mathematical equality for rational functions over algebraically
independent atoms extended by triangular square relations.  Sign branches
of square roots are deliberately not resolved: ``m - p`` with
``m**2 == p**2`` normalizes to a nonzero form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import poly as P
from .poly import Mono, Poly

__all__ = [
    "Atom",
    "Context",
    "Expr",
    "SymexprError",
    "UnregisteredAtom",
    "DivisionByZero",
    "DomainError",
    "NearSingular",
    "CapabilityError",
    "COORDINATE",
    "PARAMETER",
    "OPAQUE",
    "ROOT",
    "DEFINED",
]

COORDINATE = "coordinate"
PARAMETER = "parameter"
OPAQUE = "opaque"
ROOT = "root"
DEFINED = "defined"


class SymexprError(Exception):
    pass


class UnregisteredAtom(SymexprError):
    pass


class DivisionByZero(SymexprError):
    pass


class DomainError(SymexprError):
    pass


class NearSingular(SymexprError):
    pass


class CapabilityError(SymexprError):
    """An operation outside the supported class (not a failure)."""


# When True, a false is_zero verdict is cross-checked by numeric sampling.
NUMERIC_GUARD = True


@dataclass
class Atom:
    name: str
    index: int
    kind: str
    arg: Optional[int] = None                 # opaque: argument atom index
    deriv: Optional["Expr"] = None            # opaque: declared derivative
    relation: Optional["Expr"] = None         # square relation atom**2 == relation
    partials: Optional[Dict[int, "Expr"]] = None   # defined: coord index -> Expr
    recipe: Optional[Tuple] = None            # defined: numeric recipe ('log'|'atan'|'exp', Expr)


class Context:
    """Registry of atoms plus domain assumptions.

    Coordinates are ordered and fixed once registered; atoms may be appended
    (e.g. antiderivatives introduce log/arctan scalars) but never removed or
    reordered, so existing canonical forms stay valid.
    """

    def __init__(self) -> None:
        self.atoms: List[Atom] = []
        self.by_name: Dict[str, Atom] = {}
        self.coords: List[int] = []
        self.params: List[int] = []
        self.assumptions: List["Expr"] = []
        self._chain_cache: Dict[Tuple[int, int], "Expr"] = {}
        self._fresh_counter = 0

    # -- registration -----------------------------------------------------

    def _register(self, atom: Atom) -> Atom:
        if atom.name in self.by_name:
            raise SymexprError(f"atom name already registered: {atom.name!r}")
        if not atom.name or not (atom.name[0].isalpha() or atom.name[0] == "_"):
            raise SymexprError(f"bad atom name: {atom.name!r}")
        self.atoms.append(atom)
        self.by_name[atom.name] = atom
        self._chain_cache.clear()
        return atom

    def coordinate(self, name: str) -> "Expr":
        a = self._register(Atom(name, len(self.atoms), COORDINATE))
        self.coords.append(a.index)
        return self.sym(name)

    def parameter(self, name: str) -> "Expr":
        a = self._register(Atom(name, len(self.atoms), PARAMETER))
        self.params.append(a.index)
        return self.sym(name)

    def function(self, name: str, arg: str) -> "Expr":
        arg_atom = self._lookup(arg)
        self._register(Atom(name, len(self.atoms), OPAQUE, arg=arg_atom.index))
        return self.sym(name)

    def set_derivative(self, name: str, deriv: "Expr") -> None:
        a = self._lookup(name)
        if a.kind != OPAQUE:
            raise SymexprError(f"{name!r} is not an opaque function atom")
        a.deriv = self._check_expr(deriv)

    def root(self, name: str, relation: "Expr") -> "Expr":
        relation = self._check_expr(relation)
        a = self._register(Atom(name, len(self.atoms), ROOT))
        self._attach_relation(a, relation)
        return self.sym(name)

    def set_relation(self, name: str, relation: "Expr") -> None:
        """Attach a square rewrite ``name**2 -> relation`` to an existing atom."""
        self._attach_relation(self._lookup(name), self._check_expr(relation))

    def _attach_relation(self, a: Atom, relation: "Expr") -> None:
        used = relation.atoms_used()
        for idx in used:
            other = self.atoms[idx]
            if other.relation is not None and idx >= a.index:
                raise SymexprError(
                    f"relation for {a.name!r} must only involve earlier atoms"
                )
            if idx >= a.index:
                raise SymexprError(
                    f"relation for {a.name!r} references {other.name!r},"
                    " registered at or after it (triangularity violated)"
                )
        if not relation.num_t:
            raise SymexprError("square relation must be nonzero")
        a.relation = relation

    def defined_scalar(
        self,
        name: str,
        partials: Dict[str, "Expr"],
        recipe: Optional[Tuple] = None,
    ) -> "Expr":
        table = {self._lookup(k).index: self._check_expr(v) for k, v in partials.items()}
        self._register(Atom(name, len(self.atoms), DEFINED, partials=table, recipe=recipe))
        return self.sym(name)

    def assume_positive(self, e: "Expr") -> None:
        self.assumptions.append(self._check_expr(e))

    def fresh_name(self, stem: str) -> str:
        while True:
            self._fresh_counter += 1
            name = f"{stem}{self._fresh_counter}"
            if name not in self.by_name:
                return name

    # -- lookups ----------------------------------------------------------

    def _lookup(self, name: str) -> Atom:
        a = self.by_name.get(name)
        if a is None:
            raise UnregisteredAtom(f"unregistered atom: {name!r}")
        return a

    def atom(self, name: str) -> Atom:
        return self._lookup(name)

    @property
    def width(self) -> int:
        return len(self.atoms)

    def constrained_indices(self) -> List[int]:
        return [a.index for a in self.atoms if a.relation is not None]

    def _check_expr(self, e: "Expr") -> "Expr":
        if not isinstance(e, Expr):
            e = self.const(e)
        if e.ctx is not self:
            raise SymexprError("expression belongs to a different context")
        return e

    # -- constructors -----------------------------------------------------

    def const(self, value: Union[int, Fraction]) -> "Expr":
        f = Fraction(value)
        return _build(self, P.p_const(f.numerator, 0), P.p_const(f.denominator, 0))

    def zero(self) -> "Expr":
        return self.const(0)

    def one(self) -> "Expr":
        return self.const(1)

    def sym(self, name: str) -> "Expr":
        a = self._lookup(name)
        w = a.index + 1
        return _build(self, P.p_atom(a.index, w), P.p_const(1, 0))

    # -- derivative chains -------------------------------------------------

    def atom_chain(self, atom_index: int, coord_index: int) -> "Expr":
        """d(atom)/d(coordinate), following declared chains and relations."""
        key = (atom_index, coord_index)
        got = self._chain_cache.get(key)
        if got is not None:
            return got
        a = self.atoms[atom_index]
        if a.kind == COORDINATE:
            out = self.one() if atom_index == coord_index else self.zero()
        elif a.kind == PARAMETER:
            out = self.zero()
        elif a.kind == OPAQUE:
            inner = self.atom_chain(a.arg, coord_index)
            if not inner.num_t:
                out = self.zero()
            else:
                if a.deriv is None:
                    raise CapabilityError(
                        f"no declared derivative for opaque atom {a.name!r}"
                    )
                out = a.deriv * inner
        elif a.kind == DEFINED:
            out = a.partials.get(coord_index, self.zero())
        elif a.kind == ROOT:
            # implicit differentiation of atom**2 == rel == A/B:
            # d(atom) = d(rel)/(2*atom) = rel' * atom * B / (2*A)
            rel = a.relation
            drel = rel.diff_index(coord_index)
            if not drel.num_t:
                out = self.zero()
            else:
                num = Expr(self, _terms(rel.num), _terms(P.p_const(1, 0)))
                den = Expr(self, _terms(rel.den), _terms(P.p_const(1, 0)))
                out = drel * self.sym(a.name) * den / (2 * num)
        else:  # pragma: no cover
            raise SymexprError(f"unknown atom kind {a.kind}")
        self._chain_cache[key] = out
        return out


def _terms(p: Poly) -> Tuple[Tuple[Mono, int], ...]:
    return tuple(P.p_sorted_terms(p))


def _trim(p: Poly) -> Poly:
    """Drop trailing all-zero exponent columns so widths are minimal."""
    if not p:
        return p
    w = len(next(iter(p)))
    used = 0
    for m in p:
        for i in range(w - 1, used - 1, -1):
            if m[i]:
                used = i + 1
                break
    if used == w:
        return p
    return {m[:used]: c for m, c in p.items()}


def _common(*polys: Poly) -> List[Poly]:
    w = 0
    for p in polys:
        if p:
            w = max(w, len(next(iter(p))))
    return [P.pad(p, w) if p else p for p in polys]


def _reduce_constrained(ctx: Context, p: Poly) -> Tuple[Poly, Poly]:
    """Rewrite squares of constrained atoms; returns (reduced, extra_den)."""
    den_acc = P.p_const(1, 0)
    while True:
        if not p:
            return p, den_acc
        degs = P.p_max_degrees(p)
        target = -1
        for idx in reversed(ctx.constrained_indices()):
            if idx < len(degs) and degs[idx] >= 2:
                target = idx
                break
        if target < 0:
            return p, den_acc
        rel = ctx.atoms[target].relation
        by_pow = P.p_coeffs_in(p, target)
        maxk = max(e // 2 for e in by_pow)
        acc: Poly = {}
        for e, coeff in by_pow.items():
            k = e // 2
            part = coeff
            if k:
                part = P.p_mul(*_common(part, P.p_pow(rel.num, k)))
            if maxk - k:
                part = P.p_mul(*_common(part, P.p_pow(rel.den, maxk - k)))
            if e & 1:
                part = P.p_mul(*_common(part, P.p_atom(target, target + 1)))
            acc = P.p_add(*_common(acc, part))
        p = acc
        if maxk:
            den_acc = P.p_mul(*_common(den_acc, P.p_pow(rel.den, maxk)))


def _build(ctx: Context, num: Poly, den: Poly) -> "Expr":
    """Full normalization pipeline; the only constructor that must always work."""
    num, den = _common(num, den)
    if not den:
        raise DivisionByZero("division by an expression that normalizes to zero")
    if not num:
        return Expr(ctx, (), _terms(P.p_const(1, 0)))

    constrained = ctx.constrained_indices()
    if constrained:
        num, dext = _reduce_constrained(ctx, num)
        if not P.p_is_const(dext) or P.p_const_value(dext) != 1:
            den = P.p_mul(*_common(den, dext))
        den, dext2 = _reduce_constrained(ctx, den)
        if not P.p_is_const(dext2) or P.p_const_value(dext2) != 1:
            num = P.p_mul(*_common(num, dext2))
        if not num:
            return Expr(ctx, (), _terms(P.p_const(1, 0)))
        if not den:
            raise DivisionByZero("division by an expression that normalizes to zero")
        # rationalize: eliminate constrained atoms from the denominator
        while True:
            num, den = _common(num, den)
            degs = P.p_max_degrees(den)
            target = -1
            for idx in reversed(constrained):
                if idx < len(degs) and degs[idx] >= 1:
                    target = idx
                    break
            if target < 0:
                break
            by_pow = P.p_coeffs_in(den, target)
            b0 = by_pow.get(0, {})
            b1 = by_pow.get(1, {})
            conj = P.p_sub(b0, P.p_mul(*_common(b1, P.p_atom(target, target + 1))))
            if not conj:
                # den is a pure multiple of the root: divide through instead
                rel = ctx.atoms[target].relation
                # 1/r = r*B/A for r**2 = A/B
                num = P.p_mul(*_common(num, P.p_atom(target, target + 1), rel.den))
                den = P.p_mul(*_common(b1, rel.num))
            else:
                num = P.p_mul(*_common(num, conj))
                den = P.p_mul(*_common(den, conj))
            num, dn = _reduce_constrained(ctx, num)
            den, dd = _reduce_constrained(ctx, den)
            num, den, dn, dd = _common(num, den, dn, dd)
            if not P.p_is_const(dn) or P.p_const_value(dn) != 1:
                den = P.p_mul(den, dn)
            if not P.p_is_const(dd) or P.p_const_value(dd) != 1:
                num = P.p_mul(num, dd)
            if not den:
                raise DivisionByZero("division by an expression that normalizes to zero")
            if not num:
                return Expr(ctx, (), _terms(P.p_const(1, 0)))

    num, den = _common(num, den)
    g = P.p_gcd(num, den)
    if not P.p_is_const(g) or abs(P.p_const_value(g)) != 1:
        num = P.p_divexact(num, g)
        den = P.p_divexact(den, g)
    if P.p_leading(den)[1] < 0:
        num = P.p_neg(num)
        den = P.p_neg(den)
    return Expr(ctx, _terms(_trim(num)), _terms(_trim(den)))


def _fast(ctx: Context, num: Poly, den: Poly) -> "Expr":
    """Wrap a fraction already known to be reduced and rationalized."""
    if not num:
        return Expr(ctx, (), _terms(P.p_const(1, 0)))
    if P.p_leading(den)[1] < 0:
        num = P.p_neg(num)
        den = P.p_neg(den)
    return Expr(ctx, _terms(_trim(num)), _terms(_trim(den)))


class Expr:
    """Canonical exact rational expression. Immutable; shareable across threads."""

    __slots__ = ("ctx", "num_t", "den_t", "_hash", "_zero_checked")

    def __init__(self, ctx: Context, num_t: tuple, den_t: tuple) -> None:
        self.ctx = ctx
        self.num_t = num_t
        self.den_t = den_t
        self._hash = None
        self._zero_checked = False

    # polynomial views
    @property
    def num(self) -> Poly:
        return dict(self.num_t)

    @property
    def den(self) -> Poly:
        return dict(self.den_t)

    # -- equality / hashing -------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.ctx.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return (
            self.ctx is other.ctx
            and self.num_t == other.num_t
            and self.den_t == other.den_t
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((id(self.ctx), self.num_t, self.den_t))
        return self._hash

    # -- basic predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        verdict = not self.num_t
        if not verdict and NUMERIC_GUARD and not self._zero_checked:
            self._zero_checked = True
            _numeric_nonzero_guard(self)
        return verdict

    def is_const(self) -> bool:
        return P.p_is_const(self.num) and P.p_is_const(self.den)

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise SymexprError("expression is not constant")
        if not self.num_t:
            return Fraction(0)
        return Fraction(P.p_const_value(self.num), P.p_const_value(self.den))

    def atoms_used(self) -> Tuple[int, ...]:
        used = set(P.p_atoms_used(self.num)) | set(P.p_atoms_used(self.den))
        return tuple(sorted(used))

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> Optional["Expr"]:
        if isinstance(other, Expr):
            if other.ctx is not self.ctx:
                raise SymexprError("mixing expressions from different contexts")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.const(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.num_t:
            return o
        if not o.num_t:
            return self
        n1, d1 = self.num, self.den
        n2, d2 = o.num, o.den
        n1, d1, n2, d2 = _common(n1, d1, n2, d2)
        d = P.p_gcd(d1, d2)
        if P.p_is_const(d) and P.p_const_value(d) == 1:
            num = P.p_add(P.p_mul(n1, d2), P.p_mul(n2, d1))
            if not num:
                return self.ctx.zero()
            return _fast(self.ctx, num, P.p_mul(d1, d2))
        q2 = P.p_divexact(d2, d)
        t = P.p_add(P.p_mul(n1, q2), P.p_mul(n2, P.p_divexact(d1, d)))
        if not t:
            return self.ctx.zero()
        g2 = P.p_gcd(t, d)
        if not P.p_is_const(g2) or abs(P.p_const_value(g2)) != 1:
            t = P.p_divexact(t, g2)
            den = P.p_mul(P.p_divexact(d1, g2), q2)
        else:
            den = P.p_mul(d1, q2)
        return _fast(self.ctx, t, den)

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.ctx, tuple((m, -c) for m, c in self.num_t), self.den_t)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.num_t or not o.num_t:
            return self.ctx.zero()
        n1, d1, n2, d2 = _common(self.num, self.den, o.num, o.den)
        g1 = P.p_gcd(n1, d2)
        if not P.p_is_const(g1) or abs(P.p_const_value(g1)) != 1:
            n1 = P.p_divexact(n1, g1)
            d2 = P.p_divexact(d2, g1)
        g2 = P.p_gcd(n2, d1)
        if not P.p_is_const(g2) or abs(P.p_const_value(g2)) != 1:
            n2 = P.p_divexact(n2, g2)
            d1 = P.p_divexact(d1, g2)
        num = P.p_mul(n1, n2)
        den = P.p_mul(d1, d2)
        constrained = self.ctx.constrained_indices()
        if constrained:
            degs = P.p_max_degrees(num)
            if any(idx < len(degs) and degs[idx] >= 2 for idx in constrained):
                return _build(self.ctx, num, den)
        return _fast(self.ctx, num, den)

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if not self.num_t:
            raise DivisionByZero("division by an expression that normalizes to zero")
        constrained = self.ctx.constrained_indices()
        num, den = self.den, self.num
        if constrained:
            degs = P.p_max_degrees(den)
            if any(idx < len(degs) and degs[idx] >= 1 for idx in constrained):
                return _build(self.ctx, num, den)
        return _fast(self.ctx, num, den)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return self.ctx.one()
        if n < 0:
            return self.inverse() ** (-n)
        out = self
        result = None
        while n:
            if n & 1:
                result = out if result is None else result * out
            n >>= 1
            if n:
                out = out * out
        return result

    # -- calculus -------------------------------------------------------------

    def diff(self, coord: str) -> "Expr":
        a = self.ctx._lookup(coord)
        if a.kind != COORDINATE:
            raise SymexprError(f"{coord!r} is not a coordinate")
        return self.diff_index(a.index)

    def diff_index(self, coord_index: int) -> "Expr":
        ctx = self.ctx
        used = self.atoms_used()
        w = (max(used) + 1) if used else 0
        num, den = _common(P.pad(self.num, w) if self.num_t else {}, P.pad(self.den, w))
        # n'/d - n d'/d^2, with atom chain rules folded in
        nprime = ctx.zero()
        dprime = ctx.zero()
        for idx in used:
            chain = ctx.atom_chain(idx, coord_index)
            if not chain.num_t:
                continue
            pn = P.p_diff(num, idx)
            pd = P.p_diff(den, idx)
            if pn:
                nprime = nprime + _build(ctx, pn, P.p_const(1, 0)) * chain
            if pd:
                dprime = dprime + _build(ctx, pd, P.p_const(1, 0)) * chain
        den_e = Expr(ctx, self.den_t, _terms(P.p_const(1, 0)))
        num_e = Expr(ctx, self.num_t, _terms(P.p_const(1, 0)))
        if not dprime.num_t:
            return nprime / den_e
        return (nprime * den_e - num_e * dprime) / (den_e * den_e)

    def formal_partials(self) -> Dict[int, "Expr"]:
        """Partial derivatives treating every atom as an independent variable."""
        ctx = self.ctx
        out: Dict[int, Expr] = {}
        used = self.atoms_used()
        w = (max(used) + 1) if used else 0
        num, den = _common(P.pad(self.num, w) if self.num_t else {}, P.pad(self.den, w))
        den_e = Expr(ctx, self.den_t, _terms(P.p_const(1, 0)))
        num_e = Expr(ctx, self.num_t, _terms(P.p_const(1, 0)))
        for idx in used:
            pn = P.p_diff(num, idx) if num else {}
            pd = P.p_diff(den, idx) if den else {}
            term = ctx.zero()
            if pn:
                term = _build(ctx, pn, P.p_const(1, 0)) / den_e
            if pd:
                term = term - num_e * _build(ctx, pd, P.p_const(1, 0)) / (den_e * den_e)
            if term.num_t:
                out[idx] = term
        return out

    # -- substitution -----------------------------------------------------------

    def subs(self, mapping: Dict[int, "Expr"], target_ctx: Optional[Context] = None) -> "Expr":
        """Substitute atoms by expressions (atom index -> Expr).

        Atoms not in the mapping must exist with the same name in the target
        context (identity transport).  ``target_ctx`` defaults to this
        expression's own context.
        """
        tctx = target_ctx or self.ctx
        cache: Dict[Tuple[int, int], Expr] = {}

        def atom_value(idx: int) -> Expr:
            if idx in mapping:
                v = mapping[idx]
                if not isinstance(v, Expr):
                    v = tctx.const(v)
                return v
            name = self.ctx.atoms[idx].name
            return tctx.sym(name)

        def power(idx: int, e: int) -> Expr:
            key = (idx, e)
            got = cache.get(key)
            if got is None:
                got = cache[key] = atom_value(idx) ** e
            return got

        def eval_poly(p: Poly) -> Expr:
            if not p:
                return tctx.zero()
            terms = []
            for m, c in p.items():
                t = tctx.const(c)
                for i, e in enumerate(m):
                    if e:
                        t = t * power(i, e)
                terms.append(t)
            return _tree_sum(terms)

        return eval_poly(self.num) / eval_poly(self.den)

    def rename_atoms(self, target_ctx: Context, rename: Dict[str, str]) -> "Expr":
        mapping = {}
        for idx in self.atoms_used():
            name = self.ctx.atoms[idx].name
            mapping[idx] = target_ctx.sym(rename.get(name, name))
        return self.subs(mapping, target_ctx)

    # -- evaluation ---------------------------------------------------------------

    def eval_float(
        self,
        point: Dict[str, float],
        fn_impls: Optional[Dict[str, Callable[[float], float]]] = None,
        sign_overrides: Optional[Dict[str, int]] = None,
        check_assumptions: bool = True,
    ) -> float:
        vals = _atom_values_float(self.ctx, point, fn_impls or {}, sign_overrides or {})
        if check_assumptions:
            for assumption in self.ctx.assumptions:
                if _eval_with_vals(assumption, vals) <= 0.0:
                    raise DomainError("point violates a positivity assumption")
        return _eval_with_vals(self, vals)

    def eval_fraction(self, point: Dict[str, Fraction]) -> Fraction:
        vals: List[Fraction] = []
        for a in self.ctx.atoms:
            if a.kind in (COORDINATE, PARAMETER):
                if a.name in point:
                    vals.append(Fraction(point[a.name]))
                else:
                    vals.append(Fraction(0))
            else:
                vals.append(Fraction(0))
        for idx in self.atoms_used():
            a = self.ctx.atoms[idx]
            if a.kind not in (COORDINATE, PARAMETER):
                raise CapabilityError("exact evaluation supports coordinate/parameter atoms only")
            if a.name not in point:
                raise DomainError(f"no value supplied for {a.name!r}")
        num = P.p_eval_fraction(self.num, vals)
        den = P.p_eval_fraction(self.den, vals)
        if den == 0:
            raise DivisionByZero("denominator vanishes at the evaluation point")
        return num / den

    # -- rendering -------------------------------------------------------------

    def render(self) -> str:
        return render_fraction(self.ctx, self.num, self.den)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Expr({self.render()})"


def _tree_sum(items: List[Expr]) -> Expr:
    if not items:
        raise ValueError("empty sum")
    work = list(items)
    while len(work) > 1:
        nxt = []
        for i in range(0, len(work) - 1, 2):
            nxt.append(work[i] + work[i + 1])
        if len(work) & 1:
            nxt.append(work[-1])
        work = nxt
    return work[0]


def tree_sum(ctx: Context, items: Iterable[Expr]) -> Expr:
    items = list(items)
    if not items:
        return ctx.zero()
    return _tree_sum(items)


# -- numeric machinery -----------------------------------------------------------


def _eval_with_vals(e: Expr, vals: List[float]) -> float:
    w = e.ctx.width
    if len(vals) < w:
        vals = vals + [0.0] * (w - len(vals))
    num = P.p_eval_float(e.num, vals)
    den = P.p_eval_float(e.den, vals)
    if abs(den) < 1e-12:
        raise NearSingular("denominator magnitude below 1e-12 at the point")
    return num / den


def _atom_values_float(
    ctx: Context,
    point: Dict[str, float],
    fn_impls: Dict[str, Callable[[float], float]],
    sign_overrides: Dict[str, int],
) -> List[float]:
    vals: List[float] = []
    for a in ctx.atoms:
        if a.kind in (COORDINATE, PARAMETER):
            if a.name not in point:
                vals.append(float("nan"))
            else:
                vals.append(float(point[a.name]))
        elif a.kind == OPAQUE:
            impl = fn_impls.get(a.name)
            if impl is None:
                vals.append(float("nan"))
            else:
                vals.append(float(impl(vals[a.arg])))
        elif a.kind == ROOT:
            rel = a.relation
            rv = _eval_with_vals(rel, vals)
            if rv < 0:
                raise DomainError(f"negative radicand for root atom {a.name!r}")
            s = sign_overrides.get(a.name, 1)
            vals.append(s * math.sqrt(rv))
        elif a.kind == DEFINED:
            if a.recipe is None:
                vals.append(float("nan"))
            else:
                op, arg = a.recipe
                x = _eval_with_vals(arg, vals)
                if op == "log":
                    if x <= 0:
                        raise DomainError(f"log of nonpositive value for {a.name!r}")
                    vals.append(math.log(x))
                elif op == "atan":
                    vals.append(math.atan(x))
                elif op == "exp":
                    vals.append(math.exp(x))
                else:  # pragma: no cover
                    raise SymexprError(f"unknown recipe {op!r}")
        else:  # pragma: no cover
            raise SymexprError(f"unknown atom kind {a.kind}")
    return vals


class _SplitMix:
    """splitmix64; the only PRNG used anywhere (reproducible across platforms)."""

    def __init__(self, seed: int) -> None:
        self.state = seed & 0xFFFFFFFFFFFFFFFF

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return z ^ (z >> 31)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * (self.next_u64() / 2.0**64)

    def choice_sign(self) -> int:
        return 1 if self.next_u64() & 1 else -1


def sample_atom_values(
    ctx: Context,
    rng: _SplitMix,
    lo: float = -2.0,
    hi: float = 2.0,
    max_tries: int = 64,
) -> Optional[List[float]]:
    """Random admissible atom values: coordinates, parameters, opaque and
    defined atoms drawn independently; roots as a random sign branch of
    sqrt(relation).  Returns None when no admissible point was found."""
    for _ in range(max_tries):
        vals: List[float] = []
        ok = True
        for a in ctx.atoms:
            if a.kind == ROOT:
                try:
                    rv = _eval_with_vals(a.relation, vals)
                except (NearSingular, ZeroDivisionError):
                    ok = False
                    break
                if rv < 0:
                    ok = False
                    break
                vals.append(rng.choice_sign() * math.sqrt(rv))
            else:
                vals.append(rng.uniform(lo, hi))
        if not ok:
            continue
        admissible = True
        for assumption in ctx.assumptions:
            try:
                if _eval_with_vals(assumption, vals) <= 1e-9:
                    admissible = False
                    break
            except (NearSingular, ZeroDivisionError):
                admissible = False
                break
        if admissible:
            return vals
    return None


def _numeric_nonzero_guard(e: Expr) -> None:
    """Sampling cross-check for a false is_zero verdict (assertion only)."""
    rng = _SplitMix(0xC0FFEE ^ hash(e.num_t) & 0xFFFFFFFF)
    hits = 0
    best = 0.0
    for _ in range(12):
        vals = sample_atom_values(e.ctx, rng, max_tries=8)
        if vals is None:
            continue
        try:
            v = _eval_with_vals(e, vals)
        except (NearSingular, DomainError, ZeroDivisionError, OverflowError):
            continue
        hits += 1
        best = max(best, abs(v))
        if best > 1e-10:
            return
        if hits >= 3 and best > 0.0:
            # tiny but nonzero everywhere sampled: accept
            return
    if hits >= 3 and best <= 1e-10:
        raise AssertionError(
            "canonical form is nonzero but the expression vanished at all sampled points"
        )
    # not enough admissible samples: the guard abstains


# -- rendering ---------------------------------------------------------------------


def render_monomial(ctx: Context, m: Mono, c: int, lead: bool) -> str:
    parts = []
    for i, e in enumerate(m):
        if e:
            name = ctx.atoms[i].name
            parts.append(name if e == 1 else f"{name}^{e}")
    body = "*".join(parts)
    mag = abs(c)
    if body:
        coeff = "" if mag == 1 else f"{mag}*"
        core = coeff + body
    else:
        core = str(mag)
    if lead:
        return core if c > 0 else "-" + core
    return ("+ " if c > 0 else "- ") + core


def render_poly(ctx: Context, p: Poly) -> str:
    if not p:
        return "0"
    chunks = []
    for i, (m, c) in enumerate(P.p_sorted_terms(p)):
        chunks.append(render_monomial(ctx, m, c, lead=(i == 0)))
    return " ".join(chunks)


def render_fraction(ctx: Context, num: Poly, den: Poly) -> str:
    ns = render_poly(ctx, num)
    if P.p_is_const(den) and P.p_const_value(den) == 1:
        return ns
    ds = render_poly(ctx, den)
    if len(num) > 1:
        ns = f"({ns})"
    if len(den) > 1:
        ds = f"({ds})"
    return f"{ns} / {ds}"
