"""Coordinate pipeline: PDE coefficients -> adapted coframe -> invariants.

The second-order equation A(z_xx z_yy - z_xy^2) + B z_xx + 2C z_xy
+ D z_yy + E = 0 on the chart (x, y, z, p, q) is encoded by the 2-form
Omega = A dp^dq + B dp^dy + C(dx^dp - dy^dq) + D dx^dq + E dx^dy together
with the contact form theta = dz - p dx - q dy.  After arranging E = 1 and
writing mu for the square root of the hyperbolicity discriminant, the five
1-forms

    eta0 = 2 mu theta,
    eta1 = (mu + C) dp + D dq + dy,     eta2 = -B dp + (mu - C) dq - dx,
    eta3 = (C - mu) dp + D dq + dy,     eta4 =  B dp + (mu + C) dq + dx

satisfy Omega + mu dtheta = eta1^eta2 and -Omega + mu dtheta = eta3^eta4.
Correcting eta^i by c^i eta0 (c^i read from the eta3^eta4 / eta1^eta2
components of d(eta^i)) yields a coframe omega with d(omega0) congruent to
omega1^omega2 + omega3^omega4 mod omega0, from whose structure
coefficients the two 2x2 invariant matrices are read off.

The eight invariant components are computed once over formal symbols for
B, C, D, mu and their first and second partials; classifying a concrete
system is then a single substitution.  A direct extraction routine
(`extract_vs`) provides an independent route used for gauge transforms,
abstract coframes and cross-checking.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .symexpr import poly as P
from .symexpr.core import (
    Context,
    DivisionByZero,
    Expr,
    SymexprError,
    _SplitMix as SplitMix,
    sample_atom_values,
    _build,
    _common,
    _eval_with_vals,
)
from .exterior import (
    ChartBasis,
    ExteriorError,
    Form,
    mat_det,
    mat_inverse,
    reduce_mod,
)

__all__ = [
    "MongeAmpereError",
    "NotHyperbolic",
    "WaveEquivalent",
    "EmptySystem",
    "MongeAmpereSystem",
    "AdaptedCoframe",
    "InvariantReport",
    "GaugeElement",
    "normalize_E",
    "adapted_coframe",
    "invariants",
    "classify_sign",
    "gauge_transform",
    "sigma_tensors",
    "extract_vs",
    "contact_form",
    "pde_two_form",
]

_COORD_ROLES = ("x", "y", "z", "p", "q")


class MongeAmpereError(SymexprError):
    pass


class NotHyperbolic(MongeAmpereError):
    pass


class WaveEquivalent(MongeAmpereError):
    """A, B, D, E all vanish: the system is empty or the wave equation."""


class EmptySystem(MongeAmpereError):
    pass


@dataclass
class MongeAmpereSystem:
    """Coefficients A..E on a 5-coordinate chart (positional roles x,y,z,p,q)."""

    ctx: Context
    A: Expr
    B: Expr
    C: Expr
    D: Expr
    E: Expr

    def __post_init__(self) -> None:
        if len(self.ctx.coords) != 5:
            raise MongeAmpereError("Monge-Ampere chart needs exactly 5 coordinates")
        coeffs = [self.A, self.B, self.C, self.D, self.E]
        for i, c in enumerate(coeffs):
            if not isinstance(c, Expr):
                coeffs[i] = self.ctx.const(c)
        self.A, self.B, self.C, self.D, self.E = coeffs
        if all(not c.num_t for c in coeffs):
            raise MongeAmpereError("all coefficients vanish")

    @classmethod
    def from_rhs(cls, ctx: Context, F: Expr) -> "MongeAmpereSystem":
        """Encode z_xy = F as 2C z_xy + E = 0 with C = 1/2, E = -F."""
        half = ctx.const(Fraction(1, 2))
        return cls(ctx, ctx.zero(), ctx.zero(), half, ctx.zero(), -F)

    def coeff_list(self) -> List[Expr]:
        return [self.A, self.B, self.C, self.D, self.E]

    def discriminant(self) -> Expr:
        return self.A * self.E - self.B * self.D + self.C * self.C

    def is_wave_family(self) -> bool:
        return all(
            not c.num_t for c in (self.A, self.B, self.D, self.E)
        )

    def coord_name(self, role: str) -> str:
        return self.ctx.atoms[self.ctx.coords[_COORD_ROLES.index(role)]].name


def contact_form(basis: ChartBasis) -> Form:
    ctx = basis.ctx
    dx, dy, dz = (Form.basis_covector(basis, i) for i in range(3))
    p = ctx.sym(ctx.atoms[basis.coord_indices[3]].name)
    q = ctx.sym(ctx.atoms[basis.coord_indices[4]].name)
    return dz - dx.scale(p) - dy.scale(q)


def pde_two_form(sys: MongeAmpereSystem, basis: Optional[ChartBasis] = None) -> Form:
    basis = basis or ChartBasis(sys.ctx)
    dx, dy, dz, dp, dq = (Form.basis_covector(basis, i) for i in range(5))
    return (
        dp.wedge(dq).scale(sys.A)
        + dp.wedge(dy).scale(sys.B)
        + (dx.wedge(dp) - dy.wedge(dq)).scale(sys.C)
        + dx.wedge(dq).scale(sys.D)
        + dx.wedge(dy).scale(sys.E)
    )


# ---------------------------------------------------------------------------
# E-normalization

_CONTACT_TRANSFORMS = {
    # tag: (coefficient shuffle, coordinate substitution old -> new)
    # shuffle maps (A,B,C,D,E) of the source to the target slots.
    "swap-xp-yq": (
        lambda A, B, C, D, E: (E, -D, C, -B, A),
        lambda x, y, z, p, q: {  # old coordinate -> expression in new chart
            "x": -p, "y": -q, "z": z - x * p - y * q, "p": x, "q": y,
        },
    ),
    "swap-xp": (
        lambda A, B, C, D, E: (-D, -E, C, A, B),
        lambda x, y, z, p, q: {"x": -p, "y": y, "z": z - x * p, "p": x, "q": q},
    ),
    "swap-yq": (
        lambda A, B, C, D, E: (-B, A, C, -E, D),
        lambda x, y, z, p, q: {"x": x, "y": -q, "z": z - y * q, "p": p, "q": y},
    ),
}


def normalize_E(sys: MongeAmpereSystem) -> Tuple[MongeAmpereSystem, str]:
    """Arrange E = 1 by scaling, after one contact transformation if E = 0.

    The three transformations are tried in the fixed order
    (x,y,z,p,q) -> (p,q,z-px-qy,-x,-y), (p,y,z-px,-x,q), (x,q,z-qy,p,-y);
    the first one producing a nonzero E wins.
    """
    ctx = sys.ctx
    if sys.E.num_t:
        E = sys.E
        out = MongeAmpereSystem(ctx, sys.A / E, sys.B / E, sys.C / E, sys.D / E, ctx.one())
        return out, "scale"
    if sys.is_wave_family():
        raise WaveEquivalent(
            "A, B, D, E all vanish: wave-equivalent (or empty) system; nothing to transform"
        )
    names = [ctx.atoms[ci].name for ci in ctx.coords]
    xs = [ctx.sym(n) for n in names]
    for tag, (shuffle, submap) in _CONTACT_TRANSFORMS.items():
        newA, newB, newC, newD, newE = shuffle(*sys.coeff_list())
        if not newE.num_t:
            continue
        # coefficients are functions of the old chart: rewrite in the new one
        raw = submap(*xs)
        mapping = {ctx.atom(names[i]).index: raw[role] for i, role in enumerate(_COORD_ROLES)}
        coeffs = [c.subs(mapping) for c in (newA, newB, newC, newD, newE)]
        E = coeffs[4]
        out = MongeAmpereSystem(
            ctx, coeffs[0] / E, coeffs[1] / E, coeffs[2] / E, coeffs[3] / E, ctx.one()
        )
        return out, tag
    raise MongeAmpereError("could not arrange E != 0")


# ---------------------------------------------------------------------------
# discriminant square root


def discriminant_root(sys: MongeAmpereSystem) -> Expr:
    """mu with mu^2 == A E - B D + C^2, exact.

    sqrt(N/D) is computed as sqrt(N*D)/D; square factors of N*D are split
    off exactly and any squarefree remainder becomes a constrained root
    atom (at most one per context, reused when the radicand repeats).
    """
    ctx = sys.ctx
    disc = sys.discriminant()
    if not disc.num_t:
        raise NotHyperbolic("discriminant normalizes to zero")
    num, den = _common(disc.num, disc.den)
    prod = P.p_mul(num, den)
    content, factors = P.p_factor_list(prod)
    if content < 0:
        raise NotHyperbolic("discriminant has negative definite radicand")
    csq = 1
    cres = content
    k = 1
    while (k + 1) * (k + 1) <= cres:
        k += 1
        while cres % (k * k) == 0:
            cres //= k * k
            csq *= k
    root_poly = P.p_const(csq, 0)
    residual = P.p_const(cres, 0)
    for g, e in factors:
        if e // 2:
            root_poly = P.p_mul(*_common(root_poly, P.p_pow(g, e // 2)))
        if e % 2:
            residual = P.p_mul(*_common(residual, g))
    one = P.p_const(1, 0)
    rational_part = _build(ctx, root_poly, one)
    den_expr = _build(ctx, den, one)
    if P.p_is_const(residual) and P.p_const_value(residual) == 1:
        mu = rational_part / den_expr
    else:
        rel = _build(ctx, residual, one)
        name = None
        for a in ctx.atoms:
            if a.kind == "root" and a.relation == rel:
                name = a.name
                break
        if name is None:
            name = ctx.fresh_name("m_")
            ctx.root(name, rel)
        mu = rational_part * ctx.sym(name) / den_expr
    if P.p_leading(mu.num)[1] < 0:
        mu = -mu
    return mu


# ---------------------------------------------------------------------------
# generic tables

_VARS = list(_COORD_ROLES)


class _GenericTables:
    """The eta/omega pipeline computed over formal coefficient symbols."""

    def __init__(self) -> None:
        gctx = Context()
        for v in _VARS:
            gctx.coordinate(v)
        # second partials first (no declared partials of their own), then
        # first partials, then the coefficient symbols themselves
        for t in ("B", "C", "D", "M"):
            for i, vi in enumerate(_VARS):
                for vj in _VARS[i:]:
                    gctx.defined_scalar(f"{t}{vi}{vj}", {})
            for i, vi in enumerate(_VARS):
                partials = {}
                for j, vj in enumerate(_VARS):
                    a, b = (vi, vj) if i <= j else (vj, vi)
                    partials[vj] = gctx.sym(f"{t}{a}{b}")
                gctx.defined_scalar(f"{t}{vi}", partials)
            gctx.defined_scalar(
                t, {v: gctx.sym(f"{t}{v}") for v in _VARS}
            )
        self.ctx = gctx
        self.basis = ChartBasis(gctx)
        Bs, Cs, Ds, Ms = (gctx.sym(t) for t in ("B", "C", "D", "M"))
        basis = self.basis
        dx, dy, dz, dp, dq = (Form.basis_covector(basis, i) for i in range(5))
        x, y, z, p, q = (gctx.sym(v) for v in _VARS)
        theta = dz - dx.scale(p) - dy.scale(q)
        self.eta = [
            theta.scale(2 * Ms),
            dp.scale(Ms + Cs) + dq.scale(Ds) + dy,
            dp.scale(-Bs) + dq.scale(Ms - Cs) - dx,
            dp.scale(Cs - Ms) + dq.scale(Ds) + dy,
            dp.scale(Bs) + dq.scale(Ms + Cs) + dx,
        ]
        rows = [f.coeff_vector() for f in self.eta]
        self.det_eta = mat_det(rows)
        if not self.det_eta.num_t:
            raise MongeAmpereError("generic eta coframe is singular")
        inv = mat_inverse(rows)
        T = {
            i: _reexpress_two_form(self.eta[i].d(), inv) for i in range(5)
        }
        self.c = {
            1: T[1][(3, 4)],
            2: T[2][(3, 4)],
            3: T[3][(1, 2)],
            4: T[4][(1, 2)],
        }
        self.omega = [self.eta[0]] + [
            self.eta[i] - self.eta[0].scale(self.c[i]) for i in range(1, 5)
        ]
        rows_w = [f.coeff_vector() for f in self.omega]
        inv_w = mat_inverse(rows_w)
        Tw = {i: _reexpress_two_form(self.omega[i].d(), inv_w) for i in range(5)}
        g = lambda i, j, k: Tw[i].get((j, k), gctx.zero())
        half = gctx.const(Fraction(1, 2))
        self.V = {
            1: (g(1, 0, 3) - g(4, 0, 2)) * half,
            2: (g(1, 0, 4) + g(3, 0, 2)) * half,
            3: (g(2, 0, 3) + g(4, 0, 1)) * half,
            4: (g(2, 0, 4) - g(3, 0, 1)) * half,
            5: (g(1, 0, 3) + g(4, 0, 2)) * half,
            6: (g(1, 0, 4) - g(3, 0, 2)) * half,
            7: (g(2, 0, 3) - g(4, 0, 1)) * half,
            8: (g(2, 0, 4) + g(3, 0, 1)) * half,
        }


def _reexpress_two_form(form: Form, inv: Sequence[Sequence[Expr]]) -> Dict[Tuple[int, int], Expr]:
    """Coefficients of a chart 2-form in the coframe whose inverse matrix is given.

    If new_j = sum_a P[j][a] d(coord_a) then d(coord_a) = sum_j inv[a][j] new_j,
    and the coefficient of new_j ^ new_k (j < k) is
    sum_{a<b} F_ab (inv[a][j] inv[b][k] - inv[a][k] inv[b][j]).
    """
    ctx = form.basis.ctx
    n = form.basis.n
    out: Dict[Tuple[int, int], Expr] = {}
    for j in range(n):
        for k in range(j + 1, n):
            acc = ctx.zero()
            for (a, b), F in form.comps_t:
                term = F * (inv[a][j] * inv[b][k] - inv[a][k] * inv[b][j])
                if term.num_t:
                    acc = acc + term
            if acc.num_t:
                out[(j, k)] = acc
    return out


_GENERIC: Optional[_GenericTables] = None
_GENERIC_LOCK = threading.Lock()


def generic_tables() -> _GenericTables:
    global _GENERIC
    if _GENERIC is None:
        with _GENERIC_LOCK:
            if _GENERIC is None:
                _GENERIC = _GenericTables()
    return _GENERIC


def _generic_map(sysN: MongeAmpereSystem, mu: Expr) -> Dict[int, Expr]:
    """Substitution from the generic context into a concrete system."""
    gt = generic_tables()
    gctx = gt.ctx
    ctx = sysN.ctx
    coord_names = [ctx.atoms[ci].name for ci in ctx.coords]
    mapping: Dict[int, Expr] = {}
    for role, cname in zip(_VARS, coord_names):
        mapping[gctx.atom(role).index] = ctx.sym(cname)
    values = {"B": sysN.B, "C": sysN.C, "D": sysN.D, "M": mu}
    for t, val in values.items():
        mapping[gctx.atom(t).index] = val
        firsts = {}
        for i, vi in enumerate(_VARS):
            dv = val.diff(coord_names[i])
            firsts[vi] = dv
            mapping[gctx.atom(f"{t}{vi}").index] = dv
        for i, vi in enumerate(_VARS):
            for j in range(i, len(_VARS)):
                vj = _VARS[j]
                mapping[gctx.atom(f"{t}{vi}{vj}").index] = firsts[vi].diff(coord_names[j])
    return mapping



# ---------------------------------------------------------------------------
# fast generic substitution (common-denominator accumulation)


def _fast_subs(e: Expr, mapping: Dict[int, Expr], tctx: Context) -> Expr:
    """Substitute atom values into a generic fraction without pairwise adds.

    Denominators of substituted terms are tracked as exponent vectors over a
    shared factor base, so the accumulation is a single polynomial sum over
    the common denominator; the one reduction happens at the end.
    """
    power_cache: Dict[Tuple[int, int], Expr] = {}
    base: List[P.Poly] = []
    base_key: Dict[tuple, int] = {}
    den_decomp: Dict[tuple, Tuple[int, Tuple[int, ...]]] = {}

    def value(idx: int) -> Expr:
        v = mapping.get(idx)
        if v is None:
            v = tctx.sym(e.ctx.atoms[idx].name)
        elif not isinstance(v, Expr):
            v = tctx.const(v)
        return v

    def vpow(idx: int, k: int) -> Expr:
        key = (idx, k)
        got = power_cache.get(key)
        if got is None:
            got = power_cache[key] = value(idx) ** k
        return got

    def decompose_den(den_t: tuple) -> Tuple[int, Tuple[int, ...]]:
        got = den_decomp.get(den_t)
        if got is not None:
            return got
        den = dict(den_t)
        content, factors = P.p_factor_list(den)
        if content < 0:  # canonical dens have positive leading coefficient
            raise MongeAmpereError("unexpected negative denominator content")
        evec = [0] * len(base)
        for g, k in factors:
            gk = tuple(P.p_sorted_terms(_trim_poly(g)))
            i = base_key.get(gk)
            if i is None:
                i = len(base)
                base.append(dict(gk))
                base_key[gk] = i
                evec.append(0)
            if i >= len(evec):
                evec.extend([0] * (i + 1 - len(evec)))
            evec[i] += k
        got = (content, tuple(evec))
        den_decomp[den_t] = got
        return got

    def accumulate(poly: P.Poly) -> Tuple[List[Tuple[P.Poly, int, Tuple[int, ...]]], None]:
        terms = []
        for mono, coeff in poly.items():
            num_acc = P.p_const(coeff, 0)
            d0 = 1
            evec: List[int] = []
            for i, exp in enumerate(mono):
                if not exp:
                    continue
                pw = vpow(i, exp)
                num_acc = P.p_mul(*_common(num_acc, dict(pw.num_t)))
                if not num_acc:
                    break
                c0, ev = decompose_den(pw.den_t)
                d0 *= c0
                if len(ev) > len(evec):
                    evec.extend([0] * (len(ev) - len(evec)))
                for j, k in enumerate(ev):
                    if k:
                        evec[j] += k
            if num_acc:
                terms.append((num_acc, d0, tuple(evec)))
        return terms, None

    num_terms, _ = accumulate(e.num)
    den_terms, _ = accumulate(e.den)
    if not den_terms and not dict(e.den_t):
        raise DivisionByZero("generic denominator vanished under substitution")

    def combine(terms) -> Tuple[P.Poly, int, Tuple[int, ...]]:
        if not terms:
            return {}, 1, ()
        width = max(len(ev) for _n, _d, ev in terms)
        emax = [0] * width
        for _n, _d, ev in terms:
            for j, k in enumerate(ev):
                if k > emax[j]:
                    emax[j] = k
        L = 1
        for _n, d0, _ev in terms:
            g = _int_gcd(L, d0)
            L = L // g * d0
        total: P.Poly = {}
        for n, d0, ev in terms:
            scaled = P.p_mul_int(n, L // d0)
            for j in range(width):
                need = emax[j] - (ev[j] if j < len(ev) else 0)
                if need:
                    scaled = P.p_mul(*_common(scaled, P.p_pow(base[j], need)))
            total = P.p_add(*_common(total, scaled))
        return total, L, tuple(emax)

    N, Ln, en = combine(num_terms)
    DN, Ld, ed = combine(den_terms)
    if not DN:
        raise DivisionByZero("generic denominator vanished under substitution")
    if not N:
        return tctx.zero()
    # value = (N / (Ln * prod(base^en))) / (DN / (Ld * prod(base^ed)))
    num = P.p_mul_int(N, Ld)
    den = P.p_mul_int(DN, Ln)
    width = max(len(en), len(ed))
    en = list(en) + [0] * (width - len(en))
    ed = list(ed) + [0] * (width - len(ed))
    for j in range(width):
        k = ed[j] - en[j]
        if k > 0:
            num = P.p_mul(*_common(num, P.p_pow(base[j], k)))
        elif k < 0:
            den = P.p_mul(*_common(den, P.p_pow(base[j], -k)))
    return _build(tctx, num, den)


def _trim_poly(p: P.Poly) -> P.Poly:
    from .symexpr.core import _trim

    return _trim(p)


def _int_gcd(a: int, b: int) -> int:
    from math import gcd

    return gcd(a, b)


# ---------------------------------------------------------------------------
# adapted coframe and invariant extraction


@dataclass
class AdaptedCoframe:
    basis: ChartBasis
    forms: List[Form]               # omega0..omega4
    mu: Expr
    c: Dict[int, Expr]
    system: Optional[MongeAmpereSystem] = None

    def omega(self, i: int) -> Form:
        return self.forms[i]


def adapted_coframe(sysN: MongeAmpereSystem, check: bool = True) -> AdaptedCoframe:
    """Build the corrected coframe for a system already normalized to E = 1."""
    if sysN.E != sysN.ctx.one():
        raise MongeAmpereError("adapted_coframe expects an E-normalized system")
    ctx = sysN.ctx
    mu = discriminant_root(sysN)
    gt = generic_tables()
    mapping = _generic_map(sysN, mu)
    basis = ChartBasis(ctx)
    eta = [
        Form(basis, 1, {idx: _fast_subs(c, mapping, ctx) for idx, c in f.comps_t})
        for f in gt.eta
    ]
    if check:
        theta = contact_form(basis)
        Omega = pde_two_form(sysN, basis)
        lhs1 = Omega + theta.d().scale(mu) - eta[1].wedge(eta[2])
        lhs2 = -Omega + theta.d().scale(mu) - eta[3].wedge(eta[4])
        if not lhs1.is_zero() or not lhs2.is_zero():
            raise MongeAmpereError("eta coframe identities failed")
    c = {i: _fast_subs(gt.c[i], mapping, ctx) for i in range(1, 5)}
    omega = [eta[0]] + [eta[i] - eta[0].scale(c[i]) for i in range(1, 5)]
    if check:
        resid = omega[0].d() - omega[1].wedge(omega[2]) - omega[3].wedge(omega[4])
        if not reduce_mod(resid, [omega[0]]).is_zero():
            raise MongeAmpereError("coframe is not 1-adapted (d omega0 congruence failed)")
    return AdaptedCoframe(basis, omega, mu, c, sysN)


def extract_vs(
    forms: Sequence[Form],
    complement: bool = False,
) -> Dict[int, Expr]:
    """Read V1..V8 from d of a 1-adapted 5-tuple of 1-forms.

    On a 5-dimensional basis the five forms are a coframe.  On a larger
    basis (abstract frames) the tuple is completed by the lowest-index
    basis covectors that keep the matrix invertible, and components along
    the completion directions are discarded (they play the role of the
    group/fiber directions of the structure bundle).
    """
    basis = forms[0].basis
    ctx = basis.ctx
    n = basis.n
    rows = [f.coeff_vector() for f in forms]
    extra = []
    if len(rows) < n:
        if not complement:
            raise ExteriorError("five 1-forms on a larger basis need complement=True")
        for j in range(n):
            trial = rows + [[ctx.one() if i == j else ctx.zero() for i in range(n)]]
            if _rank_ok(trial, ctx):
                rows = trial
                extra.append(j)
            if len(rows) == n:
                break
        if len(rows) != n:
            raise ExteriorError("could not complete the coframe")
    inv = mat_inverse(rows)
    T = {i: _reexpress_two_form(forms[i].d(), inv) for i in range(1, 5)}
    g = lambda i, j, k: T[i].get((j, k), ctx.zero())
    half = ctx.const(Fraction(1, 2))
    return {
        1: (g(1, 0, 3) - g(4, 0, 2)) * half,
        2: (g(1, 0, 4) + g(3, 0, 2)) * half,
        3: (g(2, 0, 3) + g(4, 0, 1)) * half,
        4: (g(2, 0, 4) - g(3, 0, 1)) * half,
        5: (g(1, 0, 3) + g(4, 0, 2)) * half,
        6: (g(1, 0, 4) - g(3, 0, 2)) * half,
        7: (g(2, 0, 3) - g(4, 0, 1)) * half,
        8: (g(2, 0, 4) + g(3, 0, 1)) * half,
    }


def _rank_ok(rows, ctx) -> bool:
    from .exterior.linalg import rref

    _r, pivots, _t, _pv = rref(rows)
    return len(pivots) == len(rows)


# ---------------------------------------------------------------------------
# reports and classification


@dataclass
class InvariantReport:
    S1: List[List[Expr]]
    S2: List[List[Expr]]
    det_s1: Expr
    is_euler_lagrange: bool
    is_wave: bool
    type: str                      # positive | negative | degenerate | indefinite | not-EL
    evidence: Dict[str, object] = field(default_factory=dict)
    mu: Optional[Expr] = None
    coframe: Optional[AdaptedCoframe] = None
    normalization: Optional[str] = None

    @property
    def V(self) -> Dict[int, Expr]:
        return {
            1: self.S1[0][0], 2: self.S1[0][1], 3: self.S1[1][0], 4: self.S1[1][1],
            5: self.S2[0][0], 6: self.S2[0][1], 7: self.S2[1][0], 8: self.S2[1][1],
        }


def _report_from_vs(
    ctx: Context,
    vs: Dict[int, Expr],
    seed: int = 0,
    samples: int = 32,
    coframe: Optional[AdaptedCoframe] = None,
    normalization: Optional[str] = None,
) -> InvariantReport:
    S1 = [[vs[1], vs[2]], [vs[3], vs[4]]]
    S2 = [[vs[5], vs[6]], [vs[7], vs[8]]]
    det = vs[1] * vs[4] - vs[2] * vs[3]
    el = all(not vs[i].num_t for i in (5, 6, 7, 8))
    wave = el and all(not vs[i].num_t for i in (1, 2, 3, 4))
    if el:
        verdict, evidence = classify_sign(det, ctx, seed=seed, samples=samples)
        typ = verdict
    else:
        typ = "not-EL"
        evidence = {"tier": "not-applicable"}
    return InvariantReport(
        S1, S2, det, el, wave, typ, evidence,
        mu=(coframe.mu if coframe else None),
        coframe=coframe, normalization=normalization,
    )


def invariants(
    sys: MongeAmpereSystem, seed: int = 0, samples: int = 32
) -> InvariantReport:
    """Full classification of a hyperbolic Monge-Ampere system."""
    ctx = sys.ctx
    if sys.is_wave_family():
        if not sys.C.num_t:
            raise EmptySystem("all coefficients vanish")
        zero = ctx.zero()
        vs = {i: zero for i in range(1, 9)}
        rep = _report_from_vs(ctx, vs, seed, samples, normalization="wave-shortcut")
        rep.evidence["note"] = "A = B = D = E = 0: contact equivalent to z_xy = 0"
        return rep
    disc = sys.discriminant()
    if not disc.num_t:
        raise NotHyperbolic("discriminant AE - BD + C^2 normalizes to zero")
    _assert_positive_discriminant(disc, seed)
    sysN, tag = normalize_E(sys)
    cf = adapted_coframe(sysN)
    gt = generic_tables()
    mapping = _generic_map(sysN, cf.mu)
    vs = {i: _fast_subs(gt.V[i], mapping, ctx) for i in range(1, 9)}
    return _report_from_vs(ctx, vs, seed, samples, coframe=cf, normalization=tag)


def _assert_positive_discriminant(disc: Expr, seed: int) -> None:
    rng = SplitMix(seed ^ 0x9D15C0)
    seen = 0
    for _ in range(24):
        vals = sample_atom_values(disc.ctx, rng, max_tries=8)
        if vals is None:
            continue
        try:
            v = _eval_with_vals(disc, vals)
        except Exception:
            continue
        seen += 1
        if v < 0:
            raise NotHyperbolic(
                "discriminant is negative at an admissible sample point (elliptic locus)"
            )
        if seen >= 6:
            break


def classify_sign(
    det: Expr, ctx: Context, seed: int = 0, samples: int = 32
) -> Tuple[str, Dict[str, object]]:
    """Sign class of det(S1): assumptions > manifest factorization > sampling."""
    if not det.num_t:
        return "degenerate", {"tier": "exact-zero"}
    sign, used_assumptions = _manifest_sign(det, ctx)
    if sign is not None:
        verdict = "positive" if sign > 0 else "negative"
        tier = "assumptions" if used_assumptions else "factorization"
        return verdict, {"tier": tier}
    rng = SplitMix(seed ^ 0x51C1A55)
    signs = set()
    points = 0
    attempts = 0
    while points < samples and attempts < samples * 24:
        attempts += 1
        vals = sample_atom_values(ctx, rng, max_tries=4)
        if vals is None:
            continue
        try:
            v = _eval_with_vals(det, vals)
        except Exception:
            continue
        if abs(v) < 1e-12:
            continue
        signs.add(1 if v > 0 else -1)
        points += 1
        if len(signs) > 1:
            return "indefinite", {"tier": "sampled", "points": points}
    if points == 0:
        raise MongeAmpereError("no admissible sample point found for sign classification")
    verdict = "positive" if 1 in signs else "negative"
    return verdict, {"tier": "sampled", "points": points}


def _manifest_sign(e: Expr, ctx: Context) -> Tuple[Optional[int], bool]:
    """Sign by factorization: even powers, positive-definite factors,
    assumption-listed factors.  (None, _) when inconclusive; the flag
    records whether a context assumption was needed."""
    used = [False]

    def poly_sign(poly) -> Optional[int]:
        content, factors = P.p_factor_list(poly)
        sign = 1 if content > 0 else -1
        for g, exp in factors:
            if exp % 2 == 0:
                continue
            s = _factor_sign(g, ctx, used)
            if s is None:
                return None
            sign *= s
        return sign

    sn = poly_sign(e.num)
    if sn is None:
        return None, used[0]
    sd = poly_sign(e.den)
    if sd is None:
        return None, used[0]
    return sn * sd, used[0]


def _factor_sign(g, ctx: Context, used: List[bool]) -> Optional[int]:
    if P.p_is_const(g):
        return 1 if P.p_const_value(g) > 0 else -1
    # assumptions take precedence over the shape heuristic
    ge = _build(ctx, dict(g), P.p_const(1, 0))
    for assumption in ctx.assumptions:
        ratio = ge / assumption
        if ratio.is_const():
            v = ratio.const_value()
            used[0] = True
            return 1 if v > 0 else -1
    # positive-definite shape: every monomial has even exponents and a
    # positive coefficient, with a positive constant term present
    const_term = g.get((0,) * len(next(iter(g))), 0)
    if const_term > 0 and all(
        c > 0 and all(e % 2 == 0 for e in m) for m, c in g.items()
    ):
        return 1
    if const_term < 0 and all(
        c < 0 and all(e % 2 == 0 for e in m) for m, c in g.items()
    ):
        return -1
    return None


# ---------------------------------------------------------------------------
# gauge action and invariant tensors


@dataclass
class GaugeElement:
    """Either diag(a; A; B) with a = det A = det B, or the pair swap J."""

    kind: str                      # "diag" | "J"
    a: Optional[Expr] = None
    A: Optional[List[List[Expr]]] = None
    B: Optional[List[List[Expr]]] = None

    @classmethod
    def diag(cls, a: Expr, A: List[List[Expr]], B: List[List[Expr]]) -> "GaugeElement":
        ctx = a.ctx
        detA = A[0][0] * A[1][1] - A[0][1] * A[1][0]
        detB = B[0][0] * B[1][1] - B[0][1] * B[1][0]
        if (detA - a).num_t or (detB - a).num_t:
            raise MongeAmpereError("gauge element needs a = det(A) = det(B) exactly")
        if not a.num_t:
            raise MongeAmpereError("gauge element must be invertible")
        return cls("diag", a, A, B)

    @classmethod
    def swap(cls) -> "GaugeElement":
        return cls("J")


def gauge_transform(cf: AdaptedCoframe, g: GaugeElement) -> AdaptedCoframe:
    """Right action on the coframe; 1-adaptation is re-verified."""
    w = cf.forms
    if g.kind == "J":
        new = [w[0], w[3], w[4], w[1], w[2]]
    else:
        ctx = cf.basis.ctx
        Ainv = mat_inverse(g.A)
        Binv = mat_inverse(g.B)
        new = [
            w[0].scale(g.a.inverse()),
            w[1].scale(Ainv[0][0]) + w[2].scale(Ainv[0][1]),
            w[1].scale(Ainv[1][0]) + w[2].scale(Ainv[1][1]),
            w[3].scale(Binv[0][0]) + w[4].scale(Binv[0][1]),
            w[3].scale(Binv[1][0]) + w[4].scale(Binv[1][1]),
        ]
    resid = new[0].d() - new[1].wedge(new[2]) - new[3].wedge(new[4])
    if not reduce_mod(resid, [new[0]]).is_zero():
        raise MongeAmpereError("gauge transform broke 1-adaptation")
    return AdaptedCoframe(cf.basis, new, cf.mu, cf.c, cf.system)


def sigma_tensors(
    cf: AdaptedCoframe, report: InvariantReport
) -> Tuple[List[List[Expr]], Form]:
    """(Sigma1 as a symmetric matrix on the chart, Sigma2 as a 2-form).

    Sigma1 = V3 w1.w3 - V1 w1.w4 + V4 w2.w3 - V2 w2.w4 (symmetric products),
    Sigma2 = V7 w1^w3 - V5 w2^w3 + V8 w1^w4 - V6 w2^w4.
    """
    ctx = cf.basis.ctx
    V = report.V
    n = cf.basis.n
    vecs = [f.coeff_vector() for f in cf.forms]

    def sym(i: int, j: int, coef: Expr) -> List[List[Expr]]:
        out = [[ctx.zero()] * n for _ in range(n)]
        for a in range(n):
            va = vecs[i][a]
            if not va.num_t:
                continue
            for b in range(n):
                vb = vecs[j][b]
                if not vb.num_t:
                    continue
                half = coef * va * vb / 2
                out[a][b] = out[a][b] + half
                out[b][a] = out[b][a] + half
        return out

    def madd(x, y):
        return [[xx + yy for xx, yy in zip(rx, ry)] for rx, ry in zip(x, y)]

    sigma1 = sym(1, 3, V[3])
    sigma1 = madd(sigma1, sym(1, 4, -V[1]))
    sigma1 = madd(sigma1, sym(2, 3, V[4]))
    sigma1 = madd(sigma1, sym(2, 4, -V[2]))

    w = cf.forms
    sigma2 = (
        w[1].wedge(w[3]).scale(V[7])
        - w[2].wedge(w[3]).scale(V[5])
        + w[1].wedge(w[4]).scale(V[8])
        - w[2].wedge(w[4]).scale(V[6])
    )
    return sigma1, sigma2
