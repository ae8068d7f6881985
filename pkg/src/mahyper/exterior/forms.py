"""Differential forms over a coordinate chart or an abstract coframe."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..symexpr.core import Context, Expr, SymexprError

__all__ = [
    "ExteriorError",
    "BasisMismatch",
    "ChartBasis",
    "FrameBasis",
    "Form",
    "CoframeChange",
    "wedge",
    "pullback_chart",
]


class ExteriorError(SymexprError):
    pass


class BasisMismatch(ExteriorError):
    pass


class ChartBasis:
    """Coordinate chart: basis covectors are d(coordinate)."""

    kind = "chart"

    def __init__(self, ctx: Context) -> None:
        self.ctx = ctx
        self.coord_indices: List[int] = list(ctx.coords)
        self.n = len(self.coord_indices)
        if self.n < 1:
            raise ExteriorError("chart needs at least one coordinate")

    def label(self, i: int) -> str:
        return "d(%s)" % self.ctx.atoms[self.coord_indices[i]].name

    def d_symbol(self, i: int) -> "Form":
        return Form.zero(self, 2)

    def d_scalar(self, f: Expr) -> "Form":
        comps = {}
        for pos, ci in enumerate(self.coord_indices):
            df = f.diff_index(ci)
            if df.num_t:
                comps[(pos,)] = df
        return Form(self, 1, comps)


class FrameBasis:
    """Abstract coframe with structure equations and declared aux differentials.

    ``d_table[i]`` holds the plain expansion d(sym_i) = sum_{j<k} c_jk sym_j ^ sym_k.
    ``aux_diff[atom_index]`` holds coefficient lists for d(aux) = sum_k c_k sym_k.
    """

    kind = "frame"

    def __init__(
        self,
        ctx: Context,
        names: Sequence[str],
        d_table: Dict[int, Dict[Tuple[int, int], Expr]],
        aux_diff: Dict[int, List[Expr]],
    ) -> None:
        self.ctx = ctx
        self.names = list(names)
        self.n = len(self.names)
        if self.n < 1:
            raise ExteriorError("frame needs at least one coframe symbol")
        self.d_table = {}
        for i, row in d_table.items():
            clean = {}
            for (j, k), c in row.items():
                if j == k:
                    raise ExteriorError("structure entry with equal indices")
                if j > k:
                    j, k, c = k, j, -c
                if c.num_t:
                    clean[(j, k)] = clean.get((j, k), ctx.zero()) + c
            self.d_table[i] = {key: c for key, c in clean.items() if c.num_t}
        self.aux_diff = dict(aux_diff)

    @classmethod
    def from_structure_constants(
        cls,
        ctx: Context,
        names: Sequence[str],
        C: Dict[Tuple[int, int, int], Expr],
        aux_diff: Dict[int, List[Expr]],
    ) -> "FrameBasis":
        """Build from C^i_jk with d(sym_i) = -1/2 C^i_jk sym_j ^ sym_k (antisymmetric)."""
        table: Dict[int, Dict[Tuple[int, int], Expr]] = {}
        for (i, j, k), c in C.items():
            if j == k:
                raise ExteriorError("C entry with j == k")
            if j > k:
                j, k, c = k, j, -c
            row = table.setdefault(i, {})
            row[(j, k)] = row.get((j, k), ctx.zero()) + (-c)
        return cls(ctx, names, table, aux_diff)

    def structure_constants(self) -> Dict[Tuple[int, int, int], Expr]:
        out = {}
        for i, row in self.d_table.items():
            for (j, k), c in row.items():
                out[(i, j, k)] = -c
        return out

    def label(self, i: int) -> str:
        return self.names[i]

    def d_symbol(self, i: int) -> "Form":
        comps = dict(self.d_table.get(i, {}))
        return Form(self, 2, comps)

    def d_scalar(self, f: Expr) -> "Form":
        out = Form.zero(self, 1)
        for idx, part in f.formal_partials().items():
            coeffs = self.aux_diff.get(idx)
            if coeffs is None:
                raise ExteriorError(
                    "scalar %r has no declared differential on this frame"
                    % self.ctx.atoms[idx].name
                )
            comps = {}
            for pos, c in enumerate(coeffs):
                term = part * c
                if term.num_t:
                    comps[(pos,)] = term
            out = out + Form(self, 1, comps)
        return out


def _merge_sign(a: Tuple[int, ...], b: Tuple[int, ...]) -> Optional[Tuple[Tuple[int, ...], int]]:
    """Merge two strictly increasing index tuples; None when they collide."""
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            if (len(a) - i) % 2:
                sign = -sign
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


@dataclass(frozen=True)
class Form:
    """Degree-k form: coefficients indexed by strictly increasing index tuples."""

    basis: object
    degree: int
    comps_t: Tuple[Tuple[Tuple[int, ...], Expr], ...]

    def __init__(self, basis, degree: int, comps) -> None:
        if degree < 0 or degree > basis.n:
            raise ExteriorError("form degree out of range")
        if isinstance(comps, dict):
            items = comps.items()
        else:
            items = comps
        clean = []
        for idx, c in sorted(items, key=lambda t: t[0]):
            if len(idx) != degree:
                raise ExteriorError("index tuple length differs from degree")
            if any(idx[i] >= idx[i + 1] for i in range(len(idx) - 1)):
                raise ExteriorError("index tuple not strictly increasing")
            if c.num_t:
                clean.append((idx, c))
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "comps_t", tuple(clean))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(basis, degree: int) -> "Form":
        return Form(basis, degree, {})

    @staticmethod
    def scalar(basis, f: Expr) -> "Form":
        return Form(basis, 0, {(): f})

    @staticmethod
    def basis_covector(basis, i: int) -> "Form":
        return Form(basis, 1, {(i,): basis.ctx.one()})

    @staticmethod
    def from_coeffs(basis, coeffs: Sequence[Expr]) -> "Form":
        return Form(basis, 1, {(i,): c for i, c in enumerate(coeffs)})

    # -- views ---------------------------------------------------------------

    @property
    def comps(self) -> Dict[Tuple[int, ...], Expr]:
        return dict(self.comps_t)

    def coeff(self, idx: Tuple[int, ...]) -> Expr:
        for i, c in self.comps_t:
            if i == idx:
                return c
        return self.basis.ctx.zero()

    def coeff_vector(self) -> List[Expr]:
        if self.degree != 1:
            raise ExteriorError("coefficient vector is for 1-forms")
        out = [self.basis.ctx.zero()] * self.basis.n
        for (i,), c in self.comps_t:
            out[i] = c
        return out

    def is_zero(self) -> bool:
        return not self.comps_t

    # -- algebra ---------------------------------------------------------------

    def _check(self, other: "Form") -> None:
        if self.basis is not other.basis:
            raise BasisMismatch("forms live on different bases")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        if self.degree != other.degree:
            raise ExteriorError("adding forms of different degree")
        out = self.comps
        for idx, c in other.comps_t:
            s = out.get(idx, self.basis.ctx.zero()) + c
            if s.num_t:
                out[idx] = s
            else:
                out.pop(idx, None)
        return Form(self.basis, self.degree, out)

    def __neg__(self) -> "Form":
        return Form(self.basis, self.degree, {i: -c for i, c in self.comps_t})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, f) -> "Form":
        if not isinstance(f, Expr):
            f = self.basis.ctx.const(f)
        return Form(self.basis, self.degree, {i: c * f for i, c in self.comps_t})

    def __rmul__(self, f):
        return self.scale(f)

    def wedge(self, other: "Form") -> "Form":
        self._check(other)
        deg = self.degree + other.degree
        if deg > self.basis.n:
            raise ExteriorError("degree overflow in wedge")
        out: Dict[Tuple[int, ...], Expr] = {}
        for i1, c1 in self.comps_t:
            for i2, c2 in other.comps_t:
                merged = _merge_sign(i1, i2)
                if merged is None:
                    continue
                idx, sign = merged
                term = c1 * c2 if sign > 0 else -(c1 * c2)
                s = out.get(idx)
                s = term if s is None else s + term
                if s.num_t:
                    out[idx] = s
                else:
                    out.pop(idx, None)
        return Form(self.basis, deg, out)

    def __xor__(self, other: "Form") -> "Form":
        return self.wedge(other)

    def d(self) -> "Form":
        """Exterior derivative (degree must be < n)."""
        basis = self.basis
        if self.degree >= basis.n:
            raise ExteriorError("d of a top-degree form")
        out = Form.zero(basis, self.degree + 1)
        for idx, f in self.comps_t:
            base = Form(basis, self.degree, {idx: basis.ctx.one()})
            out = out + basis.d_scalar(f).wedge(base)
            for pos, i in enumerate(idx):
                rest = idx[:pos] + idx[pos + 1 :]
                dsym = basis.d_symbol(i)
                if dsym.is_zero():
                    continue
                front = Form(basis, pos, {idx[:pos]: basis.ctx.one()})
                back = Form(basis, len(idx) - pos - 1, {idx[pos + 1 :]: basis.ctx.one()})
                piece = front.wedge(dsym).wedge(back).scale(f)
                out = out + piece
        return out

    def substitute_basis(self, target_basis, table: Sequence["Form"]) -> "Form":
        """Replace basis covector i by the 1-form table[i] on the target basis."""
        if len(table) != self.basis.n:
            raise ExteriorError("substitution table size mismatch")
        ctx = target_basis.ctx
        out = Form.zero(target_basis, self.degree)
        for idx, f in self.comps_t:
            piece = Form.scalar(target_basis, f)
            for i in idx:
                piece = piece.wedge(table[i])
            out = out + piece
        return out

    def render(self) -> str:
        if not self.comps_t:
            return "0"
        chunks = []
        for idx, c in self.comps_t:
            mono = "^".join(self.basis.label(i) for i in idx) if idx else "1"
            chunks.append(f"({c.render()})*{mono}" if idx else f"({c.render()})")
        return " + ".join(chunks)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Form<{self.degree}>({self.render()})"


def wedge(a: Form, b: Form) -> Form:
    return a.wedge(b)


def pullback_chart(form: Form, coord_map: Dict[str, Expr]) -> Form:
    """Pull a chart-basis form back through a coordinate substitution.

    ``coord_map`` sends coordinate names to expressions over the same
    context; coefficients are substituted and d(x) becomes d(map[x]).
    """
    basis = form.basis
    if basis.kind != "chart":
        raise ExteriorError("pullback_chart needs a chart basis")
    ctx = basis.ctx
    mapping = {}
    for name, val in coord_map.items():
        mapping[ctx.atom(name).index] = val
    table = []
    for ci in basis.coord_indices:
        name = ctx.atoms[ci].name
        if name in coord_map:
            table.append(basis.d_scalar(coord_map[name]))
        else:
            table.append(Form.basis_covector(basis, basis.coord_indices.index(ci)))
    out = Form.zero(basis, form.degree)
    for idx, f in form.comps_t:
        piece = Form.scalar(basis, f.subs(mapping))
        for i in idx:
            piece = piece.wedge(table[i])
        out = out + piece
    return out
