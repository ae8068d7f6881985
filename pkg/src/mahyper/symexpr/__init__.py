"""Exact symbolic scalar arithmetic over declared atoms."""

from .core import (
    COORDINATE,
    DEFINED,
    OPAQUE,
    PARAMETER,
    ROOT,
    Atom,
    CapabilityError,
    Context,
    DivisionByZero,
    DomainError,
    Expr,
    NearSingular,
    SymexprError,
    UnregisteredAtom,
    sample_atom_values,
    tree_sum,
    _SplitMix as SplitMix,
)
from .antideriv import NotIntegrable, antiderivative

__all__ = [
    "Atom",
    "CapabilityError",
    "Context",
    "DivisionByZero",
    "DomainError",
    "Expr",
    "NearSingular",
    "NotIntegrable",
    "SplitMix",
    "SymexprError",
    "UnregisteredAtom",
    "antiderivative",
    "sample_atom_values",
    "tree_sum",
    "COORDINATE",
    "PARAMETER",
    "OPAQUE",
    "ROOT",
    "DEFINED",
]
