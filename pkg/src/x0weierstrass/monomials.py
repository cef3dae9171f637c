"""Degree-m/2 monomials in a weight-2 basis and their q-expansions."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

from .basis_io import BasisSet
from .errors import DataIntegrityError
from .qseries import QSeries

__all__ = ["MonomialProduct", "compute_monomials", "enumerate_exponents", "format_monomial"]


def enumerate_exponents(g: int, d: int) -> list[tuple[int, ...]]:
    """All exponent vectors of length g summing to d, f_0-heaviest first.

    The order is f0^2, f0 f1, f0 f2, f1^2, f1 f2, f2^2 for g = 3, d = 2.
    """
    if g < 1 or d < 1:
        raise ValueError(f"need g >= 1 and d >= 1, got g={g}, d={d}")
    out = []
    for idx in combinations_with_replacement(range(g), d):
        alpha = [0] * g
        for i in idx:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def _factors(alpha: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def format_monomial(alpha: tuple[int, ...]) -> str:
    """``(1, 0, 1) -> 'f0*f2'``, ``(0, 2, 0) -> 'f1^2'``."""
    parts = []
    for i, a in enumerate(alpha):
        if a == 1:
            parts.append(f"f{i}")
        elif a > 1:
            parts.append(f"f{i}^{a}")
    return "*".join(parts) or "1"


@dataclass(frozen=True)
class MonomialProduct:
    alpha: tuple[int, ...]
    series: QSeries

    @property
    def degree(self) -> int:
        return sum(self.alpha)

    @property
    def label(self) -> str:
        return format_monomial(self.alpha)


def compute_monomials(basis: BasisSet, m: int, prec: int | None = None) -> list[MonomialProduct]:
    """q-expansions of every degree-m/2 monomial in the basis forms.

    Products are built by extending cached prefixes (f_i1 ... f_ik) one factor
    at a time, which is the same left fold as the naive product.  With
    ``prec`` given, each result is truncated to it (and must reach it).
    """
    if m < 2 or m % 2:
        raise ValueError(f"weight must be even and >= 2, got {m}")
    d = m // 2
    forms = basis.series()
    cache: dict[tuple[int, ...], QSeries] = {}

    def product(idx: tuple[int, ...]) -> QSeries:
        if len(idx) == 1:
            return forms[idx[0]]
        hit = cache.get(idx)
        if hit is None:
            hit = cache[idx] = product(idx[:-1]) * forms[idx[-1]]
        return hit

    out = []
    for alpha in enumerate_exponents(basis.genus, d):
        s = product(_factors(alpha))
        if prec is not None:
            s = s.truncate(prec)
        v = s.valuation()
        if v is not None and v < d:
            raise DataIntegrityError(
                f"monomial {format_monomial(alpha)} has valuation {v} < {d}; basis is not cuspidal"
            )
        out.append(MonomialProduct(alpha, s))
    return out
