"""Genus band and hyperelliptic status of X0(N), plus dimension counts.

Genus zero and genus one levels and the non-hyperelliptic levels of genus
at least two are fixed finite tables (Ogg's classification).  The exact genus
for ``g >= 2`` is never computed here: it is the number of forms in the
ingested weight-2 basis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb

__all__ = [
    "GENUS_ONE_LEVELS",
    "GENUS_ZERO_LEVELS",
    "CurveClass",
    "GenusBand",
    "NONHYPERELLIPTIC_SMALL_LEVELS",
    "classify",
    "dim_smh",
    "monomial_count",
    "nonhyperelliptic_levels",
]

GENUS_ZERO_LEVELS = frozenset([*range(1, 11), 12, 13, 16, 18, 25])
GENUS_ONE_LEVELS = frozenset([11, 14, 15, 17, 19, 20, 21, 24, 27, 32, 36, 49])
# below 72; every N >= 72 is non-hyperelliptic
NONHYPERELLIPTIC_SMALL_LEVELS = frozenset(
    [34, 38, 42, 43, 44, 45, *range(51, 59), *range(60, 71)]
)
_ALL_NONHYPERELLIPTIC_FROM = 72


class GenusBand(str, enum.Enum):
    ZERO = "zero"
    ONE = "one"
    GE2 = "ge2"


@dataclass(frozen=True)
class CurveClass:
    level: int
    genus_band: GenusBand
    nonhyperelliptic: bool

    @property
    def hyperelliptic(self) -> bool:
        return self.genus_band is GenusBand.GE2 and not self.nonhyperelliptic


def classify(N: int) -> CurveClass:
    if N < 1:
        raise ValueError(f"level must be >= 1, got {N}")
    if N in GENUS_ZERO_LEVELS:
        return CurveClass(N, GenusBand.ZERO, False)
    if N in GENUS_ONE_LEVELS:
        return CurveClass(N, GenusBand.ONE, False)
    nonhyp = N in NONHYPERELLIPTIC_SMALL_LEVELS or N >= _ALL_NONHYPERELLIPTIC_FROM
    return CurveClass(N, GenusBand.GE2, nonhyp)


def nonhyperelliptic_levels(upto: int) -> list[int]:
    return [N for N in range(1, upto + 1) if classify(N).nonhyperelliptic]


def _check_weight(m: int) -> None:
    if m < 2 or m % 2:
        raise ValueError(f"weight must be even and >= 2, got {m}")


def dim_smh(g: int, m: int) -> int:
    """Dimension of the cusp forms of weight m giving holomorphic m/2-differentials."""
    _check_weight(m)
    if g < 0:
        raise ValueError(f"genus must be >= 0, got {g}")
    if g == 0:
        return 0
    if m == 2 or g == 1:
        return g
    return (m - 1) * (g - 1)


def monomial_count(g: int, m: int) -> int:
    """Number of degree-m/2 monomials in g weight-2 forms."""
    _check_weight(m)
    if g < 1:
        raise ValueError(f"genus must be >= 1, got {g}")
    return comb(g + m // 2 - 1, m // 2)
