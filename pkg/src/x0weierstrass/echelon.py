"""Integral row reduction of the monomial coefficient matrix.

Rows are kept as integer vectors ``[a_0, ..., a_{W-1} | T_1, ..., T_n]``: the
q-expansion of a combination of monomials through the working precision W,
followed by its coefficients on the monomials.  Elimination only ever replaces
a row by an integral combination of two rows and then divides out the content
of the whole augmented row, so ``series = T . monomials`` holds exactly at
every step and both halves stay integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, inf, lcm
from typing import Sequence

from .basis_io import required_precision
from .errors import DataIntegrityError, DegenerateInput, InsufficientPrecision
from .monomials import MonomialProduct, format_monomial
from .qseries import QSeries

__all__ = ["CoeffMatrix", "EchelonResult", "build_matrix", "reduce", "format_combination"]


def column_count(g: int, m: int) -> int:
    return m // 2 + m * (g - 1)


@dataclass(frozen=True)
class CoeffMatrix:
    """Coefficients of q^1 .. q^B of each monomial, B = m/2 + m(g-1)."""

    g: int
    m: int
    labels: tuple[tuple[int, ...], ...]
    rows: tuple[tuple[Fraction, ...], ...]

    @property
    def ncols(self) -> int:
        return column_count(self.g, self.m)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), self.ncols


@dataclass(frozen=True)
class EchelonResult:
    g: int
    m: int
    pivots: tuple[int, ...]
    reduced_rows: tuple[QSeries, ...]
    transform: tuple[tuple[int, ...], ...]
    labels: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def working_prec(self) -> int:
        return min(r.prec for r in self.reduced_rows)

    def normalized(self) -> list[tuple[tuple[int, ...], QSeries]]:
        """(combination, series) per row with a positive leading coefficient."""
        out = []
        for t, s, p in zip(self.transform, self.reduced_rows, self.pivots):
            if s[p] < 0:
                t, s = tuple(-x for x in t), -s
            out.append((t, s))
        return out


def format_combination(coeffs: Sequence[int], labels: Sequence[tuple[int, ...]]) -> str:
    """``(1, -1), (f0*f2, f1^2) -> '-f1^2 + f0*f2'``.

    Terms are written in graded reverse-lex order (f0^2, f0*f1, f1^2, f0*f2,
    ...), whatever order the monomials were eliminated in.
    """
    parts = []
    for c, alpha in sorted(zip(coeffs, labels), key=lambda ca: ca[1][::-1]):
        if not c:
            continue
        mono = format_monomial(alpha)
        body = mono if abs(c) == 1 else f"{abs(c)}*{mono}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts) or "0"


def build_matrix(monomials: Sequence[MonomialProduct], g: int, m: int) -> CoeffMatrix:
    B = column_count(g, m)
    for mono in monomials:
        if mono.series.prec <= B:
            raise InsufficientPrecision(
                f"monomial {mono.label} is known mod q^{mono.series.prec}; exponents up to {B} are needed",
                recommended=required_precision(g, m),
            )
    rows = tuple(tuple(mono.series[e] for e in range(1, B + 1)) for mono in monomials)
    return CoeffMatrix(g, m, tuple(mono.alpha for mono in monomials), rows)


def _strip(row: list[int]) -> list[int]:
    c = gcd(*row)
    if c > 1:
        return [x // c for x in row]
    return row


def _lead(row: list[int], B: int) -> float:
    for e in range(1, B + 1):
        if row[e]:
            return e
    return inf


def reduce(matrix: CoeffMatrix, monomials: Sequence[MonomialProduct]) -> EchelonResult:
    """Sort-and-cancel elimination to echelon form.

    The rows are kept in a list that is stably sorted by leading exponent,
    so rows with equal leads stay in their current relative order (initially
    the monomial order).  The first adjacent pair with equal leading
    exponents is cancelled by replacing the later row with
    ``lead(row) * pred - lead(pred) * row`` (multipliers divided by their
    gcd) and removing its content; then the list is sorted again.  This
    repeats until all nonzero rows have distinct leading exponents, and zero
    rows are dropped.
    """
    g, m, B = matrix.g, matrix.m, matrix.ncols
    n = len(monomials)
    if n != len(matrix.rows):
        raise ValueError("matrix and monomial list differ in length")
    for row, mono in zip(matrix.rows, monomials):
        if row != tuple(mono.series[e] for e in range(1, B + 1)):
            raise ValueError(f"matrix row does not match monomial {mono.label}")
    W = min(mono.series.prec for mono in monomials)
    if W <= B:
        raise InsufficientPrecision(
            f"working precision {W} does not exceed {B}", recommended=required_precision(g, m)
        )

    rows: list[list[int]] = []
    for i, mono in enumerate(monomials):
        coeffs = mono.series.coefficients[:W]
        den = lcm(*(c.denominator for c in coeffs))
        aug = [int(c * den) for c in coeffs] + [den if j == i else 0 for j in range(n)]
        rows.append(_strip(aug))
    leads = [_lead(r, B) for r in rows]

    order = list(range(n))
    while True:
        order.sort(key=lambda k: leads[k])
        pair = next(
            ((p, c) for p, c in zip(order, order[1:]) if leads[c] != inf and leads[p] == leads[c]),
            None,
        )
        if pair is None:
            break
        prev, cur = pair
        L = leads[cur]
        a, b = rows[prev][L], rows[cur][L]
        c = gcd(a, b)
        a, b = a // c, b // c
        rows[cur] = _strip([b * x - a * y for x, y in zip(rows[prev], rows[cur])])
        leads[cur] = _lead(rows[cur], B)

    kept = sorted((k for k in range(n) if leads[k] != inf), key=lambda k: leads[k])
    for k in range(n):
        if leads[k] == inf and any(rows[k][:W]):
            raise DataIntegrityError(
                "a combination of monomials vanishes through q^%d but not to working precision %d" % (B, W)
            )
    if not kept:
        raise DegenerateInput("every monomial vanishes through the matrix columns")

    pivots = tuple(int(leads[k]) for k in kept)
    lo, hi = m // 2, column_count(g, m)
    if pivots[0] < lo or pivots[-1] > hi:
        raise DataIntegrityError(f"pivots {pivots} leave the admissible range [{lo}, {hi}]")
    return EchelonResult(
        g=g,
        m=m,
        pivots=pivots,
        reduced_rows=tuple(QSeries(rows[k][:W]) for k in kept),
        transform=tuple(tuple(rows[k][W:]) for k in kept),
        labels=matrix.labels,
    )
