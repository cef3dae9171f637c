"""Wronskians of q-expansions and the Wronskian form of the Weierstrass test.

Rows of the matrix are ``theta^j`` of the inputs (``theta = q d/dq``), which
differs from the ``d/dz`` normalisation by a nonzero constant and leaves the
order of vanishing alone.

The determinant is taken column-content first: column ``u`` is divided by
``q^v_u`` (``v_u`` its valuation, which ``theta`` never lowers) so that the
Wronskian is ``q^V`` times the determinant of a matrix of series known modulo
``q^R``, ``R = min(prec_u - v_u)``.  That determinant is computed by
elimination over ``Q[q]/(q^R)`` with the pivot of least valuation chosen at
each step; every quotient of entries then has nonnegative valuation, so no
step loses precision below ``q^R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DataIntegrityError, InsufficientPrecision
from .qseries import QSeries

__all__ = [
    "WronskianCheck",
    "WronskianSeries",
    "check_by_wronskian",
    "weierstrass_by_wronskian",
    "weierstrass_threshold",
    "wronskian",
]


@dataclass(frozen=True)
class WronskianSeries:
    series: QSeries
    t: int
    weight: int | None = None

    def valuation(self) -> int | None:
        return self.series.valuation()


# -- truncated arithmetic modulo q^R on plain coefficient lists -----------


def _val(a: list[Fraction]) -> int | None:
    for n, c in enumerate(a):
        if c:
            return n
    return None


def _mul(a: list[Fraction], b: list[Fraction], R: int) -> list[Fraction]:
    out = [Fraction(0)] * R
    for i, x in enumerate(a[:R]):
        if not x:
            continue
        for j, y in enumerate(b[: R - i]):
            if y:
                out[i + j] += x * y
    return out


def _unit_inverse(u: list[Fraction], R: int) -> list[Fraction]:
    inv = [Fraction(0)] * R
    inv[0] = 1 / u[0]
    for n in range(1, R):
        s = sum((u[k] * inv[n - k] for k in range(1, min(n, len(u) - 1) + 1)), Fraction(0))
        inv[n] = -s * inv[0]
    return inv


def _det_mod(matrix: list[list[list[Fraction]]], R: int) -> tuple[int, list[Fraction], int]:
    """Determinant of a square matrix over Q[q]/(q^R).

    Returns ``(sign, pivots_product, known)``: the determinant equals
    ``sign * pivots_product`` modulo ``q^known``.  When the elimination stalls
    on an all-zero block the product is zero and ``known`` is the valuation
    bound this proves.
    """
    a = [[list(e) for e in row] for row in matrix]
    n = len(a)
    sign = 1
    pivots: list[list[Fraction]] = []
    vals: list[int] = []
    rows = list(range(n))
    cols = list(range(n))
    for _ in range(n):
        best = None
        for r in rows:
            for c in cols:
                v = _val(a[r][c])
                if v is not None and (best is None or v < best[0]):
                    best = (v, r, c)
        if best is None:
            # the remaining k x k block vanishes mod q^R, so its determinant mod q^(kR)
            return sign, [Fraction(0)] * R, sum(vals) + len(rows) * R
        v, pr, pc = best
        # cycling the pivot to the front of the remaining block costs ri + ci swaps
        ri, ci = rows.index(pr), cols.index(pc)
        if (ri + ci) % 2:
            sign = -sign
        rows.remove(pr)
        cols.remove(pc)
        piv = a[pr][pc]
        inv = _unit_inverse(piv[v:], R - v)
        for r in rows:
            w = _val(a[r][pc])
            if w is None:
                continue
            # a[r][pc] / piv, known modulo q^(R - v)
            ratio = _mul(a[r][pc][v:], inv, R - v)
            for c in cols:
                if not any(a[pr][c]):
                    continue
                prod = _mul(ratio, a[pr][c], R)
                a[r][c] = [x - y for x, y in zip(a[r][c], prod)]
            a[r][pc] = [Fraction(0)] * R
        pivots.append(piv)
        vals.append(v)
    # each pivot is known mod q^R; the product loses the largest pivot valuation
    known = R + sum(vals) - max(vals, default=0)
    total = [Fraction(1)] + [Fraction(0)] * (known - 1)
    for p in pivots:
        total = _mul(total, p, known)
    return sign, total, known


def wronskian(forms: Sequence[QSeries], m: int | None = None, *, prec: int | None = None) -> WronskianSeries:
    """det[theta^j f_u], j = 0..t-1, to the precision the inputs support.

    With ``m`` given, ``weight`` records t(m + t - 1).  ``prec`` caps the
    precision of the result (the work grows quickly with it); at least one
    coefficient past the column contents is always computed.
    """
    t = len(forms)
    if t < 1:
        raise ValueError("the Wronskian needs at least one form")
    weight = t * (m + t - 1) if m is not None else None
    shifts = [f._val_bound() for f in forms]
    V = sum(shifts)
    R = min(f.prec - s for f, s in zip(forms, shifts))
    if prec is not None:
        R = min(R, max(prec - V, 1))
    if R < 1:
        # some input vanishes to its full precision, so V >= 1 and W is a multiple of q^V
        return WronskianSeries(QSeries.zero(V), t, weight)
    # entry (j, u) is theta^j f_u / q^v_u; theta^j multiplies a_n by n^j
    matrix = [
        [
            [n**j * c for n, c in enumerate(f.coefficients[s : s + R], start=s)]
            for f, s in zip(forms, shifts)
        ]
        for j in range(t)
    ]
    sign, det, known = _det_mod(matrix, R)
    coeffs = [Fraction(0)] * V + [sign * c for c in det[:known]]
    return WronskianSeries(QSeries(coeffs, V + known), t, weight)


def weierstrass_threshold(t: int, m: int) -> int:
    """Smallest q-order of the Wronskian that makes the cusp a Weierstrass point."""
    return t * (m + t - 1) // 2 + 1


@dataclass(frozen=True)
class WronskianCheck:
    order: int
    threshold: int
    is_weierstrass: bool
    exact: bool  # False when only a lower bound on the order is known


def check_by_wronskian(result, m: int) -> WronskianCheck:
    """Order of the Wronskian of the reduced rows against the threshold."""
    from .curve_tables import dim_smh

    if m != result.m:
        raise ValueError(f"echelon result was computed for weight {result.m}, not {m}")
    if result.g <= 1:
        raise ValueError("curves of genus <= 1 have no Weierstrass points")
    t = result.rank
    if t != dim_smh(result.g, m):
        raise DataIntegrityError(f"rank {t} differs from the expected dimension {dim_smh(result.g, m)}")
    T = weierstrass_threshold(t, m)
    W = wronskian(result.reduced_rows, m, prec=T)
    v = W.valuation()
    if v is not None:
        return WronskianCheck(v, T, v >= T, True)
    if W.series.prec >= T:
        return WronskianCheck(W.series.prec, T, True, False)
    raise InsufficientPrecision(
        f"Wronskian vanishes mod q^{W.series.prec} but the threshold is q^{T}",
        recommended=None,
    )


def weierstrass_by_wronskian(result, m: int) -> bool:
    """True iff ord_q W(reduced rows) >= t(m + t - 1)/2 + 1."""
    return check_by_wronskian(result, m).is_weierstrass
