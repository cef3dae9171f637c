"""Truncated q-expansions with exact rational coefficients.

A :class:`QSeries` is ``sum_{n < prec} a_n q^n + O(q^prec)``.  Every
operation computes the precision it can actually guarantee, and reading a
coefficient at or past that precision raises :class:`PrecisionExceeded`
instead of returning a silent zero.

Precision of a product.  Write ``A = a + O(q^Pa)`` and ``B = b + O(q^Pb)``
with valuations ``va``, ``vb`` (for a series that is zero to known precision
the valuation bound is its precision).  The unknown tail of ``A`` only meets
coefficients of ``B`` of index ``>= vb``, so it contaminates ``AB`` from
``q^(Pa + vb)`` on; symmetrically for ``B``.  Hence ``AB`` is known modulo
``q^min(Pa + vb, Pb + va)``, which is never smaller than ``min(Pa, Pb)``.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from numbers import Rational
from typing import Iterable, Mapping

from .errors import PrecisionExceeded

__all__ = ["QSeries"]

_ZERO = Fraction(0)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"exact rational coefficient expected, got {type(x).__name__}")


class QSeries:
    """Immutable truncated q-expansion ``sum a_n q^n + O(q^prec)``.

    Coefficients are stored densely for exponents ``0 <= n < prec``; zero
    coefficients carry no information beyond the precision, so two series
    compare equal exactly when they agree on ``prec`` and every coefficient.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable | Mapping[int, object] = (), prec: int | None = None):
        if isinstance(coeffs, Mapping):
            items = {int(n): _frac(v) for n, v in coeffs.items()}
            if any(n < 0 for n in items):
                raise ValueError("negative exponent")
            if prec is None:
                raise ValueError("prec is required when coefficients are given as a mapping")
            dense = [_ZERO] * prec
            for n, v in items.items():
                if n < prec:
                    dense[n] = v
        else:
            dense = [_frac(v) for v in coeffs]
            if prec is None:
                prec = len(dense)
            dense = dense[:prec] + [_ZERO] * (prec - len(dense))
        if prec < 1:
            raise ValueError(f"prec must be >= 1, got {prec}")
        self._c = tuple(dense)

    @classmethod
    def _raw(cls, dense: tuple) -> "QSeries":
        obj = object.__new__(cls)
        obj._c = dense
        return obj

    @classmethod
    def zero(cls, prec: int) -> "QSeries":
        return cls((), prec)

    @classmethod
    def monomial(cls, n: int, prec: int, coeff=1) -> "QSeries":
        """``coeff * q^n + O(q^prec)``."""
        return cls({n: coeff}, prec)

    # -- inspection -------------------------------------------------------

    @property
    def prec(self) -> int:
        return len(self._c)

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        """Dense coefficient tuple ``(a_0, ..., a_{prec-1})``."""
        return self._c

    def terms(self) -> dict[int, Fraction]:
        """Nonzero coefficients keyed by exponent."""
        return {n: c for n, c in enumerate(self._c) if c}

    def __getitem__(self, n: int) -> Fraction:
        if n >= len(self._c):
            raise PrecisionExceeded(
                f"coefficient of q^{n} requested but the series is only known mod q^{len(self._c)}"
            )
        if n < 0:
            return _ZERO
        return self._c[n]

    def coefficient(self, n: int) -> Fraction:
        return self[n]

    def valuation(self) -> int | None:
        """Smallest exponent with a nonzero coefficient.

        ``None`` means the series vanishes to its known precision, i.e. the
        valuation is only known to be ``>= prec``.
        """
        for n, c in enumerate(self._c):
            if c:
                return n
        return None

    def _val_bound(self) -> int:
        v = self.valuation()
        return len(self._c) if v is None else v

    def is_zero(self) -> bool:
        """True if every known coefficient vanishes."""
        return not any(self._c)

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self._c)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "QSeries") -> "QSeries":
        if not isinstance(other, QSeries):
            return NotImplemented
        p = min(self.prec, other.prec)
        return QSeries._raw(tuple(a + b for a, b in zip(self._c[:p], other._c[:p])))

    def __sub__(self, other: "QSeries") -> "QSeries":
        if not isinstance(other, QSeries):
            return NotImplemented
        p = min(self.prec, other.prec)
        return QSeries._raw(tuple(a - b for a, b in zip(self._c[:p], other._c[:p])))

    def __neg__(self) -> "QSeries":
        return QSeries._raw(tuple(-a for a in self._c))

    def scale(self, c) -> "QSeries":
        c = _frac(c)
        return QSeries._raw(tuple(c * a for a in self._c))

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return self._mul_series(other)
        if isinstance(other, (int, Rational)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Rational)):
            return self.scale(other)
        return NotImplemented

    def _mul_series(self, other: "QSeries") -> "QSeries":
        prec = min(self.prec + other._val_bound(), other.prec + self._val_bound())
        # clear denominators so the convolution runs on machine-friendly ints
        da = lcm(*(c.denominator for c in self._c))
        db = lcm(*(c.denominator for c in other._c))
        a = [(n, int(c * da)) for n, c in enumerate(self._c) if c]
        b = [(n, int(c * db)) for n, c in enumerate(other._c) if c]
        acc = [0] * prec
        for i, x in a:
            if i >= prec:
                break
            for j, y in b:
                k = i + j
                if k >= prec:
                    break
                acc[k] += x * y
        den = da * db
        if den == 1:
            return QSeries._raw(tuple(Fraction(v) for v in acc))
        return QSeries._raw(tuple(Fraction(v, den) for v in acc))

    def __pow__(self, e: int) -> "QSeries":
        if not isinstance(e, int) or e < 0:
            return NotImplemented
        if e == 0:
            return QSeries.monomial(0, self.prec)
        result = self
        for _ in range(e - 1):
            result = result * self
        return result

    def theta(self) -> "QSeries":
        """``q d/dq``: the coefficient of ``q^n`` becomes ``n a_n``."""
        return QSeries._raw(tuple(n * a for n, a in enumerate(self._c)))

    def truncate(self, prec: int) -> "QSeries":
        """Forget everything from ``q^prec`` on."""
        if prec < 1:
            raise ValueError(f"prec must be >= 1, got {prec}")
        if prec > self.prec:
            raise PrecisionExceeded(f"cannot raise precision from {self.prec} to {prec}")
        return QSeries._raw(self._c[:prec])

    # -- comparison / display --------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        return hash(self._c)

    def format(self, var: str = "q", *, big_oh: bool = True, max_terms: int | None = None) -> str:
        parts = []
        for n, c in self.terms().items():
            if max_terms is not None and len(parts) >= max_terms:
                parts.append("...")
                break
            mag = abs(c)
            if n == 0:
                body = str(mag)
            else:
                mono = var if n == 1 else f"{var}^{n}"
                body = mono if mag == 1 else f"{mag}*{mono}"
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f"{sign} {body}")
        if big_oh and (max_terms is None or parts[-1:] != ["..."]):
            parts.append(f"+ O({var}^{self.prec})" if parts else f"O({var}^{self.prec})")
        return " ".join(parts) if parts else "0"

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"QSeries({self.format()})"
