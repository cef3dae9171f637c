"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class WeierstrassError(Exception):
    """Base class for all errors raised by x0weierstrass."""


class InsufficientPrecision(WeierstrassError):
    """The available q-expansion precision cannot settle the computation.

    ``recommended`` carries the basis precision to re-run (or re-fetch) with,
    when the raising code is able to compute one.
    """

    def __init__(self, message: str, recommended: int | None = None):
        super().__init__(message)
        self.recommended = recommended


class PrecisionExceeded(InsufficientPrecision):
    """A coefficient at or beyond the known precision was requested."""


class ParseError(WeierstrassError):
    pass


class ValidationError(WeierstrassError):
    pass


class NetworkError(WeierstrassError):
    pass


class UpstreamFormatError(WeierstrassError):
    pass


class DataIntegrityError(WeierstrassError):
    """A mathematical invariant failed; the input basis is corrupt."""


class DegenerateInput(DataIntegrityError):
    pass


class MethodDisagreement(WeierstrassError):
    """Echelon and Wronskian criteria returned different verdicts."""
