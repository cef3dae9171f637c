"""Weierstrass-point tests at the cusp at infinity of modular curves X0(N)."""

__version__ = "0.1.0"

from .decision import Verdict, WeierstrassVerdict, decide, decide_batch  # noqa: E402
from .errors import (  # noqa: E402
    DataIntegrityError,
    InsufficientPrecision,
    MethodDisagreement,
    WeierstrassError,
)
from .qseries import QSeries  # noqa: E402

__all__ = [
    "DataIntegrityError",
    "InsufficientPrecision",
    "MethodDisagreement",
    "QSeries",
    "Verdict",
    "WeierstrassError",
    "WeierstrassVerdict",
    "decide",
    "decide_batch",
]
