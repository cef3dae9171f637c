"""Reading, writing, validating and downloading weight-2 cusp form bases.

File format (UTF-8 text)::

    level=34 weight=2 genus=3 prec=100 echelon=yes
    form 0: 1,0,0,-2,-2,...
    form 1: 0,1,0,-1,0,...

Each form line lists ``a_1, ..., a_{P-1}`` of ``sum a_n q^n`` (the constant
term of a cusp form is zero and is not written).  Extra ``key=value`` tokens
in the header are ignored; ``echelon=yes`` asks the loader to check that the
leading exponents are pairwise distinct.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import gcd
from pathlib import Path
from typing import Iterable, Sequence

from .curve_tables import GenusBand, classify
from .errors import (
    InsufficientPrecision,
    NetworkError,
    ParseError,
    UpstreamFormatError,
    ValidationError,
)
from .qseries import QSeries

__all__ = [
    "BasisSet",
    "FormRecord",
    "LmfdbClient",
    "bundled_basis",
    "bundled_levels",
    "fetch_basis",
    "format_basis",
    "load_basis",
    "parse_basis",
    "required_precision",
    "resolve_basis",
    "write_basis",
]

ENV_BASE_URL = "X0WEIERSTRASS_BASE_URL"
ENV_CACHE_DIR = "X0WEIERSTRASS_CACHE_DIR"
ENV_OFFLINE = "X0WEIERSTRASS_OFFLINE"
DEFAULT_BASE_URL = "https://www.lmfdb.org"
PRECISION_GUARD = 2

_HEADER_RE = re.compile(r"(\w+)\s*=\s*(\S+)")
_FORM_RE = re.compile(r"^form\s+(\d+)\s*:\s*(.*)$")


@dataclass(frozen=True)
class FormRecord:
    """One weight-2 cusp form: ``sum_{n>=1} a_n q^n + O(q^prec)``."""

    label: str
    coefficients: tuple[int, ...]  # a_1 .. a_{prec-1}

    @property
    def prec(self) -> int:
        return len(self.coefficients) + 1

    def series(self) -> QSeries:
        return QSeries((0, *self.coefficients))


@dataclass(frozen=True)
class BasisSet:
    """A validated basis f_0, ..., f_{g-1} of S_2(Gamma0(level))."""

    level: int
    forms: tuple[FormRecord, ...]
    weight: int = 2
    echelon: bool = False
    _series: tuple[QSeries, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        object.__setattr__(self, "_series", tuple(f.series() for f in self.forms))

    @property
    def genus(self) -> int:
        return len(self.forms)

    @property
    def prec(self) -> int:
        """Common precision of the basis (min over forms)."""
        if not self.forms:
            return 0
        return min(f.prec for f in self.forms)

    def series(self) -> list[QSeries]:
        return list(self._series)

    def truncated(self, prec: int) -> "BasisSet":
        if prec > self.prec:
            raise InsufficientPrecision(
                f"basis for level {self.level} has precision {self.prec} < {prec}",
                recommended=prec,
            )
        forms = [FormRecord(f.label, f.coefficients[: prec - 1]) for f in self.forms]
        return BasisSet(self.level, forms, self.weight, self.echelon)

    @classmethod
    def from_series(cls, level: int, series: Sequence[QSeries], *, echelon=False) -> "BasisSet":
        """Build (and validate) a basis from integral q-series."""
        forms = []
        for i, s in enumerate(series):
            if s[0] != 0:
                raise ValidationError(f"form {i} has nonzero constant term {s[0]}; not a cusp form")
            if not s.is_integral():
                raise ValidationError(f"form {i} has non-integral coefficients")
            forms.append(FormRecord(f"form {i}", tuple(int(c) for c in s.coefficients[1:])))
        basis = cls(level, forms, echelon=echelon)
        validate_basis(basis)
        return basis


# -- validation ----------------------------------------------------------


def _rank(rows: list[list[int]]) -> int:
    """Rank over Q by integral cross-multiplication elimination."""
    rows = [list(r) for r in rows if any(r)]
    rank = 0
    ncols = max((len(r) for r in rows), default=0)
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if col < len(rows[i]) and rows[i][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for i in range(rank + 1, len(rows)):
            r = rows[i]
            if col < len(r) and r[col]:
                a, b = p[col], r[col]
                new = [a * x - b * y for x, y in zip(r, p)]
                c = gcd(*new)
                rows[i] = [x // c for x in new] if c > 1 else new
        rank += 1
    return rank


def validate_basis(basis: BasisSet) -> None:
    if basis.weight != 2:
        raise ValidationError(f"only weight-2 bases are supported, got weight {basis.weight}")
    if basis.level < 1:
        raise ValidationError(f"level must be >= 1, got {basis.level}")
    band = classify(basis.level).genus_band
    g = basis.genus
    if band is GenusBand.ZERO and g:
        raise ValidationError(f"X0({basis.level}) has genus 0 but the basis has {g} forms")
    if band is GenusBand.ONE and g != 1:
        raise ValidationError(f"X0({basis.level}) has genus 1 but the basis has {g} forms")
    if band is GenusBand.GE2 and g < 2:
        raise ValidationError(f"X0({basis.level}) has genus >= 2 but the basis has {g} forms")
    if not g:
        return
    for f in basis.forms:
        if f.prec < 2:
            raise ValidationError(f"{f.label}: precision must be >= 2")
        if not any(f.coefficients):
            raise ValidationError(f"{f.label} is zero to its known precision")
    P = basis.prec
    rows = [list(f.coefficients[: P - 1]) for f in basis.forms]
    seen = set()
    for f, r in zip(basis.forms, rows):
        key = tuple(r)
        if key in seen:
            raise ValidationError(f"duplicate form {f.label}")
        seen.add(key)
    if _rank(rows) != g:
        raise ValidationError(f"the {g} forms are linearly dependent to precision {P}")
    if basis.echelon:
        leads = [next(i for i, c in enumerate(r) if c) + 1 for r in rows]
        if len(set(leads)) != len(leads):
            raise ValidationError(f"basis claims echelon form but leading exponents repeat: {leads}")


# -- text format ---------------------------------------------------------


def parse_basis(text: str, *, source: str = "<string>") -> BasisSet:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(f"{source}: empty basis file")
    header = dict(_HEADER_RE.findall(lines[0]))
    try:
        level = int(header["level"])
        weight = int(header["weight"])
        genus = int(header["genus"])
        prec = int(header["prec"])
    except KeyError as exc:
        raise ParseError(f"{source}: header lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParseError(f"{source}: bad header value ({exc})") from None
    echelon = header.get("echelon", "no").lower() in ("yes", "true", "1")

    forms = []
    for lineno, ln in enumerate(lines[1:], start=2):
        m = _FORM_RE.match(ln)
        if not m:
            raise ParseError(f"{source}:{lineno}: expected 'form <index>: a1,a2,...'")
        index = int(m.group(1))
        if index != len(forms):
            raise ParseError(f"{source}:{lineno}: form index {index} out of order")
        body = m.group(2).strip()
        try:
            coeffs = tuple(int(tok) for tok in body.split(",")) if body else ()
        except ValueError:
            raise ParseError(f"{source}:{lineno}: coefficients must be decimal integers") from None
        forms.append(FormRecord(f"form {index}", coeffs))

    if len(forms) != genus:
        raise ValidationError(f"{source}: header says genus={genus} but {len(forms)} forms follow")
    if forms and min(f.prec for f in forms) != prec:
        raise ValidationError(f"{source}: header prec={prec} disagrees with the form lengths")
    if weight != 2:
        raise ValidationError(f"{source}: weight must be 2, got {weight}")
    basis = BasisSet(level, forms, weight, echelon)
    validate_basis(basis)
    return basis


def format_basis(basis: BasisSet) -> str:
    head = f"level={basis.level} weight={basis.weight} genus={basis.genus} prec={basis.prec}"
    if basis.echelon:
        head += " echelon=yes"
    lines = [head]
    for i, f in enumerate(basis.forms):
        lines.append(f"form {i}: " + ",".join(map(str, f.coefficients)))
    return "\n".join(lines) + "\n"


def load_basis(path: str | os.PathLike) -> BasisSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_basis(text, source=str(path))


def write_basis(basis: BasisSet, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(format_basis(basis), encoding="utf-8")
    tmp.replace(path)
    return path


# -- bundled fixtures ----------------------------------------------------


def _fixture_dir():
    return resources.files(__package__).joinpath("data").joinpath("bases")


def _fixture_name(level: int) -> str:
    return f"level_{level:03d}.txt"


def bundled_levels() -> list[int]:
    levels = []
    for entry in _fixture_dir().iterdir():
        m = re.fullmatch(r"level_(\d+)\.txt", entry.name)
        if m:
            levels.append(int(m.group(1)))
    return sorted(levels)


def bundled_basis(level: int) -> BasisSet | None:
    entry = _fixture_dir().joinpath(_fixture_name(level))
    if not entry.is_file():
        return None
    basis = parse_basis(entry.read_text(encoding="utf-8"), source=entry.name)
    if basis.level != level:
        raise ValidationError(f"{entry.name} declares level {basis.level}")
    return basis


# -- precision -----------------------------------------------------------


def required_precision(g: int, m: int, method: str = "both") -> int:
    """Smallest weight-2 basis precision that keeps every later read in range.

    A product of d = m/2 forms, each known mod q^P with valuation >= 1, is
    known mod q^(P + d - 1) (see :mod:`x0weierstrass.qseries`).  The
    coefficient matrix reads exponents up to B = m/2 + m(g-1), so P >= B - d + 2.
    The Wronskian of the reduced rows F_u (valuations i_u, precision Pf) is
    q^(sum i_u) times a determinant whose constant term is a Vandermonde
    product; it is decided once Pf > i_t, and i_t <= B, so the same bound
    serves both methods.
    """
    if m < 2 or m % 2:
        raise ValueError(f"weight must be even and >= 2, got {m}")
    if g < 1:
        raise ValueError(f"genus must be >= 1, got {g}")
    if method not in ("echelon", "wronskian", "both"):
        raise ValueError(f"unknown method {method!r}")
    d = m // 2
    B = d + m * (g - 1)
    return B - d + 2 + PRECISION_GUARD


# -- network -------------------------------------------------------------


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _echelon_integral(series: list[QSeries], prec: int) -> list[QSeries]:
    """Reduced row echelon form over Q, each row rescaled to primitive integers."""
    rows = [[Fraction(c) for c in s.coefficients[:prec]] for s in series]
    pivots: list[tuple[int, list[Fraction]]] = []
    for r in rows:
        for col, p in pivots:
            if r[col]:
                f = r[col]
                r = [x - f * y for x, y in zip(r, p)]
        lead = next((i for i, x in enumerate(r) if x), None)
        if lead is None:
            raise UpstreamFormatError("upstream forms are linearly dependent")
        inv = 1 / r[lead]
        r = [x * inv for x in r]
        for k, (col, p) in enumerate(pivots):
            if p[lead]:
                f = p[lead]
                pivots[k] = (col, [x - f * y for x, y in zip(p, r)])
        pivots.append((lead, r))
    pivots.sort(key=lambda t: t[0])
    out = []
    for _, r in pivots:
        den = 1
        for x in r:
            den = den * x.denominator // gcd(den, x.denominator)
        ints = [int(x * den) for x in r]
        c = gcd(*ints)
        out.append(QSeries([x // c for x in ints]))
    return out


class LmfdbClient:
    """Sequential, rate-limited reader of newform q-expansions.

    Expects an LMFDB-style JSON API: ``GET {base}/api/mf_hecke_nf/`` with
    query ``level``, ``weight``, ``char_orbit_index`` returning
    ``{"data": [{"label": ..., "an": [[...], ...]}, ...], "next": url|null}``
    where ``an[n-1]`` lists the coordinates of ``a_n`` in a Q-basis of the
    Hecke field.  Coordinate sequences span the same rational space as the
    Galois orbit of the newform.
    """

    def __init__(self, base_url: str | None = None, *, min_interval: float = 0.5, timeout: float = 30.0):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL) or DEFAULT_BASE_URL).rstrip("/")
        self.min_interval = min_interval
        self.timeout = timeout
        self._last = 0.0
        self._lock = threading.Lock()

    def _get_json(self, url: str):
        with self._lock:
            wait = self._last + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            try:
                with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                    payload = resp.read()
            except urllib.error.HTTPError as exc:
                raise NetworkError(f"GET {url} failed with HTTP {exc.code}") from exc
            except (urllib.error.URLError, OSError) as exc:
                raise NetworkError(f"GET {url} failed: {exc}") from exc
            finally:
                self._last = time.monotonic()
        try:
            return json.loads(payload)
        except ValueError as exc:
            raise UpstreamFormatError(f"GET {url}: response is not JSON") from exc

    def newform_expansions(self, level: int) -> list[list[int]]:
        """Rational coefficient sequences ``[a_1, a_2, ...]`` of newforms at ``level``."""
        query = urllib.parse.urlencode(
            {"level": level, "weight": 2, "char_orbit_index": 1, "_fields": "label,an", "_format": "json"}
        )
        url = f"{self.base_url}/api/mf_hecke_nf/?{query}"
        out = []
        while url:
            doc = self._get_json(url)
            if not isinstance(doc, dict) or not isinstance(doc.get("data"), list):
                raise UpstreamFormatError(f"{url}: missing 'data' list")
            for rec in doc["data"]:
                out.extend(_coordinate_sequences(rec))
            nxt = doc.get("next")
            url = urllib.parse.urljoin(url, nxt) if nxt else None
        return out


def _coordinate_sequences(rec) -> list[list[int]]:
    label = rec.get("label", "?") if isinstance(rec, dict) else "?"
    an = rec.get("an") if isinstance(rec, dict) else None
    if not isinstance(an, list) or not an:
        raise UpstreamFormatError(f"newform {label}: no coefficient list 'an'")
    rows = []
    for n, a in enumerate(an, start=1):
        a = [a] if isinstance(a, int) else a
        if not isinstance(a, list) or not all(isinstance(x, int) for x in a):
            raise UpstreamFormatError(f"newform {label}: a_{n} is not a list of integers")
        rows.append(a)
    dim = len(rows[0])
    if any(len(r) != dim for r in rows):
        raise UpstreamFormatError(f"newform {label}: ragged coefficient coordinates")
    return [[r[k] for r in rows] for k in range(dim)]


def _default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "x0weierstrass"


def _offline_default() -> bool:
    return os.environ.get(ENV_OFFLINE, "").lower() in ("1", "yes", "true")


def fetch_basis(
    level: int,
    min_prec: int,
    *,
    base_url: str | None = None,
    cache_dir: str | os.PathLike | None = None,
    offline: bool | None = None,
    client: LmfdbClient | None = None,
) -> BasisSet:
    """Assemble S_2(Gamma0(level)) from newforms at every divisor, with caching.

    The space is spanned by ``g(q^e)`` for newform coordinate sequences ``g``
    at level M | level and e | level/M.  Results are stored in ``cache_dir``
    in the native text format; a cached basis of sufficient precision is
    returned without touching the network.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    cache = Path(cache_dir) if cache_dir is not None else _default_cache_dir()
    offline = _offline_default() if offline is None else offline
    cached = cache / _fixture_name(level)
    if cached.is_file():
        basis = load_basis(cached)
        if basis.genus == 0 or basis.prec >= min_prec:
            return basis
    if classify(level).genus_band is GenusBand.ZERO:
        basis = BasisSet(level, ())
        write_basis(basis, cached)
        return basis
    if offline:
        raise NetworkError(f"no cached basis for level {level} and network use is disabled")

    client = client or LmfdbClient(base_url)
    series: list[QSeries] = []
    prec = None
    for M in _divisors(level):
        if classify(M).genus_band is GenusBand.ZERO:
            continue
        for seq in client.newform_expansions(M):
            P = len(seq) + 1
            for e in _divisors(level // M):
                # g(q^e) is known for exponents < e*(P-1) + 1
                Pe = e * (P - 1) + 1
                coeffs = {e * n: a for n, a in enumerate(seq, start=1)}
                series.append(QSeries(coeffs, Pe))
                prec = Pe if prec is None else min(prec, Pe)
    if not series:
        raise UpstreamFormatError(f"upstream returned no newforms for any divisor of {level}")
    if prec < min_prec:
        raise InsufficientPrecision(
            f"upstream provides q-expansions to precision {prec} < {min_prec}", recommended=min_prec
        )
    rows = _echelon_integral([s.truncate(prec) for s in series], prec)
    basis = BasisSet.from_series(level, rows, echelon=True)
    write_basis(basis, cached)
    return basis


def resolve_basis(
    level: int,
    min_prec: int = 0,
    *,
    basis_file: str | os.PathLike | None = None,
    offline: bool | None = None,
    cache_dir: str | os.PathLike | None = None,
    base_url: str | None = None,
) -> BasisSet:
    """Basis for ``level``: explicit file, else bundled fixture, else cache/network."""
    if basis_file is not None:
        basis = load_basis(basis_file)
        if basis.level != level:
            raise ValidationError(f"{basis_file} is for level {basis.level}, not {level}")
        return basis
    basis = bundled_basis(level)
    offline = _offline_default() if offline is None else offline
    if basis is not None and (basis.genus == 0 or basis.prec >= min_prec or offline):
        return basis
    return fetch_basis(level, min_prec, base_url=base_url, cache_dir=cache_dir, offline=offline)


def iter_bundled() -> Iterable[BasisSet]:
    for N in bundled_levels():
        yield bundled_basis(N)
