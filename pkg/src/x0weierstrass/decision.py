"""Full verdict for one (level, weight) pair, and grids of them."""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .basis_io import BasisSet, required_precision, resolve_basis
from .curve_tables import GenusBand, classify, dim_smh
from .echelon import EchelonResult, build_matrix, format_combination, reduce
from .errors import DataIntegrityError, InsufficientPrecision, MethodDisagreement, WeierstrassError
from .monomials import compute_monomials
from .wronskian import check_by_wronskian

__all__ = [
    "BatchSummary",
    "METHODS",
    "Verdict",
    "WeierstrassVerdict",
    "decide",
    "decide_batch",
    "gap_free_pivots",
]

log = logging.getLogger(__name__)

METHODS = ("echelon", "wronskian", "both")


class Verdict(str, enum.Enum):
    IS_WEIERSTRASS = "IsWeierstrass"
    NOT_WEIERSTRASS = "NotWeierstrass"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class WeierstrassVerdict:
    level: int
    weight: int
    genus: int | None
    t: int | None
    pivots: tuple[int, ...]
    verdict: Verdict
    reason: str = ""
    methods_run: tuple[str, ...] = ()
    agreement: bool = True
    precision_used: int = 0
    wronskian_order: int | None = None
    wronskian_threshold: int | None = None
    # (combination, expansion) per reduced row; filled only on request
    rows: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    @property
    def is_weierstrass(self) -> bool | None:
        if self.verdict is Verdict.NOT_APPLICABLE:
            return None
        return self.verdict is Verdict.IS_WEIERSTRASS

    @property
    def last_pivot_threshold(self) -> int | None:
        """Smallest last pivot that means a Weierstrass point: m/2 + t."""
        if self.t is None or self.verdict is Verdict.NOT_APPLICABLE:
            return None
        return self.weight // 2 + self.t

    def to_record(self) -> dict:
        return {
            "level": self.level,
            "weight": self.weight,
            "genus": self.genus,
            "t": self.t,
            "pivots": ",".join(map(str, self.pivots)),
            "verdict": self.verdict.value,
            "methods": "+".join(self.methods_run),
            "agreement": self.agreement,
            "status": "ok",
            "reason": self.reason,
            "precision_used": self.precision_used,
            "wronskian_order": self.wronskian_order,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "WeierstrassVerdict":
        def opt_int(x):
            return None if x in (None, "") else int(x)

        pivots = str(rec.get("pivots") or "")
        methods = str(rec.get("methods") or "")
        agreement = rec.get("agreement", True)
        if isinstance(agreement, str):
            agreement = agreement.strip().lower() == "true"
        level, weight, g = int(rec["level"]), int(rec["weight"]), opt_int(rec.get("genus"))
        t = opt_int(rec.get("t"))
        verdict = Verdict(rec["verdict"])
        order = opt_int(rec.get("wronskian_order"))
        return cls(
            level=level,
            weight=weight,
            genus=g,
            t=t,
            pivots=tuple(int(p) for p in pivots.split(",") if p),
            verdict=verdict,
            reason=str(rec.get("reason") or ""),
            methods_run=tuple(x for x in methods.split("+") if x),
            agreement=bool(agreement),
            precision_used=int(rec.get("precision_used") or 0),
            wronskian_order=order,
            wronskian_threshold=(
                t * (weight + t - 1) // 2 + 1 if order is not None and t is not None else None
            ),
        )


def gap_free_pivots(m: int, t: int) -> tuple[int, ...]:
    """The pivot list of a non-Weierstrass cusp: m/2, m/2 + 1, ..., m/2 + t - 1."""
    return tuple(range(m // 2, m // 2 + t))


def _not_applicable(N, m, reason, genus=None) -> WeierstrassVerdict:
    t = dim_smh(genus, m) if genus is not None else None
    return WeierstrassVerdict(N, m, genus, t, (), Verdict.NOT_APPLICABLE, reason)


def _check_weight(m: int) -> None:
    if not isinstance(m, int) or m < 2 or m % 2:
        raise ValueError(f"weight must be an even integer >= 2, got {m!r}")


def _acquire_basis(N, m, basis, basis_file, precision, offline, cache_dir, base_url) -> tuple[BasisSet, int]:
    explicit = basis is not None or basis_file is not None
    if basis is None:
        basis = resolve_basis(N, 0, basis_file=basis_file, offline=offline, cache_dir=cache_dir, base_url=base_url)
    if basis.level != N:
        raise ValueError(f"basis is for level {basis.level}, not {N}")
    g = basis.genus
    if g < 1:
        raise DataIntegrityError(f"level {N} is outside the genus-0 table but its basis is empty")
    need = precision if precision is not None else required_precision(g, m)
    if basis.prec < need and not explicit:
        basis = resolve_basis(N, need, offline=offline, cache_dir=cache_dir, base_url=base_url)
    if basis.prec < need:
        raise InsufficientPrecision(
            f"level {N} basis is known mod q^{basis.prec}; q^{need} is needed",
            recommended=max(need, required_precision(g, m)),
        )
    return basis.truncated(need), need


def decide(
    N: int,
    m: int,
    *,
    method: str = "both",
    basis: BasisSet | None = None,
    basis_file: str | os.PathLike | None = None,
    precision: int | None = None,
    allow_hyperelliptic_g2_m4: bool = False,
    offline: bool | None = None,
    cache_dir: str | os.PathLike | None = None,
    base_url: str | None = None,
    keep_rows: bool = False,
    monomial_order: Sequence[int] | None = None,
) -> WeierstrassVerdict:
    """Decide whether the cusp at infinity of X0(N) is an m/2-Weierstrass point.

    ``monomial_order`` permutes the monomial list before elimination (the
    verdict must not depend on it).  Raises InsufficientPrecision,
    DataIntegrityError or MethodDisagreement; NotApplicable is a verdict,
    not an error.
    """
    if not isinstance(N, int) or N < 1:
        raise ValueError(f"level must be a positive integer, got {N!r}")
    _check_weight(m)
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")

    cls = classify(N)
    if cls.genus_band is GenusBand.ZERO:
        return _not_applicable(N, m, "genus 0: no Weierstrass points", 0)
    if cls.genus_band is GenusBand.ONE:
        return _not_applicable(N, m, "genus 1: no Weierstrass points", 1)

    if cls.hyperelliptic and m > 2:
        if not (allow_hyperelliptic_g2_m4 and m == 4):
            return _not_applicable(N, m, "hyperelliptic: monomial method invalid")

    basis, P = _acquire_basis(N, m, basis, basis_file, precision, offline, cache_dir, base_url)
    g = basis.genus
    if cls.hyperelliptic and m > 2 and g != 2:
        return _not_applicable(N, m, f"hyperelliptic of genus {g}: override covers genus 2 only", g)
    if cls.nonhyperelliptic and g < 3:
        raise DataIntegrityError(f"level {N} is non-hyperelliptic but its basis has {g} forms")

    t = dim_smh(g, m)
    monomials = compute_monomials(basis, m)
    if monomial_order is not None:
        if sorted(monomial_order) != list(range(len(monomials))):
            raise ValueError("monomial_order must be a permutation of the monomial indices")
        monomials = [monomials[k] for k in monomial_order]
    result = reduce(build_matrix(monomials, g, m), monomials)
    if result.rank != t:
        raise DataIntegrityError(f"level {N}, weight {m}: echelon rank {result.rank} but expected {t}")

    pivot_verdict = result.pivots != gap_free_pivots(m, t)
    # the largest pivot alone decides too, since pivots are distinct and >= m/2
    if pivot_verdict != (result.pivots[-1] >= m // 2 + t):
        raise DataIntegrityError(f"pivots {result.pivots} are inconsistent with their own bounds")

    methods: tuple[str, ...]
    verdicts: list[bool] = []
    order = threshold = None
    if method in ("echelon", "both"):
        verdicts.append(pivot_verdict)
    if method in ("wronskian", "both"):
        check = check_by_wronskian(result, m)
        order, threshold = check.order, check.threshold
        if check.exact and order != sum(result.pivots):
            raise DataIntegrityError(
                f"Wronskian order {order} differs from the pivot sum {sum(result.pivots)}"
            )
        verdicts.append(check.is_weierstrass)
    methods = ("echelon", "wronskian") if method == "both" else (method,)
    agreement = len(set(verdicts)) == 1
    if not agreement:
        raise MethodDisagreement(
            f"level {N}, weight {m}: echelon says {verdicts[0]}, Wronskian says {verdicts[1]}"
        )

    rows: tuple[tuple[str, str], ...] = ()
    if keep_rows:
        rows = _format_rows(result)
    return WeierstrassVerdict(
        level=N,
        weight=m,
        genus=g,
        t=t,
        pivots=result.pivots,
        verdict=Verdict.IS_WEIERSTRASS if verdicts[0] else Verdict.NOT_WEIERSTRASS,
        methods_run=methods,
        agreement=agreement,
        precision_used=P,
        wronskian_order=order,
        wronskian_threshold=threshold,
        rows=rows,
    )


def _format_rows(result: EchelonResult, terms: int = 6) -> tuple[tuple[str, str], ...]:
    # signs as produced by the elimination, like a hand computation would show them
    return tuple(
        (format_combination(combo, result.labels), series.format(max_terms=terms))
        for combo, series in zip(result.transform, result.reduced_rows)
    )


# -- batches ---------------------------------------------------------------


@dataclass
class BatchSummary:
    counts: dict[str, int] = field(default_factory=dict)
    failures: list[tuple[int, int, str]] = field(default_factory=list)
    skipped: int = 0

    def add(self, key: str) -> None:
        self.counts[key] = self.counts.get(key, 0) + 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def error_record(N: int, m: int, exc: BaseException) -> dict:
    return {
        "level": N,
        "weight": m,
        "genus": None,
        "t": None,
        "pivots": "",
        "verdict": "",
        "methods": "",
        "agreement": "",
        "status": type(exc).__name__,
        "reason": str(exc),
        "precision_used": getattr(exc, "recommended", None) or "",
        "wronskian_order": None,
    }


def _run_cell(args) -> dict:
    N, m, opts = args
    try:
        return decide(N, m, **opts).to_record()
    except (WeierstrassError, ValueError) as exc:
        return error_record(N, m, exc)


def decide_batch(
    levels: Iterable[int],
    weights: Iterable[int],
    sink=None,
    *,
    jobs: int = 1,
    force: bool = False,
    verbose: bool = False,
    **opts,
) -> BatchSummary:
    """Run decide over levels x weights, appending one record per cell to ``sink``.

    ``sink`` needs ``has(level, weight)`` and ``append(record)``; appends
    happen in this process only, so a worker pool never interleaves writes.
    Cells already in the sink are skipped unless ``force``.
    """
    summary = BatchSummary()
    weights = list(weights)
    cells = []
    for N in levels:
        for m in weights:
            if sink is not None and not force and sink.has(N, m):
                summary.skipped += 1
                continue
            cells.append((N, m, opts))
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = pool.map(_run_cell, cells)
            for rec in records:
                _collect(rec, summary, sink, verbose)
    else:
        for cell in cells:
            _collect(_run_cell(cell), summary, sink, verbose)
    return summary


def _collect(rec: dict, summary: BatchSummary, sink, verbose: bool) -> None:
    if rec["status"] != "ok":
        summary.add("Error")
        summary.failures.append((rec["level"], rec["weight"], rec["reason"]))
        log.warning("level %s weight %s failed: %s", rec["level"], rec["weight"], rec["reason"])
    else:
        summary.add(rec["verdict"])
        if rec["verdict"] == Verdict.NOT_APPLICABLE.value and verbose:
            log.info("level %s weight %s: %s", rec["level"], rec["weight"], rec["reason"])
    if sink is not None:
        sink.append(rec)

