"""Command-line front end.

Exit status: 0 for any verdict (NotApplicable included), 2 for usage
errors, 3 when the precision is insufficient, 4 for failed integrity or
method-agreement checks, 5 for network/upstream trouble, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .basis_io import (
    bundled_basis,
    bundled_levels,
    fetch_basis,
    required_precision,
    validate_basis,
    write_basis,
)
from .curve_tables import classify
from .decision import METHODS, Verdict, WeierstrassVerdict, decide, decide_batch
from .errors import (
    DataIntegrityError,
    InsufficientPrecision,
    MethodDisagreement,
    NetworkError,
    UpstreamFormatError,
    ValidationError,
    WeierstrassError,
)
from .results import FIELDS, ResultSink, format_record

log = logging.getLogger("x0weierstrass")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PRECISION = 3
EXIT_INTEGRITY = 4
EXIT_NETWORK = 5


class UsageError(Exception):
    pass


def parse_levels(spec: str) -> list[int]:
    """``"34..40,55"`` -> [34, 35, ..., 40, 55]."""
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*(?:\.\.|-)\s*(\d+)", part)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            if a > b:
                raise UsageError(f"empty level range {part!r}")
            out.extend(range(a, b + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise UsageError(f"cannot parse level list {spec!r}")
    if any(N < 1 for N in out):
        raise UsageError("levels must be >= 1")
    return sorted(set(out))


def parse_weights(spec: str) -> list[int]:
    try:
        weights = [int(w) for w in spec.split(",") if w.strip()]
    except ValueError:
        raise UsageError(f"cannot parse weight list {spec!r}") from None
    for m in weights:
        check_weight(m)
    if not weights:
        raise UsageError("no weights given")
    return weights


def check_weight(m: int) -> int:
    if m < 2 or m % 2:
        raise UsageError(f"weight must be even and >= 2, got {m}")
    return m


def _source_options(args) -> dict:
    return dict(
        offline=True if args.offline else None,
        cache_dir=args.cache_dir,
        base_url=args.base_url,
    )


def _decide_options(args) -> dict:
    opts = _source_options(args)
    opts.update(
        method=args.method,
        precision=args.precision,
        allow_hyperelliptic_g2_m4=args.allow_hyperelliptic_g2_m4,
    )
    return opts


# -- reports ---------------------------------------------------------------


def _order_name(m: int) -> str:
    return f"{m // 2}-Weierstrass point"


def text_report(v: WeierstrassVerdict, verbose: bool = False) -> str:
    lines = [f"X0({v.level}), weight m = {v.weight}"]
    if v.verdict is Verdict.NOT_APPLICABLE:
        if v.genus is not None:
            lines.append(f"genus: {v.genus}")
        lines.append(f"not applicable: {v.reason}")
        return "\n".join(lines)
    lines.append(f"genus: {v.genus}")
    lines.append(f"t = dim: {v.t}")
    lines.append(f"pivots: {', '.join(map(str, v.pivots))}")
    lines.append(f"precision used: q^{v.precision_used}")
    methods = ", ".join(v.methods_run)
    if len(v.methods_run) > 1:
        methods += " (agree)" if v.agreement else " (DISAGREE)"
    lines.append(f"methods: {methods}")
    if v.wronskian_order is not None:
        lines.append(f"Wronskian order: {v.wronskian_order} (Weierstrass from {v.wronskian_threshold})")
    if verbose and v.rows:
        lines.append("reduced rows:")
        width = max(len(c) for c, _ in v.rows)
        for combo, series in v.rows:
            lines.append(f"  {combo.ljust(width)} = {series}")
    word = "IS" if v.verdict is Verdict.IS_WEIERSTRASS else "NOT"
    lines.append(f"verdict: the cusp at infinity is {word} a {_order_name(v.weight)}")
    return "\n".join(lines)


def structured_report(v: WeierstrassVerdict, fmt: str, verbose: bool = False) -> str:
    rec = v.to_record()
    if fmt == "jsonl":
        if verbose and v.rows:
            rec = dict(rec, rows=[{"combination": c, "expansion": s} for c, s in v.rows])
        return json.dumps(rec)
    return ",".join(FIELDS) + "\n" + format_record(rec, "csv").rstrip("\n")


# -- subcommands -------------------------------------------------------------


def cmd_decide(args) -> int:
    m = check_weight(args.weight)
    if args.level < 1:
        raise UsageError("level must be >= 1")
    v = decide(
        args.level,
        m,
        basis_file=args.basis_file,
        keep_rows=args.verbose,
        **_decide_options(args),
    )
    if args.format == "text":
        print(text_report(v, verbose=args.verbose))
    else:
        print(structured_report(v, args.format, verbose=args.verbose))
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.levels is None and args.level is None:
        raise UsageError("scan needs --levels or --level")
    levels = parse_levels(args.levels) if args.levels else [args.level]
    weights = parse_weights(args.weights) if args.weights else [check_weight(args.weight)]
    fmt = args.format if args.format != "text" else None
    sink = ResultSink(args.output, fmt)
    summary = decide_batch(
        levels, weights, sink, jobs=args.jobs, force=args.force, verbose=args.verbose, **_decide_options(args)
    )
    parts = [f"{k}={n}" for k, n in sorted(summary.counts.items())]
    if summary.skipped:
        parts.append(f"skipped={summary.skipped}")
    print(f"scan: {summary.total} cells written to {args.output} ({', '.join(parts) or 'nothing to do'})")
    for N, m, reason in summary.failures:
        print(f"  level {N} weight {m}: {reason}", file=sys.stderr)
    return EXIT_FAILURE if summary.failures else EXIT_OK


def cmd_fetch_basis(args) -> int:
    if args.levels is None and args.level is None:
        raise UsageError("fetch-basis needs --level or --levels")
    levels = parse_levels(args.levels) if args.levels else [args.level]
    for N in levels:
        prec = args.precision
        if prec is None:
            # enough for weights up to the requested one, using the bundled genus when known
            known = bundled_basis(N)
            prec = required_precision(max(known.genus, 1), check_weight(args.weight)) if known else 60
        basis = fetch_basis(N, prec, **_source_options(args))
        if args.output:
            out = Path(args.output)
            path = out / f"level_{N:03d}.txt" if len(levels) > 1 or out.is_dir() else out
            write_basis(basis, path)
        print(f"level {N}: genus {basis.genus}, precision q^{basis.prec}")
    return EXIT_OK


def cmd_verify_fixtures(args) -> int:
    bad = 0
    for N in bundled_levels():
        try:
            basis = bundled_basis(N)
            validate_basis(basis)
            cls = classify(N)
            if cls.nonhyperelliptic and basis.genus < 3:
                raise ValidationError(f"non-hyperelliptic level with genus {basis.genus}")
            status = "ok"
        except WeierstrassError as exc:
            status = f"FAIL: {exc}"
            bad += 1
            basis = None
        if args.verbose or basis is None:
            g = basis.genus if basis is not None else "?"
            p = basis.prec if basis is not None else "?"
            print(f"level {N:3d}: genus {g}, precision q^{p}: {status}")
    print(f"{len(bundled_levels())} fixtures checked, {bad} failed")
    return EXIT_INTEGRITY if bad else EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--offline", action="store_true", help="never touch the network")
    common.add_argument("--cache-dir", help="basis cache directory (env X0WEIERSTRASS_CACHE_DIR)")
    common.add_argument("--base-url", help="upstream API root (env X0WEIERSTRASS_BASE_URL)")
    common.add_argument("--verbose", "-v", action="store_true")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--method", choices=METHODS, default="both")
    run.add_argument("--precision", type=int, help="basis precision to use (default: the required one)")
    run.add_argument(
        "--allow-hyperelliptic-g2-m4",
        action="store_true",
        help="run weight 4 on hyperelliptic genus-2 levels",
    )

    p = argparse.ArgumentParser(
        prog="x0weierstrass",
        description="Decide whether the cusp at infinity of X0(N) is an m/2-Weierstrass point.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decide", parents=[common, run], help="verdict for one level and weight")
    d.add_argument("--level", type=int, required=True)
    d.add_argument("--weight", type=int, required=True)
    d.add_argument("--basis-file", help="weight-2 basis in the native text format")
    d.add_argument("--format", choices=("text", "jsonl", "csv"), default="text")
    d.set_defaults(func=cmd_decide)

    s = sub.add_parser("scan", parents=[common, run], help="verdicts over a grid, appended to a file")
    s.add_argument("--levels", help="e.g. 34..100 or 34,55,60..70")
    s.add_argument("--level", type=int)
    s.add_argument("--weights", help="comma-separated even weights")
    s.add_argument("--weight", type=int, default=4)
    s.add_argument("--output", "-o", required=True, help="results file (.csv or .jsonl)")
    s.add_argument("--format", choices=("text", "jsonl", "csv"), default="text",
                   help="record format; default from the output suffix")
    s.add_argument("--jobs", "-j", type=int, default=1)
    s.add_argument("--force", action="store_true", help="recompute cells already recorded")
    s.set_defaults(func=cmd_scan)

    f = sub.add_parser("fetch-basis", parents=[common], help="download and cache a weight-2 basis")
    f.add_argument("--level", type=int)
    f.add_argument("--levels")
    f.add_argument("--precision", type=int)
    f.add_argument("--weight", type=int, default=6, help="size the default precision for this weight")
    f.add_argument("--output", "-o", help="also write the basis here (file, or directory for several)")
    f.set_defaults(func=cmd_fetch_basis)

    v = sub.add_parser("verify-fixtures", parents=[common], help="validate the bundled bases")
    v.set_defaults(func=cmd_verify_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientPrecision as exc:
        print(f"error: insufficient precision: {exc}", file=sys.stderr)
        if exc.recommended is not None:
            print(f"recommended precision: {exc.recommended}", file=sys.stderr)
        return EXIT_PRECISION
    except (DataIntegrityError, MethodDisagreement) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (NetworkError, UpstreamFormatError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (WeierstrassError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
