"""Append-only result files for batch scans (CSV or JSON lines).

One record per (level, weight).  Appending a record for a cell that is
already present replaces the old line, so forced re-runs never duplicate.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from pathlib import Path

__all__ = ["FIELDS", "ResultSink", "read_records", "format_record"]

FIELDS = (
    "level",
    "weight",
    "genus",
    "t",
    "pivots",
    "verdict",
    "methods",
    "agreement",
    "status",
    "reason",
    "precision_used",
    "wronskian_order",
)


def _csv_value(v) -> str:
    if v is None:
        return ""
    return str(v)


def format_record(rec: dict, fmt: str) -> str:
    """One line (with trailing newline) for ``rec`` in ``fmt``."""
    if fmt == "jsonl":
        return json.dumps({k: rec.get(k) for k in FIELDS}) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([_csv_value(rec.get(k)) for k in FIELDS])
        return buf.getvalue()
    raise ValueError(f"unknown result format {fmt!r}")


def _parse_csv_row(row: dict) -> dict:
    out: dict = dict(row)
    for k in ("level", "weight"):
        out[k] = int(out[k])
    return out


def read_records(path: str | os.PathLike, fmt: str | None = None) -> list[dict]:
    path = Path(path)
    fmt = fmt or _guess_format(path)
    if not path.exists():
        return []
    text = path.read_text(encoding="utf-8")
    if fmt == "jsonl":
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return [_parse_csv_row(r) for r in csv.DictReader(io.StringIO(text))]


def _guess_format(path: Path) -> str:
    return "csv" if path.suffix.lower() == ".csv" else "jsonl"


class ResultSink:
    def __init__(self, path: str | os.PathLike, fmt: str | None = None):
        self.path = Path(path)
        self.fmt = fmt or _guess_format(self.path)
        if self.fmt not in ("csv", "jsonl"):
            raise ValueError(f"unknown result format {self.fmt!r}")
        self._lock = threading.Lock()
        self._records = {(r["level"], r["weight"]): r for r in read_records(self.path, self.fmt)}

    def has(self, level: int, weight: int) -> bool:
        """True if the cell is recorded with a successful status."""
        rec = self._records.get((level, weight))
        return rec is not None and rec.get("status") == "ok"

    def records(self) -> list[dict]:
        return list(self._records.values())

    def append(self, rec: dict) -> None:
        key = (int(rec["level"]), int(rec["weight"]))
        with self._lock:
            replacing = key in self._records
            self._records[key] = rec
            if replacing:
                self._rewrite()
                return
            new_file = not self.path.exists() or self.path.stat().st_size == 0
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="") as fh:
                if new_file and self.fmt == "csv":
                    fh.write(",".join(FIELDS) + "\n")
                fh.write(format_record(rec, self.fmt))

    def _rewrite(self) -> None:
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            if self.fmt == "csv":
                fh.write(",".join(FIELDS) + "\n")
            for rec in self._records.values():
                fh.write(format_record(rec, self.fmt))
        os.replace(tmp, self.path)
