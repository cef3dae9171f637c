import csv
import json
import subprocess
import sys

import pytest

from x0weierstrass.basis_io import bundled_basis, write_basis
from x0weierstrass.cli import main, parse_levels, parse_weights, UsageError
from x0weierstrass.decision import WeierstrassVerdict, decide


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_decide_34_text(capsys):
    code, out, _ = run(capsys, "decide", "--level", "34", "--weight", "4", "--offline")
    assert code == 0
    assert out.rstrip().endswith("NOT a 2-Weierstrass point")
    assert "pivots: 2, 3, 4, 5, 6, 7" in out
    assert "genus: 3" in out and "t = dim: 6" in out and "precision used: q^12" in out


def test_decide_55_verbose(capsys):
    code, out, _ = run(capsys, "decide", "--level", "55", "--weight", "4", "--verbose", "--offline")
    assert code == 0
    assert out.rstrip().endswith("IS a 2-Weierstrass point")
    rows = [ln for ln in out.splitlines() if ln.startswith("  ")]
    assert len(rows) == 12
    assert "q^14" in rows[-1].split("=")[1].split()[0]


def test_decide_34_verbose_matches_the_printed_table(capsys):
    _, out, _ = run(capsys, "decide", "--level", "34", "--weight", "4", "-v", "--offline")
    assert "-f1^2 + f0*f2 + 2*f1*f2 + 3*f2^2 = -17*q^7 + 17*q^8 + 34*q^9 + 17*q^10" in out


def test_odd_weight_is_a_usage_error(capsys):
    code, _, err = run(capsys, "decide", "--level", "34", "--weight", "3")
    assert code == 2 and "even" in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["decide", "--level", "34"])
    assert e.value.code == 2


def test_not_applicable_exits_0(capsys):
    code, out, _ = run(capsys, "decide", "--level", "40", "--weight", "4")
    assert code == 0 and "hyperelliptic" in out


def test_insufficient_precision_exits_3(capsys):
    code, _, err = run(capsys, "decide", "--level", "55", "--weight", "4", "--precision", "12", "--offline")
    assert code == 3
    assert "recommended precision: 20" in err


def test_integrity_error_exits_4(capsys, tmp_path):
    from x0weierstrass.basis_io import BasisSet

    b = bundled_basis(22)
    path = write_basis(BasisSet(34, b.forms), tmp_path / "bad.txt")
    code, _, err = run(capsys, "decide", "--level", "34", "--weight", "4", "--basis-file", str(path))
    assert code == 4


def test_network_error_exits_5(capsys, tmp_path):
    code, _, err = run(
        capsys, "fetch-basis", "--level", "22", "--precision", "300", "--offline", "--cache-dir", str(tmp_path)
    )
    assert code == 5


@pytest.mark.parametrize("fmt", ["jsonl", "csv"])
def test_structured_output_round_trips(capsys, fmt):
    code, out, _ = run(capsys, "decide", "--level", "55", "--weight", "4", "--format", fmt, "--offline")
    assert code == 0
    if fmt == "jsonl":
        rec = json.loads(out)
    else:
        rec = next(csv.DictReader(out.splitlines()))
    assert WeierstrassVerdict.from_record(rec) == decide(55, 4, offline=True)


def test_text_and_structured_agree(capsys):
    _, text, _ = run(capsys, "decide", "--level", "64", "--weight", "6", "--offline")
    _, js, _ = run(capsys, "decide", "--level", "64", "--weight", "6", "--format", "jsonl", "--offline")
    rec = json.loads(js)
    assert f"pivots: {', '.join(rec['pivots'].split(','))}" in text
    word = "IS" if rec["verdict"] == "IsWeierstrass" else "NOT"
    assert text.rstrip().endswith(f"{word} a 3-Weierstrass point")


def test_scan_and_idempotency(capsys, tmp_path):
    out_file = tmp_path / "scan.csv"
    args = ["scan", "--levels", "34..41,55", "--weights", "4", "--output", str(out_file), "--offline"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    rows = list(csv.DictReader(out_file.read_text().splitlines()))
    by_level = {int(r["level"]): r for r in rows}
    assert by_level[55]["verdict"] == "IsWeierstrass"
    assert by_level[40]["verdict"] == "NotApplicable"
    assert by_level[34]["pivots"] == "2,3,4,5,6,7"
    n = len(rows)
    code, out, _ = run(capsys, *args)
    assert len(out_file.read_text().splitlines()) == n + 1
    assert "skipped=9" in out
    code, _, _ = run(capsys, *args, "--force")
    assert len(out_file.read_text().splitlines()) == n + 1


def test_scan_jsonl_with_jobs(capsys, tmp_path):
    out_file = tmp_path / "scan.jsonl"
    code, _, _ = run(
        capsys, "scan", "--levels", "42,43,44", "--weights", "4,6", "--jobs", "2", "-o", str(out_file), "--offline"
    )
    assert code == 0
    recs = [json.loads(ln) for ln in out_file.read_text().splitlines()]
    assert len(recs) == 6 and all(r["agreement"] for r in recs)


def test_scan_failure_exit_status(capsys, tmp_path):
    out_file = tmp_path / "scan.csv"
    code, _, err = run(
        capsys, "scan", "--level", "55", "--weight", "4", "--precision", "12", "-o", str(out_file), "--offline"
    )
    assert code == 1
    rec = next(csv.DictReader(out_file.read_text().splitlines()))
    assert rec["status"] == "InsufficientPrecision"


def test_scan_needs_levels(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "-o", str(tmp_path / "x.csv"))
    assert code == 2


def test_fetch_basis_from_cache(capsys, tmp_path):
    b = bundled_basis(22).truncated(40)
    write_basis(b, tmp_path / "level_022.txt")
    dest = tmp_path / "copy.txt"
    code, out, _ = run(
        capsys, "fetch-basis", "--level", "22", "--precision", "30", "--offline",
        "--cache-dir", str(tmp_path), "--output", str(dest),
    )
    assert code == 0 and "genus 2" in out
    assert dest.is_file()


def test_verify_fixtures(capsys):
    code, out, _ = run(capsys, "verify-fixtures")
    assert code == 0 and "0 failed" in out


def test_level_and_weight_parsers():
    assert parse_levels("34..36,55") == [34, 35, 36, 55]
    assert parse_levels("40-41") == [40, 41]
    with pytest.raises(UsageError):
        parse_levels("a..b")
    with pytest.raises(UsageError):
        parse_levels("9..3")
    assert parse_weights("4,6") == [4, 6]
    with pytest.raises(UsageError):
        parse_weights("4,5")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "x0weierstrass", "decide", "--level", "34", "--weight", "4", "--offline"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.rstrip().endswith("NOT a 2-Weierstrass point")
