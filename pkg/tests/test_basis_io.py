import json
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from math import gcd
from urllib.parse import parse_qs, urlparse

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from x0weierstrass.basis_io import (
    BasisSet,
    FormRecord,
    LmfdbClient,
    bundled_basis,
    bundled_levels,
    fetch_basis,
    format_basis,
    load_basis,
    parse_basis,
    required_precision,
    resolve_basis,
    validate_basis,
    write_basis,
)
from x0weierstrass.curve_tables import GENUS_ONE_LEVELS, GENUS_ZERO_LEVELS, nonhyperelliptic_levels
from x0weierstrass.echelon import build_matrix, reduce
from x0weierstrass.errors import (
    InsufficientPrecision,
    NetworkError,
    ParseError,
    UpstreamFormatError,
    ValidationError,
)
from x0weierstrass.monomials import compute_monomials
from x0weierstrass.qseries import QSeries

# -- independent oracles ------------------------------------------------------


def genus_x0(N: int) -> int:
    """Genus of X0(N) from the index, elliptic points and cusps (Riemann-Hurwitz)."""
    mu = N
    for p in range(2, N + 1):
        if N % p == 0 and all(p % d for d in range(2, p)):
            mu = mu * (p + 1) // p
    nu2 = sum(1 for x in range(N) if (x * x + 1) % N == 0)
    nu3 = sum(1 for x in range(N) if (x * x + x + 1) % N == 0)
    cusps = sum(_phi(gcd(d, N // d)) for d in range(1, N + 1) if N % d == 0)
    g = 1 + Fraction(mu, 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(cusps, 2)
    assert g.denominator == 1
    return int(g)


def _phi(n):
    return sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)


def eta_product_11(prec: int) -> list[int]:
    """q prod (1 - q^n)^2 (1 - q^11n)^2, coefficients a_1 .. a_{prec-1}."""
    c = [0] * prec
    c[1] = 1
    for n in range(1, prec):
        for step in (n, 11 * n):
            if step >= prec:
                continue
            for _ in range(2):
                for k in range(prec - 1, step - 1, -1):
                    c[k] -= c[k - step]
    return c[1:]


# 37a: y^2 + y = x^3 - x; a_p for p < 20
A37 = {2: -2, 3: -3, 5: -2, 7: -1, 11: -5, 13: -2, 17: 0, 19: 0}


def newform_37a(prec: int) -> list[int]:
    a = [0] * prec
    a[1] = 1
    for p in [2, 3, 5, 7, 11, 13, 17, 19]:
        pk, prev2, prev = p, 1, A37[p]
        a[p] = prev if p < prec else 0
        while pk * p < prec:
            nxt = A37[p] * prev - p * prev2
            pk *= p
            a[pk] = nxt
            prev2, prev = prev, nxt
    for n in range(2, prec):
        if a[n]:
            continue
        # multiplicativity over coprime factors
        for d in range(2, n):
            if n % d == 0 and gcd(d, n // d) == 1:
                a[n] = a[d] * a[n // d]
                break
    return a[1:]


def in_span(vec, basis_rows) -> bool:
    rows = [list(map(Fraction, r)) for r in basis_rows] + [list(map(Fraction, vec))]
    return _rank(rows) == _rank(rows[:-1])


def _rank(rows):
    rows = [r[:] for r in rows]
    rank, col, ncol = 0, 0, len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncol:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


# -- bundled fixtures -------------------------------------------------------


def test_bundled_levels_cover_the_grid():
    levels = set(bundled_levels())
    assert set(nonhyperelliptic_levels(100)) <= levels
    assert {22, 23, 26, 28, 29, 31, 37, 50} <= levels


@pytest.mark.parametrize("N", bundled_levels())
def test_bundled_genus_matches_genus_formula(N):
    assert bundled_basis(N).genus == genus_x0(N)


def test_level_11_is_the_eta_product():
    b = bundled_basis(11)
    assert b.genus == 1
    assert list(b.forms[0].coefficients) == eta_product_11(b.prec)


def test_level_37_contains_newform_37a():
    b = bundled_basis(37)
    P = 23  # a_p is tabulated for p < 23
    rows = [f.coefficients[: P - 1] for f in b.forms]
    assert in_span(newform_37a(P), rows)
    # and a perturbed sequence is not in the span
    bad = newform_37a(P)
    bad[10] += 1
    assert not in_span(bad, rows)


def test_missing_bundled_level():
    assert bundled_basis(99999) is None


# -- text format ------------------------------------------------------------


def test_round_trip(tmp_path):
    b = bundled_basis(34).truncated(30)
    path = write_basis(b, tmp_path / "b.txt")
    again = load_basis(path)
    assert again == b
    assert format_basis(again) == format_basis(b)


@given(st.integers(10, 100))
@settings(max_examples=20)
def test_round_trip_any_precision(P):
    b = bundled_basis(55).truncated(P)
    assert parse_basis(format_basis(b)) == b


def test_parse_header_errors():
    with pytest.raises(ParseError):
        parse_basis("")
    with pytest.raises(ParseError):
        parse_basis("level=11 weight=2 prec=3\nform 0: 1,-2\n")
    with pytest.raises(ParseError):
        parse_basis("level=x weight=2 genus=1 prec=3\nform 0: 1,-2\n")


def test_parse_body_errors():
    head = "level=11 weight=2 genus=1 prec=3\n"
    with pytest.raises(ParseError):
        parse_basis(head + "form 1: 1,-2\n")
    with pytest.raises(ParseError):
        parse_basis(head + "form 0: 1,x\n")
    with pytest.raises(ParseError):
        parse_basis(head + "garbage\n")


def test_parse_consistency_errors():
    with pytest.raises(ValidationError):
        parse_basis("level=11 weight=2 genus=2 prec=3\nform 0: 1,-2\n")
    with pytest.raises(ValidationError):
        parse_basis("level=11 weight=2 genus=1 prec=5\nform 0: 1,-2\n")
    with pytest.raises(ValidationError):
        parse_basis("level=11 weight=4 genus=1 prec=3\nform 0: 1,-2\n")


def test_comments_and_unknown_header_keys_are_ignored():
    b = parse_basis("# generated\nlevel=11 weight=2 genus=1 prec=3 source=test\nform 0: 1,-2\n")
    assert b.genus == 1 and b.prec == 3


def test_validation_catches_bad_bases():
    f = FormRecord("a", (1, 0, 2))
    g = FormRecord("b", (0, 1, 1))
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(11, (f, g)))  # genus-1 level with two forms
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(22, (f, f)))  # duplicate
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(22, (f, FormRecord("c", (2, 0, 4)))))  # dependent
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(22, (f, FormRecord("z", (0, 0, 0)))))
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(22, (f, FormRecord("d", (1, 1, 0))), echelon=True))
    with pytest.raises(ValidationError):
        validate_basis(BasisSet(5, (f,)))  # genus-0 level
    validate_basis(BasisSet(22, (f, g), echelon=True))


def test_from_series_rules():
    with pytest.raises(ValidationError):
        BasisSet.from_series(11, [QSeries([1, 1, 0])])
    with pytest.raises(ValidationError):
        BasisSet.from_series(11, [QSeries([0, Fraction(1, 2), 0])])
    assert BasisSet.from_series(11, [QSeries([0, 1, -2])]).prec == 3


def test_truncated_refuses_to_invent_precision():
    b = bundled_basis(34)
    with pytest.raises(InsufficientPrecision):
        b.truncated(b.prec + 1)


# -- precision ----------------------------------------------------------------


def test_required_precision_examples():
    assert required_precision(3, 4) == 12
    assert required_precision(5, 4) == 20
    with pytest.raises(ValueError):
        required_precision(3, 5)
    with pytest.raises(ValueError):
        required_precision(3, 4, "magic")


@pytest.mark.parametrize("N,m", [(34, 4), (43, 6), (55, 4), (64, 4), (97, 4)])
def test_required_precision_is_stable_and_nearly_sharp(N, m):
    """Brute-force oracle: pivots computed at every precision from P to P+10 agree.

    Without the guard digits the matrix is exactly readable; one below that
    the build refuses.
    """
    full = bundled_basis(N)
    g = full.genus
    P = required_precision(g, m)
    pivots = set()
    for prec in range(P, P + 11):
        b = full.truncated(prec)
        ms = compute_monomials(b, m)
        pivots.add(reduce(build_matrix(ms, g, m), ms).pivots)
    assert len(pivots) == 1
    tight = P - 2  # no guard digits
    ms = compute_monomials(full.truncated(tight), m)
    reduce(build_matrix(ms, g, m), ms)
    ms = compute_monomials(full.truncated(tight - 1), m)
    with pytest.raises(InsufficientPrecision):
        build_matrix(ms, g, m)


# -- network ------------------------------------------------------------------


class FakeUpstream:
    """Serves newform records for a few levels, paginated two records per page."""

    def __init__(self, records_by_level: dict[int, list[dict]]):
        self.records = records_by_level
        self.hits = 0
        self.fail_with = None
        upstream = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                upstream.hits += 1
                if upstream.fail_with == "500":
                    self.send_response(500)
                    self.end_headers()
                    return
                url = urlparse(self.path)
                q = parse_qs(url.query)
                if upstream.fail_with == "garbage":
                    body = b"<html>not json</html>"
                else:
                    level = int(q["level"][0])
                    offset = int(q.get("_offset", ["0"])[0])
                    recs = upstream.records.get(level, [])
                    page = recs[offset : offset + 2]
                    nxt = None
                    if offset + 2 < len(recs):
                        nxt = f"/api/mf_hecke_nf/?level={level}&weight=2&_offset={offset + 2}"
                    body = json.dumps({"data": page, "next": nxt}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def _record(label, seq):
    return {"label": label, "an": [[a] for a in seq]}


@pytest.fixture
def upstream():
    seq11 = eta_product_11(80)
    recs = {11: [_record("11.2.a.a", seq11)], 22: []}
    with FakeUpstream(recs) as srv:
        yield srv


def test_fetch_builds_oldforms_and_matches_bundled(upstream, tmp_path):
    client = LmfdbClient(upstream.url, min_interval=0)
    b = fetch_basis(22, 30, cache_dir=tmp_path, client=client)
    assert b.genus == 2
    assert b.prec == 80
    bundled = bundled_basis(22).truncated(60)
    rows = [f.coefficients[:59] for f in b.forms]
    for f in bundled.forms:
        assert in_span(f.coefficients, rows)


def test_fetch_uses_cache_second_time(upstream, tmp_path):
    client = LmfdbClient(upstream.url, min_interval=0)
    fetch_basis(22, 30, cache_dir=tmp_path, client=client)
    hits = upstream.hits
    again = fetch_basis(22, 30, cache_dir=tmp_path, offline=True)
    assert upstream.hits == hits
    assert again.genus == 2
    assert (tmp_path / "level_022.txt").is_file()


def test_fetch_reports_short_upstream_precision(upstream, tmp_path):
    client = LmfdbClient(upstream.url, min_interval=0)
    with pytest.raises(InsufficientPrecision):
        fetch_basis(22, 500, cache_dir=tmp_path, client=client)


def test_fetch_pagination(tmp_path):
    seq = eta_product_11(40)
    recs = {11: [_record(f"11.2.a.{c}", seq) for c in "abc"]}
    with FakeUpstream(recs) as srv:
        got = LmfdbClient(srv.url, min_interval=0).newform_expansions(11)
    assert len(got) == 3
    assert srv.hits == 2


def test_multidimensional_hecke_field_gives_one_sequence_per_coordinate():
    rec = {"label": "x", "an": [[1, 0], [0, 1], [2, -1]]}
    from x0weierstrass.basis_io import _coordinate_sequences

    assert _coordinate_sequences(rec) == [[1, 0, 2], [0, 1, -1]]
    with pytest.raises(UpstreamFormatError):
        _coordinate_sequences({"label": "x", "an": [[1, 0], [1]]})
    with pytest.raises(UpstreamFormatError):
        _coordinate_sequences({"label": "x"})


def test_http_failure_and_garbage(tmp_path):
    with FakeUpstream({}) as srv:
        srv.fail_with = "500"
        with pytest.raises(NetworkError):
            fetch_basis(22, 10, cache_dir=tmp_path, client=LmfdbClient(srv.url, min_interval=0))
        srv.fail_with = "garbage"
        with pytest.raises(UpstreamFormatError):
            fetch_basis(22, 10, cache_dir=tmp_path, client=LmfdbClient(srv.url, min_interval=0))


def test_unreachable_server(tmp_path):
    client = LmfdbClient("http://127.0.0.1:9", min_interval=0, timeout=2)
    with pytest.raises(NetworkError):
        fetch_basis(22, 10, cache_dir=tmp_path, client=client)


def test_offline_without_cache(tmp_path):
    with pytest.raises(NetworkError):
        fetch_basis(22, 10, cache_dir=tmp_path, offline=True)


def test_offline_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("X0WEIERSTRASS_OFFLINE", "1")
    with pytest.raises(NetworkError):
        fetch_basis(22, 10, cache_dir=tmp_path)


def test_genus_zero_needs_no_network(tmp_path):
    b = fetch_basis(1, 10, cache_dir=tmp_path, offline=True)
    assert b.genus == 0


def test_resolve_prefers_explicit_file(tmp_path):
    b = bundled_basis(34).truncated(15)
    path = write_basis(b, tmp_path / "mine.txt")
    assert resolve_basis(34, basis_file=path) == b
    with pytest.raises(ValidationError):
        resolve_basis(55, basis_file=path)


def test_resolve_falls_back_to_network_for_more_precision(upstream, tmp_path, monkeypatch):
    monkeypatch.setenv("X0WEIERSTRASS_BASE_URL", upstream.url)
    # bundled 22 has precision 100; asking for more has to go upstream, which only has 80
    with pytest.raises(InsufficientPrecision):
        resolve_basis(22, 150, cache_dir=tmp_path)
    assert upstream.hits > 0
    # offline, the bundled fixture is returned as is
    assert resolve_basis(22, 150, offline=True).prec == 100


def test_genus_tables_are_consistent_with_the_formula():
    for N in GENUS_ZERO_LEVELS:
        assert genus_x0(N) == 0
    for N in GENUS_ONE_LEVELS:
        assert genus_x0(N) == 1
