#!/usr/bin/env python3
"""Generate bundled S_2(Gamma0(N)) basis fixtures from weight-2 modular symbols.

Development tool only; the library never computes weight-2 bases itself.

The cuspidal subspace of the weight-2 Manin-symbol space is computed exactly
over Q, Hecke operators T_p come from Merel's Heilbronn matrices, T_n follows
from the Hecke recurrences, and the q-expansions sum_n (T_n)_{ij} q^n span
S_2(Gamma0(N)).  The reduced row echelon form of that span over Q is the basis
that gets written.

    python tools/build_fixtures.py --prec 100 34 55 ...
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from math import gcd
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_OUT = ROOT / "src" / "x0weierstrass" / "data" / "bases"

NONHYPERELLIPTIC = (
    [34, 38, 42, 43, 44, 45]
    + list(range(51, 59))
    + list(range(60, 71))
    + list(range(72, 101))
)
# genus 2 hyperelliptic levels, used by the m = 4 override path
GENUS_TWO = [22, 23, 26, 28, 29, 31, 37, 50]


def xgcd(a, b):
    if b == 0:
        return (1, 0, a) if a >= 0 else (-1, 0, -a)
    q, r = divmod(a, b)
    x, y, g = xgcd(b, r)
    return y, x - y * q, g


def primes_below(n):
    return [p for p in range(2, n) if all(p % d for d in range(2, int(p**0.5) + 1))]


def factor(n):
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


class P1:
    """P^1(Z/NZ) with a brute-force canonical-representative table."""

    def __init__(self, N):
        self.N = N
        units = [u for u in range(1, N + 1) if gcd(u, N) == 1] if N > 1 else [1]
        self.table = {}
        reps = {}
        for c in range(N):
            for d in range(N):
                if gcd(gcd(c, d), N) != 1:
                    continue
                rep = min(((u * c) % N, (u * d) % N) for u in units)
                if rep not in reps:
                    reps[rep] = len(reps)
                self.table[(c, d)] = reps[rep]
        self.reps = sorted(reps, key=reps.get)

    def __len__(self):
        return len(self.reps)

    def index(self, c, d):
        """Index of (c:d), or None when gcd(c, d, N) > 1."""
        return self.table.get((c % self.N, d % self.N))


def rref(rows, ncols):
    """Reduced row echelon form of sparse rows (dict col -> Fraction)."""
    pivots = []  # list of (col, row)
    for row in rows:
        row = {k: Fraction(v) for k, v in row.items() if v}
        for col, prow in pivots:
            c = row.get(col)
            if c:
                for k, v in prow.items():
                    nv = row.get(k, 0) - c * v
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        if not row:
            continue
        col = min(row)
        inv = 1 / row[col]
        row = {k: v * inv for k, v in row.items()}
        for _, prow in pivots:
            c = prow.get(col)
            if c:
                for k, v in row.items():
                    nv = prow.get(k, 0) - c * v
                    if nv:
                        prow[k] = nv
                    else:
                        prow.pop(k, None)
        pivots.append((col, row))
    pivots.sort()
    return pivots


def heilbronn(n):
    """Merel's set: [[a, b], [c, d]] with ad - bc = n, a > b >= 0, d > c >= 0."""
    for a in range(1, n + 1):
        for d in range(-(-n // a), n + 2 - a):
            bc = a * d - n
            if bc == 0:
                for b in range(a):
                    yield a, b, 0, d
                for c in range(1, d):
                    yield a, 0, c, d
            elif d > 1:
                for b in range(-(-bc // (d - 1)), a):
                    if bc % b == 0:
                        yield a, b, bc // b, d


def cusp_equivalent(N, p, q):
    u1, v1 = p
    u2, v2 = q
    s1 = xgcd(u1, v1)[0]
    s2 = xgcd(u2, v2)[0]
    return (s1 * v2 - s2 * v1) % gcd(N, v1 * v2) == 0


class CuspidalSymbols:
    def __init__(self, N):
        self.N = N
        self.p1 = p1 = P1(N)
        n = len(p1)
        rels = []
        for i, (c, d) in enumerate(p1.reps):
            rels.append({i: 1})
            j = p1.index(d, -c)
            rels[-1][j] = rels[-1].get(j, 0) + 1
            row = {}
            for k in (i, p1.index(d, -c - d), p1.index(-c - d, c)):
                row[k] = row.get(k, 0) + 1
            rels.append(row)
        piv = rref(rels, n)
        pivcols = {col for col, _ in piv}
        self.free = [k for k in range(n) if k not in pivcols]
        fidx = {k: i for i, k in enumerate(self.free)}
        # each Manin symbol as a vector in free coordinates
        self.coords = [None] * n
        for k in self.free:
            self.coords[k] = {fidx[k]: Fraction(1)}
        for col, row in piv:
            self.coords[col] = {fidx[k]: -v for k, v in row.items() if k != col}
        self.dim_m = len(self.free)

        # boundary map
        cusps = []

        def cusp_index(u, v):
            g = gcd(u, v)
            u, v = u // g, v // g
            for i, c in enumerate(cusps):
                if cusp_equivalent(N, (u, v), c):
                    return i
            cusps.append((u, v))
            return len(cusps) - 1

        brows = {}
        for fi, k in enumerate(self.free):
            c, d = p1.reps[k]
            a, b, g = xgcd(d, -c)
            if g != 1:
                # lift (c, d) to a coprime pair congruent mod N
                c, d = self._coprime_lift(c, d)
                a, b, g = xgcd(d, -c)
            assert a * d - b * c == 1
            i1 = cusp_index(a, c)
            i2 = cusp_index(b, d)
            brows.setdefault(i1, {})[fi] = brows.get(i1, {}).get(fi, 0) + 1
            brows.setdefault(i2, {})[fi] = brows.get(i2, {}).get(fi, 0) - 1
        bpiv = rref(list(brows.values()), self.dim_m)
        bcols = {col for col, _ in bpiv}
        kernel = []
        for f in range(self.dim_m):
            if f in bcols:
                continue
            vec = {f: Fraction(1)}
            for col, row in bpiv:
                if f in row:
                    vec[col] = -row[f]
            kernel.append(vec)
        self.basis = kernel  # columns spanning the cuspidal subspace
        self.dim = len(kernel)
        # rows where the kernel basis is the identity (free columns of bpiv)
        self.id_rows = [f for f in range(self.dim_m) if f not in bcols]

    def _coprime_lift(self, c, d):
        N = self.N
        for t in range(0, 10 * N * N):
            if gcd(c, d + t * N) == 1:
                return c, d + t * N
        raise RuntimeError("no coprime lift")

    def hecke_direct(self, n):
        """Matrix of T_n on the cuspidal subspace via Heilbronn matrices."""
        p1 = self.p1
        mats = list(heilbronn(n))
        images = []
        for vec in self.basis:
            out = {}
            for f, coef in vec.items():
                c, d = p1.reps[self.free[f]]
                for a, b, cc, dd in mats:
                    idx = p1.index(c * a + d * cc, c * b + d * dd)
                    if idx is None:
                        continue
                    for k, v in self.coords[idx].items():
                        out[k] = out.get(k, 0) + coef * v
            images.append(out)
        # express images in the kernel basis via the identity rows
        return [[img.get(r, Fraction(0)) for img in images] for r in self.id_rows]


def matmul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    return [[sum(A[i][k] * B[k][j] for k in range(m)) for j in range(p)] for i in range(n)]


def matsub(A, B, s=1):
    return [[a - s * b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def hecke_all(cs, prec):
    """T_1, ..., T_{prec-1} on the cuspidal subspace."""
    N, dim = cs.N, cs.dim
    ident = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    T = {1: ident}
    for p in primes_below(prec):
        Tp = cs.hecke_direct(p)
        T[p] = Tp
        prev, cur, pk = ident, Tp, p
        while pk * p < prec:
            if N % p == 0:
                nxt = matmul(Tp, cur)
            else:
                nxt = matsub(matmul(Tp, cur), prev, p)
            prev, cur, pk = cur, nxt, pk * p
            T[pk] = cur
    for n in range(2, prec):
        if n in T:
            continue
        fac = factor(n)
        acc = ident
        for p, e in fac.items():
            acc = matmul(acc, T[p**e])
        T[n] = acc
    return T


def cusp_form_basis(N, prec, check=True):
    cs = CuspidalSymbols(N)
    if cs.dim == 0:
        return []
    T = hecke_all(cs, prec)
    if check:
        for n in (4, 6, 9, 10, 12):
            if n < prec:
                assert cs.hecke_direct(n) == T[n], (N, n)
    rows = []
    for i in range(cs.dim):
        for j in range(cs.dim):
            rows.append({n - 1: T[n][i][j] for n in range(1, prec) if T[n][i][j]})
    piv = rref(rows, prec - 1)
    assert 2 * len(piv) == cs.dim, (N, cs.dim, len(piv))
    rational = [[row.get(k, Fraction(0)) for k in range(prec - 1)] for _, row in piv]
    return integral_echelon(rational)


def lcm(a, b):
    return a * b // gcd(a, b)


def rank_mod_p(rows, p):
    rows = [[x % p for x in r] for r in rows]
    rank, col, n = 0, 0, len(rows[0])
    while rank < len(rows) and col < n:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        for i in range(len(rows)):
            if i != rank and rows[i][col]:
                f = rows[i][col] * inv % p
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


def left_kernel_vector_mod_p(rows, p):
    """Nonzero v (list mod p) with v . rows == 0 mod p."""
    g = len(rows)
    aug = [[x % p for x in r] + [int(i == j) for j in range(g)] for i, r in enumerate(rows)]
    n = len(rows[0])
    rank, col = 0, 0
    while rank < g and col < n:
        piv = next((i for i in range(rank, g) if aug[i][col]), None)
        if piv is None:
            col += 1
            continue
        aug[rank], aug[piv] = aug[piv], aug[rank]
        inv = pow(aug[rank][col], -1, p)
        for i in range(g):
            if i != rank and aug[i][col]:
                f = aug[i][col] * inv % p
                aug[i] = [(a - f * b) % p for a, b in zip(aug[i], aug[rank])]
        rank += 1
        col += 1
    assert rank < g
    return aug[rank][n:]


def integral_echelon(rational):
    """Hermite normal form of the integral vectors in the Q-span of `rational`."""
    den = 1
    for r in rational:
        for v in r:
            den = lcm(den, v.denominator)
    rows = [[int(v * den) for v in r] for r in rational]
    for p in factor(den):
        while rank_mod_p(rows, p) < len(rows):
            v = left_kernel_vector_mod_p(rows, p)
            k = max(i for i, x in enumerate(v) if x)
            new = [sum(c * r[j] for c, r in zip(v, rows)) for j in range(len(rows[0]))]
            assert all(x % p == 0 for x in new)
            rows[k] = [x // p for x in new]
    return hermite(rows)


def hermite(rows):
    rows = [list(r) for r in rows]
    n = len(rows[0])
    out = []
    col = 0
    while rows and col < n:
        nz = [r for r in rows if r[col]]
        if not nz:
            col += 1
            continue
        rest = [r for r in rows if not r[col]]
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            a = nz[0]
            for i in range(1, len(nz)):
                f = nz[i][col] // a[col]
                nz[i] = [x - f * y for x, y in zip(nz[i], a)]
            rest += [r for r in nz[1:] if not r[col]]
            nz = [nz[0]] + [r for r in nz[1:] if r[col]]
        piv = nz[0]
        if piv[col] < 0:
            piv = [-x for x in piv]
        for i, r in enumerate(out):
            f = r[col] // piv[col]
            out[i] = [x - f * y for x, y in zip(r, piv)]
        out.append(piv)
        rows = [r for r in rest if any(r)]
        col += 1
    return out


def write_fixture(N, basis, prec, out_dir):
    lines = [f"level={N} weight=2 genus={len(basis)} prec={prec} echelon=yes"]
    for i, coeffs in enumerate(basis):
        lines.append(f"form {i}: " + ",".join(str(c) for c in coeffs))
    path = out_dir / f"level_{N:03d}.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("levels", nargs="*", type=int)
    ap.add_argument("--prec", type=int, default=100)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--default-set", action="store_true")
    args = ap.parse_args(argv)
    levels = args.levels or []
    if args.default_set:
        levels = sorted(set(levels) | set(NONHYPERELLIPTIC) | set(GENUS_TWO))
    args.out.mkdir(parents=True, exist_ok=True)
    for N in levels:
        basis = cusp_form_basis(N, args.prec)
        path = write_fixture(N, basis, args.prec, args.out)
        print(f"N={N} g={len(basis)} -> {path.relative_to(ROOT) if path.is_relative_to(ROOT) else path}")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
