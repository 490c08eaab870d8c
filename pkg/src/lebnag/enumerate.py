"""Brute-force ground truth, identity checks and the n = 3, 4 pipelines.

Two ways to find every x^2 + s = y^n with s a {2,3,5,7,11}-unit coprime to y:

* ``xloop``   run x over [1, y^(n/2)) and factor y^n - x^2 over S;
* ``smooth``  run s over the S-units below y^n and ask whether y^n - s is a
  square, after cheap quadratic-residue filters done on whole numpy arrays.

The first is only usable while y^n is small; the second reaches y^n ~ 10^44
in seconds.  They are cross-checked on the boxes where both run.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
import urllib.error
import urllib.request
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .arith import S_PRIMES, factor_smooth
from .ecurve import CurveRecord, c_invariants

CSV_HEADER = ("n", "x", "y", "a2", "a3", "a5", "a7", "a11")
XLOOP_LIMIT = 10 ** 8          # auto strategy uses the x loop up to this y^n
_DATA = Path(__file__).resolve().parent / "data"
BOX_FIXTURE = _DATA / "solutions_y50_n26.csv"

SOLUTIONS_URL = ("http://homepages.warwick.ac.uk/staff/S.Siksek/progs/lebnag/"
                 "lebesgue_nagell_solutions.txt")
CURVES_URL = ("https://raw.githubusercontent.com/bmatschke/s-unit-equations/master/"
              "elliptic-curve-tables/good-reduction-away-from-first-primes/K_deg_1/"
              "curves_K_1.1.1.1_S_2_3_5_7_11.txt")
SUNIT_SQUARES_URL = ("https://raw.githubusercontent.com/bmatschke/"
                     "solving-classical-diophantine-equations/master/sums-of-units-equations/"
                     "sumsOfUnitsBeingASquare__S_2_3_5_7_11.txt")


class FetchError(RuntimeError):
    pass


class IntegrityError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class Solution:
    """x^2 + prod p^alpha_p = y^n; ordered by (n, y, x)."""

    n: int
    y: int
    x: int
    alpha: Tuple[int, int, int, int, int]

    @property
    def D(self) -> int:
        return math.prod(p ** e for p, e in zip(S_PRIMES, self.alpha))

    def verify(self) -> bool:
        return check_identity(self.x, self.y, self.n) == self.alpha

    def csv_row(self) -> Tuple[int, ...]:
        return (self.n, self.x, self.y) + self.alpha

    def __str__(self):
        return f"{self.x}^2 + {self.D} = {self.y}^{self.n}"


def check_identity(x: int, y: int, n: int) -> Optional[Tuple[int, ...]]:
    """alpha with x^2 + prod p^alpha_p = y^n, or None.

    None also covers gcd(x, y) > 1 and y^n <= x^2.
    """
    if x < 1 or y < 1 or n < 3:
        return None
    s = y ** n - x * x
    if s <= 0 or math.gcd(x, y) != 1:
        return None
    return factor_smooth(s)


def solution(x: int, y: int, n: int) -> Solution:
    a = check_identity(x, y, n)
    if a is None:
        raise ValueError(f"({x}, {y}, {n}) is not a solution")
    return Solution(n, y, x, a)


# --- x loop -------------------------------------------------------------------

def _xloop(y: int, n: int) -> List[Solution]:
    Y = y ** n
    out = []
    for x in range(1, math.isqrt(Y - 1) + 1):
        if math.gcd(x, y) != 1:
            continue
        a = factor_smooth(Y - x * x)
        if a is not None:
            out.append(Solution(n, y, x, a))
    return out


# --- smooth differences ---------------------------------------------------------

def _sq_table(m: int) -> np.ndarray:
    t = np.zeros(m, dtype=bool)
    t[(np.arange(m, dtype=np.int64) ** 2) % m] = True
    return t


# filter moduli, each a product of coprime prime powers; products of two
# residues stay below 2^63
_FILTER_FACTORS = ((64, 9, 25, 7), (11, 13, 17, 19, 23), (29, 31, 37, 41),
                   (43, 47, 53, 59), (61, 67, 71, 73))
_FILTERS = None


def _filters():
    global _FILTERS
    if _FILTERS is None:
        out = []
        for fs in _FILTER_FACTORS:
            m = math.prod(fs)
            r = np.arange(m, dtype=np.int64)
            ok = np.ones(m, dtype=bool)
            for f in fs:
                ok &= _sq_table(f)[r % f]
            out.append((m, ok))
        _FILTERS = out
    return _FILTERS


def _sunit_exponents(primes: Sequence[int], log_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exponent rows and logs of all prod p^e over `primes` with log <= log_max, by log."""
    exps = np.zeros((1, 0), dtype=np.uint8)
    logs = np.zeros(1)
    for p in primes:
        lp = math.log(p)
        blocks_e, blocks_l = [], []
        for e in range(int(log_max / lp) + 1):
            keep = logs + e * lp <= log_max
            if not keep.any():
                break
            k = int(keep.sum())
            blocks_e.append(np.hstack([exps[keep], np.full((k, 1), e, dtype=np.uint8)]))
            blocks_l.append(logs[keep] + e * lp)
        exps, logs = np.vstack(blocks_e), np.concatenate(blocks_l)
    order = np.argsort(logs)
    return exps[order], logs[order]


def _residues(exps: np.ndarray, primes: Sequence[int], m: int) -> np.ndarray:
    r = np.ones(len(exps), dtype=np.int64)
    for j, p in enumerate(primes):
        col = exps[:, j]
        tab = np.array([pow(p, e, m) for e in range(int(col.max()) + 1)], dtype=np.int64)
        r = r * tab[col] % m
    return r


def _smooth_group(primes: Tuple[int, ...], ys: Sequence[int], ns: Sequence[int]) -> List[Solution]:
    """The smooth route for every y in `ys`; all of them are coprime to exactly
    the primes in `primes`, so they share one sorted list of S-units."""
    # the slack keeps every s < y^n despite float logs; s < y^n is rechecked exactly
    slack = 1e-9
    exps, logs = _sunit_exponents(primes, max(ns) * math.log(max(ys)) + slack)
    filt = _filters()
    m0, ok0 = filt[0]
    res0 = _residues(exps, primes, m0)
    out = []
    for y in ys:
        for n in ns:
            Y = y ** n
            k = int(np.searchsorted(logs, n * math.log(y) + slack, side="right"))
            idx = np.flatnonzero(ok0[(Y % m0 - res0[:k]) % m0])
            for m, ok in filt[1:]:
                if not len(idx):
                    break
                idx = idx[ok[(Y % m - _residues(exps[idx], primes, m)) % m]]
            for i in idx:
                e = dict(zip(primes, (int(v) for v in exps[i])))
                s = math.prod(p ** k for p, k in e.items())
                if s >= Y:
                    continue
                x = math.isqrt(Y - s)
                if x > 0 and x * x == Y - s:
                    out.append(Solution(n, y, x, tuple(e.get(p, 0) for p in S_PRIMES)))
    return out


def _coprime_primes(y: int) -> Tuple[int, ...]:
    return tuple(p for p in S_PRIMES if y % p)


def _solve_group(args) -> List[Solution]:
    primes, ys, n_max, strategy = args
    ns = list(range(3, n_max + 1))
    out = []
    if strategy == "xloop":
        return [s for y in ys for n in ns for s in _xloop(y, n)]
    big = []
    for y in ys:
        small = [n for n in ns if strategy == "auto" and y ** n <= XLOOP_LIMIT]
        out += [s for n in small for s in _xloop(y, n)]
        if len(small) < len(ns):
            big.append((y, [n for n in ns if n not in small]))
    if big:
        # one unit list per group; n values already done by the x loop are skipped
        done = {(y, n) for y in ys for n in ns} - {(y, n) for y, bn in big for n in bn}
        sols = _smooth_group(primes, [y for y, _ in big], sorted({n for _, bn in big for n in bn}))
        out += [s for s in sols if (s.y, s.n) not in done]
    return out


def brute_force(y_max: int, n_max: int, strategy: str = "auto", workers: int = 1) -> List[Solution]:
    """Every solution with 2 <= y <= y_max and 3 <= n <= n_max, sorted by (n, y, x).

    Work is split by the set of S-primes coprime to y (each group shares its
    S-unit list); results are merged by sorting, so `workers` never changes
    the output.
    """
    if strategy not in ("auto", "xloop", "smooth"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if n_max < 3 or y_max < 2:
        return []
    groups: Dict[Tuple[int, ...], List[int]] = {}
    for y in range(2, y_max + 1):
        groups.setdefault(_coprime_primes(y), []).append(y)
    jobs = [(primes, ys, n_max, strategy) for primes, ys in sorted(groups.items())]
    if workers == 1:
        parts = list(map(_solve_group, jobs))
    else:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_solve_group, jobs))
    return sorted(s for part in parts for s in part)


# --- solutions files -------------------------------------------------------------

def write_solutions_csv(sols: Iterable[Solution], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in sorted(sols):
        w.writerow(s.csv_row())


def solutions_csv(sols: Iterable[Solution]) -> str:
    buf = io.StringIO()
    write_solutions_csv(sols, buf)
    return buf.getvalue()


def read_solutions_csv(path: Union[str, Path]) -> List[Solution]:
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if tuple(r.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        out = []
        for row in r:
            n, x, y = int(row["n"]), int(row["x"]), int(row["y"])
            a = tuple(int(row[k]) for k in CSV_HEADER[3:])
            out.append(Solution(n, y, x, a))
    return sorted(out)


def bundled_box() -> List[Solution]:
    """The y <= 50, n <= 26 slice of the complete solution list."""
    return read_solutions_csv(BOX_FIXTURE)


_TRIPLE = re.compile(r"\d+")


def parse_solution_list(text: str) -> List[Solution]:
    """Triples from a plain-text list, one solution per line.

    Lines are read as their first three integers (x, y, n); blank lines and
    lines starting with '#' are skipped.  Each triple must pass check_identity.
    """
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        nums = [int(t) for t in _TRIPLE.findall(line)]
        if len(nums) < 3:
            raise ValueError(f"line {lineno}: fewer than three integers")
        x, y, n = nums[:3]
        out.append(solution(x, y, n))
    return sorted(out)


def restrict(sols: Iterable[Solution], y_max: int, n_max: int) -> List[Solution]:
    return sorted(s for s in sols if s.y <= y_max and s.n <= n_max)


# --- n = 3 and n = 4 --------------------------------------------------------------

def n3_pair(c4: int, c6: int) -> Optional[Tuple[int, int]]:
    if c4 % 144 == 0 and c6 % 1728 == 0:
        y, x = c4 // 144, abs(c6) // 1728
    elif c4 % 9 == 0 and c6 % 27 == 0:
        y, x = c4 // 9, abs(c6) // 27
    else:
        return None
    if y <= 0 or x <= 0 or math.gcd(x, y) != 1:
        return None
    return x, y


def n3_map(records: Iterable[Union[CurveRecord, Tuple[int, int]]]) -> List[Tuple[int, int]]:
    """(x, y) from the c-invariants of curves with good reduction outside S."""
    out = set()
    for r in records:
        c4, c6 = c_invariants(r.ainvs) if isinstance(r, CurveRecord) else r
        p = n3_pair(c4, c6)
        if p is not None:
            out.add(p)
    return sorted(out, key=lambda t: (t[1], t[0]))


def n4_pair(a: int, b: int) -> Optional[Tuple[int, int]]:
    if not a > b >= 1:
        return None
    g = math.gcd(a, b)
    if g == 1:
        x, y2 = a - b, a + b
    elif g == 2:
        # (a, b) = (2 u1, 2 u2) with u1 + u2 = 2 y^2 and u1 - u2 = 2 x
        if (a - b) % 4 or (a + b) % 4:
            return None
        x, y2 = (a - b) // 4, (a + b) // 4
    else:
        return None
    y = math.isqrt(y2)
    if y * y != y2 or math.gcd(x, y) != 1:
        return None
    return x, y


def n4_map(pairs: Iterable[Tuple[int, int]]) -> List[Tuple[int, int]]:
    """(x, y) from S-unit pairs (a, b) with a + b a square.

    gcd(a, b) = 1 gives x = a - b, y^2 = a + b; gcd(a, b) = 2 gives
    x = (a - b)/4, y^2 = (a + b)/4.  Other pairs are skipped.
    """
    out = set()
    for a, b in pairs:
        p = n4_pair(a, b)
        if p is not None:
            out.add(p)
    return sorted(out, key=lambda t: (t[1], t[0]))


def sunit_square_pairs(bound: int) -> List[Tuple[int, int]]:
    """(a, b) of S-units, a >= b, gcd(a, b) squarefree and a + b <= bound a square."""
    exps, _ = _sunit_exponents(S_PRIMES, math.log(bound) + 1e-9)
    units = sorted(u for u in (math.prod(int(p) ** int(e) for p, e in zip(S_PRIMES, row))
                               for row in exps) if u <= bound)
    arr = np.array(units, dtype=np.int64)
    out = []
    for i, b in enumerate(units):
        a = arr[i:]
        a = a[a + b <= bound]
        if not len(a):
            break
        t = a + b
        r = np.round(np.sqrt(t.astype(np.float64))).astype(np.int64)
        for av in a[(r * r == t)]:
            av = int(av)
            g = math.gcd(av, b)
            if all(g % (p * p) for p in S_PRIMES):
                out.append((av, b))
    return sorted(out)


def read_pairs(path: Union[str, Path]) -> List[Tuple[int, int]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            a, b = (int(t) for t in _TRIPLE.findall(line)[:2])
            out.append((a, b))
    return out


PAIRS_FIXTURE = _DATA / "sunit_square_pairs_25e6.txt"
PAIRS_BOUND = 4 * 50 ** 4


def bundled_pairs() -> List[Tuple[int, int]]:
    """S-unit pairs with a + b <= 4 * 50^4, enough for every n = 4 solution with y <= 50."""
    return read_pairs(PAIRS_FIXTURE)


def _exact_root(y: int, k: int) -> Optional[int]:
    r = round(y ** (1.0 / k))
    for c in (r - 1, r, r + 1):
        if c > 1 and c ** k == y:
            return c
    return None


def dedup_triples(pairs_by_n: Dict[int, Iterable[Tuple[int, int]]]) -> List[Tuple[int, int, int]]:
    """All (x, z, k n) with (x, y) listed under n and y = z^k; sorted, no repeats."""
    out = set()
    for n, pairs in pairs_by_n.items():
        for x, y in pairs:
            out.add((x, y, n))
            for k in range(2, y.bit_length() + 1):
                z = _exact_root(y, k)
                if z is not None:
                    out.add((x, z, k * n))
    return sorted(out, key=lambda t: (t[2], t[1], t[0]))


def exponent_totals(triples: Iterable[Tuple[int, int, int]]) -> Dict[int, int]:
    tot: Dict[int, int] = {}
    for _, _, n in triples:
        tot[n] = tot.get(n, 0) + 1
    return dict(sorted(tot.items()))


# --- dataset cache ----------------------------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fetch_dataset(url: str, cache_dir: Union[str, Path], sha256: Optional[str] = None,
                  offline: bool = False, timeout: float = 60.0) -> io.BytesIO:
    """Cached download; the cache keeps a manifest of sha256 digests.

    A cached file whose digest no longer matches its manifest entry (or the
    caller's `sha256`) raises IntegrityError, as does a fresh download that
    does not match `sha256`.
    """
    cache = Path(cache_dir)
    name = url.rstrip("/").rsplit("/", 1)[-1]
    path = cache / name
    manifest_path = cache / "manifest.json"
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    if path.exists():
        data = path.read_bytes()
        want = sha256 or manifest.get(name)
        if want is not None and _sha256(data) != want:
            raise IntegrityError(f"{path}: sha256 {_sha256(data)} != {want}")
        return io.BytesIO(data)
    if offline:
        raise FetchError(f"{name} is not cached and network access is off")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            data = resp.read()
    except (urllib.error.URLError, OSError) as e:
        raise FetchError(f"cannot fetch {url}: {e}") from e
    if sha256 is not None and _sha256(data) != sha256:
        raise IntegrityError(f"{url}: sha256 {_sha256(data)} != {sha256}")
    cache.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    manifest[name] = _sha256(data)
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return io.BytesIO(data)
