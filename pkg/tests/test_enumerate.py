import hashlib
import json
import math

import pytest
from hypothesis import given, settings, strategies as st
from sympy import factorint

from lebnag.enumerate import (CSV_HEADER, PAIRS_BOUND, FetchError, IntegrityError, Solution,
                              brute_force, bundled_box, bundled_pairs, check_identity,
                              dedup_triples, exponent_totals, fetch_dataset, n3_map, n3_pair,
                              n4_map, n4_pair, parse_solution_list, read_solutions_csv,
                              restrict, solution, solutions_csv, sunit_square_pairs)

S = (2, 3, 5, 7, 11)


def _smooth_oracle(x, y, n):
    s = y ** n - x * x
    if s <= 0 or math.gcd(x, y) != 1:
        return None
    f = factorint(s)
    if set(f) - set(S):
        return None
    return tuple(f.get(p, 0) for p in S)


def test_check_identity_examples():
    assert check_identity(11, 2, 7) == (0, 0, 0, 1, 0)
    assert check_identity(8143, 4, 13) == (0, 3, 1, 2, 2)
    assert check_identity(2, 3, 3) is None   # 23
    assert check_identity(2, 4, 3) is None   # gcd 2
    assert check_identity(9, 4, 3) is None   # 64 - 81 < 0
    with pytest.raises(ValueError):
        solution(2, 3, 3)


@settings(max_examples=500, deadline=None, derandomize=True)
@given(st.integers(1, 10 ** 6), st.integers(2, 60), st.integers(3, 12))
def test_check_identity_matches_factorint(x, y, n):
    assert check_identity(x, y, n) == _smooth_oracle(x, y, n)


def test_brute_force_small():
    assert brute_force(1, 3) == []
    assert brute_force(10, 2) == []
    sols = brute_force(10, 7)
    trip = {(s.x, s.y, s.n) for s in sols}
    assert {(5, 2, 5), (1, 2, 3), (11, 2, 7)} <= trip
    assert sols == restrict(bundled_box(), 10, 7)
    with pytest.raises(ValueError):
        brute_force(10, 7, strategy="sieve")
    with pytest.raises(ValueError):
        brute_force(10, 7, workers=0)


def test_strategies_agree():
    xl = brute_force(12, 9, strategy="xloop")
    assert xl == brute_force(12, 9, strategy="smooth")
    assert xl == brute_force(12, 9, strategy="smooth", workers=2)


def test_output_sorted_unique_and_verified():
    box = bundled_box()
    keys = [(s.n, s.y, s.x) for s in box]
    assert keys == sorted(set(keys))
    for s in box:
        assert s.verify()
        assert s.alpha == _smooth_oracle(s.x, s.y, s.n)
        assert s.x * s.x + s.D == s.y ** s.n


def test_csv_round_trip(tmp_path):
    box = bundled_box()
    p = tmp_path / "box.csv"
    p.write_text(solutions_csv(box))
    assert read_solutions_csv(p) == box
    assert p.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,n\n1,2,3\n")
    with pytest.raises(ValueError):
        read_solutions_csv(bad)


def test_parse_solution_list():
    text = "# x y n\n\n5 2 5\n11, 2, 7  extra\n8143 4 13\n"
    got = parse_solution_list(text)
    assert [(s.x, s.y, s.n) for s in got] == [(5, 2, 5), (11, 2, 7), (8143, 4, 13)]
    with pytest.raises(ValueError):
        parse_solution_list("5 2\n")
    with pytest.raises(ValueError):
        parse_solution_list("2 3 3\n")


def test_n3_map_synthetic():
    # y^3 - x^2 = D: the curve Y^2 = X^3 - 3yX + 2x has c4 = 144y, c6 = -1728x
    box3 = [(s.x, s.y) for s in bundled_box() if s.n == 3]
    assert len(box3) > 20
    records = [(144 * y, -1728 * x) for x, y in box3] + [(9 * y, 27 * x) for x, y in box3[:5]]
    assert n3_map(records) == sorted(box3, key=lambda t: (t[1], t[0]))
    assert n3_pair(10, 27) is None
    assert n3_pair(144 * 2, 1728 * 4) is None  # gcd(x, y) = 2


def test_n4_map_matches_box():
    assert n4_pair(3, 1) is None               # 4 is a square but y would be 2, x = 2
    assert n4_pair(1, 3) is None
    assert n4_pair(6, 2) is None               # gcd 2, (a+b)/4 = 2 not a square
    box4 = sorted(((s.x, s.y) for s in bundled_box() if s.n == 4), key=lambda t: (t[1], t[0]))
    # the pair slice also reaches y > 50; compare on the box
    assert [t for t in n4_map(bundled_pairs()) if t[1] <= 50] == box4
    assert len(box4) == 143


def test_sunit_square_pairs_regenerates_fixture():
    pairs = sunit_square_pairs(PAIRS_BOUND)
    assert pairs == bundled_pairs()
    for a, b in pairs[:200]:
        assert a >= b and math.isqrt(a + b) ** 2 == a + b
        assert set(factorint(a)) | set(factorint(b)) <= set(S)


def test_dedup_keeps_both_exponents():
    trip = dedup_triples({5: [(241, 9)]})
    assert (241, 9, 5) in trip and (241, 3, 10) in trip
    assert dedup_triples({}) == []
    # 1 + 7 = 2^3 = 8 and the n = 3 pair (1, 4) also gives 1 + 7 = 2^6
    t = dedup_triples({3: [(1, 2), (1, 4)], 6: [(1, 2)]})
    assert t == sorted(set(t), key=lambda v: (v[2], v[1], v[0]))
    assert t.count((1, 2, 6)) == 1
    assert exponent_totals(t) == {3: 2, 6: 1}
    assert exponent_totals([]) == {}


def _serve(tmp_path, payload=b"1 2 3\n"):
    src = tmp_path / "remote" / "list.txt"
    src.parent.mkdir()
    src.write_bytes(payload)
    return src.as_uri(), hashlib.sha256(payload).hexdigest()


def test_fetch_cache_hit_without_network(tmp_path):
    url, digest = _serve(tmp_path)
    cache = tmp_path / "cache"
    assert fetch_dataset(url, cache, sha256=digest).read() == b"1 2 3\n"
    assert json.loads((cache / "manifest.json").read_text()) == {"list.txt": digest}
    # remove the source: a cache hit must not touch the URL
    (tmp_path / "remote" / "list.txt").unlink()
    assert fetch_dataset(url, cache, offline=True).read() == b"1 2 3\n"
    assert fetch_dataset(url, cache).read() == b"1 2 3\n"


def test_fetch_integrity_errors(tmp_path):
    url, digest = _serve(tmp_path)
    cache = tmp_path / "cache"
    with pytest.raises(IntegrityError):
        fetch_dataset(url, cache, sha256="0" * 64)
    assert not (cache / "list.txt").exists()
    fetch_dataset(url, cache)
    # truncated cache entry
    (cache / "list.txt").write_bytes(b"1 2")
    with pytest.raises(IntegrityError):
        fetch_dataset(url, cache)


def test_fetch_offline_and_unreachable(tmp_path):
    with pytest.raises(FetchError):
        fetch_dataset("http://example.invalid/x.txt", tmp_path, offline=True)
    with pytest.raises(FetchError):
        fetch_dataset((tmp_path / "missing.txt").as_uri(), tmp_path / "c")


def test_solution_ordering():
    a, b = Solution(3, 2, 1, (0, 0, 0, 1, 0)), Solution(5, 2, 5, (0, 0, 0, 1, 0))
    assert a < b and str(a) == "1^2 + 7 = 2^3"
