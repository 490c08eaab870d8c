"""Write the y <= 50, n <= 26 solution slice and the S-unit pair slice used by the tests.

The published list could not be downloaded when the fixture was built, so the
slice is produced here by the smooth-difference route alone and audited:

* every row passes check_identity;
* the x-loop route reproduces every row with y^n <= 10^8;
* the identities quoted in the literature that fall inside the box are present;
* per-exponent counts for n >= 7 equal the distribution table (all of those
  solutions have y <= 50).

    python3 tools/gen_box_fixture.py [--check]
"""

import argparse
import sys

from lebnag.enumerate import (BOX_FIXTURE, PAIRS_BOUND, PAIRS_FIXTURE, XLOOP_LIMIT, _xloop,
                              brute_force, check_identity, restrict, solutions_csv,
                              sunit_square_pairs)

# n: number of (x, y) pairs over all y, for the exponents where the box is complete
TABLE_COUNTS = {7: 5, 8: 17, 9: 1, 10: 4, 12: 4, 13: 1, 14: 4, 15: 1, 26: 1}
QUOTED = [(1, 3, 5), (241, 9, 5), (401, 11, 5), (4201, 31, 5), (4443, 37, 5),
          (241, 3, 10), (181, 8, 5), (11, 2, 7), (8143, 4, 13), (5, 2, 5)]


def build():
    sols = brute_force(50, 26, strategy="smooth")
    assert all(s.verify() for s in sols)
    small = [s for s in sols if s.y ** s.n <= XLOOP_LIMIT]
    loop = sorted(s for y in range(2, 51) for n in range(3, 27)
                  if y ** n <= XLOOP_LIMIT for s in _xloop(y, n))
    assert loop == small, "x loop disagrees"
    keys = {(s.x, s.y, s.n) for s in sols}
    for t in QUOTED:
        assert check_identity(*t) is not None and t in keys, t
    for n, c in TABLE_COUNTS.items():
        assert sum(s.n == n for s in sols) == c, n
    return restrict(sols, 50, 26)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="compare with the bundled file")
    args = ap.parse_args()
    text = solutions_csv(build())
    pairs = sunit_square_pairs(PAIRS_BOUND)
    ptext = f"# a b: S-units with a >= b, gcd(a, b) squarefree, a + b <= {PAIRS_BOUND} a square\n"
    ptext += "".join(f"{a} {b}\n" for a, b in pairs)
    if args.check:
        ok = BOX_FIXTURE.read_text() == text and PAIRS_FIXTURE.read_text() == ptext
        print("fixtures match" if ok else "fixtures differ")
        sys.exit(0 if ok else 1)
    BOX_FIXTURE.write_text(text)
    PAIRS_FIXTURE.write_text(ptext)
    print(f"wrote {BOX_FIXTURE} ({text.count(chr(10)) - 1} rows)")
    print(f"wrote {PAIRS_FIXTURE} ({len(pairs)} pairs)")


if __name__ == "__main__":
    main()
