"""Add exact Hecke-field data for the irrational newforms in newforms.json.

For each non-rational eigenform this stores the defining polynomial of its
Hecke field, an integral basis (as polynomials in the root y) and every c_p,
p < 500 prime to the level, as a polynomial in y.  Coefficients are written
constant term first as [numerator, denominator].  Run with a cypari2 Python:

    python tools/gen_hecke_fields.py
"""

import json
from pathlib import Path

import cypari2

AP_BOUND = 500


def poly(pari, x):
    x = pari.lift(x)
    if x == 0:
        return [[0, 1]]
    deg = max(int(pari.poldegree(x, "y")), 0)
    out = []
    for i in range(deg + 1):
        c = pari.polcoef(x, i, "y")
        out.append([int(pari.numerator(c)), int(pari.denominator(c))])
    return out


def main():
    out = Path(__file__).resolve().parents[1] / "src/lebnag/data/newforms.json"
    forms = json.loads(out.read_text())
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    ps = [int(p) for p in pari.primes([2, AP_BOUND - 1])]
    for N in sorted({f["level"] for f in forms if f["dim"] > 1}):
        pari(f"mf = mfinit([{N},2],0); L = mfeigenbasis(mf); P = mffields(mf);")
        for entry in (f for f in forms if f["level"] == N and f["dim"] > 1):
            i = entry["index"] + 1
            fp = pari(f"subst(P[{i}], variable(P[{i}]), y)")
            zk = pari(f"nfinit(subst(P[{i}], variable(P[{i}]), y)).zk")
            co = pari(f"C = mfcoefs(L[{i}], {AP_BOUND}); [subst(lift(c), variable(P[{i}]), y) | c <- C]")
            entry["field"] = {
                "poly": poly(pari, fp),
                "zk": [poly(pari, w) for w in zk],
                "c": {str(p): poly(pari, co[p]) for p in ps if N % p},
            }
        print(N, flush=True)
    out.write_text(json.dumps(forms, indent=0, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
