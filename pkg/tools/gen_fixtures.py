"""Regenerate the bundled curve and newform fixtures.

Needs a Python with cypari2 and the PARI ``elldata`` package (Cremona's
tables), e.g. the ``passagemath-pari`` and ``passagemath-pari-elldata``
wheels.  The package itself never imports PARI; this script exists so the
fixtures can be rebuilt and audited.

    python tools/gen_fixtures.py --datadir /path/to/share/pari
"""

import argparse
import json
from pathlib import Path

import cypari2

LEVELS = [2 * r for r in (1, 3, 5, 7, 11, 15, 21, 33, 35, 55, 77, 105, 165, 231, 385, 1155)]

# curves named in the literature on this equation, beyond the optimal curve of
# every rational newform at the levels above
NAMED = [
    "14a4", "210a1", "210b5", "210e1", "210e6", "330c1", "330c6", "330e4",
    "462a1", "462b1", "462d1", "462e1", "462f1", "462g3", "770a1", "770e1",
    "770g3", "2310d4", "2310j1", "2310l1", "2310m1", "2310n1", "2310n6", "2310o1",
]

AP_BOUND = 500


def curve(pari, label):
    return pari(f'ellinit("{label}")')


def primes_below(pari, b):
    return [int(p) for p in pari.primes([2, b - 1])]


def record_line(pari, label, ps):
    E = curve(pari, label)
    ainvs = [int(a) for a in E[:5]]
    N = int(pari.ellglobalred(E)[0])
    disc = int(E.disc())
    fac = pari.factor(abs(disc))
    pairs = [[int(fac[0][i]), int(fac[1][i])] for i in range(len(fac[0]))]
    ap = {str(p): int(pari.ellap(E, p)) for p in ps if N % p}
    sign = -1 if disc < 0 else 1
    return (f"{label} {N} [{','.join(map(str, ainvs))}] {sign} "
            f"{json.dumps(pairs, separators=(',', ':'))} "
            f"{json.dumps({'ap': ap}, separators=(',', ':'))}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--datadir", required=True)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/lebnag/data"))
    args = ap.parse_args()
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    pari.default("datadir", args.datadir)
    ps = primes_below(pari, AP_BOUND)
    out = Path(args.out)

    newforms = []
    optimal = []
    for N in LEVELS:
        mf = pari.mfinit([N, 2], 0)
        basis = pari.mfeigenbasis(mf)
        # the isogeny class representative is the first curve listed (number 1)
        reps = {}
        for lab in (str(c[0]) for c in pari.ellsearch(N)):
            iso = lab.rstrip("0123456789")
            if iso not in reps:
                reps[iso] = lab
        rep_ap = {iso: [int(pari.ellap(curve(pari, lab), p)) for p in ps[:40]]
                  for iso, lab in reps.items()}
        for idx, F in enumerate(basis):
            coefs = pari.mfcoefs(F, AP_BOUND)
            entry = {"level": N, "index": idx, "label": f"{N}.{idx}"}
            cps = {}
            dim = 1
            for p in ps:
                if N % p == 0:
                    continue
                cp = pari.charpoly(coefs[p])
                cps[str(p)] = [int(cp.polcoef(i)) for i in range(int(pari.poldegree(cp)), -1, -1)]
                dim = len(cps[str(p)]) - 1
            entry["dim"] = dim
            if dim == 1:
                vec = [-cps[str(p)][1] if N % p else None for p in ps[:40]]
                match = [iso for iso, ref in rep_ap.items()
                         if all(v is None or v == r for v, r in zip(vec, ref))]
                assert len(match) == 1, (N, idx, match)
                entry["curve"] = reps[match[0]]
                entry["ap"] = {k: -v[1] for k, v in cps.items()}
                optimal.append(reps[match[0]])
            else:
                entry["charpoly"] = cps
            newforms.append(entry)
        print(N, len(basis), flush=True)

    labels = []
    for lab in optimal + NAMED:
        if lab not in labels:
            labels.append(lab)
    lines = [record_line(pari, lab, ps) for lab in labels]
    (out / "curves.txt").write_text(
        "# label conductor [a1,a2,a3,a4,a6] sign [[p,e],...] {ap for good p < 500}\n"
        + "\n".join(lines) + "\n")
    (out / "newforms.json").write_text(json.dumps(newforms, indent=0, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
