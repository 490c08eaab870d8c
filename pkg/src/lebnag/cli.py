"""Command line: ``lebnag <subcommand> ...``.

Exit codes: 0 ok, 1 a verification check failed, 2 usage, 3 data, 4 precision.

Options can also come from a config file (``--config``): one ``key = value``
per line, ``#`` comments, keys named like the long flags with dashes or
underscores.  Values are integers, comma-separated integer lists, quoted
strings, or true/false.  Flags given on the command line win over the file,
and the file wins over the built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DATA, EXIT_PRECISION = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith('"') else raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if not key.replace("_", "").isalnum():
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        out[key] = _config_value(val, lineno)
    return out


def _config_value(val: str, lineno: int):
    if len(val) >= 2 and val[0] == val[-1] and val[0] in "\"'":
        return val[1:-1]
    low = val.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        if "," in val or val.startswith("["):
            return [int(t) for t in val.strip("[]").split(",") if t.strip()]
        return int(val)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot read value {val!r}") from None


def _int_list(s: str) -> List[int]:
    try:
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


# --- subcommands ----------------------------------------------------------------

def cmd_enumerate(a) -> int:
    from .enumerate import (SOLUTIONS_URL, brute_force, fetch_dataset, parse_solution_list,
                            restrict, solutions_csv)
    sols = brute_force(a.ymax, a.nmax, strategy=a.strategy, workers=a.workers)
    sys.stdout.write(solutions_csv(sols))
    if a.fetch:
        text = fetch_dataset(SOLUTIONS_URL, a.cache_dir).read().decode()
        ref = restrict(parse_solution_list(text), a.ymax, a.nmax)
        same = ref == sols
        print(f"published list restricted to the box: {len(ref)} rows, "
              f"{'identical' if same else 'DIFFERENT'}", file=sys.stderr)
        return EXIT_OK if same else EXIT_FAIL
    return EXIT_OK


def cmd_lucas(a) -> int:
    from .lucas import YODD_D, yodd_search
    ds = a.d or YODD_D
    print("d,u,v,x,y,n")
    for s in yodd_search(a.box, ds):
        print(f"{s.d},{s.u},{s.v},{s.x},{s.y},{s.n}")
    return EXIT_OK


def cmd_thue_form(a) -> int:
    from .quadfield import build_thue_mahler_form
    F = build_thue_mahler_form(a.d, a.n)
    if a.json:
        print(F.to_json())
    else:
        for i, c in enumerate(F.coeffs):
            print(f"{i} {c}")
        print(f"F(r, s) = {F.rhs_constant} * c' on solutions; content {F.content}")
    return EXIT_OK


def _read_curves(path: Optional[str]):
    from .ecurve import ingest_curves
    if path is None:
        return None
    return ingest_curves(Path(path))


def cmd_sieve(a) -> int:
    from .freysieve import CampaignConfig, sieve_campaign
    cfg = CampaignConfig(d_set=tuple(a.d) if a.d else CampaignConfig.d_set,
                         n_min=a.n_min, n_max=a.n_max, k_max=a.k_max,
                         prime_budget=a.prime_budget, workers=a.workers,
                         checkpoint=Path(a.checkpoint) if a.checkpoint else None,
                         curves=_read_curves(a.curves))
    rep = sieve_campaign(cfg)
    text = rep.to_csv()
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    for label, d, n in rep.survivors:
        print(f"survivor ({label},{d},{n})", file=sys.stderr)
    return EXIT_OK


def cmd_hk(a) -> int:
    from .ecurve import bundled_curves
    from .freysieve import hk_search
    curves = {c.label: c for c in _read_curves(a.curves)} if a.curves else bundled_curves()
    if a.label not in curves:
        print(f"unknown curve {a.label}", file=sys.stderr)
        return EXIT_DATA
    if len(a.beta) != 4:
        print("--beta needs four residues b3,b5,b7,b11", file=sys.stderr)
        return EXIT_USAGE
    v, pair, r, log = hk_search(curves[a.label], a.d, a.n, a.beta)
    for q1, q2, ratio, verdict in log:
        print(f"q1={q1} q2={q2} ratio={ratio} {verdict.value}")
    print(f"verdict: {v.value}" + (f" via ({pair[0]},{pair[1]}), ratio {r}" if pair else ""))
    return EXIT_OK


def cmd_bounds(a) -> int:
    from .lfl import N_BOUND, derive_N, precision
    ds = a.d or sorted(N_BOUND)
    with precision(a.prec):
        for d in ds:
            N, der = derive_N(d)
            if a.trace:
                print(der.table(a.format), end="")
            print(f"N({d}) = {N:.2g}".replace("e+0", "e").replace("e+", "e"))
    return EXIT_OK


# --- verify-paper -------------------------------------------------------------

@dataclass
class Check:
    criterion: int
    name: str
    ok: bool
    detail: str
    seconds: float


def _check_identities():
    from .enumerate import check_identity
    ids = [(1, 3, 5), (241, 9, 5), (401, 11, 5), (4201, 31, 5), (4443, 37, 5),
           (11, 2, 7), (181, 8, 5), (8143, 4, 13),
           (280213436582801, 4282124641, 3), (1070528159, 32719, 4)]
    bad = [t for t in ids if check_identity(*t) is None]
    return not bad, f"{len(ids) - len(bad)}/{len(ids)} identities"


def _check_lucas():
    from .lucas import quartic_L5, yodd_classes, yodd_search
    sols = yodd_search(4)
    cl = yodd_classes(sols)
    vals = sorted(quartic_L5(*c) for c in cl)
    ok = cl == [(2, 1, 1), (2, 1, 2), (7, 3, 2), (10, 1, 1), (30, 1, 1)] and \
        vals == sorted([-11, -11, -1331, 5, 605])
    return ok, f"classes {cl}, L5 {vals}"


def _check_thue():
    from .quadfield import build_thue_mahler_form, reconstruct_solution
    F = build_thue_mahler_form(15, 13)
    ok = len(F.coeffs) == 14 and F.coeffs[13] == 924 and F(0, 1) == 924 and \
        reconstruct_solution(7, 5, 2, 1) == (181, 1, 8)
    return ok, f"F(0,1) = {F(0, 1)}"


def _check_sieve_2310o1():
    from .ecurve import bundled_curves
    from .freysieve import psi_preimage_intersect
    C = bundled_curves()
    got = psi_preimage_intersect(C["2310o1"], 15, 13, 200)
    return got == {(1, 0, 1, 1)}, f"2310o1, d=15: {sorted(got)}"


N13_SETS = {
    ("462b1", 231): {(7, 2, 19, 3), (9, 1, 24, 9)},
    ("462f1", 231): {(0, 15, 25, 13), (15, 18, 5, 0)},
    ("2310j1", 231): {(11, 6, 6, 18), (24, 19, 19, 5)},
    ("2310l1", 231): {(10, 5, 22, 8)},
    ("2310m1", 231): {(5, 14, 11, 21), (7, 21, 19, 19)},
    ("2310o1", 15): {(1, 0, 1, 1)},
}


def _check_six_curves():
    """Each n = 13 intersection is inside its published set; only 2310o1 survives."""
    from .ecurve import bundled_curves
    from .freysieve import post_sieve, psi_preimage_intersect
    C = bundled_curves()
    ok, alive = True, []
    for (label, d), pub in N13_SETS.items():
        got = psi_preimage_intersect(C[label], d, 13, 200)
        ok &= got <= pub
        if any(r == "survives" for _, r in post_sieve(C[label], d, 13, pub)):
            alive.append(label)
    ok &= alive == ["2310o1"]
    return ok, f"survivors after post-sieve: {alive}"


def _check_campaign():
    from .freysieve import CampaignConfig, sieve_campaign
    rep = sieve_campaign(CampaignConfig())
    return rep.survivors == [("2310o1", 15, 13)], f"survivors {rep.survivors}"


def _check_bounds():
    from .lfl import derive_N
    got = tuple(derive_N(d)[0] for d in (7, 15, 55, 231))
    return got == (6 * 10 ** 8, 4 * 10 ** 8, 5 * 10 ** 8, 12 * 10 ** 8), f"N = {got}"


def _check_box():
    from .enumerate import brute_force, bundled_box
    return brute_force(50, 26) == bundled_box(), "brute_force(50, 26) vs bundled slice"


CHECKS: List[tuple] = [
    (1, "identity suite", _check_identities, False),
    (2, "y odd, n = 5 classes", _check_lucas, False),
    (3, "Thue-Mahler form (15, 13)", _check_thue, False),
    (4, "refined sieve 2310o1", _check_sieve_2310o1, False),
    (5, "six n = 13 intersections", _check_six_curves, False),
    (6, "desk campaign n <= 2000", _check_campaign, True),
    (7, "N(d) derivation", _check_bounds, False),
    (9, "enumerator box", _check_box, True),
]


def run_checks(quick: bool = False) -> List[Check]:
    out = []
    for crit, name, fn, slow in CHECKS:
        if quick and slow:
            continue
        t = time.time()
        try:
            ok, detail = fn()
        except Exception as e:  # a crashing check is a failed check
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(Check(crit, name, ok, detail, time.time() - t))
    return out


def cmd_verify(a) -> int:
    checks = run_checks(a.quick)
    print("| criterion | check | result | seconds | detail |")
    print("|---|---|---|---|---|")
    for c in checks:
        print(f"| {c.criterion} | {c.name} | {'pass' if c.ok else 'FAIL'} | "
              f"{c.seconds:.1f} | {c.detail} |")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_FAIL


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lebnag", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="key = value file; flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", help="brute-force solutions in a (y, n) box")
    s.add_argument("--ymax", type=int, default=50)
    s.add_argument("--nmax", type=int, default=26)
    s.add_argument("--strategy", choices=("auto", "xloop", "smooth"), default="auto")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--fetch", action="store_true", help="compare with the published list")
    s.add_argument("--cache-dir", default=str(Path.home() / ".cache" / "lebnag"))
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("lucas", help="y-odd, n = 5 search over a box")
    s.add_argument("--box", type=int, default=40)
    s.add_argument("--d", type=_int_list, default=None)
    s.set_defaults(func=cmd_lucas)

    s = sub.add_parser("thue-form", help="Thue-Mahler form for (d, n)")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_thue_form)

    s = sub.add_parser("sieve", help="Kraus + refined sieve campaign")
    s.add_argument("--n-min", type=int, default=13)
    s.add_argument("--n-max", type=int, default=2000)
    s.add_argument("--d", type=_int_list, default=None)
    s.add_argument("--curves", help="curve record file (default: bundled campaign set)")
    s.add_argument("--k-max", type=int, default=1000)
    s.add_argument("--prime-budget", type=int, default=200)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--checkpoint")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sieve)

    s = sub.add_parser("hk", help="Halberstadt-Kraus test for one exponent vector")
    s.add_argument("--label", required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=_int_list, required=True)
    s.add_argument("--curves")
    s.set_defaults(func=cmd_hk)

    s = sub.add_parser("bounds", help="derive N(d) from the parameter rows")
    s.add_argument("--d", type=_int_list, default=None)
    s.add_argument("--trace", action="store_true")
    s.add_argument("--format", choices=("md", "csv"), default="md")
    s.add_argument("--prec", type=int, default=192)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("verify-paper", help="run the published-result checks")
    s.add_argument("--offline", action="store_true", help="never touch the network (default)")
    s.add_argument("--quick", action="store_true", help="skip the campaign and the box")
    s.set_defaults(func=cmd_verify)
    return p


def _subparsers(parser: argparse.ArgumentParser) -> Dict[str, argparse.ArgumentParser]:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return dict(act.choices)
    return {}


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Turn config-file values into subcommand defaults, so flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        conf = parse_config(Path(known.config).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read {known.config}: {e}") from None
    subs = _subparsers(parser)
    cmd = next((t for t in argv if t in subs), None)
    if cmd is None:
        return
    dests = {a.dest: a for a in subs[cmd]._actions}
    for key, val in conf.items():
        if key not in dests or key in ("help", "func"):
            raise ConfigError(f"unknown key {key!r} for {cmd}")
        if dests[key].type is _int_list and not isinstance(val, list):
            val = [val]
        subs[cmd].set_defaults(**{key: val})


def main(argv: Optional[Sequence[str]] = None) -> int:
    from .ecurve import CurveParseError, CurveValidationError
    from .enumerate import FetchError, IntegrityError
    from .freysieve import CheckpointError, HeckeDataError
    from .lfl import PrecisionError, RowFailure

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except ConfigError as e:
        print(f"lebnag: config: {e}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CurveParseError, CurveValidationError, HeckeDataError, FetchError,
            IntegrityError, CheckpointError, OSError, json.JSONDecodeError) as e:
        print(f"lebnag: data: {e}", file=sys.stderr)
        return EXIT_DATA
    except PrecisionError as e:
        print(f"lebnag: precision: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except RowFailure as e:
        print(f"lebnag: bound derivation failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as e:
        print(f"lebnag: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
