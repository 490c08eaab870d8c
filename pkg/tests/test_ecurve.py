import random

import numpy as np
import pytest
from sympy import primerange

from lebnag.ecurve import (CurveFq, CurveParseError, CurveValidationError, SingularCurveError,
                           TraceTable, a_ell, bsgs_trace_cubic, bundled_curves, c_invariants,
                           count_ap, discriminant, ingest_curves, naive_trace_cubic,
                           parse_curve_line, trace_of_frobenius, validate_record)


def _count_points(a2, a4, a6, q):
    """Affine points plus infinity, by trying every (x, y)."""
    squares = {}
    for y in range(q):
        squares[y * y % q] = squares.get(y * y % q, 0) + 1
    return 1 + sum(squares.get((x ** 3 + a2 * x * x + a4 * x + a6) % q, 0) for x in range(q))


def test_naive_against_point_count():
    rng = random.Random(5)
    for q in primerange(5, 200):
        for _ in range(5):
            a2, a4, a6 = (rng.randrange(q) for _ in range(3))
            assert naive_trace_cubic(a2, a4, a6, q) == q + 1 - _count_points(a2, a4, a6, q)


def test_bsgs_agrees_with_naive():
    """Every prime q in [5, 2000], 100 random (theta1, theta2) each."""
    rng = random.Random(6)
    checked = 0
    for q in primerange(5, 2001):
        for _ in range(100):
            t1, t2 = rng.randrange(1, q), rng.randrange(1, q)
            if t1 == t2:
                continue
            C = CurveFq.from_roots(q, t1, t2)
            assert trace_of_frobenius(C, "bsgs") == trace_of_frobenius(C, "naive")
            checked += 1
    assert checked > 29000


def test_bsgs_large_q():
    rng = random.Random(7)
    for q in (65537, 1000003, 999983):
        for _ in range(3):
            t1, t2 = rng.randrange(1, q), rng.randrange(1, q)
            C = CurveFq.from_roots(q, t1, t2)
            assert trace_of_frobenius(C, "bsgs") == trace_of_frobenius(C, "naive")


def test_full_two_torsion_parity_and_twist():
    rng = random.Random(8)
    for q in primerange(5, 400):
        for _ in range(10):
            t1, t2 = rng.randrange(1, q), rng.randrange(1, q)
            if t1 == t2:
                continue
            C = CurveFq.from_roots(q, t1, t2)
            a = trace_of_frobenius(C)
            assert a % 2 == 0 and (q + 1 - a) % 4 == 0
            u = rng.randrange(1, q) ** 2 % q
            assert trace_of_frobenius(CurveFq.from_roots(q, u * t1, u * t2)) == a


def test_trace_table_matches_naive():
    rng = random.Random(9)
    for q in (101, 1009, 4099):
        T = TraceTable(q)
        s = np.array([rng.randrange(q) for _ in range(200)])
        p = np.array([rng.randrange(1, q) for _ in range(200)])
        got = T.trace_sp(s, p)
        for si, pi, a in zip(s, p, got):
            if (si * si - 4 * pi) % q:
                assert a == naive_trace_cubic(int(si), int(pi), 0, q)


def test_inert_shape_from_trace_norm():
    q = 103
    with pytest.raises(SingularCurveError):
        CurveFq.from_trace_norm(q, 2, 1)  # s^2 = 4p
    C = CurveFq.from_trace_norm(q, 5, 7)
    assert trace_of_frobenius(C) == naive_trace_cubic(5, 7, 0, q)


def test_singular_and_bad_q():
    with pytest.raises(SingularCurveError):
        CurveFq.from_roots(11, 3, 3)
    with pytest.raises(SingularCurveError):
        bsgs_trace_cubic(0, 0, 0, 101)
    with pytest.raises(ValueError):
        trace_of_frobenius(CurveFq(15, 1, 2))


def test_bundled_records_validate():
    curves = bundled_curves()
    assert len(curves) >= 20
    for E in curves.values():
        validate_record(E)
        assert 2310 % E.conductor == 0
        # stored traces agree with counting on the model
        for ell, a in list(E.ap.items())[:15]:
            assert count_ap(E.ainvs, ell) == a


def test_record_roundtrip_and_2310o1():
    E = bundled_curves()["2310o1"]
    assert parse_curve_line(E.to_line()) == E
    # the y-even n = 13 solution gives Delta = -2^40 3^3 5 7^2 11^2
    assert E.disc_sign == -1 and dict(E.disc_factors) == {2: 40, 3: 3, 5: 1, 7: 2, 11: 2}
    assert discriminant(E.ainvs) == E.discriminant
    assert a_ell(E, 13) == count_ap(E.ainvs, 13)


def test_parse_errors():
    with pytest.raises(CurveParseError):
        parse_curve_line("garbage")
    good = bundled_curves()["14a4"].to_line()
    with pytest.raises(CurveValidationError):
        ingest_curves([good, good])
    # tampered discriminant exponent is caught on parse
    with pytest.raises(CurveValidationError):
        parse_curve_line(good.replace("[[2,2]", "[[2,12]"))
    with pytest.raises(CurveValidationError):
        parse_curve_line(good.replace('"3":-2', '"3":-4'))


def test_c_invariants_relation():
    for E in bundled_curves().values():
        c4, c6 = c_invariants(E.ainvs)
        assert c4 ** 3 - c6 ** 2 == 1728 * discriminant(E.ainvs)
