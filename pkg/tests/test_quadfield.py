import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from sympy import factorint, isprime, primerange

from lebnag.enumerate import bundled_box
from lebnag.quadfield import (SUPPORTED_D, QuadInt, UnsupportedDError, build_thue_mahler_form,
                              descent_constants, epsilon_n, gamma_exponent, kappa_m,
                              reconstruct_solution)

ints = st.integers(-10 ** 6, 10 ** 6)


def _sqf(D):
    return math.prod(p for p, e in factorint(D).items() if e % 2)


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(st.sampled_from(SUPPORTED_D), ints, ints, ints, ints)
def test_norm_multiplicative(d, a, b, c, e):
    x, y = QuadInt(d, a, b, 2), QuadInt(d, c, e, 2)
    assert (x * y).norm() == x.norm() * y.norm()
    assert (x * y).conj() == x.conj() * y.conj()


@pytest.mark.parametrize("d", SUPPORTED_D)
def test_descent_constants(d):
    dc = descent_constants(d)
    assert dc.gamma_q.norm() == 1
    # eta has norm 2^(-h)
    assert dc.eta_q.norm() == Fraction(1, 2 ** dc.h)
    assert dc.arccos_argument == dc.gamma[0]
    with pytest.raises(UnsupportedDError):
        descent_constants(11)


def _forms(d, n_max=60):
    for n in primerange(5, n_max):
        if d == 231 and n % 3 == 0:
            continue
        yield n, build_thue_mahler_form(d, n)


@pytest.mark.parametrize("d", SUPPORTED_D)
def test_leading_coefficient_is_one(d):
    # fails for d = 55 and 231, where 2^(hm) * 2 Im(eta^m) is not a unit
    for n, F in _forms(d):
        assert F.degree == n and len(F.coeffs) == n + 1
        assert F.coeffs[0] == 1, (d, n, F.coeffs[0])


@pytest.mark.parametrize("d", SUPPORTED_D)
def test_leading_coefficient_value_and_parity(d):
    dc = descent_constants(d)
    for n, F in _forms(d):
        _, m = kappa_m(d, n)
        # a0 = F(1, 0), the image of mu = 1, computed without the expansion
        a0 = 2 * (dc.eta_q ** m).imag * 2 ** (dc.h * m)
        assert abs(F.coeffs[0]) == abs(a0) == abs(F(1, 0))
        for r, s in ((1, 2), (3, -5), (-7, 4)):
            assert F(-r, -s) == (-1) ** n * F(r, s)


def test_kappa_m_exhaustive():
    for d in SUPPORTED_D:
        h = descent_constants(d).h
        for n in range(5, 10 ** 5, 2):
            if math.gcd(n, h) > 2 or (h % 2 == 0 and math.gcd(n, h) != 1):
                continue
            k, m = kappa_m(d, n)
            assert 0 <= k < h and (k * n + 2) % h == 0 and m * h == 2 + k * n


def test_epsilon_and_gamma_exponent():
    assert epsilon_n(13) == 1 and epsilon_n(11) == -1
    with pytest.raises(ValueError):
        epsilon_n(9)
    assert gamma_exponent(15, 13) == 1
    assert gamma_exponent(231, 13) == 5 and gamma_exponent(231, 11) == -3


def test_thue_form_d15_n13():
    F = build_thue_mahler_form(15, 13)
    # (r, s) = (0, 1) gives x = 8143, c' = 231
    assert abs(F(0, 1)) == F.rhs_constant * 231


def test_box_search_recovers_even_y_identities():
    """|r|, |s| <= 40 against the brute-force box, restricted to even y."""
    found = set()
    for d in SUPPORTED_D:
        for n in primerange(5, 27):
            if d == 231 and n % 3 == 0:
                continue
            F = build_thue_mahler_form(d, n)
            for r in range(-40, 41):
                for s in range(-40, 41):
                    res = reconstruct_solution(d, n, r, s)
                    if res is None:
                        continue
                    x, c, y = res
                    assert x * x + d * c * c == y ** n and x % 4 == 1
                    assert abs(F(r, s)) == F.rhs_constant * abs(c)
                    if math.gcd(x, y) == 1 and y <= 50:
                        found.add((abs(x), y, n, d))
    box = {(S.x, S.y, S.n, _sqf(S.D)) for S in bundled_box()
           if S.y % 2 == 0 and S.n >= 5 and isprime(S.n) and _sqf(S.D) in SUPPORTED_D}
    assert found == box
    assert (8143, 4, 13, 15) in found and (103, 4, 7, 231) in found
