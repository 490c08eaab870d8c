import random
from fractions import Fraction

import numpy as np
import pytest
from sympy import factorint, primerange

from lebnag.arith import generator, legendre, sqrt_mod
from lebnag.ecurve import bundled_curves, c_invariants, naive_trace_cubic
from lebnag.freysieve import (FreySolution, InvariantError, Newform, Verdict, aux_prime,
                              aux_primes, conductor_consistent, conductor_support,
                              eigen_bound, exponent_bound_B, frey_invariants, hk_ratio,
                              hk_search, hk_test, kraus_profile, kraus_search, kraus_test,
                              psi_class, refined_phi, refined_profile, theta_set)
from lebnag.quadfield import descent_constants, kappa_m

CURVES = bundled_curves()
SOLUTION_15_13 = (-8143, 4, 13)  # 8143^2 + 3^3 5 7^2 11^2 = 4^13


def _reduce(fr: Fraction, q: int) -> int:
    return fr.numerator * pow(fr.denominator, -1, q) % q


def _theta_oracle(d, n, q):
    """Ratios (x + c'a)/(x - c'a) over all residues (x, c') mod q such that
    (x +- c' sqrt(-d))/2 reduce to eta^m, conj(eta)^m times n-th powers."""
    a = sqrt_mod(-d % q, q)
    r, s = descent_constants(d).eta
    _, m = kappa_m(d, n)
    rho1 = pow((_reduce(r, q) + _reduce(s, q) * a) % q, m, q)
    rho2 = pow((_reduce(r, q) - _reduce(s, q) * a) % q, m, q)
    k = (q - 1) // n
    xs, cs = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    A = (xs + cs * a) % q
    B = (xs - cs * a) % q
    ok = (A != 0) & (B != 0)
    A, B = A[ok], B[ok]
    inv2r1 = pow(2 * rho1, -1, q)
    inv2r2 = pow(2 * rho2, -1, q)

    def nth_power(z):
        return np.array([pow(int(t), k, q) == 1 for t in z])

    keep = nth_power(A * inv2r1 % q) & nth_power(B * inv2r2 % q)
    th = {int(u) * pow(int(v), -1, q) % q for u, v in zip(A[keep], B[keep])}
    return th - {0, 1}


def _oracle_cases():
    cases = []
    for n in (13, 17, 19):
        for q in primerange(3, 500):
            if (q - 1) % n or (q - 1) // n % 2 or 2310 % q == 0:
                continue
            for d in (7, 15, 55, 231):
                if legendre(-d, q) == 1:
                    cases.append((d, n, q))
    return cases


ORACLE_CASES = _oracle_cases()


def test_theta_set_matches_residue_oracle():
    assert len(ORACLE_CASES) >= 15
    for d, n, q in ORACLE_CASES:
        assert set(int(t) for t in theta_set(d, n, q)) == _theta_oracle(d, n, q), (d, n, q)


def test_kraus_test_matches_oracle():
    for d, n, q in ORACLE_CASES:
        th = _theta_oracle(d, n, q)
        squares = {naive_trace_cubic((t + 1) % q, t, 0, q) ** 2 % n for t in th}
        for E in CURVES.values():
            if E.conductor % (2 * d):
                continue
            aE = E.ap.get(q)
            if aE is None:
                continue
            want = Verdict.UNDECIDED if (aE * aE - 4) % n == 0 or aE * aE % n in squares \
                else Verdict.ELIMINATED
            assert kraus_test(E, d, n, q) is want, (E.label, d, n, q)


def test_kraus_profile_sizes():
    # |Theta'_q| = k before removing 0 and 1
    for d, n, q in ORACLE_CASES[:5]:
        assert (q - 1) // n - 1 <= len(theta_set(d, n, q)) <= (q - 1) // n
        assert kraus_profile(d, n, q) <= set(range(n))


def test_soundness_for_known_solution():
    """Every admissible q keeps (2310o1, 15, 13)'s known solution alive."""
    E = CURVES["2310o1"]
    x, y, n = SOLUTION_15_13
    sol = FreySolution.from_xyn(x, y, n)
    assert sol.beta == (1, 0, 1, 1) and sol.c_prime == -231 and sol.d == 15
    checked = split = 0
    for q, _ in aux_primes(n):
        if checked >= 60:
            break
        prof = refined_profile(15, n, q)
        phi = refined_phi(E, 15, n, q)
        c_cls = int(aux_prime(q).class_log(np.array([sol.c_prime % q]), 2 * n)[0])
        assert c_cls in phi, q
        assert psi_class(sol.beta, prof.psi, n) in phi, q
        # c' / g0^class is a 2n-th power
        g0 = generator(q)
        ratio = sol.c_prime * pow(g0, -c_cls, q) % q
        assert pow(ratio, (q - 1) // (2 * n), q) == 1
        if legendre(-15, q) == 1:
            assert kraus_test(E, 15, n, q) is Verdict.UNDECIDED
            a = sqrt_mod(-15 % q, q)
            cp = sol.c_prime
            theta = (x + cp * a) * pow(x - cp * a, -1, q) % q
            assert theta in set(int(t) for t in theta_set(15, n, q))
            split += 1
        checked += 1
    assert checked >= 50 and split >= 20


def test_split_profile_has_2k_members():
    seen = 0
    for q, k in aux_primes(13):
        if seen == 5:
            break
        if legendre(-15, q) != 1:
            continue
        prof = refined_profile(15, 13, q)
        # (rho1 g^i, rho2 g^j), j = 0, 1, minus the diagonal theta1 = theta2
        assert prof.split and 2 * k - 2 <= len(prof.traces) <= 2 * k
        seen += 1


def test_frey_invariants_examples():
    sol = FreySolution.from_xyn(*SOLUTION_15_13)
    c4, c6, ords = frey_invariants(sol)
    assert ords == {-1: -1, 2: 40, 3: 3, 5: 1, 7: 2, 11: 2}
    # the Frey curve is 2310o1
    assert (c4, c6) == c_invariants(CURVES["2310o1"].ainvs)
    assert c4 ** 3 - c6 ** 2 == 1728 * -(2 ** 40 * 3 ** 3 * 5 * 7 ** 2 * 11 ** 2)
    with pytest.raises(InvariantError):
        FreySolution.from_xyn(3, 2, 5)  # 32 - 9 = 23
    with pytest.raises(InvariantError):
        FreySolution(5, 3, 5, (0, 0, 0, 0))


def test_frey_invariants_14a4():
    # 11^2 + 7 = 2^7; only the sign and 2-adic part depend on x
    sol = FreySolution.from_xyn(-11, 2, 7)
    _, _, ords = frey_invariants(sol)
    assert ords[2] == 2 and ords[7] == 1 and ords[-1] == -1
    assert sol.x == -11


def test_conductor_support_examples():
    assert conductor_support((3, 1, 2, 2), 13) == {3, 5, 7, 11}
    assert conductor_support((0, 0, 0, 0), 13) == set()
    assert conductor_support((13, 0, 0, 0), 13) == set()


def test_conductor_support_random():
    """l | N' iff the discriminant valuation alpha_l + 2n ord_l(y) is nonzero mod n."""
    rng = random.Random(13)
    for _ in range(1000):
        n = rng.choice([13, 17, 19, 23, 1861])
        alpha = [rng.randrange(0, 5 * n) for _ in range(4)]
        ylogs = [rng.randrange(0, 3) for _ in range(4)]
        want = {p for p, a, v in zip((3, 5, 7, 11), alpha, ylogs) if (a + 2 * n * v) % n}
        assert conductor_support(alpha, n) == want


def test_conductor_consistent_examples():
    E = CURVES["2310o1"]
    assert conductor_consistent(E, 15, 13, (1, 0, 1, 1))
    assert not conductor_consistent(CURVES["462b1"], 231, 13, (7, 2, 19, 3))


def _rational(c_map):
    return Newform("t", 11, 1, {p: (1, -c) for p, c in c_map.items()})


def test_eigen_bound_examples():
    # (-7/3) = -1: T_3 = {-2, 0, 2} contains c_3 = 2
    assert eigen_bound(_rational({3: 2}), 7, 3) == 0
    # l | d: T_l is empty and C = (l+1)^2 - c^2
    assert eigen_bound(_rational({7: 4}), 7, 7) == 48
    assert eigen_bound(_rational({7: -4}), 7, 7) == 48
    assert exponent_bound_B(CURVES["2310o1"], 15) == 0
    with pytest.raises(ValueError):
        eigen_bound(_rational({11: 1}), 7, 11)


def test_exponent_bound_prime_support():
    for E in CURVES.values():
        for d in (7, 15, 55, 231):
            if E.conductor % (2 * d):
                continue
            B = exponent_bound_B(E, d)
            if B:
                assert max(factorint(B)) <= 11, (E.label, d, B)


def test_hk_examples_and_symmetry():
    L = CURVES["2310l1"]
    # ord_2(Delta_F) = -12 = 1 mod 13, ord_3 = 2*10 + 1 = 8 mod 13
    assert hk_ratio((1, 8), L, 13, 2, 3) == 11
    assert hk_test((1, 8), L, 13, 2, 3) is Verdict.ELIMINATED
    v, pair, r, _ = hk_search(L, 231, 13, (10, 5, 22, 8))
    assert v is Verdict.ELIMINATED
    rng = random.Random(14)
    for _ in range(200):
        n = rng.choice([13, 17, 19, 23, 29])
        o = (rng.randrange(1, n), rng.randrange(1, n))
        r = hk_ratio(o, L, n, 2, 3)
        # swapping the roles of the two discriminants inverts the ratio
        r_inv = L.ord_disc(2) * L.ord_disc(3) * pow(o[0] * o[1], -1, n) % n
        assert r * r_inv % n == 1
        assert legendre(r, n) == legendre(r_inv, n)
    # ratio 1 is a square
    e = (L.ord_disc(2) % 13, L.ord_disc(3) % 13)
    assert hk_test(e, L, 13) is Verdict.INCONCLUSIVE


def test_kraus_search_examples():
    assert kraus_search(CURVES["2310o1"], 15, 13) is None
    diag = []
    assert kraus_search(CURVES["210a1"], 15, 1861, diagnostics=diag) is None
    assert diag and all(0 < p < 1 for _, _, p in diag)
