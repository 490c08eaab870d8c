import random

import pytest
from sympy import jacobi_symbol, primerange

from lebnag.lucas import (CLASS_NUMBERS, YODD_D, InvalidLucasPair, LucasPair,
                          defective_pair_check, lucas_term, lucas_term_closed, lucas_terms,
                          primitive_part, quartic_L5, rank_of_apparition, yodd_classes,
                          yodd_identities, yodd_search)
from lebnag.quadfield import QuadInt


def _valid_pairs(bound):
    for P in range(-bound, bound + 1):
        for Q in range(-bound, bound + 1):
            try:
                yield LucasPair.from_pq(P, Q)
            except InvalidLucasPair:
                pass


def _random_pairs(rng, k, bound=10 ** 4):
    out = []
    while len(out) < k:
        try:
            out.append(LucasPair.from_pq(rng.randint(-bound, bound), rng.randint(-bound, bound)))
        except InvalidLucasPair:
            pass
    return out


def test_examples():
    pair = LucasPair.from_gamma(QuadInt(2, 1, 1, 1))
    assert (pair.P, pair.Q) == (2, 3)
    assert lucas_terms(pair, 5) == [0, 1, 2, 1, -4, -11]
    assert lucas_term(pair, 0) == 0 and lucas_term(pair, 1) == 1
    assert rank_of_apparition(pair, 11) == 5
    assert rank_of_apparition(pair, 3) is None
    assert rank_of_apparition(pair, 2) == 2
    with pytest.raises(InvalidLucasPair):
        LucasPair.from_pq(2, 4)
    with pytest.raises(InvalidLucasPair):
        LucasPair.from_pq(1, 1)  # sixth root of unity


def test_closed_form_matches_recurrence():
    rng = random.Random(10)
    for pair in _random_pairs(rng, 100):
        terms = lucas_terms(pair, 50)
        for m in range(51):
            assert lucas_term_closed(pair, m) == terms[m]


def test_divisibility_law_exhaustive():
    """ell | L_m iff m_ell | m, for |P|, |Q| <= 20, ell <= 37, m <= 200."""
    ells = list(primerange(2, 38))
    n_pairs = 0
    for pair in _valid_pairs(20):
        n_pairs += 1
        for ell in ells:
            r = rank_of_apparition(pair, ell)
            P, Q = pair.P % ell, pair.Q % ell
            a, b = 0, 1
            for m in range(1, 201):
                a, b = b, (P * b - Q * a) % ell
                if r is None:
                    assert a != 0
                else:
                    assert (a == 0) == (m % r == 0)
    assert n_pairs > 1000


def test_half_integer_parity():
    rng = random.Random(11)
    ds = [d for d in range(3, 400, 8) if all(d % (p * p) for p in (3, 5, 7, 11, 13, 17, 19))]
    done = 0
    while done < 100:
        d = rng.choice(ds)
        a, b = rng.randrange(-99, 100, 2), rng.randrange(-99, 100, 2)
        try:
            pair = LucasPair.from_gamma(QuadInt(d, a, b, 2))
        except InvalidLucasPair:
            continue
        assert pair.Q % 2 == 1
        for m, L in enumerate(lucas_terms(pair, 100)):
            assert (L % 2 == 0) == (m % 3 == 0)
        done += 1


def test_primitive_divisors():
    rng = random.Random(12)
    for pair in _random_pairs(rng, 500, bound=50):
        if defective_pair_check(pair) or (abs(pair.P), pair.Q) == (1, 2):
            continue
        for m in (11, 13, 17, 19, 23):
            assert primitive_part(pair, m) > 1, (pair.P, pair.Q, m)


def test_defective_shapes():
    assert defective_pair_check(LucasPair.from_gamma(QuadInt(7, 1, 1, 2)))
    assert defective_pair_check(LucasPair.from_gamma(QuadInt(19, 1, 1, 2)))
    assert not defective_pair_check(LucasPair.from_gamma(QuadInt(2, 1, 1, 1)))
    # (1 + sqrt(-7))/2 has no primitive divisor at m = 13
    assert primitive_part(LucasPair.from_gamma(QuadInt(7, 1, 1, 2)), 13) == 1


def _analytic_class_number(d):
    """h = -(w / 2|D|) sum_{a < |D|} chi(a) a, chi the Kronecker symbol (D/.)."""
    D = -d if d % 4 == 3 else -4 * d
    w = {1: 4, 3: 6}.get(d, 2)

    def chi(a):
        k = (a & -a).bit_length() - 1
        if k and D % 2 == 0:
            return 0
        sign = (1 if D % 8 in (1, 7) else -1) ** k
        a >>= k
        return sign * jacobi_symbol(D % a, a)

    total = sum(chi(a) * a for a in range(1, abs(D)))
    assert (w * total) % (2 * abs(D)) == 0
    return -w * total // (2 * abs(D))


def test_class_numbers():
    assert len(YODD_D) == 32 and set(CLASS_NUMBERS) == set(YODD_D)
    for d in YODD_D:
        assert CLASS_NUMBERS[d] == _analytic_class_number(d), d
    assert set(CLASS_NUMBERS.values()) == {1, 2, 4, 8, 12, 32}


def test_quartic_examples():
    assert quartic_L5(2, 1, 1) == -11
    assert quartic_L5(7, 3, -2) == -1331
    assert quartic_L5(10, 1, 1) == 5 and quartic_L5(30, 1, 1) == 605


def test_yodd_box():
    sols = yodd_search(4)
    assert yodd_classes(sols) == [(2, 1, 1), (2, 1, 2), (7, 3, 2), (10, 1, 1), (30, 1, 1)]
    ids = yodd_identities(sols)
    assert len(ids) == 5
    assert (1, 3, 5) in ids and (4443, 37, 5) in ids
    for s in sols:
        assert s.x ** 2 + s.c * s.c * s.d == s.y ** 5
    small = yodd_search(1, ds=(2,))
    assert {(s.d, abs(s.u), abs(s.v)) for s in small} == {(2, 1, 1)}
    with pytest.raises(ValueError):
        yodd_search(0)
