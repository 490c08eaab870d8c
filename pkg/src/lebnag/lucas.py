"""Lucas sequences and the bounded y-odd search.

A Lucas pair is stored through its characteristic polynomial X^2 - P X + Q;
gamma itself is kept as a QuadInt so the closed form can be evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from .arith import S_PRIMES, factor_smooth, is_prime, kronecker
from .quadfield import QuadInt

# subsets of {2,3,5,7,11}, so every squarefree S-unit d >= 1
YODD_D = tuple(sorted(math.prod(c) for k in range(6) for c in combinations(S_PRIMES, k)))

# class numbers of Q(sqrt(-d)) for d in YODD_D (reduced binary forms, checked
# against the analytic class number formula in the tests)
CLASS_NUMBERS: Dict[int, int] = {
    1: 1, 2: 1, 3: 1, 5: 2, 6: 2, 7: 1, 10: 2, 11: 1, 14: 4, 15: 2, 21: 4,
    22: 2, 30: 4, 33: 4, 35: 2, 42: 4, 55: 4, 66: 8, 70: 4, 77: 8, 105: 8,
    110: 12, 154: 8, 165: 8, 210: 8, 231: 12, 330: 8, 385: 8, 462: 8,
    770: 32, 1155: 8, 2310: 32,
}

DEFAULT_BOX = 40


class InvalidLucasPair(ValueError):
    pass


class ApparitionError(RuntimeError):
    pass


def _squarefree_split(D: int) -> Tuple[int, int]:
    """D = f^2 * D0 with D0 squarefree (sign kept on D0)."""
    sign = -1 if D < 0 else 1
    m, f, p = abs(D), 1, 2
    while p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            f *= p
        p += 1
    return f, sign * m


@dataclass(frozen=True)
class LucasPair:
    gamma: QuadInt
    P: int
    Q: int

    def __post_init__(self):
        if self.P == 0 or self.Q == 0:
            raise InvalidLucasPair(f"P={self.P}, Q={self.Q} must be nonzero")
        if math.gcd(self.P, self.Q) != 1:
            raise InvalidLucasPair(f"P={self.P}, Q={self.Q} are not coprime")
        # gamma/delta is a root of unity iff P^2/Q is 1, 2, 3 or 4
        # (2 + zeta + 1/zeta for zeta of order 3, 4, 6, 1); this also rules out D = 0
        if self.P * self.P in (self.Q, 2 * self.Q, 3 * self.Q, 4 * self.Q):
            raise InvalidLucasPair(f"gamma/delta is a root of unity (P={self.P}, Q={self.Q})")

    @classmethod
    def from_gamma(cls, gamma: QuadInt) -> "LucasPair":
        t, n = gamma.trace(), gamma.norm()
        if t.denominator != 1 or n.denominator != 1:
            raise InvalidLucasPair(f"{gamma} is not an algebraic integer")
        return cls(gamma, int(t), int(n))

    @classmethod
    def from_pq(cls, P: int, Q: int) -> "LucasPair":
        """gamma = (P + sqrt(P^2 - 4Q)) / 2, written over Q(sqrt(-d)) with -d = D0."""
        f, D0 = _squarefree_split(P * P - 4 * Q)
        return cls(QuadInt(-D0, P, f, 2), P, Q)

    @property
    def delta(self) -> QuadInt:
        return self.gamma.conj()

    @property
    def D(self) -> int:
        """(gamma - delta)^2 = P^2 - 4Q."""
        return self.P * self.P - 4 * self.Q


def lucas_term(pair: LucasPair, m: int) -> int:
    if m < 0:
        raise ValueError("m must be nonnegative")
    a, b = 0, 1
    for _ in range(m):
        a, b = b, pair.P * b - pair.Q * a
    return a


def lucas_terms(pair: LucasPair, m: int) -> List[int]:
    """[L_0, ..., L_m]."""
    out = [0, 1]
    while len(out) <= m:
        out.append(pair.P * out[-1] - pair.Q * out[-2])
    return out[:m + 1]


def lucas_term_closed(pair: LucasPair, m: int) -> int:
    """(gamma^m - delta^m) / (gamma - delta), evaluated in Q(sqrt(-d))."""
    g, dl = pair.gamma, pair.delta
    v = (g ** m - dl ** m) / (g - dl)
    if v.b != 0 or v.den != 1:
        raise ArithmeticError(f"closed form not a rational integer: {v}")
    return v.a


def _divisors(k: int) -> List[int]:
    small, large = [], []
    i = 1
    while i * i <= k:
        if k % i == 0:
            small.append(i)
            if i * i != k:
                large.append(k // i)
        i += 1
    return small + large[::-1]


def apparition_candidates(pair: LucasPair, ell: int) -> List[int]:
    """Values m_ell can take, in increasing order (empty when ell | Q)."""
    if pair.Q % ell == 0:
        return []
    if ell == 2:
        return [2, 3]
    D = pair.D
    if D % ell == 0:
        return [ell]
    return _divisors(ell - 1 if kronecker(D, ell) == 1 else ell + 1)


def rank_of_apparition(pair: LucasPair, ell: int, m_max: int = 10**6) -> Optional[int]:
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    cands = apparition_candidates(pair, ell)
    if not cands:
        return None
    P, Q = pair.P % ell, pair.Q % ell

    def term_mod(m):
        a, b = 0, 1
        for _ in range(m):
            a, b = b, (P * b - Q * a) % ell
        return a

    for m in cands:
        if m > m_max:
            break
        if term_mod(m) == 0:
            return m
    raise ApparitionError(f"no rank of apparition for ell={ell} among {cands} (m_max={m_max})")


def primitive_part(pair: LucasPair, m: int) -> int:
    """Largest divisor of L_m coprime to D * L_1 ... L_{m-1}."""
    terms = lucas_terms(pair, m)
    val = abs(terms[m])
    for w in [pair.D] + terms[1:m]:
        g = math.gcd(val, w)
        while g > 1:
            val //= g
            g = math.gcd(val, g)
    return val


def quartic_L5(d: int, u: int, v: int) -> int:
    """L_5 for gamma = u + v sqrt(-d)."""
    u2, v2 = u * u, v * v
    return 5 * u2 * u2 - 10 * d * u2 * v2 + d * d * v2 * v2


def _quartic_ok(val: int) -> bool:
    if val == 0:
        return False
    e = factor_smooth(val, (5, 11))
    return e is not None and e[0] <= 1


@dataclass(frozen=True)
class YoddSolution:
    d: int
    u: int
    v: int
    x: int
    y: int
    c: int
    n: int = 5

    @property
    def identity(self) -> str:
        return f"{self.x}^2 + {self.c * self.c * self.d} = {self.y}^{self.n}"


def _yodd_for_d(d: int, B: int) -> List[YoddSolution]:
    out = []
    for u in range(-B, B + 1):
        for v in range(-B, B + 1):
            if v == 0 or math.gcd(u, d * v) != 1:
                continue
            L5 = quartic_L5(d, u, v)
            if not _quartic_ok(L5):
                continue
            y = u * u + d * v * v
            if y % 2 == 0 or y == 1:
                continue
            z = QuadInt(d, u, v, 1) ** 5
            x, c = abs(z.a), abs(z.b)
            # c = v * L5 by construction; c^2 d being an S-unit is the real filter
            if factor_smooth(c * c * d) is None or math.gcd(x, y) != 1:
                continue
            if x * x + c * c * d != y ** 5:
                raise ArithmeticError(f"identity failed for d={d}, u={u}, v={v}")
            out.append(YoddSolution(d, u, v, x, y, c))
    return out


def yodd_search(B: int = DEFAULT_BOX, ds=YODD_D) -> List[YoddSolution]:
    """Every (d, u, v) with |u|, |v| <= B giving a y-odd solution with n = 5.

    Complete only inside the box; the Thue-Mahler step that removes the box
    is not part of this package.
    """
    if B < 1:
        raise ValueError("box bound must be at least 1")
    out = []
    for d in ds:
        out.extend(_yodd_for_d(d, B))
    return sorted(out, key=lambda s: (s.d, s.u, s.v))


def yodd_classes(sols: List[YoddSolution]) -> List[Tuple[int, int, int]]:
    """Distinct (d, |u|, |v|); L_5 and y do not see the signs of u and v."""
    return sorted({(s.d, abs(s.u), abs(s.v)) for s in sols})


def yodd_identities(sols: List[YoddSolution]) -> List[Tuple[int, int, int]]:
    return sorted({(s.x, s.y, s.n) for s in sols}, key=lambda t: (t[1], t[0]))


_DEFECTIVE7 = ((7, 1, 1), (19, 1, 1))  # (1 + sqrt(-7))/2 and (1 + sqrt(-19))/2


def defective_pair_check(pair: LucasPair) -> bool:
    """True iff gamma is +-(1 + sqrt(-7))/2 or +-(1 + sqrt(-19))/2, up to conjugation."""
    g = pair.gamma
    if g.den != 2:
        return False
    return any(g.d == d and abs(g.a) == a and abs(g.b) == b for d, a, b in _DEFECTIVE7)
