"""Exact arithmetic in Q(sqrt(-d)) and the descent data attached to d.

Elements are stored as (a + b*sqrt(-d)) / den with integers a, b and a positive
denominator kept in lowest terms.  Algebraic integers of the maximal order fit
den = 2; the 2-power denominators of the descent constants (up to 128 for
d = 231) are carried exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .arith import (ExtFieldElement, FieldElement, ext_sqrt_minus, factor_smooth,
                    legendre)

SUPPORTED_D = (7, 15, 55, 231)


class UnsupportedDError(ValueError):
    pass


class ValuationError(ValueError):
    pass


@dataclass(frozen=True)
class QuadInt:
    """(a + b*sqrt(-d)) / den, normalised so gcd(a, b, den) = 1 and den > 0."""

    d: int
    a: int
    b: int
    den: int = 2

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(math.gcd(self.a, self.b), self.den)
        if g > 1:
            object.__setattr__(self, "a", self.a // g)
            object.__setattr__(self, "b", self.b // g)
            object.__setattr__(self, "den", self.den // g)

    @classmethod
    def from_rationals(cls, d: int, x, y) -> "QuadInt":
        """x + y*sqrt(-d) for rationals x, y."""
        x, y = Fraction(x), Fraction(y)
        den = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
        return cls(d, int(x * den), int(y * den), den)

    @classmethod
    def integer(cls, d: int, k: int) -> "QuadInt":
        return cls(d, k, 0, 1)

    @property
    def real(self) -> Fraction:
        return Fraction(self.a, self.den)

    @property
    def imag(self) -> Fraction:
        """Coefficient of sqrt(-d)."""
        return Fraction(self.b, self.den)

    def _check(self, other: "QuadInt"):
        if other.d != self.d:
            raise ValueError(f"mixed fields: d={self.d} and d={other.d}")

    def _lift(self, other):
        if isinstance(other, int):
            return QuadInt.integer(self.d, other)
        if isinstance(other, Fraction):
            return QuadInt.from_rationals(self.d, other, 0)
        self._check(other)
        return other

    def __add__(self, other):
        o = self._lift(other)
        return QuadInt(self.d, self.a * o.den + o.a * self.den,
                       self.b * o.den + o.b * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return QuadInt(self.d, -self.a, -self.b, self.den)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return QuadInt(self.d, self.a * o.a - self.d * self.b * o.b,
                       self.a * o.b + self.b * o.a, self.den * o.den)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        r = QuadInt.integer(self.d, 1)
        base = self
        while e:
            if e & 1:
                r = r * base
            base = base * base
            e >>= 1
        return r

    def conj(self) -> "QuadInt":
        return QuadInt(self.d, self.a, -self.b, self.den)

    def norm(self) -> Fraction:
        return Fraction(self.a * self.a + self.d * self.b * self.b, self.den * self.den)

    def trace(self) -> Fraction:
        return Fraction(2 * self.a, self.den)

    def inverse(self) -> "QuadInt":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conj()
        return QuadInt.from_rationals(self.d, c.real / n, c.imag / n)

    def __truediv__(self, other):
        return self * self._lift(other).inverse()

    def is_integral(self) -> bool:
        """Membership in the maximal order of Q(sqrt(-d)) (d squarefree)."""
        return self.trace().denominator == 1 and self.norm().denominator == 1

    def __repr__(self):
        return f"({self.a} + {self.b}*sqrt(-{self.d}))/{self.den}"


def qi_mul(x: QuadInt, y: QuadInt) -> QuadInt:
    return x * y


def qi_pow(x: QuadInt, e: int) -> QuadInt:
    return x ** e


def qi_conj(x: QuadInt) -> QuadInt:
    return x.conj()


def qi_norm(x: QuadInt) -> Fraction:
    return x.norm()


@dataclass(frozen=True)
class DescentConstants:
    d: int
    h: int
    eta: Tuple[Fraction, Fraction]
    gamma: Tuple[Fraction, Fraction]
    class_group: str
    class_number: int

    @property
    def eta_q(self) -> QuadInt:
        return QuadInt.from_rationals(self.d, *self.eta)

    @property
    def gamma_q(self) -> QuadInt:
        return QuadInt.from_rationals(self.d, *self.gamma)

    @property
    def arccos_argument(self) -> Fraction:
        """|log gamma| = arccos(u) since gamma = u + v sqrt(-d) has norm one."""
        return self.gamma[0]


_TABLE = {
    7: (1, (Fraction(1, 4), Fraction(-1, 4)), (Fraction(1, 8), Fraction(3, 8)), "1", 1),
    15: (2, (Fraction(1, 8), Fraction(-1, 8)), (Fraction(7, 8), Fraction(1, 8)), "C2", 2),
    55: (4, (Fraction(3, 32), Fraction(1, 32)), (Fraction(3, 8), Fraction(1, 8)), "C4", 4),
    231: (6, (Fraction(5, 128), Fraction(-1, 128)), (Fraction(5, 16), Fraction(-1, 16)),
          "C2xC6", 12),
}


def descent_constants(d: int) -> DescentConstants:
    try:
        h, eta, gamma, cg, hn = _TABLE[d]
    except KeyError:
        raise UnsupportedDError(f"d={d} is not one of {SUPPORTED_D}") from None
    return DescentConstants(d, h, eta, gamma, cg, hn)


def kappa_m(d: int, n: int) -> Tuple[int, int]:
    """(kappa, m) with 0 <= kappa < h, kappa*n = -2 mod h, m = (2 + kappa*n)/h."""
    h = descent_constants(d).h
    for k in range(h):
        if (k * n + 2) % h == 0:
            return k, (2 + k * n) // h
    raise ValueError(f"no kappa for n={n}, h={h}")


def epsilon_n(n: int) -> int:
    """The sign with n = epsilon mod 3."""
    if n % 3 == 0:
        raise ValueError("n divisible by 3")
    return 1 if n % 3 == 1 else -1


def gamma_exponent(d: int, n: int) -> int:
    """Power of gamma in the ratio (x + c' sqrt(-d)) / (x - c' sqrt(-d))."""
    return (2 + epsilon_n(n) * n) // 3 if d == 231 else 1


def reduce_mod_split(alpha: QuadInt, q: int, a) -> FieldElement:
    """Image of alpha in O/(q, a - sqrt(-d)) = F_q."""
    av = a.value if isinstance(a, FieldElement) else int(a)
    if (av * av + alpha.d) % q:
        raise ValueError(f"{av}^2 != -{alpha.d} mod {q}")
    if alpha.den % q == 0:
        raise ValuationError(f"{alpha} is not integral at {q}")
    return FieldElement((alpha.a + alpha.b * av) * pow(alpha.den, -1, q) % q, q)


def reduce_mod_inert(alpha: QuadInt, q: int) -> ExtFieldElement:
    """Image of alpha in O/qO = F_{q^2}, with sqrt(-d) sent to ext_sqrt_minus(d, q)."""
    if legendre(-alpha.d, q) != -1:
        raise ValueError(f"{q} is not inert in Q(sqrt(-{alpha.d}))")
    if alpha.den % q == 0:
        raise ValuationError(f"{alpha} is not integral at {q}")
    root = ext_sqrt_minus(alpha.d, q)  # (0, t) with t^2 r0 = -d
    inv = pow(alpha.den, -1, q)
    return ExtFieldElement(alpha.a * inv % q, alpha.b * root.b * inv % q, q)


# --- Thue-Mahler forms ------------------------------------------------------

@dataclass(frozen=True)
class ThueMahlerForm:
    """sum_i coeffs[i] r^(n-i) s^i, with F(r, s) = rhs_constant * c' on solutions."""

    d: int
    n: int
    h: int
    m: int
    coeffs: Tuple[int, ...]
    sign: int  # +1, or -1 if the raw expansion was negated to make coeffs[0] = 1
    rhs_constant: int

    @property
    def degree(self) -> int:
        return self.n

    @property
    def content(self) -> int:
        g = 0
        for c in self.coeffs:
            g = math.gcd(g, c)
        return g

    def __call__(self, r: int, s: int) -> int:
        n = self.n
        return sum(c * r ** (n - i) * s ** i for i, c in enumerate(self.coeffs))

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "n": self.n, "coeffs": list(self.coeffs),
                           "rhs_constant": self.rhs_constant,
                           "rhs_primes": [3, 5, 7, 11]})


def _mu_power_coeffs(d: int, n: int) -> List[QuadInt]:
    """Coefficients (in s-degree) of (r + s(1 + sqrt(-d))/2)^n."""
    one = QuadInt.integer(d, 1)
    omega = QuadInt(d, 1, 1, 2)
    poly = [one]
    for _ in range(n):
        nxt = [QuadInt.integer(d, 0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] = nxt[i] + c          # times r
            nxt[i + 1] = nxt[i + 1] + c * omega  # times s*omega
        poly = nxt
    return poly


def build_thue_mahler_form(d: int, n: int) -> ThueMahlerForm:
    """F(r, s) = 2^(hm) (eta^m mu^n - conj) / sqrt(-d), leading coefficient made 1."""
    dc = descent_constants(d)
    _, m = kappa_m(d, n)
    em = dc.eta_q ** m
    scale = 2 ** (dc.h * m)
    coeffs = []
    for c in _mu_power_coeffs(d, n):
        # (z - conj z)/sqrt(-d) = 2 * imag(z)
        v = 2 * (em * c).imag * scale
        if v.denominator != 1:
            raise ArithmeticError(f"non-integral coefficient {v}")
        coeffs.append(int(v))
    sign = 1
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
        sign = -1
    return ThueMahlerForm(d, n, dc.h, m, tuple(coeffs), sign, scale)


def reconstruct_solution(d: int, n: int, r: int, s: int) -> Optional[Tuple[int, int, int]]:
    """(x, c', y) from mu = r + s(1 + sqrt(-d))/2, or None if it is not a solution.

    x is normalised to 1 mod 4 (negating mu when needed); c' must be an odd
    {3,5,7,11}-unit and y = norm(mu) / 2^kappa an integer > 1.
    """
    if math.gcd(r, s) != 1:
        return None
    dc = descent_constants(d)
    kappa, m = kappa_m(d, n)
    mu = QuadInt(d, 2 * r + s, s, 2)
    z = dc.eta_q ** m * mu ** n
    x2, c2 = 2 * z.real, 2 * z.imag
    if x2.denominator != 1 or c2.denominator != 1:
        return None
    x, c = int(x2), int(c2)
    if x % 4 != 1:
        x, c = -x, -c
    if x % 4 != 1 or c % 2 == 0:
        return None
    if factor_smooth(abs(c), (3, 5, 7, 11)) is None:
        return None
    ny = mu.norm()
    if ny.denominator != 1 or int(ny) % (2 ** kappa):
        return None
    y = int(ny) // 2 ** kappa
    if y <= 1 or x * x + d * c * c != y ** n:
        return None
    return x, c, y
