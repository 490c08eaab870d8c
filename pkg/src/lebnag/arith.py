"""Integer, modular and finite-field primitives.

Everything here is a pure function of its arguments.  Elements of F_q are
plain Python ints in ``[0, q)``; :class:`FieldElement` and
:class:`ExtFieldElement` wrap them when operator syntax reads better.
F_{q^2} is modelled as ``a + b*w`` with ``w^2 = r0``, ``r0`` the smallest
positive quadratic nonresidue mod q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence, Tuple

U64 = 1 << 64

# Miller-Rabin with these bases is exact for every n < 2^64 (Jim Sinclair).
_MR_BASES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)

S_PRIMES = (2, 3, 5, 7, 11)


def is_prime(m: int) -> bool:
    """Deterministic primality for 0 <= m < 2^64."""
    if m < 0 or m >= U64:
        raise OverflowError("is_prime is only certified for 64-bit inputs")
    if m < 2:
        return False
    for p in _SMALL_PRIMES:
        if m % p == 0:
            return m == p
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        a %= m
        if a == 0:
            continue
        x = pow(a, d, m)
        if x == 1 or x == m - 1:
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def kronecker(a: int, m: int) -> int:
    """Kronecker symbol (a/m)."""
    if m == 0:
        raise ValueError("kronecker symbol with zero modulus")
    result = 1
    if m < 0:
        m = -m
        if a < 0:
            result = -1
    # strip factors of two from m
    v = 0
    while m % 2 == 0:
        m //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # now m is odd and positive: Jacobi symbol
    a %= m
    while a:
        while a % 2 == 0:
            a //= 2
            if m % 8 in (3, 5):
                result = -result
        a, m = m, a
        if a % 4 == 3 and m % 4 == 3:
            result = -result
        a %= m
    return result if m == 1 else 0


def legendre(a: int, q: int) -> int:
    """Legendre symbol for an odd prime q, via Euler's criterion."""
    t = pow(a % q, (q - 1) // 2, q)
    return -1 if t == q - 1 else t


def sqrt_mod(a: int, q: int) -> Optional[int]:
    """Smaller square root of a mod the prime q, or None for a nonresidue."""
    a %= q
    if a == 0 or q == 2:
        return a
    if legendre(a, q) != 1:
        return None
    if q % 4 == 3:
        r = pow(a, (q + 1) // 4, q)
    else:
        # Tonelli-Shanks
        s, e = q - 1, 0
        while s % 2 == 0:
            s //= 2
            e += 1
        z = smallest_nonresidue(q)
        c = pow(z, s, q)
        r = pow(a, (s + 1) // 2, q)
        t = pow(a, s, q)
        while t != 1:
            i, t2 = 0, t
            while t2 != 1:
                t2 = t2 * t2 % q
                i += 1
            b = pow(c, 1 << (e - i - 1), q)
            r = r * b % q
            c = b * b % q
            t = t * c % q
            e = i
    return min(r, q - r)


@lru_cache(maxsize=4096)
def smallest_nonresidue(q: int) -> int:
    """Smallest positive quadratic nonresidue modulo the odd prime q."""
    r = 2
    while legendre(r, q) != -1:
        r += 1
    return r


def factorize(m: int) -> Dict[int, int]:
    """Prime factorization of a positive integer (group orders, not S-units)."""
    from sympy import factorint

    return {int(p): int(e) for p, e in factorint(m).items()}


def _has_full_order(x: int, order: int, prime_divisors: Iterable[int], mul_pow) -> bool:
    return all(mul_pow(x, order // p) != 1 for p in prime_divisors)


@lru_cache(maxsize=4096)
def generator(q: int) -> int:
    """Smallest positive integer generating F_q^*."""
    if q == 2:
        return 1
    ps = list(factorize(q - 1))
    g = 2
    while True:
        if _has_full_order(g, q - 1, ps, lambda x, e: pow(x, e, q)):
            return g
        g += 1


def generator_ext(q: int) -> "ExtFieldElement":
    """Generator of F_{q^2}^*; candidates a + b*w ordered by (b, a), b >= 1."""
    a, b = _generator_ext_pair(q)
    return ExtFieldElement(a, b, q)


@lru_cache(maxsize=4096)
def _generator_ext_pair(q: int) -> Tuple[int, int]:
    if q == 2:
        raise ValueError("generator_ext needs an odd prime")
    r0 = smallest_nonresidue(q)
    order = q * q - 1
    ps = set(factorize(q - 1)) | set(factorize(q + 1))

    def powe(x, e):
        return ext_pow(x[0], x[1], e, r0, q)

    for b in range(1, q):
        for a in range(q):
            if all(powe((a, b), order // p) != (1, 0) for p in ps):
                return a, b
    raise AssertionError("F_{q^2}^* is cyclic")


def next_kn1_prime(n: int, k_from: int = 1) -> Tuple[int, int]:
    """Smallest k >= k_from with q = k*n + 1 prime; returns (q, k)."""
    k = max(1, k_from)
    while True:
        q = k * n + 1
        if q >= U64:
            raise OverflowError("q = k*n + 1 left the 64-bit range")
        if is_prime(q):
            return q, k
        k += 1


def factor_smooth(m: int, S: Sequence[int] = S_PRIMES, with_sign: bool = False):
    """Exponent vector of m over S if m is S-smooth, else None.

    With ``with_sign`` the result is ``(sign, exponents)``.
    """
    if m == 0:
        raise ValueError("factor_smooth(0)")
    sign = -1 if m < 0 else 1
    m = abs(m)
    exps = []
    for p in S:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        exps.append(e)
    if m != 1:
        return None
    return (sign, tuple(exps)) if with_sign else tuple(exps)


def bsgs_log(h: int, t: int, order: int, q: int) -> int:
    """e in [0, order) with h^e = t mod q, h of exact order ``order``."""
    m = math.isqrt(order - 1) + 1 if order > 1 else 1
    table = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * h % q
    giant = pow(h, -m, q)
    cur = t
    for i in range(m + 1):
        j = table.get(cur)
        if j is not None:
            e = i * m + j
            if e < order:
                return e
        cur = cur * giant % q
    raise ValueError("element is not in the subgroup generated by h")


def dlog_in_quotient(x: int, g0: int, g: int, q: int) -> int:
    """Class of x in F_q^*/(F_q^*)^g, as an exponent of g0."""
    x %= q
    if x == 0:
        raise ValueError("dlog of zero")
    if (q - 1) % g:
        raise ValueError("g must divide q - 1")
    e = (q - 1) // g
    return bsgs_log(pow(g0, e, q), pow(x, e, q), g, q)


class QuotientLog:
    """Precomputed discrete logs in F_q^*/(F_q^*)^g for repeated queries."""

    def __init__(self, q: int, g: int, g0: Optional[int] = None):
        if (q - 1) % g:
            raise ValueError("g must divide q - 1")
        self.q, self.g = q, g
        self.g0 = generator(q) if g0 is None else g0
        self.e = (q - 1) // g
        h = pow(self.g0, self.e, q)
        self.table = {}
        cur = 1
        for j in range(g):
            self.table[cur] = j
            cur = cur * h % q

    def __call__(self, x: int) -> int:
        x %= self.q
        if x == 0:
            raise ValueError("dlog of zero")
        return self.table[pow(x, self.e, self.q)]


# --- F_{q^2} as pairs -------------------------------------------------------

def ext_mul(a: int, b: int, c: int, d: int, r0: int, q: int) -> Tuple[int, int]:
    return (a * c + r0 * b * d) % q, (a * d + b * c) % q


def ext_pow(a: int, b: int, e: int, r0: int, q: int) -> Tuple[int, int]:
    ra, rb = 1, 0
    if e < 0:
        a, b = ext_inv(a, b, r0, q)
        e = -e
    while e:
        if e & 1:
            ra, rb = ext_mul(ra, rb, a, b, r0, q)
        a, b = ext_mul(a, b, a, b, r0, q)
        e >>= 1
    return ra, rb


def ext_inv(a: int, b: int, r0: int, q: int) -> Tuple[int, int]:
    n = (a * a - r0 * b * b) % q
    if n == 0:
        raise ZeroDivisionError("inverse of zero in F_{q^2}")
    ninv = pow(n, -1, q)
    return a * ninv % q, -b * ninv % q


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.q)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.q != self.q:
                raise ValueError("moduli differ")
            return other.value
        return other % self.q

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.q)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.q)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.q)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.q)

    def __truediv__(self, other):
        return self * pow(self._coerce(other), -1, self.q)

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, self.q), self.q)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.q == other.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.q))

    def __int__(self):
        return self.value

    def sqrt(self) -> Optional["FieldElement"]:
        r = sqrt_mod(self.value, self.q)
        return None if r is None else FieldElement(r, self.q)


@dataclass(frozen=True)
class ExtFieldElement:
    """a + b*w in F_{q^2}, w^2 = smallest_nonresidue(q)."""

    a: int
    b: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "a", self.a % self.q)
        object.__setattr__(self, "b", self.b % self.q)

    @property
    def r0(self) -> int:
        return smallest_nonresidue(self.q)

    def _pair(self, other) -> Tuple[int, int]:
        if isinstance(other, ExtFieldElement):
            if other.q != self.q:
                raise ValueError("moduli differ")
            return other.a, other.b
        if isinstance(other, FieldElement):
            return other.value, 0
        return other % self.q, 0

    def __add__(self, other):
        c, d = self._pair(other)
        return ExtFieldElement(self.a + c, self.b + d, self.q)

    __radd__ = __add__

    def __sub__(self, other):
        c, d = self._pair(other)
        return ExtFieldElement(self.a - c, self.b - d, self.q)

    def __rsub__(self, other):
        c, d = self._pair(other)
        return ExtFieldElement(c - self.a, d - self.b, self.q)

    def __neg__(self):
        return ExtFieldElement(-self.a, -self.b, self.q)

    def __mul__(self, other):
        c, d = self._pair(other)
        return ExtFieldElement(*ext_mul(self.a, self.b, c, d, self.r0, self.q), self.q)

    __rmul__ = __mul__

    def inverse(self) -> "ExtFieldElement":
        return ExtFieldElement(*ext_inv(self.a, self.b, self.r0, self.q), self.q)

    def __truediv__(self, other):
        c, d = self._pair(other)
        return self * ExtFieldElement(*ext_inv(c, d, self.r0, self.q), self.q)

    def __pow__(self, e: int):
        return ExtFieldElement(*ext_pow(self.a, self.b, e, self.r0, self.q), self.q)

    def frobenius(self) -> "ExtFieldElement":
        # w^q = w * r0^((q-1)/2) = -w
        return ExtFieldElement(self.a, -self.b, self.q)

    def norm(self) -> int:
        return (self.a * self.a - self.r0 * self.b * self.b) % self.q

    def trace(self) -> int:
        return 2 * self.a % self.q

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def in_base_field(self) -> bool:
        return self.b == 0

    def __eq__(self, other):
        if isinstance(other, ExtFieldElement):
            return (self.q, self.a, self.b) == (other.q, other.a, other.b)
        if isinstance(other, (int, FieldElement)):
            c, d = self._pair(other)
            return self.a == c and self.b == d
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.q))


def ext_sqrt_minus(d: int, q: int) -> ExtFieldElement:
    """The fixed square root of -d in F_{q^2} for q inert in Q(sqrt(-d)).

    -d is a nonresidue, so -d = r0 * s^2 with s the smaller root of -d/r0 and
    sqrt(-d) = s*w.
    """
    r0 = smallest_nonresidue(q)
    s = sqrt_mod(-d * pow(r0, -1, q), q)
    if s is None:
        raise ValueError("-d is a square mod q; use the split reduction")
    return ExtFieldElement(0, s, q)
