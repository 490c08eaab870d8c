"""Frey curves, eigenvalue bounds, the Kraus sieve and the multi-prime refined sieve.

Classes in F_q^*/(F_q^*)^(2n) are handled as discrete logarithms mod 2n: every
auxiliary prime used here is q = 1 mod 2n, so the quotient is cyclic of order
2n and psi_q is the linear form beta -> sum e_p beta_p with e_p the class of
the bases -3, 5, -7, -11.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .arith import (ext_mul, ext_pow, generator, generator_ext, is_prime, legendre,
                    smallest_nonresidue, sqrt_mod)
from .ecurve import (NAIVE_LIMIT, BadReductionError, CurveRecord, TraceTable, a_ell,
                     bsgs_trace_cubic, _DATA)
from .quadfield import (SUPPORTED_D, descent_constants, gamma_exponent, kappa_m)

ODD_S = (3, 5, 7, 11)
PSI_BASES = (-3, 5, -7, -11)


class Verdict(str, Enum):
    ELIMINATED = "eliminated"
    UNDECIDED = "undecided"
    INCONCLUSIVE = "inconclusive"


class InvariantError(ValueError):
    pass


class HeckeDataError(ValueError):
    pass


# --- Frey curve --------------------------------------------------------------

def _val(m: int, p: int) -> int:
    v = 0
    while m and m % p == 0:
        m //= p
        v += 1
    return v


@dataclass(frozen=True)
class FreySolution:
    """x^2 + 3^a3 5^a5 7^a7 11^a11 = y^n with y even; x is stored = 1 mod 4."""

    x: int
    y: int
    n: int
    alpha: Tuple[int, int, int, int]

    def __post_init__(self):
        if self.x % 4 == 3:
            object.__setattr__(self, "x", -self.x)
        rhs = self.y ** self.n - self.x * self.x
        if rhs != self.odd_part or self.y % 2 or math.gcd(self.x, self.y) != 1:
            raise InvariantError(f"not a solution with y even: {self}")
        if self.d not in SUPPORTED_D:
            raise InvariantError(f"squarefree part {self.d} is not 7, 15, 55 or 231")

    @classmethod
    def from_xyn(cls, x: int, y: int, n: int) -> "FreySolution":
        rhs = y ** n - x * x
        if rhs <= 0:
            raise InvariantError("y^n - x^2 must be positive")
        alpha = tuple(_val(rhs, p) for p in ODD_S)
        rest = rhs
        for p, a in zip(ODD_S, alpha):
            rest //= p ** a
        if rest != 1:
            raise InvariantError(f"{rhs} is not a {{3,5,7,11}}-unit")
        return cls(x, y, n, alpha)

    @property
    def odd_part(self) -> int:
        v = 1
        for p, a in zip(ODD_S, self.alpha):
            v *= p ** a
        return v

    @property
    def d(self) -> int:
        v = 1
        for p, a in zip(ODD_S, self.alpha):
            if a % 2:
                v *= p
        return v

    @property
    def c(self) -> int:
        v = 1
        for p, a in zip(ODD_S, self.alpha):
            v *= p ** (a // 2)
        return v

    @property
    def c_prime(self) -> int:
        return self.c if self.c % 4 == 1 else -self.c

    @property
    def beta(self) -> Tuple[int, int, int, int]:
        return tuple(a // 2 for a in self.alpha)


def frey_invariants(sol: FreySolution) -> Tuple[int, int, Dict[int, int]]:
    """(c4, c6, {prime: ord, -1: sign}) of Y^2 + XY = X^3 + (x-1)/4 X^2 + y^n/64 X."""
    x, yn = sol.x, sol.y ** sol.n
    c4n, c6n = 4 * x * x - 3 * yn, -8 * x ** 3 + 9 * x * yn
    if c4n % 4 or c6n % 8:
        raise InvariantError("non-integral c4 or c6")
    ords: Dict[int, int] = {-1: -1}
    ords[2] = 2 * sol.n * _val(sol.y, 2) - 12
    rest = sol.y
    while rest % 2 == 0:
        rest //= 2
    for p, a in zip(ODD_S, sol.alpha):
        e = a + 2 * sol.n * _val(rest, p)
        if e:
            ords[p] = e
        while rest % p == 0:
            rest //= p
    if rest > 1:
        from .arith import factorize
        for p, e in factorize(rest).items():
            ords[p] = 2 * sol.n * e
    if ords[2] < 0:
        raise InvariantError("y^n/64 is not integral")
    return c4n // 4, c6n // 8, ords


def conductor_support(alpha: Sequence[int], n: int) -> Set[int]:
    """Odd primes dividing N' = 2R: those l with alpha_l != 0 mod n."""
    return {p for p, a in zip(ODD_S, alpha) if a % n}


def alpha_residues(d: int, beta: Sequence[int], n: int) -> Tuple[int, ...]:
    """alpha_l = 2 beta_l + ord_l(d) modulo n."""
    return tuple((2 * b + (1 if d % p == 0 else 0)) % n for p, b in zip(ODD_S, beta))


def conductor_consistent(E: CurveRecord, d: int, n: int, beta: Sequence[int]) -> bool:
    """Whether beta mod 2n is compatible with N(E) = N' under l | N' <=> alpha_l != 0."""
    support = {p for p, a in zip(ODD_S, alpha_residues(d, beta, n)) if a}
    return support == {p for p in ODD_S if E.conductor % p == 0}


# --- newforms and the eigenvalue bound ----------------------------------------

@dataclass(frozen=True)
class Newform:
    label: str
    level: int
    dim: int
    charpoly: Dict[int, Tuple[int, ...]]
    curve: Optional[str] = None
    field: Optional["HeckeField"] = None

    @classmethod
    def from_curve(cls, E: CurveRecord) -> "Newform":
        cp = {p: (1, -a) for p, a in E.ap.items()}
        return cls(E.label, E.conductor, 1, cp, E.label)


def load_newforms(path: Union[str, Path, None] = None) -> List[Newform]:
    with open(path or _DATA / "newforms.json") as fh:
        raw = json.load(fh)
    out = []
    for e in raw:
        if e["dim"] == 1:
            cp = {int(p): (1, -int(a)) for p, a in e["ap"].items()}
        else:
            cp = {int(p): tuple(int(c) for c in v) for p, v in e["charpoly"].items()}
        fld = HeckeField.from_json(e["field"]) if "field" in e else None
        out.append(Newform(e["label"], e["level"], e["dim"], cp, e.get("curve"), fld))
    return out


def _poly_eval(coeffs: Sequence[int], x: int) -> int:
    v = 0
    for c in coeffs:
        v = v * x + c
    return v


def t_set(d: int, ell: int) -> List[int]:
    """Possible a_ell of the Frey curve: Hasse interval, mod 4 or mod 2, empty if l | d."""
    k = legendre(-d, ell)
    if k == 0:
        return []
    mod = 4 if k == 1 else 2
    r = math.isqrt(4 * ell)
    return [a for a in range(-r, r + 1) if (ell + 1 - a) % mod == 0]


def eigen_bound(f: Union[Newform, CurveRecord], d: int, ell: int) -> int:
    """Norm of C_{f,l} = C'_{f,l} * prod_{a in T_l} (a - c_l)."""
    if isinstance(f, CurveRecord):
        f = Newform.from_curve(f)
    if f.level % ell == 0 or ell == 2:
        raise ValueError(f"l = {ell} must be odd and prime to the level {f.level}")
    try:
        P = f.charpoly[ell]
    except KeyError:
        raise HeckeDataError(f"no Hecke data for {f.label} at {ell}") from None
    D = len(P) - 1
    # Norm(a - c) = P(a); Norm(l+1+c) = (-1)^D P(-(l+1))
    c_prime = _poly_eval(P, ell + 1) * (-1) ** D * _poly_eval(P, -(ell + 1))
    if D > 1:
        c_prime *= ell ** D
    val = c_prime
    for a in t_set(d, ell):
        val *= _poly_eval(P, a)
    return val


def exponent_bound_B(f: Union[Newform, CurveRecord], d: int, ell_max: int = 500) -> int:
    """gcd of |C_{f,l}| over odd primes l < ell_max prime to the level (0 if all vanish)."""
    if isinstance(f, CurveRecord):
        f = Newform.from_curve(f)
    g = 0
    for ell in range(3, ell_max, 2):
        if is_prime(ell) and f.level % ell:
            g = math.gcd(g, eigen_bound(f, d, ell))
    return g


class HeckeField:
    """K = Q[y]/P(y) with an integral basis and the eigenvalues c_p in K."""

    def __init__(self, poly, zk, c):
        self.P = [Fraction(a) for a in poly]  # constant term first, monic
        self.D = len(self.P) - 1
        self.zk = [self._pad(w) for w in zk]
        self.c = {p: self._pad(v) for p, v in c.items()}
        self._winv = _mat_inverse([[w[i] for w in self.zk] for i in range(self.D)])

    @classmethod
    def from_json(cls, obj) -> "HeckeField":
        def fr(lst):
            return [Fraction(a, b) for a, b in lst]
        return cls(fr(obj["poly"]), [fr(w) for w in obj["zk"]],
                   {int(p): fr(v) for p, v in obj["c"].items()})

    def _pad(self, v):
        v = [Fraction(x) for x in v] + [Fraction(0)] * self.D
        return self._reduce(v)

    def _reduce(self, v):
        v = list(v)
        for k in range(len(v) - 1, self.D - 1, -1):
            ck = v[k]
            if ck:
                for i in range(self.D + 1):
                    v[k - self.D + i] -= ck * self.P[i]
        return v[: self.D]

    def mul(self, u, v):
        prod = [Fraction(0)] * (2 * self.D)
        for i, a in enumerate(u):
            if a:
                for j, b in enumerate(v):
                    prod[i + j] += a * b
        return self._reduce(prod)

    def const(self, k):
        return [Fraction(k)] + [Fraction(0)] * (self.D - 1)

    def coords(self, v) -> List[int]:
        """Coordinates in the integral basis; integral for algebraic integers."""
        out = [sum(self._winv[i][j] * v[j] for j in range(self.D)) for i in range(self.D)]
        if any(x.denominator != 1 for x in out):
            raise HeckeDataError("element is not integral")
        return [int(x) for x in out]


def _mat_inverse(M):
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(M)]
    for c in range(n):
        piv = next(i for i in range(c, n) if A[i][c])
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for i in range(n):
            if i != c and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[c])]
    return [row[n:] for row in A]


def _hnf_index(gens: List[List[int]], D: int, modulus: int) -> int:
    """Index in Z^D of the lattice spanned by gens and modulus * Z^D."""
    H = [[modulus if i == j else 0 for j in range(D)] for i in range(D)]
    for v in gens:
        v = [x % modulus for x in v]
        for i in range(D):
            if v[i] == 0:
                continue
            # combine row i of H with v to clear v[i]
            a, b = H[i][i], v[i]
            g, x, y = _xgcd(a, b)
            ra = [(x * p + y * w) for p, w in zip(H[i], v)]
            rv = [((a // g) * w - (b // g) * p) for p, w in zip(H[i], v)]
            H[i] = [t % modulus if j > i else t for j, t in enumerate(ra)]
            v = [t % modulus for t in rv]
    det = 1
    for i in range(D):
        det *= H[i][i]
    return abs(det)


def _xgcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    return a, x0, y0


def ideal_norm_bound(f: Union[Newform, CurveRecord], d: int, ell_max: int = 500) -> int:
    """Norm of the ideal of O_K generated by every C_{f,l}, l < ell_max.

    Divides exponent_bound_B (which only takes the gcd of norms) and equals it
    for rational f.
    """
    if isinstance(f, CurveRecord) or f.dim == 1:
        return exponent_bound_B(f, d, ell_max)
    if f.field is None:
        raise HeckeDataError(f"{f.label}: no Hecke field data")
    B = exponent_bound_B(f, d, ell_max)
    if B == 0:
        return 0
    K = f.field
    gens = []
    for ell in range(3, ell_max, 2):
        if not is_prime(ell) or f.level % ell == 0:
            continue
        c = K.c[ell]
        lp1 = K.const(ell + 1)
        cc = K.mul(c, c)
        val = K.mul(K.const(ell), [x - y for x, y in zip(K.mul(lp1, lp1), cc)])
        for a in t_set(d, ell):
            val = K.mul(val, [x - y for x, y in zip(K.const(a), c)])
        for w in K.zk:
            gens.append(K.coords(K.mul(val, w)))
    return _hnf_index(gens, K.D, B)


def surviving_pairs(newforms: Optional[Sequence[Newform]] = None,
                    ell_max: int = 500) -> List[Tuple[Newform, int]]:
    """(f, d) with exponent_bound_B = 0, in (d, level, index) order."""
    forms = newforms if newforms is not None else load_newforms()
    out = []
    for d in SUPPORTED_D:
        for f in forms:
            if exponent_bound_B(f, d, ell_max) == 0:
                out.append((f, d))
    return out


# --- modular helpers ---------------------------------------------------------

def _check_aux(q: int, n: int):
    if not is_prime(q) or (q - 1) % n or q % 2 == 0 or 2310 % q == 0:
        raise ValueError(f"q={q} is not an admissible auxiliary prime for n={n}")
    if n < 13 or not is_prime(n):
        raise ValueError(f"n={n} must be a prime >= 13")


def _vpow(x: np.ndarray, e: int, q: int) -> np.ndarray:
    r = np.ones_like(x)
    b = x % q
    while e:
        if e & 1:
            r = r * b % q
        b = b * b % q
        e >>= 1
    return r


def _geometric(start: int, ratio: int, count: int, q: int) -> np.ndarray:
    """start * ratio^i mod q for i < count."""
    out = np.empty(count, dtype=np.int64)
    B = max(1, math.isqrt(count))
    blk = np.empty(B, dtype=np.int64)
    cur = 1
    for j in range(B):
        blk[j] = cur
        cur = cur * ratio % q
    mult = start % q
    for i in range(0, count, B):
        e = min(count, i + B)
        out[i:e] = blk[: e - i] * mult % q
        mult = mult * cur % q
    return out


def _ext_geometric(start: Tuple[int, int], ratio: Tuple[int, int], count: int,
                   q: int, r0: int) -> Tuple[np.ndarray, np.ndarray]:
    """start * ratio^i in F_{q^2} = F_q(w), w^2 = r0, as coordinate arrays."""
    A = np.empty(count, dtype=np.int64)
    Bc = np.empty(count, dtype=np.int64)
    B = max(1, math.isqrt(count))
    ba = np.empty(B, dtype=np.int64)
    bb = np.empty(B, dtype=np.int64)
    cur = (1, 0)
    for j in range(B):
        ba[j], bb[j] = cur
        cur = ext_mul(cur[0], cur[1], ratio[0], ratio[1], r0, q)
    mult = (start[0] % q, start[1] % q)
    for i in range(0, count, B):
        e = min(count, i + B)
        u, v = ba[: e - i], bb[: e - i]
        ma, mb = mult
        A[i:e] = (u * ma % q + (v * mb % q) * r0) % q
        Bc[i:e] = (u * mb + v * ma) % q
        mult = ext_mul(mult[0], mult[1], cur[0], cur[1], r0, q)
    return A, Bc


class AuxPrime:
    """Per-q data shared by every curve and every d at that q."""

    def __init__(self, q: int):
        self.q = q
        self.g0 = generator(q)
        self._table: Optional[TraceTable] = None
        self._mod_cache: Dict[int, Tuple[np.ndarray, int]] = {}

    @property
    def table(self) -> TraceTable:
        if self._table is None:
            self._table = TraceTable(self.q)
        return self._table

    def traces(self, s: np.ndarray, p: np.ndarray, full_two_torsion: bool) -> np.ndarray:
        """a_q of y^2 = x(x^2 + s x + p), choosing the batch table or BSGS."""
        q = self.q
        if len(s) == 0:
            return np.zeros(0, dtype=np.int64)
        if self._table is not None or q < NAIVE_LIMIT or len(s) * 400 > q:
            return self.table.trace_sp(s, p)
        m = 4 if full_two_torsion else 2
        return np.array([bsgs_trace_cubic(int(a), int(b), 0, q, m) for a, b in zip(s, p)],
                        dtype=np.int64)

    def _roots(self, mod: int) -> Tuple[np.ndarray, np.ndarray, int]:
        hit = self._mod_cache.get(mod)
        if hit is None:
            e = (self.q - 1) // mod
            zeta = pow(self.g0, e, self.q)
            roots = _geometric(1, zeta, mod, self.q)
            order = np.argsort(roots)
            hit = (roots[order], order, e)
            self._mod_cache[mod] = hit
        return hit

    def class_log(self, x, mod: int):
        """log_{g0}(x) mod `mod` (mod | q-1), vectorised."""
        roots, order, e = self._roots(mod)
        arr = np.asarray(x, dtype=np.int64) % self.q
        if np.any(arr == 0):
            raise ValueError("class of zero")
        v = _vpow(arr, e, self.q)
        idx = np.searchsorted(roots, v)
        return order[idx]


@lru_cache(maxsize=4)
def aux_prime(q: int) -> AuxPrime:
    return AuxPrime(q)


def aux_primes(n: int, start: int = 1) -> Iterator[Tuple[int, int]]:
    """(q, k) with q = kn + 1 prime, k >= start, in increasing order."""
    k = start
    while True:
        q = k * n + 1
        if k % 2 == 0 and is_prime(q) and 2310 % q:
            yield q, k
        k += 1


def _assert_hasse(a: int, q: int):
    assert a * a <= 4 * q, f"a_q = {a} outside the Hasse interval at q = {q}"


# --- Kraus -------------------------------------------------------------------

def theta_set(d: int, n: int, q: int) -> np.ndarray:
    """Theta_q = {(u + v a)^e g^i : i < k} minus {0, 1}, a the smaller sqrt(-d)."""
    _check_aux(q, n)
    if legendre(-d, q) != 1:
        raise ValueError(f"(-{d}/{q}) != 1")
    dc = descent_constants(d)
    a = sqrt_mod(-d % q, q)
    u, v = dc.gamma
    gam = (u.numerator * pow(u.denominator, -1, q) + v.numerator * pow(v.denominator, -1, q) * a) % q
    gam = pow(gam, gamma_exponent(d, n), q)
    k = (q - 1) // n
    ap = aux_prime(q)
    th = _geometric(gam, pow(ap.g0, n, q), k, q)
    return th[(th != 0) & (th != 1)]


@lru_cache(maxsize=256)
def kraus_profile(d: int, n: int, q: int) -> FrozenSet[int]:
    """{a_q(H_theta)^2 mod n : theta in Theta_q}; independent of E."""
    th = theta_set(d, n, q)
    tr = aux_prime(q).traces((th + 1) % q, th, True)
    return frozenset(int(v) for v in np.unique(tr * tr % n))


def kraus_test(E: CurveRecord, d: int, n: int, q: int) -> Verdict:
    aE = a_ell(E, q)
    _assert_hasse(aE, q)
    sq = aE * aE % n
    if sq == 4 % n or sq in kraus_profile(d, n, q):
        return Verdict.UNDECIDED
    return Verdict.ELIMINATED


def kraus_search(E: CurveRecord, d: int, n: int, k_max: int = 1000,
                 diagnostics: Optional[list] = None) -> Optional[int]:
    """Smallest split q = kn + 1 (k < k_max) eliminating (E, d, n), or None.

    Failed primes are appended to `diagnostics` as (q, k, (1 - 2/n)^k).
    """
    for q, k in aux_primes(n):
        if k >= k_max:
            return None
        if legendre(-d, q) != 1:
            continue
        if kraus_test(E, d, n, q) is Verdict.ELIMINATED:
            return q
        if diagnostics is not None:
            diagnostics.append((q, k, (1 - 2 / n) ** k))


# --- refined sieve -------------------------------------------------------------

def _eta_reduction(d: int, q: int, a: int) -> Tuple[int, int]:
    dc = descent_constants(d)
    r, s = dc.eta
    rq = r.numerator * pow(r.denominator, -1, q) % q
    sq_ = s.numerator * pow(s.denominator, -1, q) % q
    return rq, sq_


@dataclass
class RefinedProfile:
    """Everything in Phi_q that does not depend on E, for one (d, n, q)."""

    q: int
    split: bool
    traces: np.ndarray
    classes: np.ndarray
    extra: Tuple[int, ...]  # classes added when a_q(E)^2 = 4 mod n (split only)
    psi: Tuple[int, int, int, int]

    def phi(self, aE: int, n: int) -> Set[int]:
        sel = (self.traces - aE) % n == 0
        out = set(int(c) for c in np.unique(self.classes[sel]))
        if self.split and (aE * aE - 4) % n == 0:
            out.update(self.extra)
        return out


@lru_cache(maxsize=64)
def refined_profile(d: int, n: int, q: int) -> RefinedProfile:
    _check_aux(q, n)
    mod = 2 * n
    ap = aux_prime(q)
    _, m = kappa_m(d, n)
    psi = tuple(int(c) for c in ap.class_log(np.array(PSI_BASES), mod))
    k = (q - 1) // n
    if legendre(-d, q) == 1:
        a = sqrt_mod(-d % q, q)
        r, s = _eta_reduction(d, q, a)
        rho1 = pow((r + s * a) % q, m, q)
        rho2 = pow((r - s * a) % q, m, q)
        g = pow(ap.g0, n, q)
        t1 = _geometric(rho1, g, k, q)
        ainv = pow(a, -1, q)
        trs, cls = [], []
        for t2 in (rho2, rho2 * g % q):
            ok = (t1 != t2)  # theta1, theta2 are nonzero automatically
            th1 = t1[ok]
            trs.append(ap.traces((th1 + t2) % q, th1 * t2 % q, True))
            cls.append(ap.class_log((th1 - t2) % q * ainv % q, mod))
        extra = tuple(int(c) for c in ap.class_log(
            np.array([rho1, rho1 * g % q, -rho2 % q, -rho2 * g % q]) * ainv % q, mod))
        return RefinedProfile(q, True, np.concatenate(trs), np.concatenate(cls), extra, psi)
    # inert: theta = rho1 g^i in F_{q^2}, i = 0 .. 2q+1
    r0 = smallest_nonresidue(q)
    G0 = generator_ext(q)
    g = ext_pow(G0.a, G0.b, n, r0, q)
    from .arith import ext_sqrt_minus
    t = ext_sqrt_minus(d, q).b  # sqrt(-d) = t w
    dc = descent_constants(d)
    r, s = dc.eta
    rq = r.numerator * pow(r.denominator, -1, q) % q
    sq_ = s.numerator * pow(s.denominator, -1, q) % q
    rho1 = ext_pow(rq, sq_ * t % q, m, r0, q)
    A, B = _ext_geometric(rho1, g, 2 * q + 2, q, r0)
    ok = B != 0
    A, B = A[ok], B[ok]
    tr_ = 2 * A % q
    nm = (A * A % q - (B * B % q) * r0) % q
    traces = ap.traces(tr_, nm, False)
    # (theta - theta^q)/sqrt(-d) = 2B w / (t w) = 2B/t, which lies in F_q
    cls = ap.class_log(2 * B % q * pow(t, -1, q) % q, mod)
    return RefinedProfile(q, False, traces, cls, (), psi)


def refined_phi(E: CurveRecord, d: int, n: int, q: int) -> Set[int]:
    """Phi_q as a set of classes mod 2n (logs to base generator(q))."""
    aE = a_ell(E, q)
    _assert_hasse(aE, q)
    return refined_profile(d, n, q).phi(aE, n)


def psi_class(beta: Sequence[int], psi: Sequence[int], n: int) -> int:
    return sum(b * e for b, e in zip(beta, psi)) % (2 * n)


class ConstraintSystem:
    """Running intersection of {beta in (Z/2n)^4 : psi_q . beta mod 2n in A_q}.

    Since 2n = 2 * n with n an odd prime, a 4 x 4 system mod 2n splits by CRT
    into one over F_2 and one over F_n.  Once four constraints are independent
    mod n the candidates are listed explicitly (16 choices of beta mod 2, one
    solution mod n for each admissible right-hand side) and every further
    constraint just filters the list.
    """

    CAP = 4_000_000

    def __init__(self, n: int, full_enumeration: Optional[bool] = None):
        self.n = n
        self.mod = 2 * n
        self.pending: List[Tuple[np.ndarray, np.ndarray]] = []
        self.cands: Optional[np.ndarray] = None
        if full_enumeration is None:
            full_enumeration = n <= 20
        if full_enumeration:
            grid = np.indices((self.mod,) * 4).reshape(4, -1).T.astype(np.int64)
            self.cands = grid

    @property
    def materialised(self) -> bool:
        return self.cands is not None

    def add(self, psi: Sequence[int], A: Iterable[int]) -> None:
        e = np.array(psi, dtype=np.int64) % self.mod
        Aarr = np.array(sorted(set(int(a) % self.mod for a in A)), dtype=np.int64)
        if self.cands is not None:
            self._filter(e, Aarr)
        else:
            self.pending.append((e, Aarr))
            if len(Aarr) == 0:
                self.cands = np.zeros((0, 4), dtype=np.int64)
            else:
                self._try_materialise()

    def _filter(self, e, Aarr):
        if len(self.cands):
            v = self.cands @ e % self.mod
            self.cands = self.cands[np.isin(v, Aarr)]

    def is_empty(self) -> bool:
        return self.cands is not None and len(self.cands) == 0

    def _try_materialise(self, force: bool = False):
        n = self.n
        order = sorted(range(len(self.pending)), key=lambda i: len(self.pending[i][1]))
        chosen: List[int] = []
        rows: List[List[int]] = []
        for i in order:
            e = self.pending[i][0]
            trial = rows + [[int(x) % n for x in e]]
            if _rank_mod_p(trial, n) == len(trial):
                chosen.append(i)
                rows = trial
            if len(chosen) == 4:
                break
        if len(chosen) < 4:
            if force:
                raise RuntimeError("psi constraints never reached full rank mod n")
            return
        size = 16
        for i in chosen:
            size *= len(self.pending[i][1])
        if size > self.CAP and not force:
            return
        self.cands = _solve_four(self.pending, chosen, n)
        pend, self.pending = self.pending, []
        for e, Aarr in pend:
            self._filter(e, Aarr)

    def solutions(self) -> Set[Tuple[int, int, int, int]]:
        if self.cands is None:
            self._try_materialise(force=True)
        return {tuple(int(x) for x in row) for row in self.cands}


def _rank_mod_p(rows: List[List[int]], p: int) -> int:
    M = [r[:] for r in rows]
    rank, cols = 0, len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(M)) if M[i][c] % p), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], -1, p)
        M[rank] = [x * inv % p for x in M[rank]]
        for i in range(len(M)):
            if i != rank and M[i][c] % p:
                f = M[i][c]
                M[i] = [(x - f * y) % p for x, y in zip(M[i], M[rank])]
        rank += 1
    return rank


def _inverse_mod_p(M: List[List[int]], p: int) -> List[List[int]]:
    n = len(M)
    aug = [[x % p for x in row] + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c])
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = pow(aug[c][c], -1, p)
        aug[c] = [x * inv % p for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(x - f * y) % p for x, y in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


def _solve_four(pending, chosen, n) -> np.ndarray:
    mod = 2 * n
    E = np.array([pending[i][0] for i in chosen], dtype=np.int64)
    Minv = np.array(_inverse_mod_p([[int(x) for x in row] for row in E], n), dtype=np.int64)
    sets = [pending[i][1] for i in chosen]
    out = []
    # CRT: x = 1 mod 2 and 0 mod n is n; x = 0 mod 2 and 1 mod n is n + 1 (n odd)
    for b2 in itertools.product((0, 1), repeat=4):
        b2v = np.array(b2, dtype=np.int64)
        par = E @ b2v % 2
        opts = [S[S % 2 == par[i]] for i, S in enumerate(sets)]
        if any(len(o) == 0 for o in opts):
            continue
        grid = np.stack(np.meshgrid(*opts, indexing="ij"), -1).reshape(-1, 4)
        bn = grid % n @ Minv.T % n
        full = (b2v * n + bn * (n + 1)) % mod
        out.append(full)
    if not out:
        return np.zeros((0, 4), dtype=np.int64)
    return np.unique(np.concatenate(out), axis=0)


@dataclass
class IntersectionResult:
    vectors: Set[Tuple[int, int, int, int]]
    primes_used: List[int]

    @property
    def empty(self) -> bool:
        return not self.vectors


def psi_preimage_intersect(E: CurveRecord, d: int, n: int, prime_budget: int = 200,
                           full_enumeration: Optional[bool] = None,
                           detail: bool = False):
    """Intersection of psi_q^{-1}(Phi_q) over the first primes q = 1 mod n."""
    sysm = ConstraintSystem(n, full_enumeration)
    used = []
    for q, _ in aux_primes(n):
        if len(used) >= prime_budget:
            break
        prof = refined_profile(d, n, q)
        aE = a_ell(E, q)
        _assert_hasse(aE, q)
        sysm.add(prof.psi, prof.phi(aE, n))
        used.append(q)
        if sysm.is_empty():
            break
    sols = sysm.solutions()
    res = IntersectionResult(sols, used)
    return res if detail else sols


# --- Halberstadt-Kraus ---------------------------------------------------------

def frey_ord_residue(d: int, n: int, beta: Sequence[int], p: int) -> int:
    """ord_p(Delta_F) mod n for p in {2, 3, 5, 7, 11}."""
    if p == 2:
        return -12 % n
    return alpha_residues(d, beta, n)[ODD_S.index(p)]


def hk_ratio(ord_f: Tuple[int, int], E: CurveRecord, n: int, q1: int = 2, q2: int = 3) -> int:
    for qq in (q1, q2):
        if not E.is_multiplicative(qq):
            raise ValueError(f"{qq} is not multiplicative for {E.label}")
        if qq == n:
            raise ValueError("q_i must differ from n")
    e1, e2 = E.ord_disc(q1), E.ord_disc(q2)
    num = ord_f[0] * ord_f[1] % n
    den = e1 * e2 % n
    if num == 0 or den == 0:
        raise ValueError("a discriminant valuation is 0 mod n")
    return num * pow(den, -1, n) % n


def hk_test(ord_f: Tuple[int, int], E: CurveRecord, n: int, q1: int = 2, q2: int = 3) -> Verdict:
    """Eliminated iff the valuation ratio is a nonsquare mod n."""
    r = hk_ratio(ord_f, E, n, q1, q2)
    return Verdict.ELIMINATED if legendre(r, n) == -1 else Verdict.INCONCLUSIVE


def hk_search(E: CurveRecord, d: int, n: int, beta: Sequence[int]):
    """Try every admissible pair (q1, q2) in lexicographic order.

    Returns (verdict, pair, ratio, log) where log lists (q1, q2, ratio, verdict)
    for each pair evaluated.
    """
    log = []
    primes = [p for p in (2,) + ODD_S
              if E.is_multiplicative(p) and p != n and E.ord_disc(p) % n
              and frey_ord_residue(d, n, beta, p) % n]
    for q1, q2 in itertools.combinations(primes, 2):
        of = (frey_ord_residue(d, n, beta, q1), frey_ord_residue(d, n, beta, q2))
        r = hk_ratio(of, E, n, q1, q2)
        v = Verdict.ELIMINATED if legendre(r, n) == -1 else Verdict.INCONCLUSIVE
        log.append((q1, q2, r, v))
        if v is Verdict.ELIMINATED:
            return v, (q1, q2), r, log
    return Verdict.INCONCLUSIVE, None, None, log


def post_sieve(E: CurveRecord, d: int, n: int, vectors: Iterable[Sequence[int]]):
    """Apply conductor compatibility then Halberstadt-Kraus to survivors.

    Returns a list of (beta, reason) with reason "conductor", "hk q1,q2" or
    "survives".
    """
    out = []
    for beta in sorted(tuple(b) for b in vectors):
        if not conductor_consistent(E, d, n, beta):
            out.append((beta, "conductor"))
            continue
        v, pair, r, _ = hk_search(E, d, n, beta)
        if v is Verdict.ELIMINATED:
            out.append((beta, f"hk {pair[0]},{pair[1]} ratio {r}"))
        else:
            out.append((beta, "survives"))
    return out


# --- campaign ------------------------------------------------------------------

CAMPAIGN_CURVES = (
    "14a4", "210a1", "210b5", "210e1", "210e6", "330c1", "330c6", "330e4",
    "462a1", "462b1", "462d1", "462e1", "462f1", "462g3", "770a1", "770e1",
    "770g3", "2310d4", "2310j1", "2310l1", "2310m1", "2310n1", "2310n6", "2310o1",
)
REPORT_HEADER = ("d", "label", "n", "status", "method", "detail")


class CheckpointError(RuntimeError):
    def __init__(self, path, offset: int, reason: str):
        super().__init__(f"{path}: {reason} after byte {offset}")
        self.path, self.offset, self.reason = path, offset, reason


@dataclass
class CampaignConfig:
    d_set: Tuple[int, ...] = SUPPORTED_D
    n_min: int = 13
    n_max: int = 2000
    k_max: int = 1000
    prime_budget: int = 200
    workers: int = 1
    checkpoint: Optional[Path] = None
    curves: Optional[Sequence[CurveRecord]] = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.n_min < 13:
            raise ValueError("the sieve needs n >= 13")
        bad = set(self.d_set) - set(SUPPORTED_D)
        if bad:
            raise ValueError(f"unsupported d: {sorted(bad)}")

    def curve_list(self) -> List[CurveRecord]:
        if self.curves is not None:
            return list(self.curves)
        from .ecurve import bundled_curves
        allc = bundled_curves()
        return [allc[l] for l in CAMPAIGN_CURVES]

    def triples(self) -> List[Tuple[CurveRecord, int, int]]:
        """(E, d, n) in (d, label, n) order; E must have 2d | N(E) | 2310."""
        ns = [p for p in range(self.n_min, self.n_max + 1) if is_prime(p)]
        out = []
        for d in sorted(self.d_set):
            for E in sorted(self.curve_list(), key=lambda e: e.label):
                if E.conductor % (2 * d) or 2310 % E.conductor:
                    continue
                out.extend((E, d, n) for n in ns)
        return out


def process_triple(E: CurveRecord, d: int, n: int, k_max: int = 1000,
                   prime_budget: int = 200) -> dict:
    """Status of one triple: eigen bound, Kraus, refined sieve, then post-sieve."""
    rec = {"label": E.label, "d": d, "n": n}
    B = exponent_bound_B(E, d)
    if B and B % n:
        return dict(rec, status="eliminated", method="eigen", B=B)
    q = kraus_search(E, d, n, k_max)
    if q is not None:
        return dict(rec, status="eliminated", method="kraus", witness_q=q)
    res = psi_preimage_intersect(E, d, n, prime_budget, detail=True)
    if res.empty:
        return dict(rec, status="eliminated", method="sieve", kraus_failed=True,
                    primes=len(res.primes_used), last_q=res.primes_used[-1])
    post = post_sieve(E, d, n, res.vectors)
    rec.update(kraus_failed=True, intersection=[list(b) for b, _ in post],
               hk=[r for _, r in post])
    if all(r != "survives" for _, r in post):
        return dict(rec, status="eliminated", method="post")
    return dict(rec, status="survivor", method="post")


def _triple_job(args):
    E, d, n, k_max, budget = args
    return process_triple(E, d, n, k_max, budget)


def _key(rec) -> Tuple[int, str, int]:
    return rec["d"], rec["label"], rec["n"]


def load_checkpoint(path: Union[str, Path]) -> Dict[Tuple[int, str, int], dict]:
    """Records keyed by (d, label, n); a torn or malformed line is an error."""
    path = Path(path)
    done: Dict[Tuple[int, str, int], dict] = {}
    if not path.exists():
        return done
    data = path.read_bytes()
    offset = 0
    for line in data.splitlines(keepends=True):
        if not line.endswith(b"\n"):
            raise CheckpointError(path, offset, "truncated final record")
        try:
            rec = json.loads(line)
            key = _key(rec)
            rec["status"]
        except (ValueError, KeyError, TypeError):
            raise CheckpointError(path, offset, "malformed record") from None
        done[key] = rec
        offset += len(line)
    return done


def _record_line(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"


def _detail(rec: dict) -> str:
    m = rec["method"]
    if m == "eigen":
        return f"B={rec['B']}"
    if m == "kraus":
        return f"q={rec['witness_q']}"
    if m == "sieve":
        return f"empty after {rec['primes']} primes (q<={rec['last_q']})"
    parts = [f"({','.join(map(str, b))}):{r}" for b, r in zip(rec["intersection"], rec["hk"])]
    return " ".join(parts)


@dataclass
class CampaignReport:
    records: List[dict]

    @property
    def survivors(self) -> List[Tuple[str, int, int]]:
        return [(r["label"], r["d"], r["n"]) for r in self.records if r["status"] == "survivor"]

    def counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for r in self.records:
            out[r["method"]] = out.get(r["method"], 0) + 1
        return dict(sorted(out.items()))

    def to_csv(self) -> str:
        lines = [",".join(REPORT_HEADER)]
        for r in self.records:
            lines.append(f"{r['d']},{r['label']},{r['n']},{r['status']},{r['method']},"
                         f"\"{_detail(r)}\"")
        return "\n".join(lines) + "\n"


def sieve_campaign(config: CampaignConfig, stop_after: Optional[int] = None) -> CampaignReport:
    """Run (or resume) the campaign; the report depends only on the triples.

    Finished triples found in the checkpoint are not recomputed.  New records
    are appended by this process alone, in triple order.  `stop_after` ends
    the run after that many new triples (used to exercise resumption).
    """
    triples = config.triples()
    done = load_checkpoint(config.checkpoint) if config.checkpoint else {}
    todo = [(E, d, n) for E, d, n in triples if (d, E.label, n) not in done]
    if stop_after is not None:
        todo = todo[:stop_after]
    jobs = [(E, d, n, config.k_max, config.prime_budget) for E, d, n in todo]
    fh = open(config.checkpoint, "a") if config.checkpoint else None
    try:
        if config.workers == 1 or len(jobs) < 2:
            results = map(_triple_job, jobs)
            pool = None
        else:
            from concurrent.futures import ProcessPoolExecutor
            pool = ProcessPoolExecutor(config.workers)
            results = pool.map(_triple_job, jobs, chunksize=8)
        for rec in results:
            done[_key(rec)] = rec
            if fh:
                fh.write(_record_line(rec))
                fh.flush()
        if pool:
            pool.shutdown()
    finally:
        if fh:
            fh.close()
    wanted = [(d, E.label, n) for E, d, n in triples]
    return CampaignReport([done[k] for k in wanted if k in done])
