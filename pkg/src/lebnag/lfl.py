"""Explicit bounds for the exponent n from linear forms in logarithms.

All quantities are closed intervals (mpmath's ``iv`` context, outward
rounding).  A derived n-bound is always the upper end of an interval, a
quantity that has to stay large (U in the Mignotte criterion) is always taken
at its lower end, so each check is conservative.

Quantities that depend on Y = log y are handled in one of two ways: affine
expressions a + b*Y are checked at Y0 together with the sign of the slope,
and bounded ratios are maximised over Y >= Y0 by subdividing t = 1/Y over
[0, 1/Y0].  Y0 comes from the lower bound for y at n = N(d).
"""

from __future__ import annotations

import contextlib
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from mpmath import iv, libmp, mpf

from .quadfield import QuadInt, descent_constants, epsilon_n

DEFAULT_PREC = 192
T_PIECES = 64

N_BOUND: Dict[int, int] = {7: 600_000_000, 15: 400_000_000, 55: 500_000_000,
                           231: 1_200_000_000}

UPSIES = Fraction(499, 1000)

# admissible (m1, C) for the two-logarithm lower bound
TWO_LOG_PAIRS: Tuple[Tuple[Fraction, Fraction], ...] = tuple(
    (Fraction(a), Fraction(b)) for a, b in [
        ("14", "28.161"), ("14.5", "27.812"), ("15", "27.486"), ("15.5", "27.182"),
        ("16", "26.896"), ("16.5", "26.627"), ("17", "26.374"), ("17.5", "26.136"),
        ("18", "25.911"), ("18.5", "25.697"), ("19", "25.495"), ("19.5", "25.303"),
        ("20", "25.120")])


class PrecisionError(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


class PreconditionFailed(ValueError):
    pass


class HypothesisError(ValueError):
    def __init__(self, condition: str, detail: str = ""):
        super().__init__(f"{condition}: {detail}" if detail else condition)
        self.condition = condition
        self.detail = detail


class RowFailure(RuntimeError):
    def __init__(self, d: int, row: int, reason: str):
        super().__init__(f"d={d}, row {row}: {reason}")
        self.d = d
        self.row = row
        self.reason = reason


# --- precision -----------------------------------------------------------

_active_prec: Optional[int] = None


@contextlib.contextmanager
def precision(bits: int):
    """Run everything inside at ``bits`` bits of working precision."""
    global _active_prec
    saved, saved_ctx = _active_prec, iv.prec
    _active_prec = bits
    iv.prec = bits
    try:
        yield
    finally:
        _active_prec = saved
        iv.prec = saved_ctx


def _at_precision(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        if _active_prec is not None:
            return fn(*args, **kwargs)
        with precision(DEFAULT_PREC):
            return fn(*args, **kwargs)
    return wrapper


# --- interval reals ------------------------------------------------------

Number = Union[int, Fraction, str, "IntervalReal"]


def _to_iv(x):
    if isinstance(x, IntervalReal):
        return x.iv
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, int):
        return iv.mpf(x)
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    if isinstance(x, str):
        return _to_iv(Fraction(x))
    if isinstance(x, float):
        return iv.mpf(x)
    if isinstance(x, tuple):
        lo, hi = x
        return iv.mpf([_to_iv(lo).a, _to_iv(hi).b])
    v = iv.mpf(x)
    return v


class IntervalReal:
    """Closed interval [lower, upper] of reals with outward-rounded arithmetic."""

    __slots__ = ("iv",)

    def __init__(self, value):
        self.iv = _to_iv(value)

    @property
    def lower(self) -> mpf:
        return self.iv.a

    @property
    def upper(self) -> mpf:
        return self.iv.b

    @property
    def lower_float(self) -> float:
        return libmp.to_float(self.iv._mpi_[0], rnd=libmp.round_floor)

    @property
    def upper_float(self) -> float:
        return libmp.to_float(self.iv._mpi_[1], rnd=libmp.round_ceiling)

    @property
    def mid(self) -> float:
        return (libmp.to_float(self.iv._mpi_[0]) + libmp.to_float(self.iv._mpi_[1])) / 2

    @property
    def width(self) -> float:
        return self.upper_float - self.lower_float

    def contains(self, x) -> bool:
        v = _to_iv(x)
        return self.iv.a <= v.a and v.b <= self.iv.b

    def below(self, x) -> bool:
        """Certainly < x."""
        return self.iv.b < _to_iv(x).a

    def above(self, x) -> bool:
        """Certainly > x."""
        return self.iv.a > _to_iv(x).b

    def floor(self) -> int:
        lo = int(libmp.to_int(self.iv._mpi_[0], libmp.round_floor))
        hi = int(libmp.to_int(self.iv._mpi_[1], libmp.round_floor))
        if lo != hi:
            raise PrecisionError(f"integer part of {self} is ambiguous")
        return lo

    def hull(self, other) -> "IntervalReal":
        o = _to_iv(other)
        return IntervalReal(iv.mpf([min(self.iv.a, o.a), max(self.iv.b, o.b)]))

    def __add__(self, o):
        return IntervalReal(self.iv + _to_iv(o))

    __radd__ = __add__

    def __sub__(self, o):
        return IntervalReal(self.iv - _to_iv(o))

    def __rsub__(self, o):
        return IntervalReal(_to_iv(o) - self.iv)

    def __mul__(self, o):
        return IntervalReal(self.iv * _to_iv(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        return IntervalReal(self.iv / _to_iv(o))

    def __rtruediv__(self, o):
        return IntervalReal(_to_iv(o) / self.iv)

    def __neg__(self):
        return IntervalReal(-self.iv)

    def __pow__(self, e):
        if isinstance(e, int):
            return IntervalReal(self.iv ** e)
        return iexp(ilog(self) * IntervalReal(e))

    def floor_upper(self) -> int:
        """floor of the upper end: the largest integer the interval allows."""
        return int(libmp.to_int(self.iv._mpi_[1], libmp.round_floor))

    def __float__(self):
        return self.mid

    def __repr__(self):
        return f"IntervalReal([{self.lower_float!r}, {self.upper_float!r}])"

    def __str__(self):
        return f"[{self.lower_float:.12g}, {self.upper_float:.12g}]"


def I(x) -> IntervalReal:
    return x if isinstance(x, IntervalReal) else IntervalReal(x)


def ilog(x) -> IntervalReal:
    v = _to_iv(x)
    if v.a <= 0:
        raise DomainError(f"log of an interval reaching {v.a}")
    return IntervalReal(iv.log(v))


def iexp(x) -> IntervalReal:
    return IntervalReal(iv.exp(_to_iv(x)))


def isqrt(x) -> IntervalReal:
    return IntervalReal(iv.sqrt(_to_iv(x)))


def iarccos(u) -> IntervalReal:
    v = _to_iv(u)
    return IntervalReal(iv.atan2(iv.sqrt(1 - v * v), v))


def ipi() -> IntervalReal:
    return IntervalReal(iv.pi)


def imax(*xs) -> IntervalReal:
    vs = [_to_iv(x) for x in xs]
    return IntervalReal(iv.mpf([max(v.a for v in vs), max(v.b for v in vs)]))


def _cbrt(x) -> IntervalReal:
    return I(x) ** Fraction(1, 3)


# --- heights and the small linear form ------------------------------------

def _min_poly(alpha) -> Tuple[int, List[int]]:
    """(degree, primitive integer coefficients, leading first)."""
    if isinstance(alpha, QuadInt) and alpha.b != 0:
        t, n = alpha.trace(), alpha.norm()
        den = t.denominator * n.denominator // math.gcd(t.denominator, n.denominator)
        co = [den, int(-t * den), int(n * den)]
        g = math.gcd(math.gcd(co[0], co[1]), co[2])
        return 2, [c // g for c in co]
    r = alpha.real if isinstance(alpha, QuadInt) else Fraction(alpha)
    return 1, [r.denominator, -r.numerator]


@_at_precision
def log_height(alpha) -> IntervalReal:
    """Absolute logarithmic height of a rational or quadratic number."""
    if (isinstance(alpha, QuadInt) and alpha.a == 0 and alpha.b == 0) or \
            (not isinstance(alpha, QuadInt) and Fraction(alpha) == 0):
        raise DomainError("height of zero")
    deg, co = _min_poly(alpha)
    if deg == 1:
        return ilog(max(abs(co[0]), abs(co[1])))
    a0, a1, a2 = co
    disc = a1 * a1 - 4 * a0 * a2
    total = ilog(abs(a0))
    if disc < 0:
        # complex conjugates of equal modulus sqrt(a2/a0)
        mod2 = Fraction(a2, a0)
        if mod2 > 1:
            total = total + ilog(mod2)
    else:
        sq = isqrt(disc)
        for sgn in (1, -1):
            root = (I(-a1) + sgn * sq) / (2 * a0)
            mag = imax(root, -root)
            if mag.below(1):
                continue
            if mag.above(1):
                total = total + ilog(mag)
            else:
                total = total + I(0).hull(ilog(_upper_point(mag)))
    return total / 2


@_at_precision
def y_lower_bound(n: int) -> IntervalReal:
    """4n - 4 sqrt(2n) + 2, a lower bound for even y once n >= 17."""
    if n < 17:
        raise DomainError(f"n={n} < 17")
    return 4 * I(n) - 4 * isqrt(2 * n) + 2


def _log_y0(N: int) -> IntervalReal:
    return ilog(y_lower_bound(N))


def _ass_holds(c: int, d: int, n: int, y: int) -> bool:
    rhs = 100 * c * c * d
    if n * y.bit_length() <= 1 << 16:
        return y ** n > rhs
    diff = n * ilog(y) - ilog(rhs)
    if diff.above(0):
        return True
    if diff.below(0):
        return False
    return y ** n > rhs


@_at_precision
def lambda_upper(c: int, d: int, n: int, y: int) -> IntervalReal:
    """Upper bound for log|Lambda| valid when y^n > 100 c^2 d."""
    if not _ass_holds(c, d, n, y):
        raise PreconditionFailed(f"y^n <= 100 c^2 d for c={c}, d={d}, n={n}, y={y}")
    return I("0.75") + ilog(c) + ilog(d) / 2 - I(n) * ilog(y) / 2


@_at_precision
def smart_constant() -> Tuple[IntervalReal, IntervalReal]:
    """(20 log(10/9), e^0.75); the first must lie below the second."""
    return 20 * ilog(Fraction(10, 9)), iexp(I("0.75"))


# --- q-adic step ----------------------------------------------------------

def _gamma_data(d: int):
    dc = descent_constants(d)
    return dc.gamma_q, dc.arccos_argument


@_at_precision
def log_gamma(d: int) -> IntervalReal:
    """|log gamma| = arccos(u) for gamma = u + v sqrt(-d) of norm one."""
    g, u = _gamma_data(d)
    if g.norm() != 1:
        raise ArithmeticError(f"gamma for d={d} does not have norm one")
    return iarccos(u)


@_at_precision
def height_gamma(d: int) -> IntervalReal:
    g, _ = _gamma_data(d)
    return log_height(g.inverse())


def _b2_exponent(d: int, n: int) -> int:
    return (2 + epsilon_n(n) * n) // 3 if d == 231 else 1


@_at_precision
def log_A2(d: int, q: int) -> IntervalReal:
    """max{h(1/gamma), log(q)/D} with D = 2."""
    return imax(height_gamma(d), ilog(q) / 2)


@_at_precision
def c_coeff(d: int, q: int) -> IntervalReal:
    """c(d, q) with nu_q(Lambda_1) < c(d, q) * 1.05^2 log^2 n log y."""
    if q not in (3, 5, 7, 11):
        raise DomainError(f"q={q} not in {{3,5,7,11}}")
    # 24 q (q-1)/((q-1) log^4 q) * D^4 with D = 2, times log A1 < (1/2) log y
    return 192 * I(q) * log_A2(d, q) / ilog(q) ** 4


@_at_precision
def C_total(d: int) -> IntervalReal:
    return 2 * sum((c_coeff(d, q) * ilog(q) for q in (3, 5, 7, 11)), I(0))


@_at_precision
def bula_padic(q: int, d: int, n: int, y: int) -> IntervalReal:
    """The two-logarithm q-adic bound for nu_q(Lambda_1), in full."""
    if n % 3 == 0:
        raise DomainError("n divisible by 3")
    D = 2
    logA1 = imax(ilog(Fraction(y, 2)) / 2, ilog(q) / D)
    logA2 = log_A2(d, q)
    b1, b2 = n, _b2_exponent(d, n)
    bprime = I(b1) / (D * logA2) + I(b2) / (D * logA1)
    lq = ilog(q)
    H = imax(ilog(bprime) + ilog(lq) + I("0.4"), 10 * lq / D, 5)
    return 24 * I(q) / lq ** 4 * D ** 4 * H * H * logA1 * logA2


@_at_precision
def bula_simplified(q: int, d: int, n: int, y: int) -> IntervalReal:
    return c_coeff(d, q) * I("1.05") ** 2 * ilog(n) ** 2 * ilog(y)


@_at_precision
def bprime_ratio(d: int, q: int, N: Optional[int] = None) -> IntervalReal:
    """Upper bound for b'/n over n > N(d): 1/(2 log A2) + (b2/n)/log(y/2)."""
    N = N or N_BOUND[d]
    b2_over_n = (I(Fraction(1, 3)) + Fraction(2, 3 * N)) if d == 231 else I(Fraction(1, N))
    return 1 / (2 * log_A2(d, q)) + b2_over_n / (_log_y0(N) - ilog(2))


@_at_precision
def bula_chain_ok(d: int, N: Optional[int] = None) -> bool:
    """log b' + log log q + 0.4 < 1.05 log n, and the other two entries of the
    max stay below 1.05 log n, for every n > N(d) and q in {3, 5, 7, 11}.

    The margin 0.05 log n - log(b'/n) - log log q - 0.4 grows with n, so
    n = N(d) is the worst case.
    """
    N = N or N_BOUND[d]
    ln = I("1.05") * ilog(N)
    for q in (3, 5, 7, 11):
        lhs = ilog(bprime_ratio(d, q, N) * N) + ilog(ilog(q)) + I("0.4")
        if not lhs.below(ln) or not imax(5 * ilog(q), 5).below(ln):
            return False
    return True


@_at_precision
def upsies_coefficient(d: int, N: Optional[int] = None) -> IntervalReal:
    """kappa with log|Lambda| < -kappa n log y for all n > N(d).

    kappa(n, Y) = 1/2 - C(d) 1.05^2 log^2 n / (2n) - 0.75/(n Y) increases in
    both n (for n > e^2) and Y, so its value at n = N(d), Y = Y0 is a lower bound.
    """
    N = N or N_BOUND[d]
    Y0 = _log_y0(N)
    C = C_total(d)
    return I(Fraction(1, 2)) - C * I("1.05") ** 2 * ilog(N) ** 2 / (2 * N) - I("0.75") / (N * Y0)


@_at_precision
def ass_fails_contradiction(d: int, N: Optional[int] = None) -> bool:
    """If y^n <= 100 c^2 d then n < 2 log 10 / log y + C(d) 1.05^2 log^2 n; false for n > N(d)."""
    N = N or N_BOUND[d]
    Y0 = _log_y0(N)
    rhs = 2 * ilog(10) / Y0 + C_total(d) * I("1.05") ** 2 * ilog(N) ** 2
    return rhs.below(N)


def _upsies_offset(d: int) -> IntervalReal:
    """log of the multiplier turning Lambda into the form the three-log bound sees."""
    return ilog(3) if d == 231 else I(0)


# --- Matveev --------------------------------------------------------------

@dataclass
class MatveevResult:
    C_n0: IntervalReal
    C0: IntervalReal
    four_C3_C0: IntervalReal
    closed_form: IntervalReal
    lambda_coeff: IntervalReal  # log|Lambda| > -lambda_coeff (2.63 + log n) log y
    n_coeff: IntervalReal       # n < n_coeff (log n + 2.63)
    n_bound: IntervalReal
    strict: bool


def _upper_point(x: IntervalReal) -> IntervalReal:
    return IntervalReal(iv.mpf(x.iv.b))


def _fixed_point_down(F, start, max_iter: int = 200) -> IntervalReal:
    """Upper bound for every n <= start with n <= F(n), F increasing.

    If n0 >= n and n <= F(n) then n <= F(n0); so each iterate stays an upper bound.
    """
    n = _upper_point(I(start))
    for _ in range(max_iter):
        nxt = _upper_point(F(n))
        if not nxt.below(n):
            return n
        if n.upper_float - nxt.upper_float <= 1e-15 * n.upper_float:
            return nxt
        n = nxt
    return n


@_at_precision
def matveev_chain(d: int = 7, strict: bool = False) -> MatveevResult:
    n0, chi, D = 3, 2, 2
    e = iexp(1)
    C_n0 = (I(16) / (math.factorial(n0) * chi) * e ** n0 * (2 * n0 + 1 + 2 * chi)
            * (n0 + 2) * I(4 * n0 + 4) ** (n0 + 1) * (e * n0 / 2) ** chi)
    C0 = ilog(iexp(I("4.4") * n0 + 7) * I(n0) ** Fraction(11, 2) * D * D * ilog(e * D))
    four = D * D * C_n0 * C0
    closed = (I(2 ** 18 * 3 * 5 * 11) * e ** 5
              * ilog(iexp(I("20.2")) * I(3) ** Fraction(11, 2) * 4 * ilog(2 * e)))
    # A1 = pi, A2 = 3 log 2, A3 = log y, B = n
    omega_over_Y = ipi() * 3 * ilog(2)
    lam = four * omega_over_Y
    w0_const = ilog(3 * e * ilog(2 * e))
    if not w0_const.below("2.63"):
        raise HypothesisError("W0 simplification", str(w0_const))
    kappa = upsies_coefficient(d)
    if not kappa.above(UPSIES):
        raise HypothesisError("upsies", f"kappa={kappa}")
    n_coeff = lam / I(UPSIES)
    if strict:
        F = lambda n: n_coeff * (ilog(n) + w0_const)
    else:
        F = lambda n: n_coeff * (ilog(n) + I("2.63"))
    nb = _fixed_point_down(F, I(10) ** 20)
    return MatveevResult(C_n0, C0, four, closed, lam, n_coeff, nb, strict)


# --- two logarithms -------------------------------------------------------

def _check_pair(m1, C) -> Tuple[Fraction, Fraction]:
    """An (m1, C) is usable if m1 is tabulated and C is at least the tabulated value."""
    m1, C = Fraction(str(m1)), Fraction(str(C))
    for tm, tc in TWO_LOG_PAIRS:
        if tm == m1:
            if C < tc:
                raise ValueError(f"C={C} below the tabulated {tc} for m1={m1}")
            return m1, C
    raise ValueError(f"m1={m1} is not tabulated")


@dataclass
class TwoLogParams:
    m1: Fraction
    C: Fraction
    c1: int
    c2: int
    logB1: IntervalReal
    logB2: IntervalReal
    D: int = 1

    def __post_init__(self):
        self.m1, self.C = _check_pair(self.m1, self.C)

    @property
    def bprime(self) -> IntervalReal:
        return I(self.c1) / (self.D * self.logB2) + I(self.c2) / (self.D * self.logB1)


@_at_precision
def laurent_two_log(p: TwoLogParams) -> IntervalReal:
    """Lower bound for log|c2 log b2 - c1 log b1|."""
    H = imax(ilog(p.bprime) + I("0.21"), I(p.m1) / p.D, 1)
    return -I(p.C) * p.D ** 4 * H * H * p.logB1 * p.logB2


def _shape(d: int):
    """(c1, k, w): c1 the coefficient of log beta, log B2 = k |r1| log y,
    log B1 = |r1| |log gamma| + w |t1| pi."""
    if d == 231:
        return 2, Fraction(3, 2), 1
    return 1, Fraction(1, 2), 2


def _two_log_n_bound(d: int, pair, r1: int, logB1: IntervalReal, Y0: IntervalReal,
                     n_cap) -> Tuple[IntervalReal, bool]:
    """Upper bound for n from the two-log bound on r1 * Lambda and log|Lambda| < off - 0.499 n Y.

    Returns (bound, H pinned at m1 already at n_cap).  The right side of
    n < (off + log r1)/(0.499 Y) + C k r1 log B1 H(n)^2 / 0.499 decreases in Y,
    so Y = Y0 is the worst case.
    """
    m1, C = _check_pair(*pair)
    c1, k, _ = _shape(d)
    off = _upsies_offset(d) + ilog(r1)
    logB2_over_Y = I(k) * r1

    def F(n):
        p = TwoLogParams(m1, C, c1, 1, logB1, logB2_over_Y * Y0)
        bprime = n / logB1 + I(c1) / (logB2_over_Y * Y0)
        H = imax(ilog(bprime) + I("0.21"), I(m1), 1)
        return off / (I(UPSIES) * Y0) + I(p.C) * H * H * logB1 * logB2_over_Y / I(UPSIES)

    bp_cap = I(n_cap) / logB1 + I(c1) / (logB2_over_Y * Y0)
    pinned = (ilog(bp_cap) + I("0.21")).below(m1)
    return _fixed_point_down(F, n_cap), pinned


def _logB1(d: int, r1: int, t1: int) -> IntervalReal:
    _, _, w = _shape(d)
    # the hypothesis log B1 >= max{h(beta1), |log beta1|, 1} with D = 1
    return imax(r1 * log_gamma(d) + w * t1 * ipi(), r1 * height_gamma(d), 1)


@dataclass
class NondegenerateResult:
    d: int
    case: str
    n_bound: IntervalReal
    j_bound_ok: bool


@_at_precision
def two_log_nondegenerate(d: int, case: str = "0", pair=("18", "25.911"),
                          n_cap=None, N: Optional[int] = None) -> NondegenerateResult:
    """j' = 0 or j' = +-n (j = 0, +-n for d in {7, 15, 55}): a two-log form.

    Also checks |j'| pi < pi n + 2 |log gamma| + 3 y^(-0.499 n) < pi n + pi,
    hence |j'| <= n.
    """
    if case not in ("0", "+n", "-n"):
        raise ValueError(f"case must be 0, +n or -n, not {case}")
    N = N or N_BOUND[d]
    Y0 = _log_y0(N)
    n_cap = n_cap or matveev_chain(d).n_bound
    logB1 = imax(log_gamma(d), height_gamma(d), 1)
    bound, _ = _two_log_n_bound(d, pair, 1, logB1, Y0, n_cap)
    mult = 2 if d == 231 else 1
    slack = mult * log_gamma(d) + 3 * iexp(-I(UPSIES) * N * Y0)
    return NondegenerateResult(d, case, bound, slack.below(ipi()))


# --- Mignotte ------------------------------------------------------------

@dataclass(frozen=True)
class MignotteParams:
    rho: Fraction
    L: int
    m: Fraction
    chi: Fraction

    @classmethod
    def of(cls, rho, L, m, chi) -> "MignotteParams":
        return cls(Fraction(str(rho)), int(L), Fraction(str(m)), Fraction(str(chi)))

    def __str__(self):
        return f"({float(self.rho):g}, {self.L}, {float(self.m):g}, {float(self.chi):g})"


@dataclass
class MignotteReport:
    d: int
    params: MignotteParams
    a1: IntervalReal
    a3: IntervalReal
    c: Tuple[IntervalReal, IntervalReal, IntervalReal]
    K1: IntervalReal
    K2: IntervalReal
    S: Tuple[int, int, int]
    Y0: IntervalReal
    g_max: IntervalReal
    log_b_max: IntervalReal
    needed_at_Y0: IntervalReal
    needed_slope: IntervalReal
    condition_ok: bool
    smosh_factor: IntervalReal
    n_bound: IntervalReal
    s0_bound: IntervalReal
    r1_max: int
    t1_max: int
    assumed: Tuple[str, ...] = ("conditions (i)-(v) hold by the choice of c1, c2, c3",)
    notes: List[str] = field(default_factory=list)


def _t_pieces(Y0: IntervalReal, pieces: int = T_PIECES):
    top = (1 / Y0).iv.b
    for i in range(pieces):
        yield IntervalReal(iv.mpf([top * i / pieces, top * (i + 1) / pieces]))


def _floored(x: IntervalReal, t: IntervalReal) -> IntervalReal:
    """t * [X] when t * X = x: anywhere in [x - t, x]."""
    return (x - t).hull(x)


@_at_precision
def mignotte_check(d: int, n_cap, params: MignotteParams,
                   N: Optional[int] = None) -> MignotteReport:
    N = N or N_BOUND[d]
    rho, L, m, chi = I(params.rho), params.L, I(params.m), I(params.chi)
    if params.rho < 2:
        raise HypothesisError("rho >= 2", str(params.rho))
    if L < 5:
        raise HypothesisError("L >= 5", str(L))
    pi = ipi()
    Y0 = _log_y0(N)
    lg, hg = log_gamma(d), height_gamma(d)
    # 2 h(alpha_2) from h(delta) <= log(y/2)/2: 3 log y for
    # tau' delta^3 gamma^eps (h(gamma) = 3/2 log 2), log(y/2) for tau delta
    w2 = 3 if d == 231 else 1
    b1 = 2 if d == 231 else 1
    a1 = rho * lg + 2 * hg
    a3 = rho * pi
    a2_0 = rho * pi - (0 if d == 231 else ilog(2))   # a2 = a2_0 + w2 Y
    mL = m * L
    c1 = imax(_cbrt(chi * mL) ** 2, (2 * mL / a1) ** Fraction(1, 2))
    c2 = imax(_cbrt(2) * _cbrt(mL) ** 2, (m / a1) ** Fraction(1, 2) * L)
    c3 = _cbrt(6 * m * m) * L
    cs = (c1, c2, c3)
    K1 = mL * a1 * a3 * a2_0
    K2 = mL * a1 * a3 * w2
    if not K1.above(10 ** 6):
        raise HypothesisError("K > 10^6", str(K1))
    S = tuple((ci * a1 * a3).floor() for ci in cs)
    Ssum = sum(S) + 1
    if max(S[0], S[1]) >= N:
        raise HypothesisError("C1/C2 excluded by n > N(d)", f"S1={S[0]}, S2={S[1]}")
    csum = c1 + c2 + c3
    notes: List[str] = []

    # sup/inf over Y >= Y0 of the bounded ratios, as functions of t = 1/Y
    def at(t):
        a2t = a2_0 * t + w2
        R1t = _floored(c1 * a3 * a2t, t)
        T1t = _floored(c1 * a1 * a2t, t)
        return a2t, R1t, T1t, S[0] * t, chi * isqrt((R1t + t) * (S[0] + 1) * (T1t + t))

    def neg_gap(t):
        _, R1t, T1t, S1t, chiV = at(t)
        return imax(R1t + S1t + t, S1t + T1t + t, R1t + T1t + t) - chiV

    m_gap_ok = all(neg_gap(t).below(0) for t in _t_pieces(Y0))

    # K = [P a2] with P = m L a1 a3; R <= csum a3 a2 + 1, T <= csum a1 a2 + 1.
    # K/R, K/T are then bounded below by Moebius functions of a2 increasing in
    # a2, and eta0/K, zeta0/K above by ones decreasing in a2: Y = Y0 is extreme.
    a2Y0 = a2_0 + w2 * Y0
    P = mL * a1 * a3
    K_low = P * a2Y0 - 1
    g_max = (I(Fraction(1, 4)) - I(L) / (12 * Ssum) * K_low / (csum * a3 * a2Y0 + 1)
             * K_low / (csum * a1 * a2Y0 + 1))
    eta_K = (csum * a3 * a2Y0 / 2 + I(Ssum - 1) * b1 / (2 * N)) / K_low
    zeta_K = (csum * a1 * a2Y0 / 2 + I(Ssum - 1) / 2) / K_low
    # Dividing through by R1 (resp. T1): with B = S1 + 1,
    #   (R1+1) B / (chi V - R1) <= B / (chi sqrt(B (T1+1)/(R1+1)) - 1)
    # and (T1+1)/(R1+1) >= (a1/a3) / (1 + 1/(c1 a3 a2)), smallest at Y = Y0;
    # symmetrically for T1.  Both need R1, T1 >= S1, checked at Y0.
    B = I(S[0] + 1)
    if not ((c1 * a3 * a2Y0 - 1).above(S[0]) and (c1 * a1 * a2Y0 - 1).above(S[0])):
        raise HypothesisError("R1, T1 >= S1", "not certified at Y0")
    ratio_TR = (a1 / a3) / (1 + 1 / (c1 * a3 * a2Y0))
    ratio_RT = (a3 / a1) / (1 + 1 / (c1 * a1 * a2Y0))
    x_r = (B / (chi * isqrt(B * ratio_TR) - 1)).floor_upper()
    x_t = (B / (chi * isqrt(B * ratio_RT) - 1)).floor_upper()
    s0 = x_t  # M - T1 = chi V - T1 once M = chi V
    if not m_gap_ok:
        raise HypothesisError("M = chi V", "could not certify chi V dominates")
    if not g_max.below(Fraction(1, 4)):
        notes.append("g not certified below 1/4")

    # b <= e^3 n^2 eta0 zeta0 / K^2 (factorial product bounded by 2 log K - 3)
    log_b = 3 + 2 * ilog(n_cap) + ilog(eta_K) + ilog(zeta_K)
    K0up = K1 + K2 * Y0
    mess_extra = (2 * ilog(2 * pi * (K0up - 1) / iexp(I("1.5"))) / (K0up - 2)
                  - (2 + 6 / pi ** 2 + ilog(K0up)) / (3 * (K0up - 1) * (K0up - 2)))
    if not mess_extra.above(0):
        raise HypothesisError("factorial bound", str(mess_extra))

    # needed, as f(Y) = f0 + f1 (Y - Y0) with f = U_low - RHS_up
    logr = ilog(rho)
    U0 = ((K0up - 1) * L / 2 + I(L) / 4 - 1 - 2 * K0up / (3 * L)) * logr
    U1 = (K2 * L / 2 - 2 * K2 / (3 * L)) * logr
    Rup0 = csum * a3 * a2Y0 + 1
    Tup0 = csum * a1 * a2Y0 + 1
    lin0 = a1 * Rup0 + a2Y0 * Ssum + a3 * Tup0
    lin1 = a1 * csum * a3 * w2 + w2 * Ssum + a3 * csum * a1 * w2
    rhs0 = (2 * (2 * ilog(K0up) + ilog(L)) + g_max * L * lin0 + (K0up - 1) * log_b
            - 2 * ilog(iexp(1) / 2))
    rhs1 = 4 * K2 / K0up + g_max * L * lin1 + K2 * log_b
    f0, f1 = U0 - rhs0, U1 - rhs1
    ok = f0.above(0) and not f1.below(0)

    # (smosh): |Lambda| L S e^(L S |Lambda| / (2 b2)) / (2 b2) > rho^(-K L)
    off = _upsies_offset(d)
    LS2 = I(L * Ssum) / 2
    lam_max = iexp(off - I(UPSIES) * N * Y0)
    factor = LS2 / N * iexp(LS2 * lam_max / N)
    num = off + ilog(factor) + L * logr * K1
    n_smosh = L * logr * K2 / I(UPSIES)
    if num.above(0):
        n_smosh = n_smosh + num / (I(UPSIES) * Y0)
    if s0 >= N:
        raise HypothesisError("rups2 excluded", f"|s0| bound {s0} not below N(d)")

    return MignotteReport(d, params, a1, a3, cs, K1, K2, S, Y0, g_max, log_b, f0, f1, ok,
                          factor, n_smosh, I(s0), x_r, x_t, notes=notes)


@dataclass
class ScanResult:
    d: int
    r1_max: int
    t1_max: int
    pair: Tuple[Fraction, Fraction]
    n_bound: IntervalReal
    worst_r1: int
    split_r1: Optional[int]   # least |r1| from which b' <= e^(m1 - 0.21) for every t1


@_at_precision
def degenerate_scan(d: int, n_cap, r1_max: int, t1_max: int, pair,
                    N: Optional[int] = None) -> ScanResult:
    """Max over 1 <= |r1| <= r1_max, |t1| <= t1_max of the two-log n-bound.

    log B1 may be any upper bound for the heights involved, so the value at
    |t1| = t1_max covers every smaller |t1| for the same r1.
    """
    N = N or N_BOUND[d]
    pair = _check_pair(*pair)
    Y0 = _log_y0(N)
    c1, k, _ = _shape(d)
    worst, worst_r1, split = I(0), 0, None
    for r1 in range(1, r1_max + 1):
        b, _ = _two_log_n_bound(d, pair, r1, _logB1(d, r1, t1_max), Y0, n_cap)
        if b.upper_float > worst.upper_float:
            worst, worst_r1 = b, r1
        bp0 = I(n_cap) / _logB1(d, r1, 0) + I(c1) / (I(k) * r1 * Y0)
        if split is None and (ilog(bp0) + I("0.21")).below(pair[0]):
            split = r1
    return ScanResult(d, r1_max, t1_max, pair, worst, worst_r1, split)


# --- the published parameter rows -----------------------------------------

ROWS: Dict[int, List[Tuple[Tuple[str, int, str, str], Tuple[str, str], int]]] = {
    7: [(("4.8", 205, "45", "2.96"), ("20", "25.120"), 1_270_000_000),
        (("5.1", 142, "40", "3.91"), ("20", "25.120"), 644_000_000),
        (("6.2", 100, "40", "3.00"), ("14", "28.161"), 600_000_000)],
    15: [(("5.8", 180, "36", "2.77"), ("20", "25.120"), 600_000_000),
         (("5.1", 140, "40", "3.00"), ("20", "25.120"), 400_000_000)],
    55: [(("5.7", 189, "33", "3.00"), ("20", "25.120"), 1_110_000_000),
         (("5.2", 144, "35", "3.41"), ("18", "25.911"), 522_000_000),
         (("6.2", 100, "40", "3.00"), ("14", "28.161"), 500_000_000)],
    231: [(("5.9", 206, "25", "2.89"), ("18", "25.911"), 2_600_000_000),
          (("5.8", 144, "27", "3.14"), ("18", "25.911"), 1_300_000_000),
          (("6.3", 125, "27", "3.28"), ("17", "26.38"), 1_200_000_000)],
}


@dataclass
class RowTrace:
    index: int
    params: MignotteParams
    pair: Tuple[Fraction, Fraction]
    n_cap: float
    mignotte: MignotteReport
    scan: ScanResult
    n_bound: IntervalReal
    published: int
    confirmed: bool


@dataclass
class Derivation:
    d: int
    N: int
    matveev: MatveevResult
    nondegenerate: IntervalReal
    rows: List[RowTrace]

    def table(self, fmt: str = "md") -> str:
        head = ["row", "rho", "L", "m", "chi", "(m1,C)", "n_cap", "K1", "K2", "S1,S2,S3",
                "caps |r1|,|t1|", "split", "smosh", "degenerate", "bound", "published", "ok"]
        lines = []
        for r in self.rows:
            mg, sc = r.mignotte, r.scan
            lines.append([str(r.index), f"{float(r.params.rho):g}", str(r.params.L),
                          f"{float(r.params.m):g}", f"{float(r.params.chi):g}",
                          f"({float(r.pair[0]):g},{float(r.pair[1]):g})", f"{r.n_cap:.4g}",
                          f"{mg.K1.mid:.3f}", f"{mg.K2.mid:.3f}",
                          ",".join(map(str, mg.S)), f"{mg.r1_max},{mg.t1_max}",
                          str(sc.split_r1), f"{mg.n_bound.upper_float:.4g}",
                          f"{sc.n_bound.upper_float:.4g}", f"{r.n_bound.upper_float:.4g}",
                          f"{r.published:.4g}", "yes" if r.confirmed else "NO"])
        if fmt == "csv":
            return "\n".join(",".join(f'"{c}"' if "," in c else c for c in row)
                             for row in [head] + lines) + "\n"
        out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        out += ["| " + " | ".join(row) + " |" for row in lines]
        return "\n".join(out) + "\n"


@_at_precision
def derive_row(d: int, index: int, n_cap, N: Optional[int] = None) -> RowTrace:
    N = N or N_BOUND[d]
    (rho, L, m, chi), pair, published = ROWS[d][index]
    params = MignotteParams.of(rho, L, m, chi)
    rep = mignotte_check(d, n_cap, params, N)
    if not rep.condition_ok:
        raise RowFailure(d, index, f"needed fails: f(Y0)={rep.needed_at_Y0}, slope={rep.needed_slope}")
    scan = degenerate_scan(d, n_cap, rep.r1_max, rep.t1_max, pair, N)
    bound = imax(rep.n_bound, scan.n_bound)
    return RowTrace(index, params, _check_pair(*pair), I(n_cap).upper_float, rep, scan,
                    bound, published, not bound.above(published))


@_at_precision
def derive_N(d: int) -> Tuple[int, Derivation]:
    """Run the parameter rows for d in order and return N(d) with the trace."""
    if d not in ROWS:
        raise DomainError(f"d={d} not in {sorted(ROWS)}")
    N = N_BOUND[d]
    for check, name in ((bula_chain_ok(d), "q-adic simplification"),
                        (ass_fails_contradiction(d), "y^n <= 100 c^2 d branch"),
                        (upsies_coefficient(d).above(UPSIES), "log|Lambda| < -0.499 n log y")):
        if not check:
            raise RowFailure(d, -1, f"{name} not certified")
    mv = matveev_chain(d)
    nd = max((two_log_nondegenerate(d, c, ROWS[d][0][1], mv.n_bound, N)
              for c in ("0", "+n", "-n")), key=lambda r: r.n_bound.upper_float)
    if not nd.j_bound_ok or not nd.n_bound.below(N):
        raise RowFailure(d, -1, f"j = 0, +-n case gives n < {nd.n_bound}")
    rows: List[RowTrace] = []
    n_cap = mv.n_bound
    for i in range(len(ROWS[d])):
        row = derive_row(d, i, n_cap, N)
        rows.append(row)
        if not row.confirmed:
            raise RowFailure(d, i, f"bound {row.n_bound} exceeds published {row.published}")
        # the computed bound is just as rigorous and a little sharper than the
        # rounded published one; d=55 row 1 needs that slack
        n_cap = I(row.n_bound.upper_float)
    if rows[-1].published != N:
        raise RowFailure(d, len(rows) - 1, "last row does not end at N(d)")
    return N, Derivation(d, N, mv, nd.n_bound, rows)
