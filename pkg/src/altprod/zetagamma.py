"""Special-function kernel.

Log-gamma, Hurwitz zeta and its s-derivative, Barnes log-G, and limits of
balanced gamma-ratio products.  Every routine takes an explicit precision
``p`` (bits) and returns a :class:`~altprod.numkernel.Real` whose error is
at most ``2**(GUARD_BITS - p) * max(1, |value|)``.

Algorithms: Stirling's asymptotic series with argument raising for lnGamma;
Euler-Maclaurin for zeta(s, a) and its s-derivative (one code path, the
derivative carries log-weighted terms and a differentiated Pochhammer
recurrence); a Taylor series at 1 for Barnes ln G with the argument reduced
into [1, 2) through the multiplicative recurrence.  All inputs are exact
rationals internally, so argument reduction costs no accuracy.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

from mpmath import bernfrac

from . import numkernel as nk
from .numkernel import (
    GUARD_BITS,
    DomainError,
    NonConvergenceError,
    Real,
    SpecError,
    to_real,
)

__all__ = [
    "HurwitzQuery",
    "GaussProductSpec",
    "bernoulli_even",
    "ln_gamma",
    "hurwitz_zeta",
    "hurwitz_zeta_sderiv",
    "zeta",
    "zeta_sderiv",
    "ln_barnesG",
    "gauss_product_limit",
]

RealIn = Union[int, Fraction, float, Real]


def _as_fraction(x: RealIn, what: str = "argument") -> Fraction:
    if isinstance(x, Real):
        return x.to_fraction()
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"{what} must be finite")
        return Fraction(x)
    raise TypeError(f"{what} must be int, Fraction, float, or Real")


# -- Bernoulli cache ---------------------------------------------------------

_bern_lock = threading.Lock()
_bern_cache: dict = {}


def bernoulli_even(n: int) -> Fraction:
    """Exact B_{2n} as a Fraction, cached per process."""
    if n < 0:
        raise DomainError("Bernoulli index must be >= 0")
    got = _bern_cache.get(n)
    if got is None:
        p, q = bernfrac(2 * n)
        got = Fraction(int(p), int(q))
        with _bern_lock:
            _bern_cache.setdefault(n, got)
    return got


# -- domain types ------------------------------------------------------------


@dataclass(frozen=True)
class HurwitzQuery:
    """Arguments (s, a) of the Hurwitz zeta family: a > 0, s != 1."""

    s: Fraction
    a: Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", _as_fraction(self.s, "s"))
        object.__setattr__(self, "a", _as_fraction(self.a, "a"))
        if self.a <= 0:
            raise DomainError("HurwitzQuery needs a > 0")
        if self.s == 1:
            raise DomainError("s = 1 is the pole of zeta(s, a)")


@dataclass(frozen=True)
class GaussProductSpec:
    """Shift lists for a balanced ratio product Prod_k Prod_i (k+a_i) / Prod_j (k+b_j).

    The limit exists iff the shift sums balance exactly; construction
    enforces that, and lengths need not match.
    """

    numer_shifts: Tuple[Fraction, ...]
    denom_shifts: Tuple[Fraction, ...]

    def __post_init__(self):
        ns = tuple(_as_fraction(v, "numer shift") for v in self.numer_shifts)
        ds = tuple(_as_fraction(v, "denom shift") for v in self.denom_shifts)
        object.__setattr__(self, "numer_shifts", ns)
        object.__setattr__(self, "denom_shifts", ds)
        if any(v <= 0 for v in ns + ds):
            raise DomainError("all shifts must be > 0")
        if sum(ns) != sum(ds):
            raise SpecError(
                "shift sums differ; the ratio product has no finite nonzero limit"
            )


# -- lnGamma -----------------------------------------------------------------


def _ln_gamma_fraction(x: Fraction, p: int) -> Real:
    if x <= 0:
        raise DomainError("ln_gamma needs x > 0")
    # integers go through the exact factorial
    if x.denominator == 1 and x <= 40000:
        return nk.ln_rational(math.factorial(int(x) - 1), p)

    wp = p + 32
    xf = float(x) if x < 10**300 else 1e300
    # raise the argument until Stirling's tail can reach 2^-wp-8
    thresh = 0.115 * (wp + 16) + 2.0
    m = 0 if xf >= thresh else int(math.ceil(thresh - xf))
    # cancellation between lnGamma(x+m) and the raising product
    if m:
        wp += max(0, int(m * math.log2(m + xf + 2))).bit_length() + 8
    t = x + m

    lnt = nk.ln_rational(t, wp)
    tr = to_real(t, wp)
    # (t - 1/2) ln t - t + ln(2 pi)/2
    acc = nk.sub(nk.mul(to_real(t - Fraction(1, 2), wp), lnt, wp), tr, wp)
    ln2pi = nk.add(nk.ln2(wp), nk.ln(nk.pi_ref(wp), wp), wp)
    acc = nk.add(acc, nk.ldexp(ln2pi, -1), wp)

    # Bernoulli tail: sum B_{2n} / (2n (2n-1) t^{2n-1})
    inv = nk.div(to_real(1, wp), tr, wp)
    inv2 = nk.mul(inv, inv, wp)
    pw = inv
    tol = nk.ldexp(to_real(1, wp), -wp - 4)
    prev = None
    n = 1
    while True:
        c = bernoulli_even(n) / ((2 * n) * (2 * n - 1))
        term = nk.mul(to_real(c, wp), pw, wp)
        acc = nk.add(acc, term, wp)
        mag = abs(term)
        if mag < tol:
            break
        if prev is not None and mag >= prev:
            raise NonConvergenceError(
                f"Stirling tail stalled at n={n} for x={x}", best=acc
            )
        prev = mag
        pw = nk.mul(pw, inv2, wp)
        n += 1
        if n > wp:
            raise NonConvergenceError(f"Stirling tail exceeded {wp} terms", best=acc)

    if m:
        prod = Fraction(1)
        for k in range(m):
            prod *= x + k
        acc = nk.sub(acc, nk.ln_rational(prod, wp), wp)
    return acc.at(p)


def ln_gamma(x: RealIn, p: int) -> Real:
    """ln Gamma(x) for x > 0."""
    return _ln_gamma_fraction(_as_fraction(x, "x"), p)


# -- Euler-Maclaurin zeta family ----------------------------------------------


def _em_zeta(s: Fraction, a: Fraction, p: int, derivative: bool) -> Real:
    """Shared Euler-Maclaurin evaluator for zeta(s,a) and d/ds zeta(s,a)."""
    if s == 1:
        raise DomainError("s = 1 is the pole")
    if a <= 0:
        raise DomainError("a must be > 0")

    wp = p + 32
    sf = float(s)
    # negative s makes the head grow like (N+a)^|s|; buy those bits back
    N = max(10, int(math.ceil(0.35 * wp)), int(math.ceil(0.7 * abs(sf))))
    if sf < 0:
        wp += int(abs(sf) * math.log2(N + float(a) + 1)) + 16
        N = max(N, int(math.ceil(0.35 * wp)))

    s_int = int(s) if s.denominator == 1 else None

    for attempt in range(6):
        try:
            return _em_zeta_once(s, a, wp, N, s_int, derivative).at(p)
        except NonConvergenceError:
            N *= 2
            wp += 16
    raise NonConvergenceError(f"Euler-Maclaurin failed to settle for s={s}, a={a}")


def _em_zeta_once(
    s: Fraction, a: Fraction, wp: int, N: int, s_int, derivative: bool
) -> Real:
    sr = to_real(s, wp)
    one = to_real(1, wp)

    def power_neg_s(base: Fraction) -> Real:
        # base^(-s)
        if s_int is not None:
            return nk.pow_int(to_real(base, wp), -s_int, wp)
        return nk.powr(to_real(base, wp), -sr, wp)

    # head: sum_{n<N} (n+a)^{-s}, log-weighted when differentiating
    head = to_real(0, wp)
    for n in range(N):
        base = n + a
        t = power_neg_s(base)
        if derivative:
            t = nk.mul(nk.sub(to_real(0, wp), nk.ln_rational(base, wp), wp), t, wp)
        head = nk.add(head, t, wp)

    Na = N + a
    lnNa = nk.ln_rational(Na, wp)
    pm = power_neg_s(Na)  # (N+a)^{-s}
    s1 = nk.sub(sr, one, wp)  # s - 1

    # (N+a)^{1-s}/(s-1) and (N+a)^{-s}/2, with their s-derivatives
    p1ms = nk.mul(pm, to_real(Na, wp), wp)  # (N+a)^{1-s}
    if not derivative:
        acc = nk.add(head, nk.div(p1ms, s1, wp), wp)
        acc = nk.add(acc, nk.ldexp(pm, -1), wp)
    else:
        # d/ds [(N+a)^{1-s}/(s-1)] = -(N+a)^{1-s} ln(N+a)/(s-1) - (N+a)^{1-s}/(s-1)^2
        d1 = nk.div(nk.mul(p1ms, lnNa, wp), s1, wp)
        d2 = nk.div(p1ms, nk.mul(s1, s1, wp), wp)
        acc = nk.sub(nk.sub(head, d1, wp), d2, wp)
        # d/ds [(N+a)^{-s}/2] = -ln(N+a) (N+a)^{-s} / 2
        acc = nk.sub(acc, nk.ldexp(nk.mul(lnNa, pm, wp), -1), wp)

    # Bernoulli tail: terms B_{2m}/(2m)! * P_m(s) * (N+a)^{-s-2m+1}
    # P_m = s(s+1)...(s+2m-2); D_m = dP_m/ds
    P = Fraction(s)
    D = Fraction(1)
    fact = 2  # (2m)! for m=1
    pw = nk.mul(pm, nk.div(one, to_real(Na, wp), wp), wp)  # (N+a)^{-s-1}
    inv2 = nk.pow_int(to_real(Na, wp), -2, wp)
    tol = nk.ldexp(one, -wp - 4)
    prev = None
    m = 1
    while True:
        b = bernoulli_even(m)
        coef = b / fact
        if not derivative:
            term = nk.mul(to_real(coef * P, wp), pw, wp)
        else:
            # d/ds [coef * P * (N+a)^{-s-2m+1}]
            #   = coef * (D - P ln(N+a)) * (N+a)^{-s-2m+1}
            lead = nk.sub(to_real(D, wp), nk.mul(to_real(P, wp), lnNa, wp), wp)
            term = nk.mul(nk.mul(to_real(coef, wp), lead, wp), pw, wp)
        acc = nk.add(acc, term, wp)
        mag = abs(term)
        if mag < tol:
            break
        if prev is not None and mag >= prev:
            raise NonConvergenceError(f"EM tail stalled at m={m}")
        prev = mag
        # advance P, D, (2m)!, power
        D = D * (s + 2 * m - 1) * (s + 2 * m) + P * (2 * s + 4 * m - 1)
        P = P * (s + 2 * m - 1) * (s + 2 * m)
        fact *= (2 * m + 1) * (2 * m + 2)
        pw = nk.mul(pw, inv2, wp)
        m += 1
        if m > wp:
            raise NonConvergenceError("EM tail exceeded term cap")
    return acc


def hurwitz_zeta(q: HurwitzQuery, p: int) -> Real:
    """zeta(s, a) = sum_{n>=0} (n+a)^{-s}, continued to all real s != 1."""
    return _em_zeta(q.s, q.a, p, derivative=False)


def hurwitz_zeta_sderiv(q: HurwitzQuery, p: int) -> Real:
    """d/ds zeta(s, a)."""
    return _em_zeta(q.s, q.a, p, derivative=True)


def zeta(s: RealIn, p: int) -> Real:
    """Riemann zeta(s), s != 1."""
    return _em_zeta(_as_fraction(s, "s"), Fraction(1), p, derivative=False)


def zeta_sderiv(s: RealIn, p: int) -> Real:
    """Riemann zeta'(s), s != 1."""
    return _em_zeta(_as_fraction(s, "s"), Fraction(1), p, derivative=True)


# -- Barnes G ------------------------------------------------------------------

_zm1_lock = threading.Lock()
_zm1_cache: dict = {}


def _zeta_minus1_int(j: int, wp: int) -> Real:
    """zeta(j) - 1 for integer j >= 2, cached at 64-bit precision buckets."""
    bucket = ((wp + 63) // 64) * 64
    key = (j, bucket)
    got = _zm1_cache.get(key)
    if got is not None:
        return got
    if j <= 40:
        val = nk.sub(zeta(j, bucket + 8), to_real(1, bucket + 8), bucket + 8)
    else:
        # direct tail sum_{n>=2} n^{-j}; n_max from n^{-j} <= 2^{-bucket-8}
        n_max = max(2, int(math.ceil(2 ** ((bucket + 8.0) / j))) + 1)
        val = to_real(0, bucket + 8)
        for n in range(2, n_max + 1):
            val = nk.add(val, nk.pow_int(to_real(n, bucket + 8), -j, bucket + 8), bucket + 8)
    with _zm1_lock:
        _zm1_cache.setdefault(key, val)
    return val


def _ln_barnes_taylor(z: Fraction, wp: int) -> Real:
    """ln G(1+z) for 0 <= z < 1.

    The zeta coefficients are peeled down to (zeta(j)-1), whose tail closes
    to ln(1+z); what remains converges at ratio z/2 even as z -> 1.
    """
    if z == 0:
        return to_real(0, wp)
    from .constants import constant  # deferred: constants needs this module too

    zr = to_real(z, wp)
    ln2pi = nk.add(nk.ln2(wp), nk.ln(nk.pi_ref(wp), wp), wp)
    gam = constant("EULER_GAMMA", wp)

    # (z/2)ln(2pi) - z(z+1)/2 - gamma z^2/2 + ln(1+z) - z + z^2/2
    z2 = nk.mul(zr, zr, wp)
    acc = nk.mul(nk.ldexp(zr, -1), ln2pi, wp)
    acc = nk.sub(acc, nk.ldexp(nk.add(z2, zr, wp), -1), wp)
    acc = nk.sub(acc, nk.ldexp(nk.mul(gam, z2, wp), -1), wp)
    acc = nk.add(acc, nk.ln_rational(1 + z, wp), wp)
    acc = nk.sub(acc, zr, wp)
    acc = nk.add(acc, nk.ldexp(z2, -1), wp)

    # sum_{j>=3} (-1)^{j+1} (zeta(j-1)-1) z^j / j
    tol = nk.ldexp(to_real(1, wp), -wp - 4)
    pw = nk.mul(z2, zr, wp)  # z^3
    j = 3
    while True:
        c = _zeta_minus1_int(j - 1, wp)
        term = nk.div(nk.mul(c, pw, wp), to_real(j, wp), wp)
        if j % 2 == 0:
            term = -term
        acc = nk.add(acc, term, wp)
        # bound the whole remaining tail by a geometric series at ratio z/2
        if abs(term) < tol:
            break
        pw = nk.mul(pw, zr, wp)
        j += 1
        if j > 64 * wp:
            raise NonConvergenceError("Barnes Taylor series exceeded term cap")
    return acc


def ln_barnesG(x: RealIn, p: int) -> Real:
    """ln G(x) for x > 0, G the double-gamma function with G(1) = 1."""
    xq = _as_fraction(x, "x")
    if xq <= 0:
        raise DomainError("ln_barnesG needs x > 0")
    wp = p + 48
    # reduce into [1, 2): G(z+1) = G(z) Gamma(z)
    shift_logs = to_real(0, wp)
    t = xq
    if t < 1:
        # ln G(x) = ln G(x+1) - lnGamma(x)
        shift_logs = nk.sub(shift_logs, _ln_gamma_fraction(t, wp), wp)
        t = t + 1
    else:
        while t >= 2:
            t -= 1
            shift_logs = nk.add(shift_logs, _ln_gamma_fraction(t, wp), wp)
    val = nk.add(_ln_barnes_taylor(t - 1, wp), shift_logs, wp)
    return val.at(p)


# -- balanced gamma-ratio limits -------------------------------------------------


def gauss_product_limit(spec: GaussProductSpec, p: int) -> Real:
    """Limit of Prod_{k>=0} Prod_i (k+a_i) / Prod_j (k+b_j) = Prod Gamma(b) / Prod Gamma(a)."""
    if sum(spec.numer_shifts) != sum(spec.denom_shifts):
        raise SpecError("shift sums differ")
    wp = p + 24 + 4 * (len(spec.numer_shifts) + len(spec.denom_shifts))
    acc = to_real(0, wp)
    for b in spec.denom_shifts:
        acc = nk.add(acc, _ln_gamma_fraction(b, wp), wp)
    for a in spec.numer_shifts:
        acc = nk.sub(acc, _ln_gamma_fraction(a, wp), wp)
    return nk.exp(acc, wp).at(p)
