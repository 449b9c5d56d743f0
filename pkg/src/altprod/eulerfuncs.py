"""Named limit functions evaluated along independent routes.

`D` is the alternating-ratio product limit; it can be computed from the
product itself, from the parameterized-Euler-constant series at z = -1, or
from a Barnes-G closed form. The routes share no machinery, which is the
point: agreement between them is the correctness argument. `E` is the
squared-ratio analogue. `gamma_param` / `gamma_ab` are the two
parameterized-Euler-constant families (one is a reindexing of the other),
and `phi_sderiv` evaluates the s-derivative of the alternating Lerch series
by a Hurwitz split with an Euler-summed check route.
"""

from dataclasses import dataclass
from fractions import Fraction

from . import numkernel as nk
from . import products
from . import zetagamma as zg
from .accel import ALTERNATING_TERMS, SequenceGen, euler_transform_sum
from .numkernel import DomainError, NonConvergenceError, Real, SpecError
from .zetagamma import HurwitzQuery, _as_fraction

PRODUCT = "PRODUCT"
GAMMA_SERIES = "GAMMA_SERIES"
BARNES_CLOSED = "BARNES_CLOSED"
D_ROUTES = (PRODUCT, GAMMA_SERIES, BARNES_CLOSED)


@dataclass(frozen=True)
class LerchDerivQuery:
    """Point (z, s, u) for the s-derivative of sum z^n/(n+u)^s; z is pinned
    to -1, where the Hurwitz split applies."""

    s: Fraction
    u: Fraction
    z: int = -1

    def __post_init__(self):
        object.__setattr__(self, "s", _as_fraction(self.s, "s"))
        object.__setattr__(self, "u", _as_fraction(self.u, "u"))
        if self.z != -1:
            raise DomainError("only z = -1 is supported")
        if self.u <= 0:
            raise DomainError("LerchDerivQuery needs u > 0")
        if self.s == 1:
            raise DomainError("s = 1 is the pole of the Hurwitz split")


def _check_target(target_digits: int):
    if target_digits < 1:
        raise SpecError("target_digits must be >= 1")


# ---------------------------------------------------------------------------
# parameterized-Euler-constant series


def _series_coeff(y: Fraction, wp: int) -> Real:
    """1/y - ln((y+1)/y) for rational y > 0, with the precision boosted to
    pay for the cancellation (the value is ~1/(2y^2) against terms ~1/y)."""
    mag = max(0, y.numerator.bit_length() - y.denominator.bit_length())
    w = wp + 2 * mag + 8
    return nk.sub(
        nk.to_real(Fraction(y.denominator, y.numerator), w),
        nk.ln_rational((y + 1) / y, w),
        w,
    )


def _alpha_coeff(alpha: Fraction, n: int, wp: int) -> Real:
    """alpha/n - ln(1 + alpha/n); cancellation leaves ~alpha^2/(2n^2)."""
    q = alpha / n
    # bits lost to cancellation: log2(|q| / (q^2/2)) = log2(2/|q|)
    lost = max(0, (abs(q) ** -1).numerator.bit_length() if q else 0)
    w = wp + min(lost, 4 * wp) + 8
    return nk.sub(nk.to_real(q, w), nk.ln_rational(1 + q, w), w)


def _euler_alternating_sum(coeff_at, n0: int, wp: int, stop_bits: int) -> Real:
    """sum of (-1)^(n-n0) coeff(n) for n >= n0 by the Euler transform."""
    gen = SequenceGen(
        term_at=lambda n, q: coeff_at(n, q), n0=n0, kind=ALTERNATING_TERMS
    )
    est = euler_transform_sum(gen, stop_bits, max_terms=2 * stop_bits + 160)
    return est.value.at(wp)


def _directed_check(coeff_at, n0: int, wp: int, total: Real, terms: int = 1024):
    """Free consistency check at z = -1: a paired direct partial sum must sit
    within the first omitted coefficient of the accelerated total."""
    w = wp // 2 + 32
    acc = nk.to_real(0, w)
    sign = 1
    n = n0
    for _ in range(terms):
        c = coeff_at(n, w)
        acc = nk.add(acc, c if sign > 0 else -c, w)
        sign = -sign
        n += 1
    bound = abs(coeff_at(n, w))
    gap = abs(nk.sub(total.at(w), acc, w))
    slack = nk.ldexp(nk.add(bound, abs(total.at(w)), w), -(w // 2))
    if gap > nk.add(bound, slack, w):
        raise NonConvergenceError(
            "accelerated series value disagrees with its direct partial sum"
        )


def _direct_power_sum(coeff_at, n0: int, z: Fraction, weight, wp: int,
                      stop_bits: int, what: str) -> Real:
    """sum of weight(n) * z^(n-n0) * coeff(n) for |z| < 1, with the geometric
    tail bound on the (decreasing) coefficients deciding when to stop."""
    zr = nk.to_real(z, wp)
    az = abs(zr)
    inv_gap = nk.div(nk.to_real(1, wp), nk.sub(nk.to_real(1, wp), az, wp), wp)
    tol = nk.ldexp(nk.to_real(1, wp), -stop_bits)
    acc = nk.to_real(0, wp)
    zp = nk.to_real(1, wp)  # z^(n-n0)
    n = n0
    while True:
        c = coeff_at(n, wp)
        w_n = weight(n)
        if w_n:
            acc = nk.add(acc, nk.mul(nk.mul(c, nk.to_real(w_n, wp), wp), zp, wp), wp)
        zp = nk.mul(zp, zr, wp)
        n += 1
        # tail: coeff(m) <= coeff(n) for m >= n, weights grow at most linearly
        w_bound = max(abs(weight(n)), 1) + n - n0
        tail = nk.mul(nk.mul(abs(c), nk.to_real(w_bound, wp), wp),
                      nk.mul(abs(zp), inv_gap, wp), wp)
        if tail < tol:
            return acc
        if n - n0 > 600_000:
            raise NonConvergenceError(f"{what}: series did not meet the tail bound")


def gamma_param(alpha, z, p: int, target_digits: int) -> Real:
    """sum_{n>=1} z^(n-1) (alpha/n - ln(1+alpha/n)) for alpha > -1, z in [-1, 1)."""
    _check_target(target_digits)
    af = _as_fraction(alpha, "alpha")
    zf = _as_fraction(z, "z")
    if af <= -1:
        raise DomainError("gamma_param needs alpha > -1")
    if not -1 <= zf < 1:
        raise DomainError("gamma_param needs z in [-1, 1)")
    if af == 0:
        return nk.to_real(0, p)
    stop_bits = nk.bits_for_digits(target_digits, guard=16)
    wp = max(p, stop_bits) + 32
    coeff = lambda n, w: _alpha_coeff(af, n, w)
    if zf == -1:
        total = _euler_alternating_sum(coeff, 1, wp, stop_bits)
        _directed_check(coeff, 1, wp, total)
        return total.at(p)
    value = _direct_power_sum(coeff, 1, zf, lambda n: 1, wp, stop_bits, "gamma_param")
    return value.at(p)


def gamma_param_deriv(alpha, z, p: int, target_digits: int) -> Real:
    """d/dz of gamma_param: sum_{n>=2} (n-1) z^(n-2) (alpha/n - ln(1+alpha/n))."""
    _check_target(target_digits)
    af = _as_fraction(alpha, "alpha")
    zf = _as_fraction(z, "z")
    if af <= -1:
        raise DomainError("gamma_param_deriv needs alpha > -1")
    if not -1 <= zf < 1:
        raise DomainError("gamma_param_deriv needs z in [-1, 1)")
    if af == 0:
        return nk.to_real(0, p)
    stop_bits = nk.bits_for_digits(target_digits, guard=16)
    wp = max(p, stop_bits) + 32

    def weighted(n, w):
        return nk.mul(_alpha_coeff(af, n, w), nk.to_real(n - 1, w), w)

    if zf == -1:
        total = _euler_alternating_sum(weighted, 2, wp, stop_bits)
        _directed_check(weighted, 2, wp, total, terms=2048)
        return total.at(p)
    value = _direct_power_sum(
        lambda n, w: _alpha_coeff(af, n, w), 2, zf, lambda n: n - 1, wp,
        stop_bits, "gamma_param_deriv",
    )
    return value.at(p)


def gamma_ab(a, b, z, p: int, target_digits: int) -> Real:
    """sum_{n>=0} (1/(an+b) - ln((an+b+1)/(an+b))) z^n for a, b > 0."""
    _check_target(target_digits)
    af = _as_fraction(a, "a")
    bf = _as_fraction(b, "b")
    zf = _as_fraction(z, "z")
    if af <= 0 or bf <= 0:
        raise DomainError("gamma_ab needs a > 0 and b > 0")
    if not -1 <= zf < 1:
        raise DomainError("gamma_ab needs z in [-1, 1)")
    stop_bits = nk.bits_for_digits(target_digits, guard=16)
    wp = max(p, stop_bits) + 32
    coeff = lambda n, w: _series_coeff(af * n + bf, w)
    if zf == -1:
        total = _euler_alternating_sum(coeff, 0, wp, stop_bits)
        _directed_check(coeff, 0, wp, total)
        return total.at(p)
    value = _direct_power_sum(coeff, 0, zf, lambda n: 1, wp, stop_bits, "gamma_ab")
    return value.at(p)


# ---------------------------------------------------------------------------
# D and E


def D(x, route: str, p: int, target_digits: int) -> Real:
    """Limit of the alternating consecutive-ratio product with parameter x.

    PRODUCT accelerates the product itself; GAMMA_SERIES uses
    exp(x + gamma'_x(-1) - gamma_x(-1)); BARNES_CLOSED composes the
    half-parameter closed form with the e^x trailing-factor bridge. The
    routes validate each other; none is trusted alone.
    """
    _check_target(target_digits)
    if route not in D_ROUTES:
        raise SpecError(f"unknown route {route!r}")
    xf = _as_fraction(x, "x")
    if xf <= -1:
        raise DomainError("D needs x > -1 so every factor stays positive")
    wp = max(p, nk.bits_for_digits(target_digits)) + 16
    if route == PRODUCT:
        est = products.limit(products.builtin("BD_D", xf), wp, target_digits)
        return est.value.at(p)
    if route == GAMMA_SERIES:
        g = gamma_param(xf, -1, wp, target_digits + 2)
        gd = gamma_param_deriv(xf, -1, wp, target_digits + 2)
        ln_d = nk.add(nk.to_real(xf, wp), nk.sub(gd, g, wp), wp)
        return nk.exp(ln_d, wp).at(p)
    # closed form at half parameter, bridged by the trailing factor's e^x
    h = (xf + 1) / 2
    ln_d = nk.to_real(xf - xf / 2, wp)
    ln_d = nk.add(ln_d, nk.sub(zg.ln_gamma(h, wp), zg.ln_gamma(Fraction(1, 2), wp), wp), wp)
    barnes = nk.sub(
        zg.ln_barnesG(h, wp),
        nk.add(zg.ln_barnesG(xf / 2 + 1, wp), zg.ln_barnesG(Fraction(1, 2), wp), wp),
        wp,
    )
    ln_d = nk.add(ln_d, nk.ldexp(barnes, 1), wp)
    return nk.exp(ln_d, wp).at(p)


def E(x, p: int, target_digits: int) -> Real:
    """Limit of the alternating squared-ratio product with parameter x;
    |x| < 1/2, extended to |x| = 1/2 by dropping the vanishing first factor."""
    _check_target(target_digits)
    xf = _as_fraction(x, "x")
    if abs(xf) > Fraction(1, 2):
        raise DomainError("E needs |x| <= 1/2 (the first factor vanishes or"
                          " turns negative beyond)")
    wp = max(p, nk.bits_for_digits(target_digits)) + 16
    est = products.limit(products.builtin("ADAMCHIK_E", xf), wp, target_digits)
    return est.value.at(p)


# ---------------------------------------------------------------------------
# Lerch s-derivative at z = -1


def _phi_sderiv_split(q: LerchDerivQuery, wp: int) -> Real:
    """-ln2 * 2^(-s) (zeta(s,u/2) - zeta(s,(u+1)/2))
    + 2^(-s) (zeta'(s,u/2) - zeta'(s,(u+1)/2))"""
    lo = HurwitzQuery(q.s, q.u / 2)
    hi = HurwitzQuery(q.s, (q.u + 1) / 2)
    za = nk.sub(zg.hurwitz_zeta(lo, wp), zg.hurwitz_zeta(hi, wp), wp)
    zd = nk.sub(zg.hurwitz_zeta_sderiv(lo, wp), zg.hurwitz_zeta_sderiv(hi, wp), wp)
    ln2 = nk.ln2(wp)
    two_pow = nk.exp(nk.mul(nk.to_real(-q.s, wp), ln2, wp), wp)
    return nk.mul(two_pow, nk.sub(zd, nk.mul(ln2, za, wp), wp), wp)


def _phi_sderiv_series(q: LerchDerivQuery, bits: int) -> Real:
    """Euler-summed -sum (-1)^n (n+u)^(-s) ln(n+u); for s <= 0 the series
    diverges termwise and the transform evaluates its Abel mean, which is
    the analytically continued value."""

    def term(n, w):
        t = nk.ln_rational(n + q.u, w)
        mag = nk.exp(nk.mul(nk.to_real(-q.s, w), t, w), w)
        return nk.mul(mag, t, w)

    gen = SequenceGen(term_at=term, n0=0, kind=ALTERNATING_TERMS)
    est = euler_transform_sum(gen, bits, max_terms=2 * bits + 240)
    return -est.value


def phi_sderiv(q: LerchDerivQuery, p: int, target_digits: int) -> Real:
    """s-derivative of the alternating Lerch series at (z=-1, s, u).

    The Hurwitz split is the released value. The Euler-summed series is an
    independent check; when it converges the two must agree, and when it
    does not, the split is re-run 64 bits higher and must reproduce itself.
    """
    _check_target(target_digits)
    wp = max(p, nk.bits_for_digits(target_digits)) + 16
    primary = _phi_sderiv_split(q, wp)
    check_digits = min(target_digits, 25)
    try:
        check = _phi_sderiv_series(q, nk.bits_for_digits(check_digits, guard=24))
    except NonConvergenceError:
        again = _phi_sderiv_split(q, wp + 64)
        if nk.agreement_digits(primary, again) < target_digits:
            raise NonConvergenceError(
                "Hurwitz split is not stable across precisions and the series"
                " check did not converge"
            )
        return primary.at(p)
    if not primary.is_zero() or not check.is_zero():
        if nk.agreement_digits(primary, check) < check_digits:
            raise NonConvergenceError(
                "Hurwitz split and Euler-summed series disagree"
            )
    return primary.at(p)
