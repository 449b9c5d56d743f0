"""Arbitrary-precision numeric substrate.

Everything downstream computes with :class:`Real` values: immutable
arbitrary-precision binary floats tagged with the precision they were
produced at.  Operations are pure functions of (operands, precision) built
on ``mpmath.libmp``, whose routines take explicit precision arguments and
share no global state, so every function here is safe to call from any
number of threads.

The module also fixes the two verification conventions used everywhere
else: the ``agreement_digits`` metric (floor of -log10 of the relative
difference) and truncated decimal rendering (the last digit is never
rounded up, so a printed prefix is always a true prefix of the value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from mpmath import libmp

__all__ = [
    "GUARD_BITS",
    "MAX_AGREEMENT",
    "DomainError",
    "NonConvergenceError",
    "SpecError",
    "OracleRangeError",
    "Real",
    "PrecisionPolicy",
    "to_real",
    "ln_rational",
    "agreement_digits",
    "truncated_decimal",
    "bits_for_digits",
    "digits_for_bits",
]

# Rounding mode for every kernel operation: round-to-nearest.
_RND = "n"

# Fixed guard allowance g of the accuracy contract: every elementary
# operation at precision p has relative error <= 2**(g - p).
GUARD_BITS = 8

# Sentinel returned by agreement_digits for identical values.
MAX_AGREEMENT = 10**9

Rationalish = Union[int, Fraction]


class DomainError(ValueError):
    """Argument outside a function's real domain (x <= 0 for ln, ...)."""


class SpecError(ValueError):
    """A structural precondition on an input object is violated (malformed
    product record, bad registry entry, out-of-contract argument shape)."""


class OracleRangeError(ValueError):
    """Exact-arithmetic oracle asked for an impractically large partial."""


class NonConvergenceError(ArithmeticError):
    """An iteration hit its term cap before stabilizing.

    Carries the best estimate produced so far in ``best`` (may be None).
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


def bits_for_digits(digits: int, guard: int = 64) -> int:
    """Working precision in bits for a decimal-digit target: ceil(d*log2(10)) + guard."""
    return int(math.ceil(digits * math.log2(10))) + guard


def digits_for_bits(bits: int) -> int:
    """Decimal digits reliably carried by a p-bit value."""
    return int(math.floor(bits * math.log10(2)))


@dataclass(frozen=True)
class PrecisionPolicy:
    """Precision bookkeeping for a verification run.

    working_bits must dominate the decimal target: the constructor enforces
    working_bits >= ceil(target_digits * log2(10)) + guard_bits.
    """

    working_bits: int
    guard_bits: int
    target_digits: int

    def __post_init__(self):
        need = int(math.ceil(self.target_digits * math.log2(10))) + self.guard_bits
        if self.working_bits < need:
            raise SpecError(
                f"working_bits={self.working_bits} below "
                f"ceil({self.target_digits}*log2(10))+{self.guard_bits}={need}"
            )

    @classmethod
    def for_digits(cls, target_digits: int, guard_bits: int = 64) -> "PrecisionPolicy":
        return cls(
            working_bits=int(math.ceil(target_digits * math.log2(10))) + guard_bits,
            guard_bits=guard_bits,
            target_digits=target_digits,
        )


class Real:
    """Immutable arbitrary-precision float: raw mpf tuple + precision tag.

    Arithmetic operators run at the larger operand precision; mixing with
    int/Fraction converts the scalar exactly first.  Use the module-level
    functions when an explicit result precision is wanted.
    """

    __slots__ = ("_raw", "_bits")

    def __init__(self, raw, bits: int):
        if bits < 2:
            raise SpecError("precision must be >= 2 bits")
        object.__setattr__(self, "_raw", raw)
        object.__setattr__(self, "_bits", int(bits))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Real is immutable")

    @property
    def raw(self):
        return self._raw

    @property
    def precision_bits(self) -> int:
        return self._bits

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_rational(q: Rationalish, bits: int) -> "Real":
        if isinstance(q, int):
            return Real(libmp.from_int(q, bits, _RND), bits)
        q = Fraction(q)
        return Real(libmp.from_rational(q.numerator, q.denominator, bits, _RND), bits)

    @staticmethod
    def zero(bits: int) -> "Real":
        return Real(libmp.fzero, bits)

    # -- exact views ---------------------------------------------------

    def to_fraction(self) -> Fraction:
        """Exact rational value (every finite binary float is dyadic)."""
        sign, man, exp, _ = self._raw
        if man == 0:
            if exp != 0:  # inf/nan encode with man == 0, exp != 0
                raise DomainError("non-finite value has no rational form")
            return Fraction(0)
        v = Fraction(int(man), 1) * Fraction(2) ** exp
        return -v if sign else v

    def is_zero(self) -> bool:
        return self._raw == libmp.fzero

    def sign(self) -> int:
        return libmp.mpf_sign(self._raw)

    def at(self, bits: int) -> "Real":
        """The same value re-rounded to ``bits`` bits."""
        return Real(libmp.mpf_pos(self._raw, bits, _RND), bits)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Real":
        if isinstance(other, Real):
            return other
        if isinstance(other, (int, Fraction)):
            return Real.from_rational(other, self._bits)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_add(self._raw, o._raw, p, _RND), p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_sub(self._raw, o._raw, p, _RND), p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_sub(o._raw, self._raw, p, _RND), p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_mul(self._raw, o._raw, p, _RND), p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_div(self._raw, o._raw, p, _RND), p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = max(self._bits, o._bits)
        return Real(libmp.mpf_div(o._raw, self._raw, p, _RND), p)

    def __neg__(self):
        return Real(libmp.mpf_neg(self._raw), self._bits)

    def __abs__(self):
        return Real(libmp.mpf_abs(self._raw), self._bits)

    def __pow__(self, other):
        if isinstance(other, int):
            return Real(libmp.mpf_pow_int(self._raw, other, self._bits, _RND), self._bits)
        return NotImplemented

    # -- comparisons (exact on the raw values) --------------------------

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError("cannot compare Real with this type")
        return libmp.mpf_cmp(self._raw, o._raw)

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self._raw)

    # -- display ---------------------------------------------------------

    def __repr__(self):
        return f"Real({libmp.to_str(self._raw, digits_for_bits(self._bits))}, bits={self._bits})"

    def __float__(self):
        return libmp.to_float(self._raw)


# -- module-level operations with explicit result precision ---------------


def to_real(q: Rationalish, p: int) -> Real:
    """``q`` correctly rounded to ``p`` bits."""
    if p < 2:
        raise SpecError("precision must be >= 2 bits")
    return Real.from_rational(q, p)


def add(a: Real, b: Real, p: int) -> Real:
    return Real(libmp.mpf_add(a.raw, b.raw, p, _RND), p)


def sub(a: Real, b: Real, p: int) -> Real:
    return Real(libmp.mpf_sub(a.raw, b.raw, p, _RND), p)


def mul(a: Real, b: Real, p: int) -> Real:
    return Real(libmp.mpf_mul(a.raw, b.raw, p, _RND), p)


def div(a: Real, b: Real, p: int) -> Real:
    return Real(libmp.mpf_div(a.raw, b.raw, p, _RND), p)


def sqrt(a: Real, p: int) -> Real:
    if a.sign() < 0:
        raise DomainError("sqrt of a negative value")
    return Real(libmp.mpf_sqrt(a.raw, p, _RND), p)


def exp(a: Real, p: int) -> Real:
    return Real(libmp.mpf_exp(a.raw, p, _RND), p)


def ln(a: Real, p: int) -> Real:
    if a.sign() <= 0:
        raise DomainError("log of a non-positive value")
    return Real(libmp.mpf_log(a.raw, p, _RND), p)


def pow_int(a: Real, n: int, p: int) -> Real:
    return Real(libmp.mpf_pow_int(a.raw, n, p, _RND), p)


def powr(a: Real, b: Real, p: int) -> Real:
    """a**b for a > 0 (general real exponent)."""
    if a.sign() <= 0:
        raise DomainError("powr needs a positive base")
    return Real(libmp.mpf_pow(a.raw, b.raw, p, _RND), p)


def ln2(p: int) -> Real:
    return Real(libmp.mpf_ln2(p, _RND), p)


def pi_ref(p: int) -> Real:
    """Library-internal pi, used by the kernel only for scaling decisions.

    The released PI constant lives in :mod:`altprod.constants` with two
    independent routes; this helper exists so low-level code never imports
    that module.
    """
    return Real(libmp.mpf_pi(p, _RND), p)


def atan_real(a: Real, p: int) -> Real:
    return Real(libmp.mpf_atan(a.raw, p, _RND), p)


def ldexp(a: Real, k: int) -> Real:
    """a * 2**k, exact."""
    return Real(libmp.mpf_shift(a.raw, k), a.precision_bits)


def _log2_abs_fraction(q: Fraction) -> float:
    """Float estimate of log2 |q| that survives huge numerators."""
    num, den = abs(q.numerator), q.denominator
    if num == 0:
        return float("-inf")

    def _lg(n: int) -> float:
        b = n.bit_length()
        if b <= 900:
            return math.log2(n)
        shift = b - 64
        return math.log2(n >> shift) + shift

    return _lg(num) - _lg(den)


def ln_rational(q: Rationalish, p: int) -> Real:
    """ln(q) for q > 0 with relative error <= 2**(GUARD_BITS - p).

    Near q = 1 the log is tiny while the argument rounding error is not, so
    the working precision is boosted by the estimated cancellation before
    taking the log.
    """
    q = Fraction(q) if not isinstance(q, int) else Fraction(q)
    if q <= 0:
        raise DomainError("ln_rational needs q > 0")
    if q == 1:
        return Real.zero(p)
    lg2q = _log2_abs_fraction(q)  # = log2(q), q > 0
    # |ln q| ~ |lg2q| * ln 2; cancellation bits when q is near 1:
    if lg2q != 0.0:
        cancel = max(0, int(-math.log2(min(1.0, abs(lg2q)))) + 2)
    else:  # q == 1 handled above; extremely close to 1
        # ln q ~ (q - 1); estimate its size from the fraction directly
        d = q - 1
        sz = _log2_abs_fraction(d) if d != 0 else -p
        cancel = max(0, int(-sz) + 2)
    wp = p + GUARD_BITS + 8 + cancel
    x = libmp.from_rational(q.numerator, q.denominator, wp, _RND)
    return Real(libmp.mpf_log(x, wp, _RND), wp).at(p)


def agreement_digits(a: Real, b: Real) -> int:
    """floor(-log10(|a-b| / max(|a|,|b|))), or MAX_AGREEMENT when a = b.

    Symmetric; returns MAX_AGREEMENT when both are zero.  Can be negative
    when the values differ in order of magnitude.
    """
    if a.raw == b.raw:
        return MAX_AGREEMENT
    p = max(a.precision_bits, b.precision_bits) + 16
    diff = abs(sub(a, b, p))
    if diff.is_zero():
        return MAX_AGREEMENT
    denom = abs(a) if abs(a) >= abs(b) else abs(b)
    if denom.is_zero():
        return MAX_AGREEMENT
    rel = div(diff, denom, 53)
    # rel > 0 here; log10 via exact exponent arithmetic on the raw tuple
    lg2 = _log2_abs_fraction(rel.to_fraction())
    val = -lg2 * math.log10(2.0)
    d = math.floor(val)
    # float slop near integer boundaries: recheck exactly against 10**d
    d = int(d)
    for cand in (d + 1, d, d - 1):
        # cand is the answer iff 10**-(cand+1) < rel <= 10**-cand
        if cand >= 0:
            hi_ok = rel.to_fraction() <= Fraction(1, 10**cand)
            lo_ok = rel.to_fraction() > Fraction(1, 10 ** (cand + 1))
        else:
            hi_ok = rel.to_fraction() <= Fraction(10 ** (-cand), 1)
            lo_ok = rel.to_fraction() > Fraction(10 ** (-cand - 1), 1) if cand + 1 <= 0 else False
        if hi_ok and lo_ok:
            return cand
    return d


def truncated_decimal(x: Real, digits: int) -> str:
    """Decimal string with exactly ``digits`` significant digits, truncated.

    Truncation is toward zero, so the printed digits are a true prefix of
    the exact decimal expansion of ``x``.
    """
    if digits < 1:
        raise SpecError("digits must be >= 1")
    v = x.to_fraction()
    if v == 0:
        return "0." + "0" * (digits - 1) if digits > 1 else "0"
    neg = v < 0
    v = -v if neg else v
    # decimal exponent e: 10**e <= v < 10**(e+1)
    e = math.floor(_log2_abs_fraction(v) * math.log10(2.0))
    e = int(e)
    while Fraction(10) ** e > v:
        e -= 1
    while Fraction(10) ** (e + 1) <= v:
        e += 1
    # leading `digits` digits as an integer, truncated
    scaled = v * Fraction(10) ** (digits - 1 - e)
    n = int(scaled)  # floor for positive values
    s = str(n)
    assert len(s) == digits
    if e >= digits - 1:
        out = s + "0" * (e - digits + 1)
    elif e >= 0:
        out = s[: e + 1] + "." + s[e + 1 :]
    else:
        out = "0." + "0" * (-e - 1) + s
    return ("-" + out) if neg else out
