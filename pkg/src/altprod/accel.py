"""Sequence-limit machinery.

The log partial products handled by this package converge with O(1/n)
error, far too slowly to read digits off directly.  This module turns such
sequences into accelerated limit estimates with empirical error estimates:

- ``euler_transform_sum``  for alternating series with a smooth term
  envelope (binary-averaged form of the classical transform),
- ``wynn_epsilon_limit``   the epsilon algorithm on partial sums,
- ``richardson_limit``     polynomial extrapolation in 1/n,
- ``estimate_limit``       a driver that escalates the term budget until an
  error target is met.

Everything operates in log space by convention: callers hand in log partial
products, never the products themselves, so magnitudes stay O(1).

Error estimates are |last - previous| of the accelerated diagonal: an
empirical indicator, not a bound.  Callers that need certainty re-run at a
higher precision and compare (see the verification harness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import numkernel as nk
from .numkernel import NonConvergenceError, Real, SpecError, to_real

__all__ = [
    "PARTIAL_SUMS",
    "ALTERNATING_TERMS",
    "RAW",
    "EULER",
    "WYNN",
    "RICHARDSON",
    "METHODS",
    "SequenceGen",
    "LimitEstimate",
    "euler_transform_sum",
    "wynn_epsilon_limit",
    "richardson_limit",
    "estimate_limit",
]

PARTIAL_SUMS = "PARTIAL_SUMS"
ALTERNATING_TERMS = "ALTERNATING_TERMS"

RAW = "RAW"
EULER = "EULER"
WYNN = "WYNN"
RICHARDSON = "RICHARDSON"
METHODS = (RAW, EULER, WYNN, RICHARDSON)


@dataclass(frozen=True)
class SequenceGen:
    """A lazily evaluated sequence.

    ``term_at(n, p)`` must be deterministic: the same (n, p) always yields
    the same Real.  ``kind`` says whether values are partial sums of the
    target or the magnitudes b_n of an alternating series sum (-1)^(n-n0) b_n.
    """

    term_at: Callable[[int, int], Real]
    n0: int
    kind: str

    def __post_init__(self):
        if self.kind not in (PARTIAL_SUMS, ALTERNATING_TERMS):
            raise SpecError(f"unknown sequence kind {self.kind!r}")
        if self.n0 < 0:
            raise SpecError("n0 must be >= 0")


@dataclass(frozen=True)
class LimitEstimate:
    """An accelerated limit: value, empirical error, cost, and method tag."""

    value: Real
    error_estimate: Real
    terms_used: int
    method: str

    def __post_init__(self):
        if self.error_estimate.sign() < 0:
            raise SpecError("error_estimate must be >= 0")
        if self.method not in METHODS:
            raise SpecError(f"unknown method {self.method!r}")


def _probe_scale_bits(seq: SequenceGen, count: int = 5) -> int:
    """Rough magnitude (bits) of the first few terms, for precision sizing."""
    worst = 0
    for n in range(seq.n0, seq.n0 + count):
        try:
            v = seq.term_at(n, 64)
        except Exception:
            break
        if not v.is_zero():
            _, _, e, bc = v.raw
            worst = max(worst, e + bc)
    return max(0, worst)


def _all_equal_shortcut(values, method: str, terms_used: int) -> Optional[LimitEstimate]:
    """Constant sequences short-circuit every method with error exactly 0."""
    first = values[0]
    if all(v.raw == first.raw for v in values[1:]):
        return LimitEstimate(
            value=first,
            error_estimate=nk.to_real(0, first.precision_bits),
            terms_used=terms_used,
            method=method,
        )
    return None


# -- Euler transform -----------------------------------------------------------


def euler_transform_sum(terms: SequenceGen, p: int, max_terms: int) -> LimitEstimate:
    """Sum of sum_{k>=n0} (-1)^(k-n0) b_k by the binary-averaged Euler transform.

    Partial transforms are the averaged-diagonal values sum_{j<=m} D^j b /
    2^(j+1); iteration stops when two successive ones agree to the requested
    precision.
    """
    if terms.kind != ALTERNATING_TERMS:
        raise SpecError("euler_transform_sum needs an ALTERNATING_TERMS sequence")
    if max_terms < 2:
        raise SpecError("max_terms must be >= 2")
    wp = p + 48 + max_terms.bit_length() + _probe_scale_bits(terms)
    tol_bits = p + 2

    n0 = terms.n0
    # col[j] holds the level-j average ending at the newest partial sum
    col: list = []
    diag: list = []
    S = to_real(0, wp)
    sign = 1
    for m in range(max_terms):
        b = terms.term_at(n0 + m, wp)
        S = nk.add(S, b if sign > 0 else -b, wp)
        sign = -sign
        new_col = [S]
        for j in range(1, len(col) + 1):
            new_col.append(nk.ldexp(nk.add(col[j - 1], new_col[j - 1], wp), -1))
        col = new_col
        diag.append(col[-1])
        if m >= 1:
            err = abs(nk.sub(diag[-1], diag[-2], wp))
            scale = abs(diag[-1])
            tol = nk.ldexp(scale if scale > to_real(1, wp) else to_real(1, wp), -tol_bits)
            if err < tol:
                return LimitEstimate(
                    value=diag[-1].at(p),
                    error_estimate=err.at(p),
                    terms_used=n0 + m,
                    method=EULER,
                )
    best = LimitEstimate(
        value=diag[-1].at(p),
        error_estimate=abs(nk.sub(diag[-1], diag[-2], wp)).at(p),
        terms_used=n0 + max_terms - 1,
        method=EULER,
    )
    raise NonConvergenceError(
        f"Euler transform did not stabilize within {max_terms} terms", best=best
    )


# -- Wynn epsilon --------------------------------------------------------------


def wynn_epsilon_limit(seq: SequenceGen, p: int, max_terms: int) -> LimitEstimate:
    """Limit via the epsilon algorithm; estimates come from even columns.

    Near-zero denominators are skipped per the standard guard; if nothing
    survives, that is a non-convergence error.
    """
    if seq.kind != PARTIAL_SUMS:
        raise SpecError("wynn_epsilon_limit needs a PARTIAL_SUMS sequence")
    if max_terms < 3:
        raise SpecError("max_terms must be >= 3")
    wp = p + 48 + 2 * max_terms.bit_length() + _probe_scale_bits(seq)

    svals = [seq.term_at(seq.n0 + i, wp) for i in range(max_terms)]
    if short := _all_equal_shortcut(svals, WYNN, seq.n0 + max_terms - 1):
        return short

    tiny = nk.ldexp(to_real(1, wp), -(p - 8))
    prev: list = [to_real(0, wp)] * (len(svals) + 1)  # epsilon_{-1} column
    cur: list = list(svals)  # epsilon_0 column
    even_diags: list = [cur[-1]]
    col = 0
    while len(cur) >= 2:
        nxt = []
        ok = True
        for i in range(len(cur) - 1):
            d = nk.sub(cur[i + 1], cur[i], wp)
            if abs(d) < tiny:
                ok = False
                break
            nxt.append(nk.add(prev[i + 1], nk.div(to_real(1, wp), d, wp), wp))
        if not ok or not nxt:
            break
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0:
            even_diags.append(cur[-1])
    if len(even_diags) < 2:
        raise NonConvergenceError("epsilon table broke down immediately")
    # smallest last-step difference picks the released diagonal
    best_i, best_err = None, None
    for i in range(1, len(even_diags)):
        e = abs(nk.sub(even_diags[i], even_diags[i - 1], wp))
        if best_err is None or e < best_err:
            best_i, best_err = i, e
    return LimitEstimate(
        value=even_diags[best_i].at(p),
        error_estimate=best_err.at(p),
        terms_used=seq.n0 + max_terms - 1,
        method=WYNN,
    )


# -- Richardson / polynomial extrapolation --------------------------------------


def _node_condition_bits(n0: int, count: int) -> int:
    """Bits of cancellation in extrapolating to 0 from nodes 1/n0 .. 1/(n0+count-1).

    Estimated from the Lagrange weights at 0 via float log arithmetic.
    """
    xs = [1.0 / (n0 + i) for i in range(count)]
    worst = 0.0
    for i in range(count):
        lw = 0.0
        for j in range(count):
            if j != i:
                lw += math.log2(abs(xs[j])) - math.log2(abs(xs[j] - xs[i]))
        worst = max(worst, lw)
    return max(0, int(worst) + count.bit_length() + 4)


def richardson_limit(
    seq: SequenceGen, p: int, max_terms: int, order: int
) -> LimitEstimate:
    """Extrapolate s_n -> s assuming s_n = s + c1/n + c2/n^2 + ...

    Neville's scheme evaluates the interpolating polynomial through
    (1/n, s_n) at 0.  Nodes are consecutive indices n0, n0+1, ...; they are
    kept as exact rationals and realized at working precision, which the
    conditioning estimate boosts to pay for the extrapolation's
    cancellation.
    """
    if seq.kind != PARTIAL_SUMS:
        raise SpecError("richardson_limit needs a PARTIAL_SUMS sequence")
    if order < 1:
        raise SpecError("order must be >= 1")
    J = min(order, max_terms - 1)
    if J < 1:
        raise SpecError("max_terms must allow at least two samples")
    n0 = seq.n0
    count = J + 1

    wp = p + _node_condition_bits(n0, count) + 32
    xs = [Fraction(1, n0 + i) for i in range(count)]
    t = [seq.term_at(n0 + i, wp) for i in range(count)]
    if short := _all_equal_shortcut(t, RICHARDSON, n0 + J):
        return short

    xr = [to_real(x, wp) for x in xs]
    diag = [t[0]]
    for j in range(1, count):
        for i in range(count - j):
            num = nk.sub(
                nk.mul(xr[i + j], t[i], wp), nk.mul(xr[i], t[i + 1], wp), wp
            )
            den = to_real(xs[i + j] - xs[i], wp)
            t[i] = nk.div(num, den, wp)
        diag.append(t[0])
    err = abs(nk.sub(diag[-1], diag[-2], wp))
    return LimitEstimate(
        value=diag[-1].at(p),
        error_estimate=err.at(p),
        terms_used=n0 + J,
        method=RICHARDSON,
    )


# -- driver ---------------------------------------------------------------------


def _raw_limit(seq: SequenceGen, p: int, max_terms: int) -> LimitEstimate:
    if max_terms < 2:
        raise SpecError("max_terms must be >= 2")
    wp = p + 16
    last = seq.term_at(seq.n0 + max_terms - 1, wp)
    prev = seq.term_at(seq.n0 + max_terms - 2, wp)
    return LimitEstimate(
        value=last.at(p),
        error_estimate=abs(nk.sub(last, prev, wp)).at(p),
        terms_used=seq.n0 + max_terms - 1,
        method=RAW,
    )


def _as_alternating(seq: SequenceGen, p: int):
    """Partial sums -> (base, sign, alternating |difference| generator).

    The limit is base + sign * sum of the alternating difference series.
    """
    s0 = seq.term_at(seq.n0, p)
    s1 = seq.term_at(seq.n0 + 1, p)
    first = nk.sub(s1, s0, p)
    sign = 1 if first.sign() >= 0 else -1

    def term_at(j: int, q: int) -> Real:
        a = seq.term_at(seq.n0 + j, q)
        b = seq.term_at(seq.n0 + j + 1, q)
        d = nk.sub(b, a, q)
        expect = sign if j % 2 == 0 else -sign
        if not d.is_zero() and d.sign() != expect:
            raise NonConvergenceError(
                f"differences of partial sums are not alternating at index {j}"
            )
        return abs(d)

    gen = SequenceGen(term_at=term_at, n0=0, kind=ALTERNATING_TERMS)
    return s0, sign, gen


def estimate_limit(
    seq: SequenceGen,
    method: str,
    target_digits: int,
    p: int,
    max_terms_cap: int = 2048,
) -> LimitEstimate:
    """Run ``method`` with a doubling term budget until the empirical error
    drops below 10^-target_digits, or the cap is exhausted."""
    if method not in METHODS:
        raise SpecError(f"unknown method {method!r}")
    if target_digits < 1:
        raise SpecError("target_digits must be >= 1")
    goal = to_real(Fraction(1, 10**target_digits), 64)
    best: Optional[LimitEstimate] = None

    budget = 64
    while True:
        budget = min(budget, max_terms_cap)
        try:
            if method == RAW:
                est = _raw_limit(seq, p, budget)
            elif method == EULER:
                if seq.kind == ALTERNATING_TERMS:
                    est = euler_transform_sum(seq, p, budget)
                else:
                    base, sign, gen = _as_alternating(seq, p + 16)
                    inner = euler_transform_sum(gen, p + 16, budget)
                    total = nk.add(
                        base,
                        inner.value if sign > 0 else -inner.value,
                        p + 16,
                    )
                    est = LimitEstimate(
                        value=total.at(p),
                        error_estimate=inner.error_estimate,
                        terms_used=seq.n0 + inner.terms_used + 1,
                        method=EULER,
                    )
            elif method == WYNN:
                est = wynn_epsilon_limit(seq, p, budget)
            else:
                est = richardson_limit(seq, p, budget, order=budget - 1)
        except NonConvergenceError as e:
            est = e.best if isinstance(e.best, LimitEstimate) else None
        if est is not None and (best is None or est.error_estimate < best.error_estimate):
            best = est
        if best is not None and best.error_estimate < goal:
            return best
        if budget >= max_terms_cap:
            break
        budget *= 2
    if best is None:
        raise NonConvergenceError("no method produced an estimate")
    raise NonConvergenceError(
        f"error estimate {float(best.error_estimate):.3g} above goal "
        f"10^-{target_digits} at term cap {max_terms_cap}",
        best=best,
    )
