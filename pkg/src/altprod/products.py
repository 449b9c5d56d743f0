"""Declarative evaluation of alternating infinite products.

A product is described by a factor base (a positive rational function of the
factor index k), an integer exponent formula (polynomial in k, optionally
carrying a (-1)^k alternation), a per-factor rational power of e, a truncation
map from sequence index n to the last included k, and an optional per-index
closing factor ("bridge") of the form base(n)^power(n) * e^epower(n) that is
replaced, not accumulated, as n grows.

Partial products are available in two forms: exactly, as a rational number
times a rational power of e (the brute-force oracle), and in log space at
working precision for the limit machinery.  Limits are delegated to the
sequence-acceleration module on the log-partial sequence.

Specs are built from a flat key-value text form; the built-in catalog goes
through the same parser, so user-defined products follow an identical code
path.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Tuple

from . import numkernel as nk
from .accel import (
    PARTIAL_SUMS,
    RICHARDSON,
    LimitEstimate,
    SequenceGen,
    estimate_limit,
)
from .numkernel import DomainError, OracleRangeError, Real, SpecError

__all__ = [
    "BridgedProductSpec",
    "ExactPartial",
    "BUILTIN_NAMES",
    "builtin",
    "parse_product_spec",
    "serialize_product_spec",
    "partial_exact",
    "log_partial",
    "ProductEvalSession",
    "limit",
]

# exact-oracle integer budget: bits of numerator plus denominator, estimated
# before any big multiplication is attempted
ORACLE_BITS_CAP = 48_000_000


# -- expression micro-language -------------------------------------------------
#
# Integer-coefficient polynomial quotients in one variable, with ^ admitted for
# constant integer powers and for the alternating atom (-1)^<poly>.  Bridge
# bases additionally admit <poly>^<poly>, which is how truncation-dependent
# closing factors like (2n+2)^(4n+5) are written.

_TOKENS = re.compile(r"\s*(?:(\d+)|([A-Za-z]+)|(\^)|(\*)|(/)|(\+)|(-)|(\()|(\)))")

_NUM = "num"
_VAR = "var"
_ADD = "add"
_SUB = "sub"
_MUL = "mul"
_DIV = "div"
_NEG = "neg"
_POW = "pow"


class _ExprParser:
    def __init__(self, text: str, var: str):
        self.var = var
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKENS.match(text, pos)
            if m is None:
                if text[pos:].strip() == "":
                    break
                raise SpecError(f"unreadable expression near {text[pos:]!r}")
            pos = m.end()
            if m.group(1):
                self.toks.append(("int", int(m.group(1))))
            elif m.group(2):
                name = m.group(2)
                if name != var:
                    raise SpecError(
                        f"unknown symbol {name!r}; only {var!r} is available here"
                    )
                self.toks.append(("var", name))
            else:
                self.toks.append((m.group(0).strip(), None))
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.pos != len(self.toks):
            raise SpecError("trailing garbage in expression")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            node = (_ADD if op == "+" else _SUB, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            node = (_MUL if op == "*" else _DIV, node, rhs)
        return node

    def unary(self):
        if self.peek() == "-":
            self.take()
            return (_NEG, self.unary())
        if self.peek() == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            # right-associative; unary binds looser than ^ on the left only
            return (_POW, base, self.unary())
        return base

    def atom(self):
        kind, val = self.take() if self.pos < len(self.toks) else (None, None)
        if kind == "int":
            return (_NUM, Fraction(val))
        if kind == "var":
            return (_VAR,)
        if kind == "(":
            node = self.expr()
            if self.peek() != ")":
                raise SpecError("unbalanced parentheses")
            self.take()
            return node
        raise SpecError("malformed expression")


def _contains_var(node) -> bool:
    if node[0] == _VAR:
        return True
    if node[0] == _NUM:
        return False
    return any(_contains_var(c) for c in node[1:])


def _const_value(node) -> Optional[Fraction]:
    if _contains_var(node):
        return None
    return _eval_expr(node, 0)


def _eval_expr(node, value: int) -> Fraction:
    op = node[0]
    if op == _NUM:
        return node[1]
    if op == _VAR:
        return Fraction(value)
    if op == _NEG:
        return -_eval_expr(node[1], value)
    a = _eval_expr(node[1], value)
    if op == _POW:
        e = _eval_expr(node[2], value)
        if e.denominator != 1:
            raise SpecError("exponent in ^ must be an integer")
        return a ** int(e)
    b = _eval_expr(node[2], value)
    if op == _ADD:
        return a + b
    if op == _SUB:
        return a - b
    if op == _MUL:
        return a * b
    if op == _DIV:
        if b == 0:
            raise SpecError("division by zero in expression")
        return a / b
    raise SpecError("unknown expression node")


def _check_powers(node, allow_alternation: bool, allow_var_base: bool, what: str):
    """Enforce the admitted grammar: ^ takes constant integer exponents, except
    (-1)^<poly> where alternation is allowed, and <poly>^<poly> in bridge bases."""
    if node[0] == _POW:
        base, expo = node[1], node[2]
        if _contains_var(expo):
            if allow_var_base:
                pass
            elif allow_alternation and _const_value(base) == -1:
                pass
            else:
                raise SpecError(
                    f"{what}: a variable exponent is only admitted on the (-1) atom"
                )
        else:
            e = _const_value(expo)
            if e is None or e.denominator != 1:
                raise SpecError(f"{what}: ^ needs an integer exponent")
    if node[0] not in (_NUM, _VAR):
        for child in node[1:]:
            _check_powers(child, allow_alternation, allow_var_base, what)


def _compile(text: str, var: str, *, alternation=False, var_base=False, what: str):
    node = _ExprParser(text, var).parse()
    _check_powers(node, alternation, var_base, what)
    return node


# -- domain types --------------------------------------------------------------


@dataclass(frozen=True)
class ExactPartial:
    """A partial product held exactly: rational_part * e**e_power."""

    rational_part: Fraction
    e_power: Fraction


@dataclass(frozen=True, eq=False)
class BridgedProductSpec:
    """One alternating product, compiled from its key-value description.

    The k-indexed fields (factor, exponent, e_exponent) and the n-indexed
    fields (upper_index, bridge) are exposed as evaluation methods over the
    compiled expressions; `source` keeps the canonical text for serialization.
    """

    name: str
    k_start: int
    source: Mapping[str, str]
    _factor: tuple = field(repr=False)
    _exponent: tuple = field(repr=False)
    _e_exponent: tuple = field(repr=False)
    _upper: tuple = field(repr=False)
    _bridge: Optional[Tuple[tuple, tuple, tuple]] = field(repr=False, default=None)

    def factor(self, k: int) -> Fraction:
        f = _eval_expr(self._factor, k)
        if f <= 0:
            raise DomainError(f"{self.name}: factor at k={k} is not positive ({f})")
        return f

    def exponent(self, k: int) -> int:
        e = _eval_expr(self._exponent, k)
        if e.denominator != 1:
            raise SpecError(f"{self.name}: exponent at k={k} is not an integer ({e})")
        return int(e)

    def e_exponent(self, k: int) -> Fraction:
        return _eval_expr(self._e_exponent, k)

    def upper_index(self, n: int) -> int:
        u = _eval_expr(self._upper, n)
        if u.denominator != 1:
            raise SpecError(f"{self.name}: upper index at n={n} is not an integer")
        return int(u)

    def bridge(self, n: int) -> Optional[Tuple[Fraction, int, Fraction]]:
        if self._bridge is None:
            return None
        base_e, power_e, epower_e = self._bridge
        base = _eval_expr(base_e, n)
        power = _eval_expr(power_e, n)
        if power.denominator != 1:
            raise SpecError(f"{self.name}: bridge power at n={n} is not an integer")
        if base <= 0:
            raise DomainError(f"{self.name}: bridge base at n={n} is not positive")
        return base, int(power), _eval_expr(epower_e, n)


# -- parsing and serialization ---------------------------------------------------

_SPEC_KEYS = ("name", "factor", "exponent", "e_exponent", "k_start", "upper", "bridge")


def parse_product_spec(text: str) -> BridgedProductSpec:
    """Build a spec from the flat key-value form.

    Required keys: name, factor, exponent, upper.  Optional: e_exponent
    (default 0), k_start (default 1), bridge (three ';'-separated expressions
    in n: base, power, e-power).
    """
    fields = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SPEC_KEYS:
            raise SpecError(f"unknown product field {key!r}")
        if key in fields:
            raise SpecError(f"duplicate product field {key!r}")
        fields[key] = value.strip()
    for req in ("name", "factor", "exponent", "upper"):
        if req not in fields:
            raise SpecError(f"product description is missing {req!r}")

    name = fields["name"]
    k_start = int(fields.get("k_start", "1"))
    if k_start < 0:
        raise SpecError("k_start must be >= 0")
    factor = _compile(fields["factor"], "k", what="factor")
    exponent = _compile(fields["exponent"], "k", alternation=True, what="exponent")
    e_exponent = _compile(fields.get("e_exponent", "0"), "k", what="e_exponent")
    upper = _compile(fields["upper"], "n", what="upper")
    bridge = None
    if "bridge" in fields:
        parts = fields["bridge"].split(";")
        if len(parts) != 3:
            raise SpecError("bridge must be 'base ; power ; e-power'")
        bridge = (
            _compile(parts[0], "n", var_base=True, what="bridge base"),
            _compile(parts[1], "n", what="bridge power"),
            _compile(parts[2], "n", what="bridge e-power"),
        )
        fields["bridge"] = " ; ".join(p.strip() for p in parts)

    canon = {k: fields[k] for k in _SPEC_KEYS if k in fields}
    canon.setdefault("e_exponent", "0")
    canon.setdefault("k_start", "1")
    canon["k_start"] = str(k_start)
    return BridgedProductSpec(
        name=name,
        k_start=k_start,
        source=canon,
        _factor=factor,
        _exponent=exponent,
        _e_exponent=e_exponent,
        _upper=upper,
        _bridge=bridge,
    )


def serialize_product_spec(spec: BridgedProductSpec) -> str:
    return "\n".join(f"{k} = {spec.source[k]}" for k in _SPEC_KEYS if k in spec.source)


# -- built-in catalog ------------------------------------------------------------

_FIXED_BUILTINS = {
    "KT1": """
        name = KT1
        factor = k/(k+1)
        exponent = (k*(k+1)/2)*(-1)^k
        e_exponent = -1/4
        upper = 2*n+1
    """,
    "KT2": """
        name = KT2
        factor = k/(k+1)
        exponent = (k*(k+1)/2)*(-1)^k
        e_exponent = 1/4
        upper = 2*n
    """,
    "KT3": """
        name = KT3
        factor = (2*k-1)/(2*k+1)
        exponent = k*(-1)^k
        upper = 2*n
    """,
    "KT4": """
        name = KT4
        factor = (2*k-1)/(2*k+1)
        exponent = k*(-1)^k
        upper = 2*n+1
    """,
    "MELZAK": """
        name = MELZAK
        factor = (k+2)/k
        exponent = -k*(-1)^k
        upper = 2*n+1
    """,
    "GS53R": """
        name = GS53R
        factor = k
        exponent = 4*k^2*(-1)^k
        upper = 2*n
        bridge = (2*n+2)^(4*n+5)/(2*n+1)^(12*n+9) ; n ; 0
    """,
    "GS55R": """
        name = GS55R
        factor = 2*k+1
        exponent = -2*(2*k+1)*(-1)^k
        upper = 2*n+1
        bridge = (4*n+7)^(2*n+3)/(4*n+5)^(6*n+7) ; 1 ; 0
    """,
    "HOLCOMBE": """
        name = HOLCOMBE
        factor = (k^2-1)/k^2
        exponent = k^2
        e_exponent = 1
        k_start = 2
        upper = n
        bridge = 1 ; 1 ; 3/2
    """,
}

BUILTIN_NAMES = ("KT1", "KT2", "KT3", "KT4", "MELZAK", "BD_D", "ADAMCHIK_E",
                 "ADAMCHIK_P5", "GS53R", "GS55R", "HOLCOMBE")


def _as_param(x) -> Fraction:
    if isinstance(x, Real):
        return x.to_fraction()
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    raise SpecError(f"product parameter must be rational or Real, got {type(x).__name__}")


def builtin(name: str, x=None) -> BridgedProductSpec:
    """Return a catalog spec by name; BD_D, ADAMCHIK_E, and ADAMCHIK_P5 take a
    rational (or Real, converted exactly) parameter x."""
    if name in _FIXED_BUILTINS:
        if x is not None:
            raise SpecError(f"{name} takes no parameter")
        return parse_product_spec(_FIXED_BUILTINS[name])
    if name not in BUILTIN_NAMES:
        raise SpecError(f"unknown product {name!r}")
    if x is None:
        raise SpecError(f"{name} needs a parameter x")
    xf = _as_param(x)
    a, b = xf.numerator, xf.denominator
    if name == "BD_D":
        if xf <= -1:
            raise DomainError("BD_D needs x > -1 so every factor stays positive")
        text = f"""
            name = BD_D({a}/{b})
            factor = ({b}*k+{a})/({b}*k)
            exponent = -k*(-1)^k
            upper = 2*n+1
        """
    elif name == "ADAMCHIK_E":
        two_x = abs(2 * xf)
        k_start = 1 if two_x < 1 else 2
        if two_x >= k_start:
            raise DomainError(
                "ADAMCHIK_E needs |2x| < 2 (and the k=1 factor is dropped for |2x| >= 1)"
            )
        text = f"""
            name = ADAMCHIK_E({a}/{b})
            factor = ({b * b}*k^2-{4 * a * a})/({b * b}*k^2)
            exponent = -k^2*(-1)^k
            k_start = {k_start}
            upper = 2*n
        """
    elif name == "ADAMCHIK_P5":
        if 2 * xf <= -1:
            raise DomainError("ADAMCHIK_P5 needs x > -1/2 so every factor stays positive")
        text = f"""
            name = ADAMCHIK_P5({a}/{b})
            factor = ({b}*k+{2 * a})/({b}*k)
            exponent = -k*(-1)^k
            upper = 2*n
        """
    else:  # pragma: no cover
        raise SpecError(f"unknown product {name!r}")
    # negative numerators would print as '+-a'; normalize the sign into the text
    text = text.replace("+-", "-")
    return parse_product_spec(text)


# -- exact oracle ------------------------------------------------------------------


def partial_exact(spec: BridgedProductSpec, n: int) -> ExactPartial:
    """The n-th partial product, exactly, by direct multiplication.

    The cost estimate (bits of the accumulated numerator and denominator) is
    checked before each multiplication; exceeding the budget raises
    OracleRangeError rather than grinding through gigantic integers.
    """
    if n < 0:
        raise SpecError("partial index must be >= 0")
    upper = spec.upper_index(n)
    rational = Fraction(1)
    e_power = Fraction(0)
    est_bits = 0.0
    for k in range(spec.k_start, upper + 1):
        f = spec.factor(k)
        m = spec.exponent(k)
        e_power += spec.e_exponent(k)
        if m == 0:
            continue
        est_bits += abs(m) * (f.numerator.bit_length() + f.denominator.bit_length())
        if est_bits > ORACLE_BITS_CAP:
            raise OracleRangeError(
                f"{spec.name}: exact partial at n={n} exceeds the integer budget"
            )
        rational *= Fraction(f.numerator**m if m > 0 else f.denominator**-m,
                             f.denominator**m if m > 0 else f.numerator**-m)
    br = spec.bridge(n)
    if br is not None:
        base, power, epower = br
        e_power += epower
        if power:
            est_bits += abs(power) * (
                base.numerator.bit_length() + base.denominator.bit_length()
            )
            if est_bits > ORACLE_BITS_CAP:
                raise OracleRangeError(
                    f"{spec.name}: exact partial at n={n} exceeds the integer budget"
                )
            rational *= base**power
    return ExactPartial(rational_part=rational, e_power=e_power)


# -- log-space evaluation -----------------------------------------------------------


class ProductEvalSession:
    """Incremental log-partial evaluation for one spec.

    Per requested precision the session keeps the running sum over factors, so
    walking n upward costs one log per new factor.  Sessions are meant for a
    single evaluation run and are not shared across threads.
    """

    def __init__(self, spec: BridgedProductSpec):
        self.spec = spec
        self._state = {}  # p -> (next_k, core_log Real, core_e Fraction)

    def _core(self, upper: int, wp: int):
        next_k, core_log, core_e = self._state.get(
            wp, (self.spec.k_start, nk.to_real(0, wp), Fraction(0))
        )
        if upper < next_k - 1:
            # the truncation map went backward; restart rather than subtract
            next_k, core_log, core_e = self.spec.k_start, nk.to_real(0, wp), Fraction(0)
        while next_k <= upper:
            k = next_k
            f = self.spec.factor(k)
            m = self.spec.exponent(k)
            core_e += self.spec.e_exponent(k)
            if m != 0:
                term = nk.mul(nk.ln_rational(f, wp), nk.to_real(m, wp), wp)
                core_log = nk.add(core_log, term, wp)
            next_k = k + 1
        self._state[wp] = (next_k, core_log, core_e)
        return core_log, core_e

    def log_partial(self, n: int, p: int) -> Real:
        if n < 0:
            raise SpecError("partial index must be >= 0")
        spec = self.spec
        upper = spec.upper_index(n)
        wp = p + 32 + 4 * max(1, (abs(upper) + 2).bit_length())
        core_log, core_e = self._core(upper, wp)
        e_total = core_e
        acc = core_log
        br = spec.bridge(n)
        if br is not None:
            base, power, epower = br
            e_total += epower
            if power:
                acc = nk.add(
                    acc, nk.mul(nk.ln_rational(base, wp), nk.to_real(power, wp), wp), wp
                )
        if e_total:
            acc = nk.add(acc, nk.to_real(e_total, wp), wp)
        return acc.at(p)


def log_partial(spec: BridgedProductSpec, n: int, p: int) -> Real:
    """From-scratch log of the n-th partial product (bridge included)."""
    return ProductEvalSession(spec).log_partial(n, p)


def _first_index(spec: BridgedProductSpec) -> int:
    for n in range(1, 65):
        if spec.upper_index(n) >= spec.k_start:
            return n
    raise SpecError(f"{spec.name}: no sequence index reaches k_start within n <= 64")


def limit(
    spec: BridgedProductSpec,
    p: int,
    target_digits: int,
    method: str = RICHARDSON,
    max_terms_cap: int = 2048,
) -> LimitEstimate:
    """Accelerated limit of the product, exponentiated back from log space."""
    session = ProductEvalSession(spec)
    seq = SequenceGen(term_at=session.log_partial, n0=_first_index(spec), kind=PARTIAL_SUMS)
    try:
        est = estimate_limit(seq, method, target_digits, p, max_terms_cap=max_terms_cap)
    except nk.NonConvergenceError as exc:
        # re-raise with the best effort mapped back to product scale
        best = exc.best
        if best is not None:
            bv = nk.exp(best.value, p)
            be = nk.add(
                nk.mul(bv, best.error_estimate, p), nk.ldexp(bv, 4 - p), p
            )
            best = LimitEstimate(
                value=bv,
                error_estimate=be,
                terms_used=best.terms_used,
                method=best.method,
            )
        raise nk.NonConvergenceError(str(exc), best=best) from exc
    value = nk.exp(est.value, p)
    # d(e^x) = e^x dx, plus a couple of ulps for the exponential itself
    err = nk.add(
        nk.mul(value, est.error_estimate, p),
        nk.ldexp(value, 4 - p),
        p,
    )
    return LimitEstimate(
        value=value, error_estimate=err, terms_used=est.terms_used, method=est.method
    )
