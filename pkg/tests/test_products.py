"""Checks for the declarative product evaluator.

The exact-rational oracle (`partial_exact`) is the ground truth here: the
small partials are checked against hand-multiplied fractions, the log-space
evaluator is checked against the oracle, the bridge identities between
catalog entries are checked as exact rational identities, and only then are
accelerated limits compared against independently computed closed forms.
"""

from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from altprod import numkernel as nk
from altprod import products as pr
from altprod.numkernel import DomainError, OracleRangeError, SpecError

mp.mp.dps = 80


def as_mpf(x):
    return mp.make_mpf(x.raw)


def mpq(f: Fraction):
    return mp.mpf(f.numerator) / mp.mpf(f.denominator)


# ---------------------------------------------------------------------------
# parsing and validation


def test_parse_requires_mandatory_fields():
    with pytest.raises(SpecError, match="missing"):
        pr.parse_product_spec("name = x\nfactor = k/(k+1)\nexponent = k")
    with pytest.raises(SpecError, match="missing"):
        pr.parse_product_spec("name = x\nfactor = k/(k+1)\nupper = 2*n")


def test_parse_rejects_unknown_duplicate_and_malformed_fields():
    base = "name = x\nfactor = k/(k+1)\nexponent = k\nupper = 2*n"
    with pytest.raises(SpecError, match="unknown product field"):
        pr.parse_product_spec(base + "\ncolor = red")
    with pytest.raises(SpecError, match="duplicate"):
        pr.parse_product_spec(base + "\nfactor = k")
    with pytest.raises(SpecError, match="key = value"):
        pr.parse_product_spec("name x\nfactor = k\nexponent = k\nupper = n")


def test_parse_rejects_bad_bridge_shape():
    base = "name = x\nfactor = k/(k+1)\nexponent = k\nupper = 2*n"
    with pytest.raises(SpecError, match="bridge"):
        pr.parse_product_spec(base + "\nbridge = 1 ; 2")


def test_grammar_rejects_variable_power_outside_bridge():
    base = "name = x\nexponent = k\nupper = 2*n"
    with pytest.raises(SpecError):
        pr.parse_product_spec(base + "\nfactor = k^k")
    with pytest.raises(SpecError):
        pr.parse_product_spec(base.replace("exponent = k", "exponent = k^k") + "\nfactor = k")


def test_grammar_rejects_alternation_outside_exponent():
    with pytest.raises(SpecError):
        pr.parse_product_spec(
            "name = x\nfactor = (-1)^k\nexponent = k\nupper = 2*n"
        )


def test_grammar_rejects_unknown_symbols():
    with pytest.raises(SpecError):
        pr.parse_product_spec("name = x\nfactor = j/(j+1)\nexponent = k\nupper = 2*n")
    with pytest.raises(SpecError, match="unreadable|malformed"):
        pr.parse_product_spec("name = x\nfactor = k$2\nexponent = k\nupper = 2*n")


def test_exponent_must_evaluate_to_integer():
    spec = pr.parse_product_spec(
        "name = halves\nfactor = k/(k+1)\nexponent = k/2\nupper = 2*n"
    )
    assert spec.exponent(2) == 1
    with pytest.raises(SpecError, match="integer"):
        spec.exponent(1)


def test_factor_must_stay_positive_and_the_error_names_the_index():
    spec = pr.parse_product_spec(
        "name = bad\nfactor = (k-3)/k\nexponent = k\nupper = 2*n"
    )
    with pytest.raises(DomainError, match="k=1"):
        pr.partial_exact(spec, 2)


@pytest.mark.parametrize("name", ["KT1", "KT2", "KT3", "KT4", "MELZAK", "GS53R", "GS55R", "HOLCOMBE"])
def test_serialize_round_trip(name):
    a = pr.builtin(name)
    text = pr.serialize_product_spec(a)
    b = pr.parse_product_spec(text)
    assert pr.serialize_product_spec(b) == text
    assert pr.partial_exact(a, 3) == pr.partial_exact(b, 3)
    assert a.k_start == b.k_start
    assert a.upper_index(9) == b.upper_index(9)


# ---------------------------------------------------------------------------
# builtin catalog


def test_builtin_name_validation():
    assert set(pr.BUILTIN_NAMES) == {
        "KT1", "KT2", "KT3", "KT4", "MELZAK", "BD_D", "ADAMCHIK_E",
        "ADAMCHIK_P5", "GS53R", "GS55R", "HOLCOMBE",
    }
    with pytest.raises(SpecError, match="unknown product"):
        pr.builtin("NOPE")
    with pytest.raises(SpecError, match="takes no parameter"):
        pr.builtin("KT1", Fraction(1, 2))
    with pytest.raises(SpecError, match="needs a parameter"):
        pr.builtin("BD_D")


def test_parameterized_domain_limits():
    with pytest.raises(DomainError):
        pr.builtin("BD_D", -1)
    with pytest.raises(DomainError):
        pr.builtin("BD_D", Fraction(-3, 2))
    with pytest.raises(DomainError):
        pr.builtin("ADAMCHIK_E", 1)
    with pytest.raises(DomainError):
        pr.builtin("ADAMCHIK_P5", Fraction(-1, 2))
    # the first factor is dropped exactly when |2x| >= 1
    assert pr.builtin("ADAMCHIK_E", Fraction(1, 2)).k_start == 2
    assert pr.builtin("ADAMCHIK_E", Fraction(1, 4)).k_start == 1


def test_parameter_accepts_real_exactly():
    via_real = pr.builtin("BD_D", nk.to_real(Fraction(1, 2), 64))
    via_fraction = pr.builtin("BD_D", Fraction(1, 2))
    assert via_real.source == via_fraction.source


def test_builtin_field_shapes():
    kt3 = pr.builtin("KT3")
    assert kt3.factor(1) == Fraction(1, 3)
    assert kt3.factor(2) == Fraction(3, 5)
    assert kt3.exponent(1) == -1
    assert kt3.exponent(2) == 2
    assert kt3.e_exponent(1) == 0
    assert kt3.upper_index(3) == 6
    assert kt3.bridge(3) is None

    hol = pr.builtin("HOLCOMBE")
    assert hol.k_start == 2
    assert hol.factor(2) == Fraction(3, 4)
    assert hol.exponent(3) == 9
    assert hol.e_exponent(5) == 1
    base, power, epower = hol.bridge(7)
    assert (base, power, epower) == (Fraction(1), 1, Fraction(3, 2))

    gs55 = pr.builtin("GS55R")
    base, power, epower = gs55.bridge(0)
    assert base == Fraction(7**3, 5**7)
    assert power == 1 and epower == 0


# ---------------------------------------------------------------------------
# exact oracle


def test_exact_partial_examples():
    assert pr.partial_exact(pr.builtin("KT3"), 1) == pr.ExactPartial(
        Fraction(27, 25), Fraction(0)
    )
    assert pr.partial_exact(pr.builtin("KT2"), 1) == pr.ExactPartial(
        Fraction(16, 27), Fraction(1, 2)
    )
    assert pr.partial_exact(pr.builtin("MELZAK"), 1) == pr.ExactPartial(
        Fraction(125, 36), Fraction(0)
    )
    assert pr.partial_exact(pr.builtin("HOLCOMBE"), 2) == pr.ExactPartial(
        Fraction(81, 256), Fraction(5, 2)
    )


def test_exact_partial_edges():
    # truncation map with upper(0) < k_start: genuinely empty product
    assert pr.partial_exact(pr.builtin("KT2"), 0) == pr.ExactPartial(
        Fraction(1), Fraction(0)
    )
    # truncation map whose n=0 partial already holds one factor: (1/2)^(-1)
    # times the e-channel contribution, not an empty product
    assert pr.partial_exact(pr.builtin("KT1"), 0) == pr.ExactPartial(
        Fraction(2), Fraction(-1, 4)
    )
    with pytest.raises(SpecError):
        pr.partial_exact(pr.builtin("KT1"), -1)


def test_exact_partial_budget_guard(monkeypatch):
    monkeypatch.setattr(pr, "ORACLE_BITS_CAP", 5_000)
    with pytest.raises(OracleRangeError, match="integer budget"):
        pr.partial_exact(pr.builtin("GS53R"), 6)
    # the guard also covers the closing factor
    spec = pr.parse_product_spec(
        "name = bigbridge\nfactor = 2\nexponent = 0\nupper = n\nbridge = 3 ; 100000 ; 0"
    )
    with pytest.raises(OracleRangeError, match="integer budget"):
        pr.partial_exact(spec, 1)


def test_bridge_between_odd_ratio_products_is_exact():
    # the two odd-ratio entries differ by the single closing factor
    # (1 - 2/(4n+3))^(-(2n+1)), exactly, for every n
    kt3, kt4 = pr.builtin("KT3"), pr.builtin("KT4")
    for n in range(9):
        a = pr.partial_exact(kt3, n)
        b = pr.partial_exact(kt4, n)
        closing = Fraction(4 * n + 1, 4 * n + 3) ** -(2 * n + 1)
        assert b.rational_part == a.rational_part * closing
        assert b.e_power == a.e_power == 0


def test_bridge_between_consecutive_ratio_products_is_exact():
    # the quarter-e entries differ by e^(-n-1/4) ((2n+1)/(2n+2))^(-(n+1)(2n+1))
    kt1, kt2 = pr.builtin("KT1"), pr.builtin("KT2")
    for n in range(9):
        a = pr.partial_exact(kt1, n)
        b = pr.partial_exact(kt2, n)
        swing = Fraction(2 * n + 1, 2 * n + 2) ** (-(n + 1) * (2 * n + 1))
        assert a.rational_part == b.rational_part * swing
        assert a.e_power == b.e_power - n - Fraction(1, 4)


def test_fourth_power_decomposition_is_exact():
    # The fourth power of the quarter-e even partial splits into an explicit
    # swing factor, the even partial of the squared-ratio product at
    # parameter 1/2, and a telescoping tail product, exactly as rationals,
    # with the e-channel matching e^(2n) on the nose.
    kt2 = pr.builtin("KT2")
    mid = pr.builtin("ADAMCHIK_E", Fraction(1, 2))
    tail = pr.parse_product_spec(
        "name = telescoping-tail\nfactor = (k-1)/k\nexponent = (-1)^k\n"
        "k_start = 2\nupper = 2*n+1"
    )
    for n in range(1, 7):
        a = pr.partial_exact(kt2, n)
        lhs = a.rational_part**4
        assert a.e_power * 4 == 2 * n
        rhs = (
            2
            * Fraction(2 * n, 2 * n + 1) ** ((2 * n + 1) ** 2)
            * pr.partial_exact(mid, n).rational_part
            * pr.partial_exact(tail, n).rational_part
        )
        assert pr.partial_exact(mid, n).e_power == 0
        assert lhs == rhs


# ---------------------------------------------------------------------------
# log-space evaluation against the oracle


def test_log_partial_matches_ln_of_exact_rational():
    got = pr.log_partial(pr.builtin("KT3"), 1, 128)
    want = nk.ln_rational(Fraction(27, 25), 128)
    assert nk.agreement_digits(got, want) >= nk.digits_for_bits(128) - 4
    assert nk.truncated_decimal(got, 5).startswith("0.076961")


def test_log_partial_includes_e_channel_and_bridge():
    p = 160
    got = pr.log_partial(pr.builtin("HOLCOMBE"), 2, p)
    want = nk.add(
        nk.to_real(Fraction(5, 2), p),
        nk.mul(nk.ln_rational(Fraction(3, 4), p), nk.to_real(4, p), p),
        p,
    )
    assert nk.agreement_digits(got, want) >= nk.digits_for_bits(p) - 4


ORACLE_CASES = [
    ("KT1", None), ("KT2", None), ("KT3", None), ("KT4", None),
    ("MELZAK", None), ("GS53R", None), ("GS55R", None), ("HOLCOMBE", None),
    ("BD_D", Fraction(1)), ("ADAMCHIK_E", Fraction(1, 2)),
    ("ADAMCHIK_P5", Fraction(1, 4)),
]


@pytest.mark.parametrize("name,x", ORACLE_CASES, ids=lambda v: str(v))
def test_oracle_equivalence_small_partials(name, x):
    # exp(log partial) must match the exact rational times e^(e_power)
    # to working-digits - 8 for every catalog entry and n <= 8
    p = 192
    spec = pr.builtin(name, x)
    session = pr.ProductEvalSession(spec)
    need = int(p * mp.log(2, 10)) - 8
    with mp.workdps(140):
        for n in range(9):
            exact = pr.partial_exact(spec, n)
            want = mpq(exact.rational_part) * mp.exp(mpq(exact.e_power))
            got = mp.exp(as_mpf(session.log_partial(n, p)))
            rel = abs(got - want) / want
            digits = mp.inf if rel == 0 else -mp.log10(rel)
            assert digits >= need, f"n={n}: only {mp.nstr(digits, 5)} digits"


def test_incremental_session_matches_from_scratch_bit_for_bit():
    spec = pr.builtin("GS55R")
    session = pr.ProductEvalSession(spec)
    walked = [session.log_partial(n, 160) for n in range(13)]
    fresh = [pr.log_partial(spec, n, 160) for n in range(13)]
    assert [w.raw for w in walked] == [f.raw for f in fresh]


def test_session_restarts_when_the_truncation_map_goes_backward():
    spec = pr.builtin("KT2")
    session = pr.ProductEvalSession(spec)
    session.log_partial(8, 160)
    again = session.log_partial(2, 160)
    assert again.raw == pr.log_partial(spec, 2, 160).raw


@settings(deadline=None, max_examples=60)
@given(
    a=st.integers(min_value=-3, max_value=8),
    b=st.integers(min_value=1, max_value=8),
    n=st.integers(min_value=0, max_value=3),
)
def test_parameterized_oracle_equivalence_property(a, b, n):
    x = Fraction(a, b)
    assume(x > -1)
    spec = pr.builtin("BD_D", x)
    exact = pr.partial_exact(spec, n)
    p = 160
    got = pr.log_partial(spec, n, p)
    with mp.workdps(100):
        want = mp.log(mpq(exact.rational_part)) + mpq(exact.e_power)
        scale = max(1, abs(want))
        assert abs(as_mpf(got) - want) / scale < mp.mpf(2) ** (16 - p)


# ---------------------------------------------------------------------------
# accelerated limits against independently computed closed forms


def limit_value(name, x=None, digits=42):
    spec = pr.builtin(name, x)
    est = pr.limit(spec, nk.bits_for_digits(digits + 2), digits)
    return as_mpf(est.value), est


def test_limit_error_estimate_is_honest_for_catalog_entries():
    value, est = limit_value("KT3")
    truth = mp.exp(2 * mp.catalan / mp.pi - mp.mpf(1) / 2)
    assert abs(value - truth) <= 4 * as_mpf(est.error_estimate) + mp.mpf(10) ** -41


LIMIT_CASES = [
    ("KT1", None, lambda: mp.exp(7 * mp.zeta(3) / (4 * mp.pi**2) + mp.mpf(1) / 4)),
    ("KT2", None, lambda: mp.exp(7 * mp.zeta(3) / (4 * mp.pi**2) - mp.mpf(1) / 4)),
    ("KT3", None, lambda: mp.exp(2 * mp.catalan / mp.pi - mp.mpf(1) / 2)),
    ("KT4", None, lambda: mp.exp(2 * mp.catalan / mp.pi + mp.mpf(1) / 2)),
    ("MELZAK", None, lambda: mp.pi * mp.e / 2),
    ("HOLCOMBE", None, lambda: mp.pi),
    ("GS53R", None, lambda: mp.exp(7 * mp.zeta(3) / mp.pi**2)),
    ("GS55R", None, lambda: mp.exp(4 * mp.catalan / mp.pi)),
    ("BD_D", Fraction(1), lambda: mp.glaisher**6 / (mp.root(2, 6) * mp.sqrt(mp.pi))),
    (
        "ADAMCHIK_E",
        Fraction(1, 2),
        lambda: mp.pi / 4 * mp.exp(mp.mpf(1) / 2 + 7 * mp.zeta(3) / mp.pi**2),
    ),
]


@pytest.mark.parametrize("name,x,ref", LIMIT_CASES, ids=lambda v: str(v) if not callable(v) else "")
def test_limits_match_closed_forms_to_40_digits(name, x, ref):
    value, est = limit_value(name, x)
    want = ref()
    assert abs(value - want) < abs(want) * mp.mpf(10) ** -40
    assert est.terms_used <= 1000


def test_limit_reflection_ratio_for_half_shifted_products():
    # ratio of the two half-shifted limits at +-1/4 has its own closed form
    plus, _ = limit_value("ADAMCHIK_P5", Fraction(1, 4))
    minus, _ = limit_value("ADAMCHIK_P5", Fraction(-1, 4))
    want = mp.exp(-mp.mpf(1) / 2 + 2 * mp.catalan / mp.pi)
    assert abs(plus / minus - want) < abs(want) * mp.mpf(10) ** -38


def test_limit_pair_relations():
    v1, _ = limit_value("KT1")
    v2, _ = limit_value("KT2")
    v3, _ = limit_value("KT3")
    v4, _ = limit_value("KT4")
    assert abs(v1 / v2 - mp.exp(mp.mpf(1) / 2)) < mp.mpf(10) ** -38
    assert abs(v4 / v3 - mp.e) < mp.mpf(10) ** -38


def test_limit_decimal_prefixes():
    spec = pr.builtin("KT3")
    est = pr.limit(spec, nk.bits_for_digits(44), 42)
    assert nk.truncated_decimal(est.value, 6).startswith("1.08667")
    spec = pr.builtin("KT2")
    est = pr.limit(spec, nk.bits_for_digits(44), 42)
    assert nk.truncated_decimal(est.value, 6).startswith("0.96381")
