import pytest
from gmpy2 import mpq, mpz

from ergocount.scalars import (
    Dyadic,
    bracketed_floor,
    is_dyadic,
    log2_bracket,
    log2_bracket_rational,
    log2sq_bracket,
    pow2,
    pow2_exponent,
    q_parse,
    q_str,
    qceil,
    qfloor,
    trailing_zeros,
)


def test_qfloor_qceil():
    assert qfloor(mpq(7, 2)) == 3
    assert qceil(mpq(7, 2)) == 4
    assert qfloor(mpq(-7, 2)) == -4
    assert qceil(mpq(-7, 2)) == -3
    assert qfloor(mpq(6)) == 6
    assert qceil(mpq(6)) == 6


def test_pow2_signs():
    assert pow2(5) == 32
    assert pow2(-3) == mpq(1, 8)
    assert pow2(0) == 1


def test_pow2_exponent():
    assert pow2_exponent(mpq(8)) == 3
    assert pow2_exponent(mpq(1, 16)) == -4
    assert pow2_exponent(mpq(3, 4)) is None
    assert pow2_exponent(mpq(0)) is None
    assert pow2_exponent(mpq(1)) == 0


def test_dyadic_roundtrip():
    d = Dyadic.from_q(mpq(12, 32))
    assert (d.m, d.e) == (3, -3)
    assert d.to_q() == mpq(3, 8)
    assert Dyadic.from_q(0) == Dyadic(mpz(0), 0)
    with pytest.raises(ValueError):
        Dyadic.from_q(mpq(1, 3))
    with pytest.raises(ValueError):
        Dyadic(mpz(4), 1)


def test_is_dyadic():
    assert is_dyadic(mpq(5, 8))
    assert not is_dyadic(mpq(5, 6))
    assert is_dyadic(mpq(7))


def test_trailing_zeros():
    assert trailing_zeros(8) == 3
    assert trailing_zeros(12) == 2
    assert trailing_zeros(1) == 0


def test_q_str_parse():
    assert q_str(mpq(3, 4)) == "3/4"
    assert q_str(mpq(-7)) == "-7/1"
    assert q_parse("3/4") == mpq(3, 4)
    with pytest.raises(TypeError):
        q_parse(0.75)


def test_log2_bracket_contains_truth():
    lo, hi = log2_bracket(3, 20)
    # log2(3) = 1.5849625007...
    assert lo <= mpq(15849625, 10**7) + mpq(1, 10**6)
    assert lo < hi
    assert hi - lo == pow2(-20)
    # bracket straddles the true value: 2**(lo*scale) <= 3**scale
    assert lo > mpq(158, 100) and hi < mpq(159, 100)


def test_log2_bracket_exact_pow2():
    lo, hi = log2_bracket(16, 8)
    assert lo == hi == 4


def test_log2sq_bracket():
    lo, hi = log2sq_bracket(3, 24)
    assert lo < hi
    # (log2 3)^2 = 2.51214...
    assert lo > mpq(251, 100) and hi < mpq(252, 100)


def test_log2_bracket_rational_contains_truth():
    # log2(3/2) = 0.5849625007...
    lo, hi = log2_bracket_rational(mpq(3, 2), 16)
    assert lo <= mpq(58497, 10**5) <= hi
    assert hi - lo <= pow2(-14)
    # negative logs work the same way
    lo, hi = log2_bracket_rational(mpq(99, 100), 16)
    assert lo < hi < 0
    assert lo <= mpq(-145, 10**4) <= hi
    # exact powers of two collapse, integer or not
    assert log2_bracket_rational(mpq(1, 4), 8) == (mpq(-2), mpq(-2))
    assert log2_bracket_rational(8, 8) == (mpq(3), mpq(3))
    # agrees with the integer bracket where both apply
    ilo, ihi = log2_bracket(3, 16)
    rlo, rhi = log2_bracket_rational(3, 16)
    assert rlo <= ihi and ilo <= rhi
    with pytest.raises(ValueError):
        log2_bracket_rational(0)


def test_bracketed_floor_pins():
    # floor(3 + log2(3) + 2 log2(log2(3)-ish)) style shapes pin quickly
    val = bracketed_floor(3, [lambda b: log2_bracket(3, b)])
    assert val == 4  # floor(3 + 1.58496) = 4
    val = bracketed_floor(mpq(1, 2), [lambda b: log2_bracket(2, b)])
    assert val == 1  # floor(0.5 + 1)
