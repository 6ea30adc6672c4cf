import pytest

from labmotion.textio import fmt6, parse_float


def test_fmt6_strips_trailing_zeros():
    assert fmt6(0.5) == "0.5"
    assert fmt6(1.0) == "1"
    assert fmt6(0.0) == "0"
    assert fmt6(-0.0) == "0"
    assert fmt6(1 / 30) == "0.033333"
    assert fmt6(-1.25) == "-1.25"
    assert fmt6(2.0000001) == "2"


def test_fmt6_keeps_six_decimals():
    assert fmt6(0.1234567) == "0.123457"
    assert fmt6(123.456789) == "123.456789"


def test_fmt6_negative_rounding_to_zero():
    assert fmt6(-1e-9) == "0"


def test_parse_float_valid():
    assert parse_float("0.5", where="x") == 0.5
    assert parse_float("-3", where="x") == -3.0


def test_parse_float_invalid_mentions_location():
    with pytest.raises(ValueError, match="line 4"):
        parse_float("abc", where="line 4")
    with pytest.raises(ValueError, match="line 2"):
        parse_float("nan", where="line 2")
