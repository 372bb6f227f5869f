import itertools
import math

import pytest

from womlab.analytic import WomCodeSpec, max_sum_rate
from womlab.wom_codec import (
    RS_DESCRIPTOR,
    CellState,
    WomConstraintError,
    ideal_codec,
    rs_decode,
    rs_encode,
)

ERASED = CellState.erased(3)


def test_first_write_example():
    assert str(rs_encode(1, 0b01, ERASED)) == "100"


def test_second_write_example():
    assert str(rs_encode(2, 0b01, CellState.from_str("010"))) == "011"


@pytest.mark.parametrize("bits, msg", [("000", 0), ("001", 3), ("110", 3), ("100", 1), ("011", 1)])
def test_decode_examples(bits, msg):
    assert rs_decode(CellState.from_str(bits)) == msg


def test_decode_covers_all_states():
    decoded = {rs_decode(CellState(c)) for c in itertools.product((0, 1), repeat=3)}
    assert decoded == {0, 1, 2, 3}


@pytest.mark.parametrize("m1, m2", list(itertools.product(range(4), repeat=2)))
def test_two_writes_round_trip(m1, m2):
    s1 = rs_encode(1, m1, ERASED)
    assert rs_decode(s1) == m1 and ERASED.can_become(s1)
    s2 = rs_encode(2, m2, s1)
    assert rs_decode(s2) == m2 and s1.can_become(s2)
    if m1 == m2:
        assert s2 == s1


def test_constraint_errors():
    with pytest.raises(WomConstraintError):
        rs_encode(1, 0, CellState.from_str("100"))
    with pytest.raises(WomConstraintError):
        rs_encode(2, 0, CellState.from_str("110"))
    with pytest.raises(ValueError):
        rs_encode(3, 0, ERASED)
    with pytest.raises(ValueError):
        rs_encode(1, 4, ERASED)
    with pytest.raises(ValueError):
        CellState((0, 2, 1))


def test_rs_sum_rate():
    assert RS_DESCRIPTOR.sum_rate == pytest.approx(4 / 3)
    assert RS_DESCRIPTOR.sum_rate <= max_sum_rate(2)


def test_ideal_codec_cp():
    d = ideal_codec(WomCodeSpec(2, (1.0, 0.5)))
    assert d.slots == (1, 2)
    assert d.page_scale == 1.0
    assert d.rates == pytest.approx((1.0, 0.5))


def test_ideal_codec_naive_fixed_rate():
    d = ideal_codec(WomCodeSpec(2, (0.77, 0.77), fixed_rate=True))
    assert d.slots == (1, 1)
    assert d.page_scale == pytest.approx(1 / 0.77)
    assert d.rates[0] == pytest.approx(0.77, abs=1e-4)


def test_ideal_codec_rejects_outside_capacity():
    with pytest.raises(ValueError):
        ideal_codec(WomCodeSpec(2, (1.0, 0.51)))


@pytest.mark.parametrize("rates", [(1.0, 0.5), (0.5, 0.25), (1.0, 1.0 / 3)])
def test_ideal_codec_slots_reciprocal(rates):
    d = ideal_codec(WomCodeSpec(2, rates))
    assert d.slots == tuple(round(1 / r) for r in rates)
