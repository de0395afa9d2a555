import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weaklab.errors import ConfigError, InputError
from weaklab.growth import (
    CoshMinusOne,
    MonotoneTable,
    Power,
    check_growth_validity,
    eval_growth,
    growth_from_dict,
    invert_growth,
)


def test_power_values():
    assert eval_growth(Power(2), 3.0) == 9.0
    assert eval_growth(Power(4), 2.0) == 16.0
    assert invert_growth(Power(2), 9.0) == 3.0


def test_cosh_minus_one_values():
    assert eval_growth(CoshMinusOne(), 0.0) == 0.0
    assert invert_growth(CoshMinusOne(), math.cosh(2.0) - 1.0) == pytest.approx(2.0, rel=1e-14)
    r = np.linspace(0.01, 5, 50)
    assert np.allclose(eval_growth(CoshMinusOne(), r), np.cosh(r) - 1.0, rtol=1e-13)


def test_table_inverse_matches_cube_root():
    r = np.linspace(0.0, 10.0, 201)
    f = MonotoneTable(tuple(r), tuple(r ** 3))
    assert invert_growth(f, 8.0) == pytest.approx(2.0, abs=1e-6)


def test_table_out_of_range():
    r = np.linspace(0.0, 10.0, 11)
    f = MonotoneTable(tuple(r), tuple(r ** 2))
    with pytest.raises(InputError):
        eval_growth(f, 11.0)
    with pytest.raises(InputError):
        invert_growth(f, 101.0)


def test_negative_inputs_rejected():
    with pytest.raises(InputError):
        eval_growth(Power(1), -1.0)
    with pytest.raises(InputError):
        invert_growth(Power(1), -1.0)


def test_validity_verdicts():
    assert check_growth_validity(Power(1.0)).valid
    assert check_growth_validity(CoshMinusOne()).valid
    bad = check_growth_validity(Power(0.5))
    assert not bad.valid and any("convex" in v for v in bad.violations)


def test_table_validity_warns_bounded_domain():
    r = np.linspace(0.0, 10.0, 101)
    v = check_growth_validity(MonotoneTable(tuple(r), tuple(r ** 2)))
    assert v.valid and v.warnings


def test_cosh_validity_notes_overflow_truncation():
    v = check_growth_validity(CoshMinusOne())
    assert any("overflow" in w for w in v.warnings)


def test_from_dict():
    assert growth_from_dict({"kind": "power", "s": 4}) == Power(4.0)
    assert growth_from_dict({"kind": "cosh_minus_one"}) == CoshMinusOne()
    with pytest.raises(ConfigError) as exc:
        growth_from_dict({"kind": "exp"})
    assert exc.value.field == "growth.kind"


def test_power_path_is_plain_power():
    # the level-set code evaluates Power through the same eval_growth path
    r = np.geomspace(1e-3, 1e3, 101)
    for s in (1.0, 2.0, 2.5, 4.0):
        assert np.array_equal(eval_growth(Power(s), r), r ** s)


@given(st.floats(0.0, 1e6), st.sampled_from([Power(1), Power(2), Power(3.5), CoshMinusOne()]))
def test_round_trip(y, f):
    r = invert_growth(f, y)
    assert abs(eval_growth(f, r) - y) <= 1e-10 * (1 + y)


@given(st.floats(0.0, 999.0))
def test_table_round_trip(y):
    r = np.linspace(0.0, 10.0, 201)
    f = MonotoneTable(tuple(r), tuple(r ** 3))
    assert abs(eval_growth(f, invert_growth(f, y)) - y) <= 1e-10 * (1 + y)
