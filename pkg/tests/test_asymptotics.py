import math

import numpy as np
import pytest

from weaklab.asymptotics import (
    LambdaGrid,
    check_bounds,
    limit_at_zero,
    sweep,
    theorem_constants,
    weak_norm_p,
)
from weaklab.errors import ConfigError, InputError
from weaklab.growth import CoshMinusOne, Power
from weaklab.scenario import BUILTINS, load_scenario
from weaklab.space import EuclideanLp, FiniteInterval, OscillatingWeightLine, RegularityProfile, WeightedLine
from weaklab.testfn import IndicatorBall, ShiftedUnitInterval, StepSum, Zero, truncate

LINE = EuclideanLp(N=1, profile=RegularityProfile(C_a=2, C_A=2, AVR=2))
UNIT = IndicatorBall((0.5,), 0.5)


def D(lam, p):
    return np.where(lam <= 1, 4 - 2 * lam ** p, 2 / lam ** p)


def test_grid_validation():
    assert LambdaGrid(0.01, 4, 32).values.size == 32
    ratios = np.diff(np.log(LambdaGrid(0.01, 4, 32).values))
    assert np.allclose(ratios, ratios[0])
    for bad in ((0, 1, 8), (1, 0.5, 8), (0.1, 1, 7), (0.1, 1, 8.5)):
        with pytest.raises(ConfigError):
            LambdaGrid(*bad)


def test_sweep_line_curve_and_weak_norm():
    rep = sweep(LINE, UNIT, 1, LambdaGrid(0.01, 4, 32))
    assert np.allclose(rep.values, D(rep.lambdas, 1), rtol=1e-10)
    wn = weak_norm_p(rep)
    assert wn.value == pytest.approx(4 - 2 * 0.01, rel=1e-12) and wn.at_lambda_min and wn.std_err == 0


def test_zero_function():
    rep = sweep(LINE, Zero(), 1, LambdaGrid(0.001, 1, 40))
    assert np.all(rep.values == 0)
    assert rep.weak_norm.value == 0 and not rep.weak_norm.at_lambda_min
    assert rep.limit.applicable and rep.limit.value == 0


def test_finite_interval_decays():
    rep = sweep(FiniteInterval(profile=RegularityProfile(C_A=2)), StepSum(((0.0, 0.25, 1.0),)), 1, LambdaGrid(1e-4, 1, 41))
    assert np.all(rep.values <= rep.lambdas * (1 + 1e-12))
    assert rep.values[0] < 1e-3
    verdicts = {v.claim: v.status for v in check_bounds(rep, rep.space.profile, "avr")}
    assert verdicts == {"upper": "pass", "lower": "expected-fail", "limit": "pass"}


def test_weighted_line_u8_point():
    rep = sweep(WeightedLine(), ShiftedUnitInterval(8), 2, LambdaGrid(1.0, 2.0, 8))
    assert rep.estimates[0].lam == 1.0 and rep.estimates[0].value >= 16


def test_limit_line():
    for p in (1, 2):
        lim = limit_at_zero(sweep(LINE, UNIT, p, LambdaGrid(1e-3, 4, 48)))
        assert lim.applicable and lim.value == pytest.approx(4.0, rel=5e-3)


def test_limit_too_few_points():
    rep = sweep(LINE, UNIT, 1, LambdaGrid(1e-2, 4, 8))
    with pytest.raises(InputError):
        limit_at_zero(rep)
    assert not rep.limit.applicable and "points" in rep.limit.reason


def test_limit_refused_on_oscillation():
    sc = load_scenario("oscillating_no_limit")
    rep = sweep(sc.space, sc.u, sc.p, sc.grid)
    assert not rep.limit.applicable
    assert rep.limit.diagnostics["decade_spread"] > 0.05 or rep.limit.diagnostics["relative_residual"] > 0.05
    verdicts = {v.claim: v.status for v in check_bounds(rep, sc.space.profile, "ahlfors")}
    assert verdicts["limit_band"] == "pass"
    assert verdicts["upper"] == "pass" and verdicts["lower"] == "pass"


def test_check_bounds_line():
    rep = sweep(LINE, UNIT, 1, LambdaGrid(1e-3, 4, 48))
    vs = check_bounds(rep, LINE.profile, "avr", 0.005)
    assert [v.status for v in vs] == ["pass", "pass", "pass"]
    assert rep.constants == {"theorem": "avr", "c2": 8.0, "c1": 4.0, "c3": 4.0}
    vs = check_bounds(rep, LINE.profile, "ahlfors")
    assert [v.claim for v in vs] == ["upper", "lower", "limit_band"]


@pytest.mark.parametrize("n", [16, 32])
def test_weighted_line_upper_fails(n):
    space = WeightedLine(profile=RegularityProfile(C_A=4, AVR=1))
    rep = sweep(space, ShiftedUnitInterval(n), 2, LambdaGrid(1e-2, 1, 16))
    vs = {v.claim: v for v in check_bounds(rep, space.profile, "avr")}
    assert vs["upper"].status == "fail" and vs["upper"].margin < 0


def test_theorem_constants_errors():
    with pytest.raises(ConfigError):
        theorem_constants("avr", RegularityProfile(C_A=1), 1, Power(1))
    with pytest.raises(ConfigError):
        theorem_constants("ahlfors", RegularityProfile(C_A=1, AVR=1), 1, Power(1))
    with pytest.raises(ConfigError):
        theorem_constants("avr", RegularityProfile(C_A=1, AVR=1), 1, CoshMinusOne())
    with pytest.raises(ConfigError):
        theorem_constants("bogus", RegularityProfile(C_A=1, AVR=1), 1, Power(1))
    c = theorem_constants("f_ahlfors", RegularityProfile(C_a=1, C_A=3), 2, CoshMinusOne())
    assert c == {"theorem": "f_ahlfors", "c2": 24.0, "c1": 2.0, "band": [2.0, 6.0]}
    assert theorem_constants("avr", RegularityProfile(C_A=2), 1, Power(1), total_mass_finite=True) == {"theorem": "avr", "c2": 8.0}


EXACT_INFINITE = [k for k, v in BUILTINS.items() if v.get("method", "auto") == "auto" and v["space"]["kind"] != "finite_interval"]


@pytest.mark.parametrize("name", EXACT_INFINITE)
def test_sandwich_on_exact_builtins(name):
    sc = load_scenario(name)
    rep = sweep(sc.space, sc.u, sc.p, sc.grid, sc.growth)
    prof = sc.space.profile
    N = rep.norm_p
    c2 = 2 ** (sc.p + 1) * prof.C_A
    c1 = 2 * (prof.AVR if sc.theorem.endswith("avr") else prof.C_a)
    sup = max(rep.weak_norm.value, rep.limit.value if rep.limit.applicable else 0.0)
    assert sup >= c1 * N * (1 - 1e-6)
    if "upper" not in sc.expect:
        assert rep.weak_norm.value <= c2 * N * (1 + 1e-6)


@pytest.mark.parametrize("p", [1, 2])
def test_grid_refinement(p):
    a = sweep(LINE, UNIT, p, LambdaGrid(1e-3, 4, 32))
    b = sweep(LINE, UNIT, p, LambdaGrid(1e-3, 4, 63))
    assert abs(a.weak_norm.value - b.weak_norm.value) <= 1e-12
    assert abs(a.limit.value - b.limit.value) <= 3 * max(a.limit.std_err, b.limit.std_err) + 1e-9


def test_truncation_stability():
    u = StepSum(((-3.0, -2.0, 1.0), (1.0, 2.5, 2.0)))
    space = WeightedLine(profile=RegularityProfile(C_A=4, AVR=1))
    grid = LambdaGrid(1e-7, 1.0, 71)
    full = sweep(space, u, 1, grid)
    pair = truncate(u, (0.0,), 4.0, space)
    assert pair.v_R.lp_norm_p(space, 1) == 0.0
    part = sweep(space, pair.u_R, 1, grid)
    assert full.limit.applicable and part.limit.applicable
    assert abs(full.limit.value - part.limit.value) <= 3 * math.hypot(full.limit.std_err, part.limit.std_err) + 1e-12
    # the limit itself: 2 * AVR * ||u||^p
    assert full.limit.value == pytest.approx(2 * 1 * full.norm_p, rel=1e-2)


def test_mc_sweep_budget_split_and_limit():
    sc = load_scenario("euclid1d_mc")
    rep = sweep(sc.space, sc.u, sc.p, sc.grid, method="monte_carlo", budget=800_000, seed=3)
    assert all(e.n_samples == 50_000 for e in rep.estimates)
    assert rep.limit.applicable
    assert abs(rep.limit.value - 4.0) <= max(0.02 * 4, 3 * rep.limit.std_err)
    with pytest.raises(ConfigError):
        sweep(sc.space, sc.u, sc.p, sc.grid, method="monte_carlo", budget=None, seed=3)
