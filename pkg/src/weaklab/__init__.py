"""Numerical laboratory for weak-type fractional quotients on metric measure spaces."""

__version__ = "0.1.0"

from .errors import ConfigError, InputError, WeakLabError
from .growth import CoshMinusOne, MonotoneTable, Power, check_growth_validity, eval_growth, invert_growth
from .space import (
    EuclideanLp,
    FiniteInterval,
    HeisenbergKoranyi,
    HyperbolicHalfPlane,
    OscillatingWeightLine,
    RegularityProfile,
    WeightedLine,
    ball_volume,
    distance,
    sample_ball,
    sample_support_region,
)
from .testfn import IndicatorBall, ScaledBy, ShiftedUnitInterval, StepSum, Zero, lp_norm_p, truncate
from .levelset import (
    LevelSetEstimate,
    LevelSetQuery,
    exact_mass_1d,
    exact_mass_indicator,
    half_set_mass,
    in_level_set,
    mc_mass,
)
from .asymptotics import LambdaGrid, SweepReport, check_bounds, limit_at_zero, sweep, weak_norm_p
from .regularity import (
    check_bishop_gromov,
    construct_oscillating_radii,
    estimate_ahlfors,
    estimate_avr,
    estimate_doubling,
)
