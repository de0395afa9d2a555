"""Scenario files: parsing, validation and the built-in catalogue.

A scenario is a JSON object; every problem is reported as a
:class:`~weaklab.errors.ConfigError` naming the offending field.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import _line
from .asymptotics import THEOREMS, LambdaGrid
from .errors import ConfigError
from .growth import GrowthFunction, growth_from_dict
from .levelset import METHODS, MIN_BUDGET, exact_available
from .regularity import construct_oscillating_radii
from .space import (
    EuclideanLp,
    FiniteInterval,
    HeisenbergKoranyi,
    HyperbolicHalfPlane,
    OscillatingWeightLine,
    RegularityProfile,
    SpaceDescriptor,
    WeightedLine,
)
from .testfn import TestFunction, function_from_dict

SCENARIO_VERSION = 1
STATUSES = ("pass", "fail", "not-applicable", "expected-fail")

_KNOWN_KEYS = {
    "version", "name", "description", "space", "function", "p", "growth", "theorem", "grid",
    "method", "budget", "seed", "limit_rtol", "expect", "regularity", "symmetry_lambda", "tags",
}


@dataclass
class Scenario:
    name: str
    space: SpaceDescriptor
    u: TestFunction
    p: float
    growth: Optional[GrowthFunction]
    theorem: str
    grid: LambdaGrid
    method: str
    budget: Optional[int]
    seed: int
    limit_rtol: float
    expect: dict
    regularity: bool
    symmetry_lambda: Optional[float]
    tags: tuple
    raw: dict = field(repr=False)

    def echo(self):
        return copy.deepcopy(self.raw)


def _need(d, key, where=""):
    if key not in d:
        raise ConfigError("missing required field", f"{where}{key}")
    return d[key]


def _number(v, name, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", name)
    v = float(v)
    if not math.isfinite(v) or (positive and not v > 0):
        raise ConfigError(f"expected a positive finite number, got {v!r}", name)
    return v


def _profile(d):
    if d is None:
        return RegularityProfile()
    if not isinstance(d, dict):
        raise ConfigError("expected an object", "space.profile")
    unknown = set(d) - {"C_a", "C_A", "C_d", "AVR", "K"}
    if unknown:
        raise ConfigError(f"unknown constants {sorted(unknown)}", "space.profile")
    return RegularityProfile(**{k: _number(v, f"space.profile.{k}", True) for k, v in d.items()})


def _weight(d):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("expected an object with a 'kind'", "space.weight")
    if d["kind"] == "one_plus_abs":
        return _line.one_plus_abs()
    if d["kind"] == "piecewise_polynomial":
        return _line.PiecewisePolynomial(tuple(d.get("breakpoints", ())), tuple(map(tuple, d["coefficients"])))
    raise ConfigError(f"unknown weight kind {d['kind']!r}", "space.weight.kind")


def space_from_dict(d) -> SpaceDescriptor:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("expected an object with a 'kind'", "space")
    kind = d["kind"]
    common = {"profile": _profile(d.get("profile"))}
    if "growth" in d:
        common["growth"] = growth_from_dict(d["growth"])
    if "base_point" in d:
        common["base_point"] = tuple(d["base_point"])
    if kind == "euclidean":
        q = d.get("q", 2.0)
        q = math.inf if q in ("inf", "infinity") else _number(q, "space.q")
        dim = _need(d, "dim", "space.")
        if isinstance(dim, bool) or not isinstance(dim, int):
            raise ConfigError("expected an integer", "space.dim")
        return EuclideanLp(N=dim, q=q, **common)
    if kind == "weighted_line":
        return WeightedLine(weight=_weight(d.get("weight", {"kind": "one_plus_abs"})), **common)
    if kind == "heisenberg":
        return HeisenbergKoranyi(**common)
    if kind == "hyperbolic_half_plane":
        return HyperbolicHalfPlane(**common)
    if kind == "oscillating_weight_line":
        m = _number(_need(d, "m", "space."), "space.m", True)
        M = _number(_need(d, "M", "space."), "space.M", True)
        if "radii" in d:
            radii = tuple(d["radii"])
        else:
            c = _need(d, "construct", "space.")
            radii = tuple(construct_oscillating_radii(m, M, 1, int(c.get("count", 8)), float(c.get("r1", 1.0))))
        return OscillatingWeightLine(m=m, M=M, radii=radii, **common)
    if kind == "finite_interval":
        return FiniteInterval(a=_number(d.get("a", 0.0), "space.a"), b=_number(d.get("b", 1.0), "space.b"), **common)
    raise ConfigError(f"unknown space kind {kind!r}", "space.kind")


def parse_scenario(raw) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object", "scenario")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", "scenario")
    version = _need(raw, "version")
    if version != SCENARIO_VERSION:
        raise ConfigError(f"unsupported version {version!r}", "version")
    space = space_from_dict(_need(raw, "space"))
    u = function_from_dict(_need(raw, "function"))
    p = _number(_need(raw, "p"), "p")
    if p < 1:
        raise ConfigError("p must be >= 1", "p")
    growth = growth_from_dict(raw["growth"]) if raw.get("growth") is not None else None
    theorem = _need(raw, "theorem")
    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem selector {theorem!r}; choose from {list(THEOREMS)}", "theorem")
    g = _need(raw, "grid")
    if not isinstance(g, dict):
        raise ConfigError("expected an object", "grid")
    grid = LambdaGrid(
        _number(_need(g, "lambda_min", "grid."), "grid.lambda_min", True),
        _number(_need(g, "lambda_max", "grid."), "grid.lambda_max", True),
        _need(g, "count", "grid."),
    )
    method = raw.get("method", "auto")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}", "method")
    seed = _need(raw, "seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer", "seed")
    budget = _need(raw, "budget")
    resolved = method if method != "auto" else (exact_available(space, u) or "monte_carlo")
    if resolved == "monte_carlo":
        if isinstance(budget, bool) or not isinstance(budget, int) or budget < MIN_BUDGET:
            raise ConfigError(f"Monte Carlo scenarios need an integer budget >= {MIN_BUDGET}", "budget")
        if budget // grid.count < MIN_BUDGET:
            raise ConfigError(f"budget per grid point must be >= {MIN_BUDGET}", "budget")
    elif budget is not None and (isinstance(budget, bool) or not isinstance(budget, int)):
        raise ConfigError("budget must be an integer or null", "budget")
    expect = raw.get("expect", {})
    if not isinstance(expect, dict) or any(v not in STATUSES for v in expect.values()):
        raise ConfigError(f"expect maps claims to one of {list(STATUSES)}", "expect")
    sym = raw.get("symmetry_lambda")
    return Scenario(
        name=str(raw.get("name", "scenario")),
        space=space,
        u=u,
        p=p,
        growth=growth,
        theorem=theorem,
        grid=grid,
        method=method,
        budget=budget,
        seed=seed,
        limit_rtol=_number(raw.get("limit_rtol", 0.01), "limit_rtol", True),
        expect=dict(expect),
        regularity=bool(raw.get("regularity", False)),
        symmetry_lambda=None if sym is None else _number(sym, "symmetry_lambda", True),
        tags=tuple(raw.get("tags", ())),
        raw=raw,
    )


def load_scenario(ref) -> Scenario:
    """Parse a builtin name or a path to a JSON scenario file."""
    if ref in BUILTINS:
        return parse_scenario(copy.deepcopy(BUILTINS[ref]))
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"no builtin or file named {ref!r}", "scenario")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "scenario") from None
    return parse_scenario(raw)


# -- built-in catalogue ------------------------------------------------------------

_UNIT_INTERVAL = {"kind": "indicator_ball", "center": [0.5], "radius": 0.5}


def _sc(name, tags, **kw):
    d = {"version": SCENARIO_VERSION, "name": name, "tags": list(tags), "method": "auto", "budget": None, "seed": 20240917}
    d.update(kw)
    return d


BUILTINS = {
    s["name"]: s
    for s in [
        _sc(
            "euclid1d_indicator",
            ("fast", "full"),
            description="Lebesgue line, u = 1_[0,1], p = 1, exact strips",
            space={"kind": "euclidean", "dim": 1, "profile": {"C_a": 2, "C_A": 2, "AVR": 2}},
            function=_UNIT_INTERVAL,
            p=1,
            theorem="avr",
            grid={"lambda_min": 1e-3, "lambda_max": 4.0, "count": 48},
            limit_rtol=0.005,
            symmetry_lambda=0.5,
        ),
        _sc(
            "euclid1d_indicator_p2",
            ("fast", "full"),
            description="Lebesgue line, u = 1_[0,1], p = 2, growth r^1",
            space={"kind": "euclidean", "dim": 1, "profile": {"C_a": 2, "C_A": 2, "AVR": 2}},
            function=_UNIT_INTERVAL,
            p=2,
            theorem="avr",
            grid={"lambda_min": 1e-3, "lambda_max": 4.0, "count": 48},
            limit_rtol=0.005,
        ),
        _sc(
            "euclid1d_mc",
            ("fast", "full"),
            description="Lebesgue line, u = 1_[0,1], p = 1, Monte Carlo path",
            space={"kind": "euclidean", "dim": 1, "profile": {"C_a": 2, "C_A": 2, "AVR": 2}},
            function=_UNIT_INTERVAL,
            p=1,
            theorem="avr",
            grid={"lambda_min": 1e-3, "lambda_max": 1e-2, "count": 16},
            method="monte_carlo",
            budget=4_000_000,
            limit_rtol=0.02,
            symmetry_lambda=0.5,
        ),
        _sc(
            "euclid2d_disk",
            ("fast", "full"),
            description="Euclidean plane, unit disk indicator, p = 2, lens-area quadrature",
            space={"kind": "euclidean", "dim": 2, "q": 2, "profile": {"C_a": math.pi, "C_A": math.pi, "AVR": math.pi}},
            function={"kind": "indicator_ball", "center": [0.0, 0.0], "radius": 1.0},
            p=2,
            theorem="avr",
            grid={"lambda_min": 1e-4, "lambda_max": 1e-1, "count": 31},
            limit_rtol=0.005,
        ),
        _sc(
            "weighted_line_u2",
            ("fast", "full"),
            description="weight 1+|x|, u = 1_[2,3], p = 2, symmetry diagnostic at lambda = 1",
            space={"kind": "weighted_line", "profile": {"C_A": 4, "AVR": 1}},
            function={"kind": "shifted_unit_interval", "n": 2},
            p=2,
            theorem="avr",
            grid={"lambda_min": 1e-7, "lambda_max": 1.0, "count": 71},
            symmetry_lambda=1.0,
        ),
        _sc(
            "finite_interval",
            ("fast", "full"),
            description="Lebesgue measure on [0,1], u = 1_[0,1/4], p = 1: D vanishes at 0",
            space={"kind": "finite_interval", "a": 0.0, "b": 1.0, "profile": {"C_A": 2}},
            function={"kind": "step_sum", "steps": [[0.0, 0.25, 1.0]]},
            p=1,
            theorem="avr",
            grid={"lambda_min": 1e-4, "lambda_max": 1.0, "count": 41},
        ),
        _sc(
            "example_3_2_no_upper_bound",
            ("fast", "full"),
            description="weight 1+|x|, u = 1_[32,33], p = 2, candidate C_A = 4: the upper bound fails",
            space={"kind": "weighted_line", "profile": {"C_A": 4, "AVR": 1, "C_d": 4}},
            function={"kind": "shifted_unit_interval", "n": 32},
            p=2,
            theorem="avr",
            grid={"lambda_min": 1e-7, "lambda_max": 1.0, "count": 71},
            expect={"upper": "fail", "C_A": "fail"},
            regularity=True,
        ),
        _sc(
            "oscillating_no_limit",
            ("fast", "full"),
            description="levels m = 1, M = 2 on growing annuli, u = 1_B(0,1), p = 1: no limit",
            space={"kind": "oscillating_weight_line", "m": 1, "M": 2, "construct": {"count": 8, "r1": 1}, "profile": {"C_a": 2, "C_A": 4}},
            function={"kind": "indicator_ball", "center": [0.0], "radius": 1.0},
            p=1,
            theorem="ahlfors",
            grid={"lambda_min": 1e-6, "lambda_max": 1e-1, "count": 51},
        ),
        _sc(
            "anisotropic_square_mc",
            ("full",),
            description="plane with the max norm, u = indicator of the unit square, p = 1",
            space={"kind": "euclidean", "dim": 2, "q": "inf", "profile": {"C_a": 4, "C_A": 4, "AVR": 4}},
            function={"kind": "indicator_ball", "center": [0.5, 0.5], "radius": 0.5},
            p=1,
            theorem="avr",
            grid={"lambda_min": 1e-3, "lambda_max": 1e-2, "count": 16},
            method="monte_carlo",
            budget=10_000_000,
            limit_rtol=0.03,
            symmetry_lambda=0.01,
        ),
        _sc(
            "heisenberg_gauge_mc",
            ("full",),
            description="Heisenberg group with the gauge metric, unit gauge ball indicator, p = 1",
            space={"kind": "heisenberg", "profile": {"C_a": math.pi ** 2 / 8, "C_A": math.pi ** 2 / 8, "AVR": math.pi ** 2 / 8}},
            function={"kind": "indicator_ball", "center": [0.0, 0.0, 0.0], "radius": 1.0},
            p=1,
            theorem="avr",
            grid={"lambda_min": 1e-4, "lambda_max": 1e-3, "count": 16},
            method="monte_carlo",
            budget=10_000_000,
            limit_rtol=0.05,
            symmetry_lambda=0.3,
            regularity=True,
        ),
        _sc(
            "hyperbolic_f_mc",
            ("full",),
            description="hyperbolic half-plane, f = cosh - 1, unit geodesic ball indicator, p = 1",
            space={"kind": "hyperbolic_half_plane", "profile": {"C_a": 2 * math.pi, "C_A": 2 * math.pi, "AVR": 2 * math.pi}},
            function={"kind": "indicator_ball", "center": [0.0, 1.0], "radius": 1.0},
            p=1,
            theorem="f_avr",
            grid={"lambda_min": 1e-3, "lambda_max": 1e-2, "count": 16},
            method="monte_carlo",
            budget=10_000_000,
            limit_rtol=0.05,
            symmetry_lambda=0.1,
        ),
    ]
}


def suite(name):
    if name not in ("fast", "full"):
        raise ConfigError(f"unknown suite {name!r}; choose fast or full", "suite")
    return [k for k, v in BUILTINS.items() if name in v["tags"]]
