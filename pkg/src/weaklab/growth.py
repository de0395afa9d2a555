"""Volume-growth profiles ``f`` and their inverses.

A growth profile replaces ``r**s`` in the difference quotient
``|u(x) - u(y)| / f(d(x, y))**(1/p)``.  Three kinds are supported:

* :class:`Power` -- ``r**s``
* :class:`CoshMinusOne` -- ``cosh(r) - 1``, the hyperbolic-plane profile
* :class:`MonotoneTable` -- monotone cubic interpolation of sampled pairs
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, InputError

__all__ = [
    "GrowthFunction",
    "Power",
    "CoshMinusOne",
    "MonotoneTable",
    "GrowthVerdict",
    "eval_growth",
    "invert_growth",
    "check_growth_validity",
    "growth_from_dict",
]

_BISECTION_ITERATIONS = 200


class GrowthFunction:
    """Base class; subclasses are frozen dataclasses (hashable, immutable)."""

    domain_max = math.inf

    def __call__(self, r):
        return eval_growth(self, r)

    def _eval(self, r):
        raise NotImplementedError

    def _invert(self, y):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Power(GrowthFunction):
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ConfigError(f"power exponent must be positive, got {self.s}", "growth.s")

    def _eval(self, r):
        return r ** self.s

    def _invert(self, y):
        return y ** (1.0 / self.s)

    def to_dict(self):
        return {"kind": "power", "s": self.s}


@dataclass(frozen=True)
class CoshMinusOne(GrowthFunction):
    def _eval(self, r):
        # 2 sinh^2(r/2) avoids cancellation near r = 0
        return 2.0 * np.sinh(0.5 * r) ** 2

    def _invert(self, y):
        return 2.0 * np.arcsinh(np.sqrt(0.5 * y))

    def to_dict(self):
        return {"kind": "cosh_minus_one"}


@dataclass(frozen=True)
class MonotoneTable(GrowthFunction):
    """Tabulated growth; ``radii[0]`` must be 0 with ``values[0] == 0``."""

    radii: tuple
    values: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 3:
            raise ConfigError("table needs matching 1-D radii/values with >= 3 entries", "growth")
        if np.any(np.diff(r) <= 0):
            raise ConfigError("table radii must be strictly increasing", "growth.radii")
        if r[0] != 0.0:
            raise ConfigError("table must start at r = 0", "growth.radii")
        object.__setattr__(self, "radii", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_interp", PchipInterpolator(r, v, extrapolate=False))

    @property
    def domain_max(self):
        return self.radii[-1]

    def _eval(self, r):
        return self._interp(r)

    def _invert(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y > self.values[-1]):
            raise InputError(f"value above table range (max {self.values[-1]})")
        lo = np.zeros_like(y)
        hi = np.full_like(y, self.radii[-1])
        for _ in range(_BISECTION_ITERATIONS):
            mid = 0.5 * (lo + hi)
            below = self._interp(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4e-16 * hi):
                break
        return 0.5 * (lo + hi)

    def to_dict(self):
        return {"kind": "table", "radii": list(self.radii), "values": list(self.values)}


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return np.asarray(x, dtype=float)


def eval_growth(f: GrowthFunction, r):
    """Evaluate ``f(r)``; scalars in give scalars out."""
    ra = np.asarray(r, dtype=float)
    if np.any(ra < 0):
        raise InputError("growth argument must be nonnegative")
    if np.any(ra > f.domain_max):
        raise InputError(f"growth argument beyond table range ({f.domain_max})")
    if np.ndim(r) == 0:
        return float(f._eval(float(r)))
    return np.asarray(f._eval(ra), dtype=float)


def invert_growth(f: GrowthFunction, y):
    """Return ``r`` with ``f(r) = y``."""
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise InputError("growth inverse needs a nonnegative value")
    if np.ndim(y) == 0:
        return float(f._invert(float(y)))
    return np.asarray(f._invert(ya), dtype=float)


@dataclass(frozen=True)
class GrowthVerdict:
    valid: bool
    violations: tuple = ()
    warnings: tuple = ()


@functools.lru_cache(maxsize=256)
def check_growth_validity(f: GrowthFunction, n_probes: int = 1000) -> GrowthVerdict:
    """Probe ``f`` on a log grid for ``f(0) = 0``, strict monotonicity and convexity."""
    violations = []
    warnings = []
    r_hi = min(f.domain_max, 1e3)
    probes = np.concatenate([[0.0], np.geomspace(1e-3 * min(1.0, r_hi), r_hi, n_probes - 1)])
    with np.errstate(over="ignore"):
        vals = eval_growth(f, probes)
    finite = np.isfinite(vals)
    if not finite[: n_probes // 2].all():
        violations.append("non-finite values on probe grid")
        return GrowthVerdict(False, tuple(violations))
    if not finite.all():
        # exponential profiles overflow long before r = 1e3; probe what is representable
        cut = int(np.argmin(finite))
        warnings.append(f"overflow beyond r = {probes[cut]:.4g}; probes truncated")
        probes, vals = probes[:cut], vals[:cut]
    if abs(vals[0]) > 0.0:
        violations.append(f"f(0) = {vals[0]!r} != 0")
    if np.any(np.diff(vals) <= 0):
        violations.append("not strictly increasing")
    slopes = np.diff(vals) / np.diff(probes)
    if np.any(np.diff(slopes) < -1e-10 * (1.0 + np.abs(slopes[1:]))):
        violations.append("not convex (decreasing difference quotients)")
    if math.isfinite(f.domain_max):
        warnings.append(f"bounded domain [0, {f.domain_max}]; inverse limited to table range")
    return GrowthVerdict(not violations, tuple(violations), tuple(warnings))


def growth_from_dict(d) -> GrowthFunction:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("expected an object with a 'kind'", "growth")
    kind = d["kind"]
    if kind == "power":
        if "s" not in d:
            raise ConfigError("missing exponent", "growth.s")
        return Power(float(d["s"]))
    if kind == "cosh_minus_one":
        return CoshMinusOne()
    if kind == "table":
        return MonotoneTable(tuple(d["radii"]), tuple(d["values"]))
    raise ConfigError(f"unknown growth kind {kind!r}", "growth.kind")
