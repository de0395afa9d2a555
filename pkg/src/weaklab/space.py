"""Metric measure spaces: distances, exact ball volumes and samplers.

Points are numpy arrays whose last axis is the chart dimension (1 for line
kinds, 2 for the plane and half-plane, 3 for the Heisenberg group).  All
operations broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import _line
from .errors import ConfigError, InputError
from .growth import GrowthFunction, Power

__all__ = [
    "RegularityProfile",
    "SpaceDescriptor",
    "EuclideanLp",
    "WeightedLine",
    "HeisenbergKoranyi",
    "HyperbolicHalfPlane",
    "OscillatingWeightLine",
    "FiniteInterval",
    "WeightedSample",
    "distance",
    "ball_volume",
    "sample_ball",
    "sample_support_region",
    "unit_lq_ball_volume",
]


@dataclass(frozen=True)
class RegularityProfile:
    """Declared constants, all relative to the space's growth profile."""

    C_a: Optional[float] = None
    C_A: Optional[float] = None
    C_d: Optional[float] = None
    AVR: Optional[float] = None
    K: Optional[float] = None

    def __post_init__(self):
        for name in ("C_a", "C_A", "C_d", "AVR", "K"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"declared constant must be positive, got {v}", f"space.profile.{name}")
        if self.C_a is not None and self.C_A is not None and self.C_a > self.C_A:
            raise ConfigError("C_a must not exceed C_A", "space.profile")

    def to_dict(self):
        return {k: getattr(self, k) for k in ("C_a", "C_A", "C_d", "AVR", "K") if getattr(self, k) is not None}


@dataclass(frozen=True, kw_only=True)
class SpaceDescriptor:
    growth: Optional[GrowthFunction] = None
    profile: RegularityProfile = field(default_factory=RegularityProfile)
    base_point: Optional[tuple] = None

    kind = "abstract"
    dim = 1
    is_line = False
    total_mass_finite = False

    def __post_init__(self):
        if self.base_point is None:
            object.__setattr__(self, "base_point", self.default_base_point())
        else:
            bp = tuple(float(v) for v in np.atleast_1d(self.base_point))
            self.check_points(np.asarray(bp))
            object.__setattr__(self, "base_point", bp)

    def default_base_point(self):
        return (0.0,) * self.dim

    @property
    def x0(self):
        return np.asarray(self.base_point)

    def check_points(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1:] != (self.dim,):
            raise InputError(f"{self.kind} points need {self.dim} coordinates, got shape {x.shape}")
        return x

    # subclass hooks -------------------------------------------------------

    def _distance(self, a, b):
        raise NotImplementedError

    def _ball_volume(self, center, r):
        raise NotImplementedError

    def _sample_unit(self, center, r, rng, n):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError

    def to_dict(self):
        d = self.describe()
        d["base_point"] = list(self.base_point)
        prof = self.profile.to_dict()
        if prof:
            d["profile"] = prof
        return d

    # public API -----------------------------------------------------------

    def distance(self, a, b):
        a = self.check_points(a)
        b = self.check_points(b)
        d = self._distance(a, b)
        return float(d) if np.ndim(d) == 0 else d

    def ball_volume(self, center, r):
        center = self.check_points(center)
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise InputError("ball radius must be positive")
        v = self._ball_volume(center, r)
        return float(v) if np.ndim(v) == 0 else v

    def sample_ball(self, center, r, rng, n=None):
        """nu-uniform samples of ``B(center, r)``.

        ``center`` may hold one point or ``n`` points (one ball per sample).
        """
        center = self.check_points(center)
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise InputError("ball radius must be positive")
        single = n is None and center.ndim == 1
        if n is None:
            n = 1 if center.ndim == 1 else center.shape[0]
        centers = np.broadcast_to(center, (n, self.dim))
        radii = np.broadcast_to(r, (n,))
        out = self._sample_unit(centers, radii, rng, n)
        return out[0] if single else out

    def contains(self, x):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    # line kinds only
    def interval_mass(self, a, b):
        return self.density.mass(a, b)

    def sample_interval(self, lo, hi, rng, n):
        return self.density.sample(lo, hi, rng.random(n))[:, None]


def distance(space, a, b):
    return space.distance(a, b)


def ball_volume(space, center, r):
    return space.ball_volume(center, r)


def sample_ball(space, center, r, rng, n=None):
    return space.sample_ball(center, r, rng, n)


# -- line kinds ----------------------------------------------------------------


@dataclass(frozen=True, kw_only=True)
class _LineSpace(SpaceDescriptor):
    is_line = True
    dim = 1

    @property
    def density(self) -> _line.PiecewisePolynomial:
        raise NotImplementedError

    def _distance(self, a, b):
        return np.abs(a[..., 0] - b[..., 0])

    def _ball_volume(self, center, r):
        c = center[..., 0]
        return self.density.mass(c - r, c + r)

    def _sample_unit(self, centers, radii, rng, n):
        c = centers[:, 0]
        x = self.density.sample(c - radii, c + radii, rng.random(n))
        return x[:, None]



def unit_lq_ball_volume(N, q):
    """Lebesgue volume of the unit ball of the l^q norm on R^N."""
    if math.isinf(q) or N == 1:
        return 2.0 ** N
    if q == 2.0 and N in (2, 3):
        return math.pi if N == 2 else 4.0 * math.pi / 3.0
    return math.exp(N * (math.log(2.0) + gammaln(1.0 + 1.0 / q)) - gammaln(1.0 + N / q))


@dataclass(frozen=True, kw_only=True)
class EuclideanLp(SpaceDescriptor):
    """``R^N`` with the l^q distance and Lebesgue measure."""

    N: int
    q: float = 2.0
    kind = "euclidean"

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ConfigError(f"dimension must be 1, 2 or 3, got {self.N}", "space.dim")
        if not self.q >= 1:
            raise ConfigError(f"q must lie in [1, inf], got {self.q}", "space.q")
        object.__setattr__(self, "q", float(self.q))
        if self.growth is None:
            object.__setattr__(self, "growth", Power(float(self.N)))
        super().__post_init__()

    @property
    def dim(self):
        return self.N

    @property
    def is_line(self):
        return self.N == 1

    @property
    def density(self):
        if self.N != 1:
            raise InputError("density only defined for the line")
        return _line.constant_density()

    @property
    def unit_volume(self):
        return unit_lq_ball_volume(self.N, self.q)

    def _distance(self, a, b):
        diff = a - b
        if self.N == 1:
            return np.abs(diff[..., 0])
        if self.q == 2.0:
            return np.sqrt(np.sum(diff * diff, axis=-1))
        return np.linalg.norm(diff, ord=self.q, axis=-1)

    def _ball_volume(self, center, r):
        vol = self.unit_volume * r ** self.N
        shape = np.broadcast_shapes(center.shape[:-1], np.shape(r))
        return np.broadcast_to(vol, shape) if shape else vol

    def _sample_unit(self, centers, radii, rng, n):
        N = self.N
        if N == 1 or math.isinf(self.q):
            unit = rng.uniform(-1.0, 1.0, size=(n, N))
        elif self.q == 2.0:
            g = rng.standard_normal((n, N))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            unit = g * rng.random(n)[:, None] ** (1.0 / N)
        else:
            # generalized-Gaussian construction of the uniform l^q ball
            q = self.q
            g = rng.gamma(1.0 / q, 1.0, size=(n, N)) ** (1.0 / q)
            g *= rng.choice([-1.0, 1.0], size=(n, N))
            w = rng.exponential(1.0, size=n)
            unit = g / (np.sum(np.abs(g) ** q, axis=1) + w)[:, None] ** (1.0 / q)
        return centers + radii[:, None] * unit

    def describe(self):
        return {"kind": "euclidean", "dim": self.N, "q": "inf" if math.isinf(self.q) else self.q}


@dataclass(frozen=True, kw_only=True)
class WeightedLine(_LineSpace):
    """The line with a piecewise-polynomial weight (default ``1 + |x|``)."""

    weight: _line.PiecewisePolynomial = field(default_factory=_line.one_plus_abs)
    kind = "weighted_line"

    def __post_init__(self):
        if self.growth is None:
            object.__setattr__(self, "growth", Power(2.0))
        super().__post_init__()

    @property
    def density(self):
        return self.weight

    def describe(self):
        if self.weight == _line.one_plus_abs():
            w = {"kind": "one_plus_abs"}
        else:
            w = self.weight.to_dict()
        return {"kind": "weighted_line", "weight": w}


@dataclass(frozen=True, kw_only=True)
class OscillatingWeightLine(_LineSpace):
    """Radial step weight alternating ``m`` (odd annuli) and ``M`` (even annuli).

    ``radii`` are ``r_1 < r_2 < ...``; beyond the last radius the weight keeps
    the level the next annulus would have had.
    """

    m: float
    M: float
    radii: tuple
    kind = "oscillating_weight_line"
    _density: _line.PiecewisePolynomial = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not 0 < self.m < self.M:
            raise ConfigError("need 0 < m < M", "space.m")
        radii = tuple(float(r) for r in self.radii)
        if not radii or radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii must be positive and strictly increasing", "space.radii")
        object.__setattr__(self, "radii", radii)
        levels = [self.level(n) for n in range(1, len(radii) + 1)]
        dens = _line.symmetric_levels(radii, levels, self.level(len(radii) + 1))
        object.__setattr__(self, "_density", dens)
        if self.growth is None:
            object.__setattr__(self, "growth", Power(1.0))
        super().__post_init__()

    def level(self, n):
        return self.m if n % 2 else self.M

    @property
    def density(self):
        return self._density

    def describe(self):
        return {"kind": "oscillating_weight_line", "m": self.m, "M": self.M, "radii": list(self.radii)}


@dataclass(frozen=True, kw_only=True)
class FiniteInterval(_LineSpace):
    """Lebesgue measure on ``[a, b]``: the one finite-measure kind."""

    a: float = 0.0
    b: float = 1.0
    kind = "finite_interval"
    total_mass_finite = True

    def __post_init__(self):
        if not self.b > self.a:
            raise ConfigError("need a < b", "space.b")
        if self.growth is None:
            object.__setattr__(self, "growth", Power(1.0))
        super().__post_init__()

    def default_base_point(self):
        return (0.5 * (self.a + self.b),)

    @property
    def density(self):
        return _line.interval_density(self.a, self.b)

    def contains(self, x):
        x = np.asarray(x)[..., 0]
        return (x >= self.a) & (x <= self.b)

    def describe(self):
        return {"kind": "finite_interval", "a": self.a, "b": self.b}


# -- Heisenberg group with the Cygan-Koranyi gauge ------------------------------


def heisenberg_mul(g, h):
    """Group law ``(x, y, t)(x', y', t') = (x + x', y + y', t + t' + (x y' - y x') / 2)``."""
    x = g[..., 0] + h[..., 0]
    y = g[..., 1] + h[..., 1]
    t = g[..., 2] + h[..., 2] + 0.5 * (g[..., 0] * h[..., 1] - g[..., 1] * h[..., 0])
    return np.stack([x, y, t], axis=-1)


def heisenberg_inv(g):
    return -np.asarray(g, dtype=float)


def koranyi_gauge(g):
    x, y, t = g[..., 0], g[..., 1], g[..., 2]
    rho2 = x * x + y * y
    return np.sqrt(np.sqrt(rho2 * rho2 + 16.0 * t * t))


def heisenberg_dilate(g, r):
    r = np.asarray(r, dtype=float)[..., None]
    scale = np.concatenate([np.broadcast_to(r, r.shape[:-1] + (2,)), r * r], axis=-1)
    return g * scale


@dataclass(frozen=True, kw_only=True)
class HeisenbergKoranyi(SpaceDescriptor):
    """First Heisenberg group, Lebesgue (Haar) measure, gauge distance."""

    kind = "heisenberg"
    dim = 3
    unit_volume = math.pi ** 2 / 8.0
    # unit gauge ball inside [-1, 1]^2 x [-1/4, 1/4]: box volume 2
    acceptance_rate = (math.pi ** 2 / 8.0) / 2.0

    def __post_init__(self):
        if self.growth is None:
            object.__setattr__(self, "growth", Power(4.0))
        super().__post_init__()

    def _distance(self, a, b):
        # N(a^{-1} b), written out so that d(a, b) and d(b, a) agree bitwise
        dx = b[..., 0] - a[..., 0]
        dy = b[..., 1] - a[..., 1]
        dt = (b[..., 2] - a[..., 2]) - 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
        rho2 = dx * dx + dy * dy
        return np.sqrt(np.sqrt(rho2 * rho2 + 16.0 * dt * dt))

    def _ball_volume(self, center, r):
        vol = self.unit_volume * r ** 4
        shape = np.broadcast_shapes(center.shape[:-1], np.shape(r))
        return np.broadcast_to(vol, shape) if shape else vol

    def sample_unit_ball(self, rng, n):
        out = np.empty((n, 3))
        filled = 0
        while filled < n:
            need = n - filled
            batch = int(need / self.acceptance_rate * 1.1) + 16
            box = rng.uniform(-1.0, 1.0, size=(batch, 3))
            box[:, 2] *= 0.25
            ok = box[koranyi_gauge(box) <= 1.0]
            take = min(need, ok.shape[0])
            out[filled:filled + take] = ok[:take]
            filled += take
        return out

    def _sample_unit(self, centers, radii, rng, n):
        unit = self.sample_unit_ball(rng, n)
        return heisenberg_mul(centers, heisenberg_dilate(unit, radii))

    def describe(self):
        return {"kind": "heisenberg"}


# -- hyperbolic half-plane --------------------------------------------------------


@dataclass(frozen=True, kw_only=True)
class HyperbolicHalfPlane(SpaceDescriptor):
    """Upper half-plane with the hyperbolic metric and area ``dx dy / y^2``."""

    kind = "hyperbolic_half_plane"
    dim = 2

    def __post_init__(self):
        from .growth import CoshMinusOne

        if self.growth is None:
            object.__setattr__(self, "growth", CoshMinusOne())
        super().__post_init__()

    def default_base_point(self):
        return (0.0, 1.0)

    def check_points(self, x):
        x = super().check_points(x)
        if np.any(x[..., 1] <= 0):
            raise InputError("half-plane points need y > 0")
        return x

    def _distance(self, a, b):
        dx = a[..., 0] - b[..., 0]
        dy = a[..., 1] - b[..., 1]
        return 2.0 * np.arcsinh(np.sqrt((dx * dx + dy * dy) / (4.0 * a[..., 1] * b[..., 1])))

    def _ball_volume(self, center, r):
        vol = 4.0 * math.pi * np.sinh(0.5 * r) ** 2
        shape = np.broadcast_shapes(center.shape[:-1], np.shape(r))
        return np.broadcast_to(vol, shape) if shape else vol

    def _sample_unit(self, centers, radii, rng, n):
        # geodesic polar coordinates about i: area element sinh(t) dt dtheta,
        # so sinh(t/2) = sqrt(U) sinh(R/2) inverts the radial CDF
        half_t = np.arcsinh(np.sqrt(rng.random(n)) * np.sinh(0.5 * radii))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        tau = np.tanh(half_t)
        wx, wy = tau * np.cos(theta), tau * np.sin(theta)
        denom = (1.0 - wx) ** 2 + wy ** 2
        one_minus_w2 = 1.0 / np.cosh(half_t) ** 2
        zx = -2.0 * wy / denom
        zy = one_minus_w2 / denom
        # z -> a + b z sends i to the center (a, b) isometrically
        a, b = centers[:, 0], centers[:, 1]
        return np.stack([a + b * zx, b * zy], axis=-1)

    def describe(self):
        return {"kind": "hyperbolic_half_plane"}


# -- proposal for the level-set estimator ----------------------------------------


@dataclass(frozen=True)
class WeightedSample:
    """Points with their proposal density w.r.t. nu (vectorized)."""

    point: np.ndarray
    density_value: np.ndarray


def _sample_region(space, region, rng, n):
    kind, a, b = region
    if kind == "ball":
        return space.sample_ball(np.asarray(a), b, rng, n)
    return space.sample_interval(np.full(n, a), np.full(n, b), rng, n)


def sample_support_region(space, u, p, rng, n):
    """Mixture proposal on the support ball of ``u``.

    Half the draws are nu-uniform on the support ball ``S``, half are
    proportional to ``|u|^p``; ``density_value`` is the exact mixture density.
    When ``u`` vanishes identically the uniform component is used alone.
    """
    center, radius = u.support_ball(space)
    if not math.isfinite(radius):
        raise InputError("Monte Carlo sampling needs bounded support; split u with truncate() first")
    vol_S = space.ball_volume(center, radius)
    norm = u.lp_norm_p(space, p)
    regions = u.level_regions(space, p) if norm > 0 else []
    if not regions:
        pts = space.sample_ball(center, radius, rng, n)
        return WeightedSample(pts, np.full(n, 1.0 / vol_S))
    pick_uniform = rng.random(n) < 0.5
    pts = np.empty((n, space.dim))
    n_u = int(pick_uniform.sum())
    pts[pick_uniform] = space.sample_ball(center, radius, rng, n_u)
    idx = np.flatnonzero(~pick_uniform)
    masses = np.array([m for m, _ in regions])
    which = rng.choice(len(regions), size=idx.size, p=masses / masses.sum())
    for k, (_, region) in enumerate(regions):
        sel = idx[which == k]
        if sel.size:
            pts[sel] = _sample_region(space, region, rng, sel.size)
    dens = 0.5 / vol_S + 0.5 * np.abs(u.evaluate(pts, space)) ** p / norm
    return WeightedSample(pts, dens)
