"""The level-set functional ``D(lam) = lam**p * (nu x nu)(E_lam)``.

``E_lam`` is the set of pairs ``x != y`` with
``|u(x) - u(y)| >= lam * f(d(x, y))**(1/p)``.  For a height difference
``h > 0`` this is the same as ``d(x, y) <= f^{-1}((h / lam)**p)``, which is
the form the exact evaluators use.

Three evaluators are provided:

* :func:`exact_mass_1d` -- line kinds, piecewise-constant ``u``; strip
  integrals of the piecewise-polynomial density done exactly.
* :func:`exact_mass_indicator` -- a single ball indicator, via
  ``mass = 2 int_S [nu(B(x, r)) - nu(B(x, r) & S)] dnu(x)``.
* :func:`mc_mass` -- stratified importance sampling for everything else.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from . import _line
from .errors import ConfigError, InputError
from .growth import GrowthFunction, check_growth_validity, eval_growth, invert_growth
from .space import EuclideanLp, SpaceDescriptor, sample_support_region
from .testfn import IndicatorBall, ScaledBy, ShiftedUnitInterval, StepSum, TestFunction, Zero, disk_outside_area

__all__ = [
    "LevelSetQuery",
    "LevelSetEstimate",
    "in_level_set",
    "exact_mass_1d",
    "exact_half_mass_1d",
    "exact_mass_indicator",
    "mc_mass",
    "half_set_mass",
    "estimate",
    "resolve_workers",
]

CHUNK = 65536
MIN_BUDGET = 10_000
_E_STREAM = (0,)
_H_STREAM = (1,)


@dataclass(frozen=True)
class LevelSetQuery:
    space: SpaceDescriptor
    u: TestFunction
    p: float
    lam: float
    growth: Optional[GrowthFunction] = None

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise InputError(f"lambda must be positive and finite, got {self.lam}")
        if not self.p >= 1:
            raise InputError(f"p must be >= 1, got {self.p}")
        if self.growth is None:
            object.__setattr__(self, "growth", self.space.growth)
        verdict = check_growth_validity(self.growth)
        if not verdict.valid:
            raise ConfigError("; ".join(verdict.violations), "growth")

    def with_lambda(self, lam):
        return LevelSetQuery(self.space, self.u, self.p, lam, self.growth)

    def radius(self, h):
        """Membership radius for a height difference ``h``."""
        return invert_growth(self.growth, (h / self.lam) ** self.p)


@dataclass(frozen=True)
class LevelSetEstimate:
    lam: float
    value: float
    std_err: float
    mass: float
    method: str
    n_samples: int

    def to_dict(self):
        return {
            "lambda": self.lam,
            "value": self.value,
            "std_err": self.std_err,
            "mass": self.mass,
            "method": self.method,
            "n_samples": self.n_samples,
        }


def _exact(q, mass, method):
    mass = float(mass)
    return LevelSetEstimate(q.lam, q.lam ** q.p * mass, 0.0, mass, method, 0)


def in_level_set(q: LevelSetQuery, x, y):
    """Literal membership test, vectorized over leading axes."""
    space = q.space
    x = space.check_points(x)
    y = space.check_points(y)
    d = np.asarray(space.distance(x, y))
    diff = np.abs(q.u.evaluate(x, space) - q.u.evaluate(y, space))
    out = (d > 0) & (diff >= q.lam * np.asarray(eval_growth(q.growth, d)) ** (1.0 / q.p))
    return bool(out) if out.ndim == 0 else out


# -- exact evaluation on the line -----------------------------------------------


def _cells(u):
    """Partition of the line into intervals on which ``u`` is constant."""
    pieces = sorted((a, b, h) for a, b, h, *_ in u.line_pieces() if b > a)
    cells = []
    pos = -math.inf
    for a, b, h in pieces:
        if a > pos:
            cells.append((pos, a, 0.0))
        cells.append((a, b, h))
        pos = b
    cells.append((pos, math.inf, 0.0))
    # merge neighbours with equal values so no pair has h = 0 needlessly
    merged = [cells[0]]
    for c in cells[1:]:
        if c[2] == merged[-1][2]:
            merged[-1] = (merged[-1][0], c[1], c[2])
        else:
            merged.append(c)
    return merged


def _strip(density, I, J, r, extra_lowers=(), extra_uppers=(), x_clip=(-math.inf, math.inf)):
    """``int_{x in I} w(x) nu(J & [x - r, x + r] & extra) dx``."""
    x_lo = max(I[0], J[0] - r, x_clip[0])
    x_hi = min(I[1], J[1] + r, x_clip[1])
    if not x_hi > x_lo:
        return 0.0
    lowers = [(0.0, J[0]), (1.0, -r), *extra_lowers]
    uppers = [(0.0, J[1]), (1.0, r), *extra_uppers]
    return _line.window_integral(density, x_lo, x_hi, lowers, uppers)


def _line_setup(q):
    space = q.space
    if not space.is_line:
        raise InputError(f"exact 1D evaluation needs a line kind, got {space.kind}")
    try:
        cells = _cells(q.u)
    except InputError:
        raise InputError(f"exact 1D evaluation needs a piecewise-constant u, got {type(q.u).__name__}") from None
    return space.density, cells


def exact_mass_1d(q: LevelSetQuery) -> LevelSetEstimate:
    density, cells = _line_setup(q)
    total = 0.0
    for i, j in ((i, j) for i in range(len(cells)) for j in range(i + 1, len(cells))):
        h = abs(cells[i][2] - cells[j][2])
        if h == 0:
            continue
        r = q.radius(h)
        total += _strip(density, cells[i][:2], cells[j][:2], r)
    return _exact(q, 2.0 * total, "exact_1d")


def exact_half_mass_1d(q: LevelSetQuery) -> LevelSetEstimate:
    """Exact mass of ``H = E & {d(x0, y) > d(x0, x)}`` over all ordered cell pairs."""
    density, cells = _line_setup(q)
    x0 = q.space.base_point[0]
    total = 0.0
    for i in range(len(cells)):
        for j in range(len(cells)):
            h = abs(cells[i][2] - cells[j][2])
            if i == j or h == 0:
                continue
            r = q.radius(h)
            I, J = cells[i][:2], cells[j][:2]
            # x >= x0: y > x or y < 2 x0 - x
            total += _strip(density, I, J, r, extra_lowers=[(1.0, 0.0)], x_clip=(x0, math.inf))
            total += _strip(density, I, J, r, extra_uppers=[(-1.0, 2.0 * x0)], x_clip=(x0, math.inf))
            # x < x0: y > 2 x0 - x or y < x
            total += _strip(density, I, J, r, extra_lowers=[(-1.0, 2.0 * x0)], x_clip=(-math.inf, x0))
            total += _strip(density, I, J, r, extra_uppers=[(1.0, 0.0)], x_clip=(-math.inf, x0))
    return _exact(q, total, "exact_1d")


# -- exact evaluation for a single ball indicator ---------------------------------


def _unwrap_indicator(u):
    height = 1.0
    while isinstance(u, ScaledBy):
        height *= u.c
        u = u.inner
    if isinstance(u, ShiftedUnitInterval):
        u = IndicatorBall((u.n + 0.5,), 0.5)
    if isinstance(u, StepSum) and len(u.steps) == 1 and u.steps[0][1] > u.steps[0][0]:
        # endpoint conventions are measure-null
        a, b, h, *_ = u.steps[0]
        height *= h
        u = IndicatorBall((0.5 * (a + b),), 0.5 * (b - a))
    if not isinstance(u, IndicatorBall):
        raise InputError("exact indicator evaluation needs a (scaled) ball indicator")
    return u, abs(height)


def exact_mass_indicator(q: LevelSetQuery) -> LevelSetEstimate:
    ind, height = _unwrap_indicator(q.u)
    if height == 0:
        return _exact(q, 0.0, "exact_indicator")
    r = q.radius(height)
    space = q.space
    a = ind.radius
    if space.is_line:
        density = space.density
        c = ind.center[0]
        lo, hi = c - a, c + a

        def integrand(x):
            outside = density.mass(x - r, x + r) - density.mass(max(x - r, lo), min(x + r, hi))
            return float(density.weight(np.array([x]))[0]) * outside

        pts = {lo + r, hi - r, *density.breakpoints}
        pts |= {b + r for b in density.breakpoints} | {b - r for b in density.breakpoints}
        pts = sorted(v for v in pts if lo < v < hi)
        mass, _ = integrate.quad(integrand, lo, hi, points=pts or None, epsabs=0.0, epsrel=1e-11, limit=500)
        return _exact(q, 2.0 * mass, "exact_indicator")
    if isinstance(space, EuclideanLp) and space.N == 2 and space.q == 2.0:

        def radial(rho):
            return 2.0 * math.pi * rho * disk_outside_area(rho, r, a)

        # B(x, r) sits inside S for |x| <= a - r, so only the outer annulus contributes
        start = max(0.0, a - r)
        pts = sorted(v for v in {r - a} if start < v < a)
        mass, _ = integrate.quad(radial, start, a, points=pts or None, epsabs=0.0, epsrel=1e-11, limit=500)
        return _exact(q, 2.0 * mass, "exact_indicator")
    raise InputError(f"exact indicator evaluation not available on {space.kind}")


# -- Monte Carlo ------------------------------------------------------------------


def resolve_workers(workers=None):
    env = os.environ.get("WEAKLAB_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"not an integer: {env!r}", "WEAKLAB_WORKERS") from None
    workers = 1 if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("worker count must be >= 1", "workers")
    return workers


def _chunk_rng(seed, key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _in_support(space, center, radius, y):
    return np.asarray(space.distance(np.asarray(center), y)) <= radius


def _pair_predicates(q, x, y, half):
    """Symmetrized membership of ``(x, y)`` and ``(y, x)``, i.e. ``2 * 1_E`` for E."""
    e = in_level_set(q, x, y)
    if not half:
        return 2.0 * e
    x0 = q.space.x0
    dx = np.asarray(q.space.distance(x0, x))
    dy = np.asarray(q.space.distance(x0, y))
    return e * ((dy > dx).astype(float) + (dx > dy).astype(float))


def _inner_chunk(q, n, rng, half):
    # both points from the support proposal
    s1 = sample_support_region(q.space, q.u, q.p, rng, n)
    s2 = sample_support_region(q.space, q.u, q.p, rng, n)
    e = in_level_set(q, s1.point, s2.point).astype(float)
    if half:
        x0 = q.space.x0
        e *= np.asarray(q.space.distance(x0, s2.point)) > np.asarray(q.space.distance(x0, s1.point))
    return e / (s1.density_value * s2.density_value)


def _mixed_chunk(q, n, rng, half, r_mix, S):
    # x from the support proposal, y nu-uniform in B(x, r_mix), y outside S
    sx = sample_support_region(q.space, q.u, q.p, rng, n)
    y = q.space.sample_ball(sx.point, r_mix, rng)
    vol = np.asarray(q.space.ball_volume(sx.point, r_mix))
    outside = ~_in_support(q.space, S[0], S[1], y)
    w = _pair_predicates(q, sx.point, y, half) * outside
    return w * vol / sx.density_value


def _run_stratum(fn, n, seed, key, workers):
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])

    def one(k):
        w = fn(sizes[k], _chunk_rng(seed, key + (k,)))
        return float(np.sum(w)), float(np.sum(w * w))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(k) for k in range(len(sizes))]
    # fixed chunk order keeps the reduction independent of the worker count
    s = math.fsum(a for a, _ in parts)
    ss = math.fsum(b for _, b in parts)
    mean = s / n
    var = max(ss / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, var / n


def _mc(q, budget, seed, workers, half, stream_key):
    if budget is None or budget < MIN_BUDGET:
        raise InputError(f"Monte Carlo budget must be >= {MIN_BUDGET}")
    if seed is None:
        raise InputError("Monte Carlo needs an explicit seed")
    budget = int(budget)
    sup = q.u.sup_norm
    if sup == 0 or isinstance(q.u, Zero):
        return LevelSetEstimate(q.lam, 0.0, 0.0, 0.0, "monte_carlo", 0)
    S = q.u.support_ball(q.space)
    if not math.isfinite(S[1]):
        raise InputError("Monte Carlo needs bounded support; split u with truncate() first")
    workers = resolve_workers(workers)
    # one point outside S means |u(x) - u(y)| <= sup, hence d <= r_mix
    r_mix = q.radius(sup)
    skip_inner = q.u.constant_on_support
    n_inner = 0 if skip_inner else budget // 2
    n_mixed = budget - n_inner
    mean_m, var_m = _run_stratum(
        lambda n, rng: _mixed_chunk(q, n, rng, half, r_mix, S), n_mixed, seed, stream_key + (1,), workers
    )
    mean_i = var_i = 0.0
    if n_inner:
        mean_i, var_i = _run_stratum(
            lambda n, rng: _inner_chunk(q, n, rng, half), n_inner, seed, stream_key + (0,), workers
        )
    mass = mean_i + mean_m
    se = math.sqrt(var_i + var_m)
    scale = q.lam ** q.p
    return LevelSetEstimate(q.lam, scale * mass, scale * se, mass, "monte_carlo", budget)


def mc_mass(q: LevelSetQuery, budget, seed, workers=None, stream_key=_E_STREAM) -> LevelSetEstimate:
    """Stratified importance-sampling estimate of the E-mass.

    Stratum (i) draws both points from the support proposal and is skipped
    when ``u`` is constant on its support ball (no pair there can be in
    ``E``).  Stratum (ii) draws ``x`` from the proposal and ``y`` uniformly
    from ``B(x, r_mix)``, keeping only ``y`` outside the support ball; the
    symmetric stratum is folded in through the symmetry of ``E``.
    """
    return _mc(q, budget, seed, workers, False, tuple(stream_key))


def half_set_mass(q: LevelSetQuery, budget=None, seed=None, workers=None, method="auto", stream_key=_H_STREAM):
    """Mass of ``H = E & {d(x0, y) > d(x0, x)}``, which is half the E-mass.

    ``method="auto"`` uses the exact evaluator on line kinds and Monte Carlo
    elsewhere; the Monte Carlo stream is independent of the E stream.
    """
    if method not in ("auto", "exact_1d", "monte_carlo"):
        raise ConfigError(f"unknown method {method!r}", "method")
    if method == "exact_1d" or (method == "auto" and q.space.is_line and budget is None):
        return exact_half_mass_1d(q)
    return _mc(q, budget, seed, workers, True, tuple(stream_key))


METHODS = ("auto", "exact_1d", "exact_indicator", "monte_carlo")


def exact_available(space, u):
    """Best exact method for this pair, or None."""
    if space.is_line:
        try:
            u.line_pieces()
            return "exact_1d"
        except InputError:
            pass
    try:
        _unwrap_indicator(u)
    except InputError:
        return None
    if space.is_line or (isinstance(space, EuclideanLp) and space.N == 2 and space.q == 2.0):
        return "exact_indicator"
    return None


def estimate(q: LevelSetQuery, method="auto", budget=None, seed=None, workers=None, stream_key=_E_STREAM):
    """Dispatch to the best available evaluator (exact_1d > exact_indicator > Monte Carlo)."""
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}", "method")
    if method == "auto":
        method = exact_available(q.space, q.u) or "monte_carlo"
    if method == "exact_1d":
        return exact_mass_1d(q)
    if method == "exact_indicator":
        return exact_mass_indicator(q)
    return mc_mass(q, budget, seed, workers, stream_key)
