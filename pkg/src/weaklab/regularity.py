"""Regularity constants from ball-volume probes, and the oscillating radius sequence.

Every estimate is an extremal statistic over an explicit probe plan, so
``C_A_hat``, ``C_d_hat`` and ``K_hat`` are lower bounds for the true
constants and ``C_a_hat`` is an upper bound.  Divergence is detected by
doubling the probe window and watching the statistic move by more than 10%.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .asymptotics import Verdict
from .errors import ConfigError, InputError
from .growth import GrowthFunction, Power, eval_growth
from .space import (
    EuclideanLp,
    FiniteInterval,
    HeisenbergKoranyi,
    HyperbolicHalfPlane,
    SpaceDescriptor,
    heisenberg_mul,
    unit_lq_ball_volume,
)

__all__ = [
    "ProbePlan",
    "AhlforsEstimate",
    "DoublingEstimate",
    "AVREstimate",
    "RegularityReport",
    "default_plan",
    "estimate_ahlfors",
    "estimate_doubling",
    "estimate_avr",
    "check_bishop_gromov",
    "construct_oscillating_radii",
    "oscillating_ratio",
    "regularity_report",
]

DIVERGENCE = 0.10
AVR_CAUCHY = 1e-2


@dataclass(frozen=True)
class ProbePlan:
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centers", np.atleast_2d(np.asarray(self.centers, dtype=float)))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        if self.centers.shape[0] < 16 or self.radii.size < 16:
            raise InputError("probe plans need >= 16 centers and >= 16 radii")
        if math.log10(self.radii.max() / self.radii.min()) < 4 - 1e-9:
            raise InputError("probe radii must span at least 4 decades")


def default_plan(space: SpaceDescriptor, scale=1.0, r_min=1e-2, r_max=1e3, n=17):
    """A deterministic plan; ``scale`` stretches both centers and the radius window."""
    t = np.geomspace(1e-2, 1e3, 8) * scale
    if isinstance(space, FiniteInterval):
        centers = np.linspace(space.a, space.b, 16)[:, None]
    elif space.is_line:
        centers = np.concatenate([[0.0], t, -t[::-1], [0.5 * scale]])[:, None]
    elif isinstance(space, HyperbolicHalfPlane):
        ys = np.geomspace(1e-2, 1e2, 8)
        centers = np.array([(x, y) for x in (0.0, 3.0 * scale) for y in ys])
    elif isinstance(space, HeisenbergKoranyi):
        rng = np.random.default_rng(20240917)
        centers = rng.standard_normal((16, 3)) * np.repeat(t, 2)[:, None]
    else:
        N = space.dim
        dirs = np.eye(N)[np.arange(16) % N] * np.where(np.arange(16) % 2, -1.0, 1.0)[:, None]
        centers = dirs * np.repeat(t, 2)[:, None]
        centers[0] = 0.0
    radii = np.geomspace(r_min / scale, r_max * scale, n)
    return ProbePlan(centers, radii)


def _volumes(space, plan):
    c = plan.centers[:, None, :]
    r = plan.radii[None, :]
    with np.errstate(over="ignore"):
        return np.asarray(space.ball_volume(np.broadcast_to(c, (c.shape[0], r.shape[1], c.shape[2])), np.broadcast_to(r, (c.shape[0], r.shape[1]))))


def _growth_of(space, growth):
    return growth if growth is not None else space.growth


def _finite_ratio(num, den):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        q = num / den
    return q[np.isfinite(q)]


@dataclass(frozen=True)
class AhlforsEstimate:
    C_a_hat: float
    C_A_hat: float
    upper_divergent: bool
    lower_divergent: bool

    @property
    def upper_ahlfors(self):
        return not self.upper_divergent

    def to_dict(self):
        return {
            "C_a_hat": self.C_a_hat,
            "C_A_hat": self.C_A_hat,
            "upper_divergent": self.upper_divergent,
            "lower_divergent": self.lower_divergent,
        }


def _ahlfors_hats(space, growth, plan):
    vol = _volumes(space, plan)
    with np.errstate(over="ignore"):
        f = np.asarray(eval_growth(growth, plan.radii))
    ratio = _finite_ratio(vol, f[None, :])
    return float(ratio.min()), float(ratio.max())


def estimate_ahlfors(space, growth=None, plan: Optional[ProbePlan] = None) -> AhlforsEstimate:
    """Min and max of ``nu(B(x, r)) / f(r)`` over the plan, with window-doubling flags."""
    growth = _growth_of(space, growth)
    plan = plan or default_plan(space)
    lo, hi = _ahlfors_hats(space, growth, plan)
    wide = ProbePlan(plan.centers * 2.0 if not isinstance(space, HyperbolicHalfPlane) else plan.centers,
                     np.geomspace(plan.radii.min() / 2.0, plan.radii.max() * 2.0, plan.radii.size))
    if isinstance(space, FiniteInterval):
        wide = ProbePlan(plan.centers, wide.radii)
    lo2, hi2 = _ahlfors_hats(space, growth, wide)
    return AhlforsEstimate(lo, hi, hi2 > hi * (1 + DIVERGENCE), lo2 < lo * (1 - DIVERGENCE))


@dataclass(frozen=True)
class DoublingEstimate:
    C_d_hat: float
    dimension: float
    divergent: bool

    def to_dict(self):
        return {"C_d_hat": self.C_d_hat, "dimension": self.dimension, "divergent": self.divergent}


def _doubling_hat(space, plan):
    v1 = _volumes(space, plan)
    v2 = _volumes(space, ProbePlan(plan.centers, plan.radii * 2.0))
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = v2 / v1
    # a finite volume doubling into an overflow is itself unbounded growth
    ratio = np.where(np.isfinite(v1) & ~np.isfinite(v2), np.inf, ratio)
    ratio = ratio[~np.isnan(ratio)]
    return float(ratio.max())


def estimate_doubling(space, plan: Optional[ProbePlan] = None) -> DoublingEstimate:
    """``max nu(B(x, 2r)) / nu(B(x, r))`` and ``log2`` of it."""
    plan = plan or default_plan(space)
    hat = _doubling_hat(space, plan)
    wide = ProbePlan(plan.centers, np.geomspace(plan.radii.min() / 2.0, plan.radii.max() * 2.0, plan.radii.size))
    hat2 = _doubling_hat(space, wide)
    divergent = not math.isfinite(hat) or hat2 > hat * (1 + DIVERGENCE)
    return DoublingEstimate(hat, math.log2(hat) if math.isfinite(hat) else math.inf, divergent)


@dataclass(frozen=True)
class AVREstimate:
    value: float
    converged: bool
    tail: list
    cauchy: float
    cross_x0_spread: float
    per_x0: list = field(default_factory=list)

    def to_dict(self):
        return {
            "value": self.value,
            "converged": self.converged,
            "tail": self.tail,
            "cauchy": self.cauchy,
            "cross_x0_spread": self.cross_x0_spread,
            "per_x0": self.per_x0,
        }


def _default_x0s(space):
    bp = np.asarray(space.base_point)
    if isinstance(space, HyperbolicHalfPlane):
        return np.array([bp, (2.0, 0.5), (-1.0, 3.0)])
    if isinstance(space, HeisenbergKoranyi):
        return np.array([bp, (1.0, -2.0, 0.5), (3.0, 0.0, -1.0)])
    offs = np.zeros((3, space.dim))
    offs[1, 0], offs[2, 0] = 3.0, -7.5
    return bp[None, :] + offs


def estimate_avr(space, growth=None, x0s=None, schedule=None) -> AVREstimate:
    """Tail of ``nu(B(x0, r)) / f(r)`` along a geometric radius schedule.

    Convergence needs the last three schedule ratios to agree to 1% (Cauchy
    diagnostic) at every ``x0``; the cross-``x0`` spread is reported alongside.
    Radii whose volumes or growth values overflow are dropped.
    """
    growth = _growth_of(space, growth)
    if space.total_mass_finite:
        raise InputError("no asymptotic volume ratio on a finite-measure space")
    if schedule is None:
        schedule = np.geomspace(1e1, 1e6, 11)
        with np.errstate(over="ignore"):
            ok = np.isfinite(np.asarray(eval_growth(growth, schedule))) & np.isfinite(
                np.asarray(space.ball_volume(space.x0, schedule))
            )
        if ok.sum() < 6:
            # exponential growth: stay inside the representable range
            schedule = np.geomspace(1.0, 0.5 * schedule[ok].max(), 11)
    schedule = np.asarray(schedule, dtype=float)
    if schedule.size < 6 or np.any(np.diff(schedule) <= 0):
        raise InputError("AVR schedule needs >= 6 increasing radii")
    x0s = _default_x0s(space) if x0s is None else np.atleast_2d(np.asarray(x0s, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.asarray(eval_growth(growth, schedule))
        ratios = np.array([np.asarray(space.ball_volume(x0, schedule)) / f for x0 in x0s])
    keep = np.all(np.isfinite(ratios), axis=0)
    ratios = ratios[:, keep]
    if ratios.shape[1] < 6:
        raise InputError("fewer than 6 representable schedule radii")
    tails = ratios[:, -3:]
    cauchy = float(np.max((tails.max(axis=1) - tails.min(axis=1)) / np.abs(tails[:, -1])))
    finals = ratios[:, -1]
    spread = float((finals.max() - finals.min()) / abs(finals.mean()))
    return AVREstimate(
        value=float(finals[0]),
        converged=cauchy <= AVR_CAUCHY,
        tail=[float(v) for v in ratios[0, -3:]],
        cauchy=cauchy,
        cross_x0_spread=spread,
        per_x0=[float(v) for v in finals],
    )


def _offset(space, x, t):
    """A point at distance exactly ``t`` from ``x`` (vectorized over ``t``)."""
    t = np.asarray(t, dtype=float)
    if isinstance(space, HyperbolicHalfPlane):
        return np.stack([np.full(t.shape, x[0]), x[1] * np.exp(t)], axis=-1)
    if isinstance(space, HeisenbergKoranyi):
        step = np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=-1)
        return heisenberg_mul(np.broadcast_to(x, step.shape), step)
    out = np.broadcast_to(x, t.shape + (space.dim,)).copy()
    out[..., 0] += t
    return out


def check_bishop_gromov(space, s, plan: Optional[ProbePlan] = None):
    """``max nu(B(x, R)) r^s / (R^s nu(B(y, r)))`` over ``r < R`` and ``d(x, y) <= R``.

    ``y`` runs over points at distance 0, R/2 and R from each center.
    """
    if not s > 0:
        raise InputError("dimension s must be positive")
    plan = plan or default_plan(space)
    radii = plan.radii
    i, j = np.triu_indices(radii.size, k=1)
    r, R = radii[i], radii[j]
    best = 0.0
    for x in plan.centers:
        if not np.all(space.contains(x[None, :])):
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            vR = np.asarray(space.ball_volume(x, R))
            for frac in (0.0, 0.5, 1.0):
                y = _offset(space, x, frac * R)
                inside = space.contains(y)
                vy = np.asarray(space.ball_volume(y, r))
                k = vR * (r / R) ** s / vy
                k = k[inside & np.isfinite(k)]
                if k.size:
                    best = max(best, float(k.max()))
    return best


# -- oscillating weight -------------------------------------------------------------


def _radial_mass(levels, radii, r, N):
    """``int_{B(0, r)} w`` for the radial step weight in R^N (Euclidean balls)."""
    omega = unit_lq_ball_volume(N, 2.0)
    total, prev = 0.0, 0.0
    for lev, rn in zip(levels, radii):
        hi = min(r, rn)
        if hi > prev:
            total += lev * omega * (hi ** N - prev ** N)
        prev = rn
        if r <= rn:
            return total
    return total + levels[len(radii)] * omega * (r ** N - prev ** N) if r > prev else total


def oscillating_ratio(m, M, N, radii, r):
    """``nu(B(0, r)) / r^N`` for the weight alternating ``m`` (odd annuli) and ``M`` (even)."""
    levels = [m if n % 2 else M for n in range(1, len(radii) + 2)]
    return _radial_mass(levels, radii, r, N) / r ** N


def construct_oscillating_radii(m, M, N, count, r1=1.0):
    """Radii ``r_n = (M n)^{1/N} r_{n-1} + 1`` enlarged until the ratio bounds hold.

    For even ``n`` the ratio at ``r_n`` and ``r_n - 1`` must be at least
    ``(M - 1/n) omega_N``; for odd ``n >= 3`` at most ``(m + 1/n) omega_N``.
    Failing radii are doubled.
    """
    if not 0 < m < M:
        raise ConfigError("need 0 < m < M", "m")
    if int(count) != count or count < 1:
        raise ConfigError("count must be a positive integer", "count")
    if not r1 > 0:
        raise ConfigError("r1 must be positive", "r1")
    omega = unit_lq_ball_volume(N, 2.0)
    radii = [float(r1)]
    for n in range(2, int(count) + 1):
        rn = (M * n) ** (1.0 / N) * radii[-1] + 1.0
        for _ in range(200):
            trial = radii + [rn]
            probes = [rn, rn - 1.0]
            ratios = [oscillating_ratio(m, M, N, trial, r) for r in probes]
            if n % 2 == 0:
                ok = min(ratios) >= (M - 1.0 / n) * omega
            else:
                ok = max(ratios) <= (m + 1.0 / n) * omega
            if ok:
                break
            rn *= 2.0
        else:
            raise InputError(f"radius {n} did not satisfy its ratio bound")
        radii.append(rn)
    return radii


# -- combined report ---------------------------------------------------------------


@dataclass
class RegularityReport:
    space: SpaceDescriptor
    growth: GrowthFunction
    plan: ProbePlan
    ahlfors: AhlforsEstimate
    doubling: DoublingEstimate
    avr: Optional[AVREstimate]
    K_hat: Optional[float]
    s: Optional[float]
    avr_error: str = ""
    verdicts: list = field(default_factory=list)

    def probes(self, limit=None):
        vol = _volumes(self.space, self.plan)
        out = []
        for ci, c in enumerate(self.plan.centers):
            for ri, r in enumerate(self.plan.radii):
                out.append({"center": [float(v) for v in c], "radius": float(r), "volume": _num(vol[ci, ri])})
        return out[:limit] if limit else out

    def to_dict(self):
        return {
            "growth": self.growth.to_dict(),
            "ahlfors": self.ahlfors.to_dict(),
            "doubling": {k: _num(v) for k, v in self.doubling.to_dict().items()},
            "avr": self.avr.to_dict() if self.avr else None,
            "avr_error": self.avr_error,
            "K_hat": _num(self.K_hat),
            "s": self.s,
            "probes": self.probes(),
            "verdicts": [v.to_dict() for v in self.verdicts],
            "note": "C_A_hat, C_d_hat and K_hat are lower bounds; C_a_hat is an upper bound",
        }


def _num(v):
    if v is None or isinstance(v, bool):
        return v
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def regularity_report(space, growth=None, s=None, plan=None) -> RegularityReport:
    growth = _growth_of(space, growth)
    plan = plan or default_plan(space)
    if s is None and isinstance(growth, Power):
        s = growth.s
    ahl = estimate_ahlfors(space, growth, plan)
    dbl = estimate_doubling(space, plan)
    avr, avr_err = None, ""
    try:
        avr = estimate_avr(space, growth)
    except InputError as exc:
        avr_err = str(exc)
    K = check_bishop_gromov(space, s, plan) if s else None
    rep = RegularityReport(space, growth, plan, ahl, dbl, avr, K, s, avr_err)
    rep.verdicts = _declared_verdicts(rep, space.profile)
    return rep


def _declared_verdicts(rep, profile):
    out = []
    tol = 1e-9

    def add(name, ok, margin, detail):
        out.append(Verdict(name, "pass" if ok else "fail", margin, detail))

    if profile.C_A is not None:
        hat = rep.ahlfors.C_A_hat
        add("C_A", profile.C_A >= hat * (1 - tol) and not rep.ahlfors.upper_divergent,
            (profile.C_A - hat) / profile.C_A, f"declared {profile.C_A} vs probe max {hat:.6g}")
    if profile.C_a is not None:
        hat = rep.ahlfors.C_a_hat
        add("C_a", profile.C_a <= hat * (1 + tol), (hat - profile.C_a) / profile.C_a,
            f"declared {profile.C_a} vs probe min {hat:.6g}")
    if profile.C_d is not None:
        hat = rep.doubling.C_d_hat
        add("C_d", profile.C_d >= hat * (1 - tol), (profile.C_d - hat) / profile.C_d,
            f"declared {profile.C_d} vs probe max {hat:.6g}")
    if profile.AVR is not None:
        if rep.avr is None or not rep.avr.converged:
            out.append(Verdict("AVR", "not-applicable", None, rep.avr_error or "AVR tail did not converge"))
        else:
            err = abs(rep.avr.value - profile.AVR) / profile.AVR
            add("AVR", err <= 1e-2, 1e-2 - err, f"declared {profile.AVR} vs tail {rep.avr.value:.6g}")
    if profile.K is not None and rep.K_hat is not None:
        add("K", profile.K >= rep.K_hat * (1 - tol), (profile.K - rep.K_hat) / profile.K,
            f"declared {profile.K} vs probe max {rep.K_hat:.6g}")
    return out
