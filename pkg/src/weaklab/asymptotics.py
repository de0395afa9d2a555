"""Lambda sweeps, the weak-norm estimate, the lambda -> 0 limit and bound verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InputError
from .growth import GrowthFunction, Power
from .levelset import LevelSetEstimate, LevelSetQuery, estimate, exact_available
from .space import RegularityProfile, SpaceDescriptor
from .testfn import TestFunction, lp_norm_p

__all__ = [
    "LambdaGrid",
    "WeakNorm",
    "LimitEstimate",
    "Verdict",
    "SweepReport",
    "THEOREMS",
    "sweep",
    "weak_norm_p",
    "limit_at_zero",
    "theorem_constants",
    "check_bounds",
]

THEOREMS = ("avr", "ahlfors", "f_avr", "f_ahlfors")
FIT_MIN_POINTS = 8
RESIDUAL_LIMIT = 0.05
SPREAD_LIMIT = 0.05
FINITE_DECAY = 1e-2


@dataclass(frozen=True)
class LambdaGrid:
    lambda_min: float
    lambda_max: float
    count: int

    def __post_init__(self):
        if not (0 < self.lambda_min < self.lambda_max) or not math.isfinite(self.lambda_max):
            raise ConfigError("need 0 < lambda_min < lambda_max", "grid")
        if int(self.count) != self.count or self.count < 8:
            raise ConfigError("grid needs at least 8 points", "grid.count")

    @property
    def values(self):
        return np.geomspace(self.lambda_min, self.lambda_max, int(self.count))

    def to_dict(self):
        return {"lambda_min": self.lambda_min, "lambda_max": self.lambda_max, "count": int(self.count)}


@dataclass(frozen=True)
class WeakNorm:
    value: float
    std_err: float
    argmax_lambda: float
    at_lambda_min: bool

    def to_dict(self):
        return {
            "value": self.value,
            "std_err": self.std_err,
            "argmax_lambda": self.argmax_lambda,
            "at_lambda_min": self.at_lambda_min,
        }


@dataclass(frozen=True)
class LimitEstimate:
    applicable: bool
    value: Optional[float]
    std_err: Optional[float]
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "applicable": self.applicable,
            "value": self.value,
            "std_err": self.std_err,
            "reason": self.reason,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class Verdict:
    claim: str
    status: str  # pass | fail | not-applicable | expected-fail
    margin: Optional[float]
    detail: str = ""

    def to_dict(self):
        return {"claim": self.claim, "status": self.status, "margin": self.margin, "detail": self.detail}


@dataclass
class SweepReport:
    space: SpaceDescriptor
    u: TestFunction
    p: float
    growth: GrowthFunction
    grid: LambdaGrid
    estimates: list
    norm_p: float
    weak_norm: Optional[WeakNorm] = None
    limit: Optional[LimitEstimate] = None
    constants: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)

    @property
    def lambdas(self):
        return np.array([e.lam for e in self.estimates])

    @property
    def values(self):
        return np.array([e.value for e in self.estimates])

    @property
    def std_errs(self):
        return np.array([e.std_err for e in self.estimates])


def sweep(space, u, p, grid: LambdaGrid, growth=None, method="auto", budget=None, seed=None, workers=None):
    """Evaluate ``D`` at every grid point and attach the weak norm and the limit.

    A Monte Carlo budget is split evenly across the grid; each grid point
    draws from its own substream so results do not depend on evaluation order.
    """
    lams = grid.values
    resolved = method if method != "auto" else (exact_available(space, u) or "monte_carlo")
    per_point = None
    if resolved == "monte_carlo":
        if budget is None or seed is None:
            raise ConfigError("Monte Carlo sweeps need a budget and a seed", "budget")
        per_point = int(budget) // len(lams)
    estimates = []
    for i, lam in enumerate(lams):
        q = LevelSetQuery(space, u, p, float(lam), growth)
        estimates.append(estimate(q, resolved, per_point, seed, workers, stream_key=(0, i)))
    report = SweepReport(
        space=space,
        u=u,
        p=p,
        growth=growth if growth is not None else space.growth,
        grid=grid,
        estimates=estimates,
        norm_p=lp_norm_p(u, space, p),
    )
    report.weak_norm = weak_norm_p(report)
    try:
        report.limit = limit_at_zero(report)
    except InputError as exc:
        report.limit = LimitEstimate(False, None, None, str(exc))
    return report


def weak_norm_p(report: SweepReport) -> WeakNorm:
    """Grid maximum of ``D`` with the standard error of the argmax point."""
    if not report.estimates:
        raise InputError("empty sweep")
    vals = report.values
    k = int(np.argmax(vals))
    lams = report.lambdas
    at_min = bool(lams[k] == lams.min()) and vals[k] > 0
    return WeakNorm(float(vals[k]), float(report.std_errs[k]), float(lams[k]), at_min)


def _decade_means(lams, vals, detrend):
    """Means of the detrended values over the lowest full decades (at most three)."""
    lo = lams.min()
    means = []
    for k in range(3):
        a, b = lo * 10.0 ** k, lo * 10.0 ** (k + 1)
        if b > lams.max() * (1 + 1e-12):
            break
        sel = (lams >= a * (1 - 1e-12)) & (lams <= b * (1 + 1e-12))
        if sel.sum() >= 2:
            means.append(float(np.mean(vals[sel] - detrend(lams[sel]))))
    return means


def limit_at_zero(report: SweepReport) -> LimitEstimate:
    """Fit ``D = c3 + a * lam**p`` over the smallest decade of the grid.

    Returns a not-applicable estimate when the relative RMS residual of the fit
    exceeds 5%, or when detrended decade means over the lowest (up to three)
    decades spread by more than 5% of their mean.
    """
    lams = report.lambdas
    vals = report.values
    ses = report.std_errs
    lo = lams.min()
    sel = lams <= 10.0 * lo * (1 + 1e-12)
    if sel.sum() < FIT_MIN_POINTS:
        raise InputError(f"limit fit needs >= {FIT_MIN_POINTS} points in the smallest decade, got {int(sel.sum())}")
    x = lams[sel] ** report.p
    y = vals[sel]
    s = ses[sel]
    if np.all(y == 0) and np.all(s == 0):
        return LimitEstimate(True, 0.0, 0.0, "", {"n_points": int(sel.sum()), "relative_residual": 0.0})
    X = np.column_stack([np.ones_like(x), x])
    weighted = bool(np.all(s > 0))
    w = 1.0 / s if weighted else np.ones_like(y)
    coef, *_ = np.linalg.lstsq(X * w[:, None], y * w, rcond=None)
    resid = y - X @ coef
    dof = max(len(y) - 2, 1)
    cov = np.linalg.inv((X * w[:, None]).T @ (X * w[:, None]))
    chi2 = float(np.sum((resid * w) ** 2)) / dof
    cov *= max(chi2, 1.0) if weighted else chi2
    c3, a = float(coef[0]), float(coef[1])
    se = math.sqrt(max(cov[0, 0], 0.0))
    scale = max(abs(c3), float(np.max(np.abs(y))))
    rel_resid = float(np.sqrt(np.mean(resid ** 2))) / scale if scale > 0 else 0.0
    means = _decade_means(lams, vals, lambda l: a * l ** report.p)
    # a curve decaying to 0 has no meaningful relative spread; floor the scale
    ref = max(abs(float(np.mean(means))), 1e-3 * float(np.max(np.abs(vals)))) if means else 0.0
    spread = (max(means) - min(means)) / ref if len(means) >= 2 and ref > 0 else 0.0
    diag = {
        "n_points": int(sel.sum()),
        "slope": a,
        "relative_residual": rel_resid,
        "decade_means": means,
        "decade_spread": float(spread),
        "weighted": weighted,
    }
    if rel_resid > RESIDUAL_LIMIT:
        return LimitEstimate(False, None, None, f"fit residual {rel_resid:.3g} exceeds {RESIDUAL_LIMIT}", diag)
    if spread > SPREAD_LIMIT:
        return LimitEstimate(False, None, None, f"decade means spread {spread:.3g} (oscillation)", diag)
    return LimitEstimate(True, c3, se, "", diag)


def theorem_constants(theorem, profile: RegularityProfile, p, growth, total_mass_finite=False):
    """``c1``, ``c2``, ``c3`` and the limit band for a theorem selector."""
    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem selector {theorem!r}", "theorem")
    if not theorem.startswith("f_") and not isinstance(growth, Power):
        raise ConfigError(f"selector {theorem!r} needs a power growth; use f_{theorem}", "theorem")

    def need(name):
        v = getattr(profile, name)
        if v is None:
            raise ConfigError(f"selector {theorem!r} needs {name}", f"space.profile.{name}")
        return v

    out = {"theorem": theorem, "c2": 2.0 ** (p + 1) * need("C_A")}
    if total_mass_finite:
        return out
    if theorem.endswith("avr"):
        out["c1"] = out["c3"] = 2.0 * need("AVR")
    else:
        out["c1"] = 2.0 * need("C_a")
        out["band"] = [2.0 * need("C_a"), 2.0 * out["c2"] / 2.0 ** (p + 1)]
    return out


def _rel(num, den):
    return float(num / den) if den != 0 else float(num)


def check_bounds(report: SweepReport, profile: RegularityProfile, theorem, limit_rtol=0.01):
    """Verdicts for the upper bound, the lower bound and the limit claim.

    Margins are relative to the asserted constant times ``||u||_p^p``;
    positive means the claim holds with room to spare.
    """
    finite = report.space.total_mass_finite
    consts = theorem_constants(theorem, profile, report.p, report.growth, finite)
    report.constants = consts
    N = report.norm_p
    vals, ses = report.values, report.std_errs
    verdicts = []

    bound = consts["c2"] * N
    slack = bound + 3.0 * ses + 1e-12 * max(bound, 1.0)
    worst = float(np.min(slack - vals))
    verdicts.append(
        Verdict(
            "upper",
            "pass" if worst >= 0 else "fail",
            _rel(worst, bound),
            f"max D = {float(vals.max()):.6g} against c2*||u||^p = {bound:.6g}",
        )
    )

    lams = report.lambdas
    last = lams <= lams.min() * 10.0 * (1 + 1e-12)
    if finite:
        final_mean = float(np.mean(vals[last]))
        ref = 2.0 * N
        decayed = final_mean < FINITE_DECAY * ref
        verdicts.append(
            Verdict(
                "lower",
                "expected-fail" if decayed else "not-applicable",
                _rel(final_mean, ref),
                "lower bound not asserted on a finite-measure space; "
                f"final-decade mean {final_mean:.3g} vs 2*||u||^p = {ref:.3g}",
            )
        )
        lim = report.limit
        ok = lim.applicable and abs(lim.value) <= FINITE_DECAY * ref + 3.0 * lim.std_err
        verdicts.append(
            Verdict("limit", "pass" if ok else "fail", None, "D vanishes as lambda -> 0 on a finite-measure space")
        )
        report.verdicts = verdicts
        return verdicts

    lower = consts["c1"] * N
    wn = report.weak_norm
    sup_est, sup_se = wn.value, wn.std_err
    lim = report.limit
    # the sup is approached at lambda -> 0 when the maximum sits on the grid boundary
    if lim is not None and lim.applicable and lim.value > sup_est:
        sup_est, sup_se = lim.value, lim.std_err
    gap = sup_est - (lower - 3.0 * sup_se - 1e-12 * max(lower, 1.0))
    verdicts.append(
        Verdict(
            "lower",
            "pass" if gap >= 0 else "fail",
            _rel(sup_est - lower, lower),
            f"sup estimate {sup_est:.6g} against c1*||u||^p = {lower:.6g}",
        )
    )

    if "c3" in consts:
        target = consts["c3"] * N
        if lim is None or not lim.applicable:
            verdicts.append(
                Verdict("limit", "not-applicable", None, lim.reason if lim is not None else "no limit estimate")
            )
        else:
            err = abs(lim.value - target)
            tol = max(limit_rtol * abs(target), 3.0 * lim.std_err)
            verdicts.append(
                Verdict(
                    "limit",
                    "pass" if err <= tol else "fail",
                    _rel(tol - err, abs(target)),
                    f"limit {lim.value:.6g} +- {lim.std_err:.2g} against c3*||u||^p = {target:.6g}",
                )
            )
    else:
        lo_b, hi_b = consts["band"][0] * N, consts["band"][1] * N
        v, s = vals[last], ses[last]
        below = float(np.min(v + 3.0 * s - lo_b))
        above = float(np.min(hi_b + 3.0 * s - v))
        ok = below >= -1e-12 * lo_b and above >= -1e-12 * hi_b
        verdicts.append(
            Verdict(
                "limit_band",
                "pass" if ok else "fail",
                _rel(min(below, above), hi_b),
                f"smallest-decade D in [{float(v.min()):.6g}, {float(v.max()):.6g}] against [{lo_b:.6g}, {hi_b:.6g}]",
            )
        )
    report.verdicts = verdicts
    return verdicts
