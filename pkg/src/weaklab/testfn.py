"""Piecewise-constant test functions with exact L^p norms and truncation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, InputError

__all__ = [
    "TestFunction",
    "IndicatorBall",
    "ShiftedUnitInterval",
    "StepSum",
    "Zero",
    "ScaledBy",
    "Restricted",
    "TruncationPair",
    "evaluate",
    "lp_norm_p",
    "truncate",
    "function_from_dict",
]


class TestFunction:
    """Base class.  Subclasses are frozen dataclasses.

    Every kind reports a ball ``support_ball(space)`` that contains its
    support, a ``sup_norm``, and, on line spaces, its ``line_pieces``:
    disjoint ``(a, b, height, left_closed, right_closed)`` steps.
    """

    __test__ = False  # keep pytest from collecting the class

    constant_on_support = False

    def evaluate(self, x, space):
        raise NotImplementedError

    def support_ball(self, space):
        raise NotImplementedError

    @property
    def sup_norm(self):
        raise NotImplementedError

    def line_pieces(self):
        raise InputError(f"{type(self).__name__} has no interval decomposition")

    def lp_norm_p(self, space, p):
        if space.is_line:
            return float(sum(abs(h) ** p * space.interval_mass(a, b) for a, b, h, *_ in self.line_pieces()))
        raise InputError(f"no exact L^p norm for {type(self).__name__} on {space.kind}")

    def level_regions(self, space, p):
        """``(|h|^p * nu(region), region)`` pairs for the |u|^p-proportional proposal."""
        if space.is_line:
            out = []
            for a, b, h, *_ in self.line_pieces():
                m = abs(h) ** p * space.interval_mass(a, b)
                if m > 0:
                    out.append((m, ("interval", a, b)))
            return out
        return []

    def to_dict(self):
        raise NotImplementedError


def _line_value(pieces, x):
    out = np.zeros(np.shape(x))
    for a, b, h, lc, rc in pieces:
        lo = x >= a if lc else x > a
        hi = x <= b if rc else x < b
        out = np.where(lo & hi, h, out)
    return out


@dataclass(frozen=True)
class IndicatorBall(TestFunction):
    """Indicator of the closed ball ``B(center, radius)``."""

    center: tuple
    radius: float
    constant_on_support = True

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ConfigError("indicator radius must be positive", "function.radius")

    def evaluate(self, x, space):
        d = space.distance(np.asarray(self.center), x)
        return np.where(np.asarray(d) <= self.radius, 1.0, 0.0)

    def support_ball(self, space):
        return self.center, self.radius

    @property
    def sup_norm(self):
        return 1.0

    def line_pieces(self):
        if len(self.center) != 1:
            raise InputError("interval decomposition needs a line")
        c = self.center[0]
        return [(c - self.radius, c + self.radius, 1.0, True, True)]

    def lp_norm_p(self, space, p):
        return float(space.ball_volume(np.asarray(self.center), self.radius))

    def level_regions(self, space, p):
        m = self.lp_norm_p(space, p)
        return [(m, ("ball", self.center, self.radius))] if m > 0 else []

    def to_dict(self):
        return {"kind": "indicator_ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class ShiftedUnitInterval(TestFunction):
    """``1_[n, n+1]`` on a line."""

    n: int
    constant_on_support = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ConfigError("n must be a nonnegative integer", "function.n")

    def line_pieces(self):
        return [(float(self.n), float(self.n) + 1.0, 1.0, True, True)]

    def evaluate(self, x, space):
        return _line_value(self.line_pieces(), np.asarray(x)[..., 0])

    def support_ball(self, space):
        return (self.n + 0.5,), 0.5

    @property
    def sup_norm(self):
        return 1.0

    def to_dict(self):
        return {"kind": "shifted_unit_interval", "n": self.n}


@dataclass(frozen=True)
class StepSum(TestFunction):
    """Sum of heights on disjoint intervals of a line.

    Steps are ``(a, b, h)`` (closed) or ``(a, b, h, left_closed, right_closed)``.
    """

    steps: tuple

    def __post_init__(self):
        norm = []
        for st in self.steps:
            if len(st) == 3:
                a, b, h = st
                lc = rc = True
            else:
                a, b, h, lc, rc = st
            a, b, h = float(a), float(b), float(h)
            if not (math.isfinite(a) and math.isfinite(b)) or b < a:
                raise ConfigError(f"bad step interval [{a}, {b}]", "function.steps")
            norm.append((a, b, h, bool(lc), bool(rc)))
        norm.sort()
        for s1, s2 in zip(norm, norm[1:]):
            if s2[0] < s1[1] or (s2[0] == s1[1] and s1[4] and s2[3] and s1[1] > s1[0] and s2[1] > s2[0]):
                raise ConfigError("step intervals must be disjoint", "function.steps")
        object.__setattr__(self, "steps", tuple(norm))

    @property
    def constant_on_support(self):
        return len(self.steps) == 1

    def line_pieces(self):
        return list(self.steps)

    def evaluate(self, x, space):
        return _line_value(self.steps, np.asarray(x)[..., 0])

    def support_ball(self, space):
        if not self.steps:
            return tuple(space.base_point), 1.0
        lo = min(s[0] for s in self.steps)
        hi = max(s[1] for s in self.steps)
        return (0.5 * (lo + hi),), max(0.5 * (hi - lo), 1e-300)

    @property
    def sup_norm(self):
        return max((abs(s[2]) for s in self.steps), default=0.0)

    def to_dict(self):
        return {"kind": "step_sum", "steps": [list(s) for s in self.steps]}


@dataclass(frozen=True)
class Zero(TestFunction):
    """The zero function, optionally with a declared support ball for sampling."""

    support_center: Optional[tuple] = None
    support_radius: float = 1.0
    constant_on_support = True

    def evaluate(self, x, space):
        return np.zeros(np.shape(x)[:-1])

    def support_ball(self, space):
        c = self.support_center if self.support_center is not None else space.base_point
        return tuple(float(v) for v in np.atleast_1d(c)), self.support_radius

    @property
    def sup_norm(self):
        return 0.0

    def line_pieces(self):
        return []

    def lp_norm_p(self, space, p):
        return 0.0

    def level_regions(self, space, p):
        return []

    def to_dict(self):
        d = {"kind": "zero"}
        if self.support_center is not None:
            d["support_center"] = list(np.atleast_1d(self.support_center))
            d["support_radius"] = self.support_radius
        return d


@dataclass(frozen=True)
class ScaledBy(TestFunction):
    c: float
    inner: TestFunction

    @property
    def constant_on_support(self):
        return self.inner.constant_on_support

    def evaluate(self, x, space):
        return self.c * self.inner.evaluate(x, space)

    def support_ball(self, space):
        return self.inner.support_ball(space)

    @property
    def sup_norm(self):
        return abs(self.c) * self.inner.sup_norm

    def line_pieces(self):
        return [(a, b, self.c * h, lc, rc) for a, b, h, lc, rc in self.inner.line_pieces()]

    def lp_norm_p(self, space, p):
        return abs(self.c) ** p * self.inner.lp_norm_p(space, p)

    def level_regions(self, space, p):
        return [(abs(self.c) ** p * m, reg) for m, reg in self.inner.level_regions(space, p)]

    def to_dict(self):
        return {"kind": "scaled", "c": self.c, "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class Restricted(TestFunction):
    """``inner`` times the indicator of ``B(center, radius)`` (or of its complement)."""

    inner: TestFunction
    center: tuple
    radius: float
    inside: bool = True

    def _mask(self, x, space):
        d = np.asarray(space.distance(np.asarray(self.center), x))
        return d <= self.radius if self.inside else d > self.radius

    def evaluate(self, x, space):
        return np.where(self._mask(x, space), self.inner.evaluate(x, space), 0.0)

    def support_ball(self, space):
        c, r = self.inner.support_ball(space)
        if self.inside and self.radius < r:
            return self.center, self.radius
        return c, r

    @property
    def sup_norm(self):
        return self.inner.sup_norm

    def lp_norm_p(self, space, p):
        inner = self.inner
        scale = 1.0
        while isinstance(inner, ScaledBy):
            scale *= abs(inner.c) ** p
            inner = inner.inner
        if (
            isinstance(inner, IndicatorBall)
            and getattr(space, "kind", None) == "euclidean"
            and space.N == 2
            and space.q == 2.0
        ):
            d = float(space.distance(np.asarray(self.center), np.asarray(inner.center)))
            lens = disk_intersection_area(d, self.radius, inner.radius)
            part = lens if self.inside else math.pi * inner.radius ** 2 - lens
            return scale * part
        raise InputError("no exact L^p norm for this restriction")

    def to_dict(self):
        return {
            "kind": "restricted",
            "inner": self.inner.to_dict(),
            "center": list(self.center),
            "radius": self.radius,
            "inside": self.inside,
        }


# below this relative offset the two centers are treated as one (error ~ 1e-150)
_CONCENTRIC = 1e-150


def _segment(theta):
    """``theta - sin(theta)``, accurate for small angles."""
    if theta < 1e-2:
        t2 = theta * theta
        return theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    return theta - math.sin(theta)


def _half_angles(d, r1, r2):
    """Half-angles subtended by the common chord at each center (atan2 form)."""
    # Heron with the radius difference grouped first, so tiny d is not absorbed
    dr, sr = r1 - r2, r1 + r2
    k = math.sqrt(max(0.0, (sr - d) * (d + sr))) * math.sqrt(max(0.0, d + dr)) * math.sqrt(max(0.0, d - dr))
    return math.atan2(k, d * d + dr * sr), math.atan2(k, d * d - dr * sr)


def disk_intersection_area(d, r1, r2):
    """Area of the intersection of planar disks of radii ``r1``, ``r2`` at distance ``d``."""
    if d >= r1 + r2:
        return 0.0
    if d <= max(abs(r1 - r2), _CONCENTRIC * (r1 + r2)):
        return math.pi * min(r1, r2) ** 2
    a1, a2 = _half_angles(d, r1, r2)
    return 0.5 * (r1 * r1 * _segment(2.0 * a1) + r2 * r2 * _segment(2.0 * a2))


def disk_outside_area(d, r, a):
    """Area of the disk ``B(x, r)`` lying outside ``B(0, a)``, with ``d = |x|``."""
    if d >= a + r:
        return math.pi * r * r
    if d <= max(abs(r - a), _CONCENTRIC * (r + a)):
        return math.pi * max(0.0, r * r - a * a)
    ar, aa = _half_angles(d, r, a)
    # the arc of B(x, r) outside spans 2(pi - ar); subtract the segment of B(0, a) it cuts off
    return 0.5 * (r * r * _segment(2.0 * (math.pi - ar)) - a * a * _segment(2.0 * aa))


@dataclass(frozen=True)
class TruncationPair:
    u_R: TestFunction
    v_R: TestFunction
    R: float
    x0: tuple


def evaluate(u, x, space):
    return u.evaluate(np.asarray(x, dtype=float), space)


def lp_norm_p(u, space, p):
    """``||u||_p^p`` (the p-th power of the norm)."""
    if p < 1:
        raise InputError("p must be >= 1")
    return float(u.lp_norm_p(space, p))


def _clip_pieces(pieces, lo, hi, inside):
    out = []
    for a, b, h, lc, rc in pieces:
        if inside:
            na, nlc = (a, lc) if a > lo else (lo, True)
            nb, nrc = (b, rc) if b < hi else (hi, True)
            if nb > na or (nb == na and nlc and nrc):
                out.append((na, nb, h, nlc, nrc))
        else:
            if a < lo:
                nb, nrc = (b, rc) if b < lo else (lo, False)
                out.append((a, nb, h, lc, nrc))
            if b > hi:
                na, nlc = (a, lc) if a > hi else (hi, False)
                out.append((na, b, h, nlc, rc))
    return out


def truncate(u, x0, R, space):
    """Split ``u = u_R + v_R`` with ``u_R = u * 1_{B(x0, R)}``."""
    if not R > 0:
        raise InputError("truncation radius must be positive")
    x0 = tuple(float(v) for v in np.atleast_1d(x0))
    c, a = u.support_ball(space)
    dc = float(space.distance(np.asarray(x0), np.asarray(c)))
    if isinstance(u, Zero) or dc + a <= R:
        return TruncationPair(u, Zero(), R, x0)
    if space.is_line:
        pieces = u.line_pieces()
        lo, hi = x0[0] - R, x0[0] + R
        inside = _clip_pieces(pieces, lo, hi, True)
        outside = _clip_pieces(pieces, lo, hi, False)
        u_R = StepSum(tuple(inside)) if inside else Zero()
        v_R = StepSum(tuple(outside)) if outside else Zero()
        return TruncationPair(u_R, v_R, R, x0)
    if dc - a > R:
        return TruncationPair(Zero(), u, R, x0)
    return TruncationPair(Restricted(u, x0, R, True), Restricted(u, x0, R, False), R, x0)


def function_from_dict(d, field="function"):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("expected an object with a 'kind'", field)
    kind = d["kind"]
    try:
        if kind == "indicator_ball":
            return IndicatorBall(tuple(d["center"]), float(d["radius"]))
        if kind == "shifted_unit_interval":
            return ShiftedUnitInterval(int(d["n"]))
        if kind == "step_sum":
            return StepSum(tuple(tuple(s) for s in d["steps"]))
        if kind == "zero":
            if "support_center" in d:
                return Zero(tuple(d["support_center"]), float(d.get("support_radius", 1.0)))
            return Zero()
        if kind == "scaled":
            return ScaledBy(float(d["c"]), function_from_dict(d["inner"], f"{field}.inner"))
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}", field) from None
    raise ConfigError(f"unknown function kind {kind!r}", f"{field}.kind")
