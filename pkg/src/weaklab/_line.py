"""Piecewise-polynomial densities on the real line and exact strip integrals.

Every line measure in the package is ``w(x) dx`` with ``w`` a polynomial on
each cell of a finite breakpoint partition.  Double integrals of
``w(x) w(y)`` over regions bounded by lines of slope 0 and +-1 are then
piecewise polynomial in ``x`` once the region is cut at every crossing, so
Gauss-Legendre rules of modest order integrate them to rounding error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Density ``w`` with pieces ``(-inf, b0), [b0, b1), ..., [b_{K-1}, inf)``.

    ``coefficients[k]`` holds ascending-power coefficients of piece ``k``.
    """

    breakpoints: tuple
    coefficients: tuple
    _anchors: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _antider: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        c = tuple(tuple(float(v) for v in row) for row in self.coefficients)
        if len(c) != len(b) + 1:
            raise ConfigError("need one more coefficient row than breakpoints", "weight")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise ConfigError("breakpoints must be strictly increasing", "weight.breakpoints")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "coefficients", c)
        antider = tuple(np.polynomial.polynomial.polyint(row) if row else np.zeros(1) for row in c)
        object.__setattr__(self, "_antider", antider)
        # anchor of piece k is its left end; the leftmost piece is anchored at b0
        anchors = np.array((b[0] if b else 0.0,) + b)
        object.__setattr__(self, "_anchors", anchors)
        cum = np.zeros(len(b))
        for k in range(1, len(b)):
            cum[k] = cum[k - 1] + self._piece_integral(k, b[k - 1], b[k])
        object.__setattr__(self, "_cum", cum)
        probe = np.concatenate([np.asarray(b), np.asarray(b) + 1e-9, [-1e6, 1e6, 0.0]])
        if np.any(self.weight(probe) < -1e-12):
            raise ConfigError("weight must be nonnegative", "weight")

    # -- evaluation -----------------------------------------------------

    @property
    def degree(self):
        return max(len(row) for row in self.coefficients) - 1

    def piece_index(self, x):
        return np.searchsorted(self.breakpoints, x, side="right")

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        k = self.piece_index(x)
        out = np.zeros_like(x)
        for j, row in enumerate(self.coefficients):
            m = k == j
            if np.any(m) and row:
                out[m] = np.polynomial.polynomial.polyval(x[m], row)
        return out

    def _piece_integral(self, k, a, b):
        P = self._antider[k]
        return float(np.polynomial.polynomial.polyval(b, P) - np.polynomial.polynomial.polyval(a, P))

    def cumulative(self, x):
        """``W(x)``: signed integral of ``w`` from ``b0`` (or 0 if no breakpoints)."""
        x = np.asarray(x, dtype=float)
        k = self.piece_index(x)
        out = np.empty_like(x)
        for j in range(len(self.coefficients)):
            m = k == j
            if not np.any(m):
                continue
            P = self._antider[j]
            base = self._cum[j - 1] if j >= 1 else 0.0
            a = self._anchors[j]
            out[m] = base + (np.polynomial.polynomial.polyval(x[m], P) - np.polynomial.polynomial.polyval(a, P))
        return out

    def mass(self, a, b):
        """Exact ``int_a^b w``; empty intervals (``b <= a``) give 0."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape)
        ok = b > a
        if np.any(ok):
            aa, bb = a[ok], b[ok]
            res = np.empty(aa.shape)
            inf_lo = ~np.isfinite(aa)
            inf_hi = ~np.isfinite(bb)
            fin = ~(inf_lo | inf_hi)
            res[fin] = self.cumulative(bb[fin]) - self.cumulative(aa[fin])
            if np.any(~fin):
                for i in np.flatnonzero(~fin):
                    res[i] = self._mass_unbounded(aa[i], bb[i])
            out[ok] = res
        return out if out.ndim else float(out)

    def _mass_unbounded(self, a, b):
        total = 0.0
        edges = [-np.inf, *self.breakpoints, np.inf]
        for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
            lo2, hi2 = max(lo, a), min(hi, b)
            if hi2 <= lo2:
                continue
            row = self.coefficients[k]
            if not any(row):
                continue
            if not (np.isfinite(lo2) and np.isfinite(hi2)):
                return np.inf
            total += self._piece_integral(k, lo2, hi2)
        return total

    # -- sampling -------------------------------------------------------

    def sample(self, lo, hi, u):
        """Inverse-transform samples of ``w`` restricted to ``[lo, hi]``.

        ``lo``, ``hi``, ``u`` broadcast; ``u`` uniform on [0, 1).
        """
        lo, hi, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo, hi, u)))
        Wlo = self.cumulative(lo)
        Whi = self.cumulative(hi)
        target = Wlo + u * (Whi - Wlo)
        k = np.searchsorted(self._cum, target, side="right")
        # piece containing the target; ties on flat (zero-density) stretches
        # resolve rightwards, which is measure-invisible
        x = np.empty(target.shape)
        for j in range(len(self.coefficients)):
            m = k == j
            if not np.any(m):
                continue
            base = self._cum[j - 1] if j >= 1 else 0.0
            x[m] = self._invert_piece(j, target[m] - base)
        return np.clip(x, lo, hi)

    def _invert_piece(self, j, t):
        a = self._anchors[j]
        row = self.coefficients[j]
        if len(row) <= 2:
            c0 = row[0] if row else 0.0
            c1 = row[1] if len(row) == 2 else 0.0
            # int_a^x (c0 + c1 s) ds = A z^2 + B z with z = x - a
            A = 0.5 * c1
            B = c0 + c1 * a  # w(anchor) >= 0, so the root below is the branch through z = 0
            disc = np.sqrt(np.maximum(B * B + 4.0 * A * t, 0.0))
            denom = B + disc
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(denom != 0, 2.0 * t / denom, 0.0)
            return a + z
        return self._bisect_piece(j, t)

    def _bisect_piece(self, j, t):
        a = self._anchors[j]
        P = self._antider[j]
        f = lambda x: np.polynomial.polynomial.polyval(x, P) - np.polynomial.polynomial.polyval(a, P)
        edges = [-np.inf, *self.breakpoints, np.inf]
        lo_e, hi_e = edges[j], edges[j + 1]
        span = 1.0
        lo = np.full(t.shape, lo_e if np.isfinite(lo_e) else a - span)
        hi = np.full(t.shape, hi_e if np.isfinite(hi_e) else a + span)
        while np.any(f(hi) < t):
            hi = np.where(f(hi) < t, a + 2 * (hi - a) + 1, hi)
        while np.any(f(lo) > t):
            lo = np.where(f(lo) > t, a - 2 * (a - lo) - 1, lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = f(mid) < t
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def to_dict(self):
        return {
            "kind": "piecewise_polynomial",
            "breakpoints": list(self.breakpoints),
            "coefficients": [list(r) for r in self.coefficients],
        }


def constant_density(value=1.0):
    return PiecewisePolynomial((), ((value,),))


def one_plus_abs():
    """The weight ``1 + |x|``."""
    return PiecewisePolynomial((0.0,), ((1.0, -1.0), (1.0, 1.0)))


def interval_density(a, b):
    """Lebesgue measure restricted to ``[a, b]``."""
    return PiecewisePolynomial((a, b), ((0.0,), (1.0,), (0.0,)))


def symmetric_levels(radii, levels, outer_level):
    """Radial step weight: ``levels[n]`` on ``r_{n-1} < |x| <= r_n`` (``r_{-1} = 0``)."""
    radii = [float(r) for r in radii]
    bps = [-r for r in reversed(radii)] + radii
    rows = [(float(outer_level),)]
    rows += [(float(v),) for v in reversed(levels[1:])]
    rows += [(float(levels[0]),)]
    rows += [(float(v),) for v in levels[1:]]
    rows += [(float(outer_level),)]
    # inner piece [-r0, r0) is a single cell
    return PiecewisePolynomial(tuple(bps), tuple(rows))


# -- exact double integrals -------------------------------------------------

_GL_CACHE = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def window_integral(density, x_lo, x_hi, lowers, uppers):
    """``int_{x_lo}^{x_hi} w(x) * nu([max L(x), min U(x)]) dx`` exactly.

    ``lowers``/``uppers`` are affine bounds ``(slope, intercept)``; an
    intercept of +-inf gives a constant unbounded bound.  Empty windows
    contribute zero.  The x-range must be finite.
    """
    if not (np.isfinite(x_lo) and np.isfinite(x_hi)):
        raise InputError("window integral needs a finite x-range")
    if x_hi <= x_lo:
        return 0.0
    bounds = list(lowers) + list(uppers)
    cuts = {x_lo, x_hi}
    finite = [(s, c) for s, c in bounds if np.isfinite(c)]
    for (s1, c1), (s2, c2) in itertools.combinations(finite, 2):
        if s1 != s2:
            cuts.add((c2 - c1) / (s1 - s2))
    for beta in density.breakpoints:
        cuts.add(beta)
        for s, c in finite:
            if s != 0:
                cuts.add((beta - c) / s)
    pts = np.array(sorted(v for v in cuts if x_lo <= v <= x_hi))
    a, b = pts[:-1], pts[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0
    n = max(density.degree + 2, 4)
    nodes, weights = _gauss(n)
    half = 0.5 * (b - a)
    xs = (0.5 * (a + b))[:, None] + half[:, None] * nodes[None, :]
    lo = np.full(xs.shape, -np.inf)
    for s, c in lowers:
        lo = np.maximum(lo, s * xs + c if np.isfinite(c) else np.full(xs.shape, c))
    hi = np.full(xs.shape, np.inf)
    for s, c in uppers:
        hi = np.minimum(hi, s * xs + c if np.isfinite(c) else np.full(xs.shape, c))
    inner = density.mass(lo.ravel(), hi.ravel()).reshape(xs.shape)
    vals = density.weight(xs) * inner
    return float(np.sum(half * (vals @ weights)))
