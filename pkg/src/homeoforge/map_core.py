"""Orientation-preserving homeomorphisms of [0,1] as monotone interpolants.

A map is stored as strictly increasing knot/value arrays with optional knot
derivatives.  Two interpolation kinds are supported:

* ``pl``     piecewise linear; closed under composition and inversion, used
             for all uniform-metric (C0) work.
* ``cubic``  piecewise cubic Hermite with prescribed positive knot
             derivatives, used for C1 work.  Strict monotonicity is verified
             segment-exactly at construction (the derivative of a Hermite
             segment is a quadratic, so its minimum is computable in closed
             form).

All public objects are immutable and all operations are pure functions; grid
scans are plain vectorized numpy and safe to run from multiple threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Homeo1D",
    "MetricReport",
    "HomeoError",
    "DomainError",
    "CapabilityError",
    "ComposeBudgetError",
    "MonotoneConstructionError",
    "pl_map",
    "cubic_map",
    "identity",
    "is_identity",
    "from_function",
    "eval_map",
    "eval_inverse",
    "deriv",
    "compose",
    "compose_chain",
    "invert",
    "power",
    "c0_dist",
    "c1_dist",
    "fixed_points",
    "make_monotone_interpolant",
    "hermite_bridge",
    "derivative_sup",
    "derivative_bounds",
    "second_derivative_sup",
    "to_json_dict",
    "from_json_dict",
    "save_map",
    "load_map",
    "DEFAULT_KNOT_BUDGET",
]

DEFAULT_KNOT_BUDGET = 1 << 16
_ENDPOINT_SNAP = 1e-12


class HomeoError(ValueError):
    """Base error for invalid maps or invalid map operations."""


class DomainError(HomeoError):
    """Evaluation outside [0,1]."""


class CapabilityError(HomeoError):
    """Operation needs derivative data the map does not carry."""


class ComposeBudgetError(HomeoError):
    """Merged knot set exceeds the composition budget."""


class MonotoneConstructionError(HomeoError):
    """No monotone-derivative interpolant exists for the given segment data."""


def _as_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Homeo1D:
    """Increasing homeomorphism of [0,1] fixing the endpoints.

    ``tol`` is an accumulated interpolation-tolerance estimate: 0 for maps
    that are exact by construction, positive after lossy composition or
    inversion resampling.  It is carried, never silently dropped.
    """

    knots: np.ndarray
    values: np.ndarray
    derivs: np.ndarray | None
    kind: str  # "pl" | "cubic"
    tol: float = 0.0

    def __post_init__(self):
        k = _as_array(self.knots)
        v = _as_array(self.values)
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        if self.derivs is not None:
            d = _as_array(self.derivs)
            object.__setattr__(self, "derivs", d)
        _validate(self)

    # Convenience callables so maps read like functions in client code.
    def __call__(self, x):
        return eval_map(self, x)

    def inv(self, y):
        return eval_inverse(self, y)

    def d(self, x):
        return deriv(self, x)

    @property
    def n_knots(self) -> int:
        return len(self.knots)


@dataclass(frozen=True)
class MetricReport:
    """Grid supremum of a C0/C1 distance plus certified upper bounds.

    ``c0``/``c1`` are maxima over the scan grid (lower estimates of the true
    sup); ``c0_upper``/``c1_upper`` add a Lipschitz/curvature correction and
    over-estimate the true sup whenever the relevant derivative data exists.
    """

    c0: float
    grid_size: int
    attained_at: float
    c1: float | None = None
    c1_attained_at: float | None = None
    c0_upper: float | None = None
    c1_upper: float | None = None


def _validate(m: Homeo1D) -> None:
    k, v = m.knots, m.values
    if k.ndim != 1 or v.ndim != 1 or len(k) != len(v) or len(k) < 2:
        raise HomeoError("knots/values must be 1-d arrays of equal length >= 2")
    if not (np.all(np.diff(k) > 0) and np.all(np.diff(v) > 0)):
        raise HomeoError("knots and values must be strictly increasing")
    for arr, name in ((k, "knots"), (v, "values")):
        if abs(arr[0]) > _ENDPOINT_SNAP or abs(arr[-1] - 1.0) > _ENDPOINT_SNAP:
            raise HomeoError(f"{name} must run from 0 to 1, got [{arr[0]}, {arr[-1]}]")
        if arr[0] != 0.0 or arr[-1] != 1.0:
            a = arr.copy()
            a[0], a[-1] = 0.0, 1.0
            object.__setattr__(m, "knots" if name == "knots" else "values", _as_array(a))
    if m.kind not in ("pl", "cubic"):
        raise HomeoError(f"unknown interpolation kind {m.kind!r}")
    if m.kind == "cubic":
        if m.derivs is None:
            raise CapabilityError("cubic maps need knot derivatives")
        if len(m.derivs) != len(m.knots):
            raise HomeoError("derivs length must match knots")
        if not np.all(m.derivs > 0):
            raise HomeoError("knot derivatives must be strictly positive")
        bad = _nonincreasing_segments(m)
        if bad.size:
            i = int(bad[0])
            raise HomeoError(
                f"cubic interpolant not strictly increasing on segment "
                f"[{m.knots[i]:.6g}, {m.knots[i + 1]:.6g}]"
            )
    elif m.derivs is not None:
        if len(m.derivs) != len(m.knots) or not np.all(m.derivs > 0):
            raise HomeoError("derivs must be positive, one per knot")


def _segment_coeffs(m: Homeo1D):
    """Per-segment Hermite coefficients: p(x) = y + m0*dx + c2*dx^2 + c3*dx^3."""
    h = np.diff(m.knots)
    dy = np.diff(m.values)
    delta = dy / h
    m0 = m.derivs[:-1]
    m1 = m.derivs[1:]
    c2 = (3.0 * delta - 2.0 * m0 - m1) / h
    c3 = (m0 + m1 - 2.0 * delta) / (h * h)
    return h, m0, c2, c3


def _nonincreasing_segments(m: Homeo1D) -> np.ndarray:
    """Indices of segments where the Hermite derivative is not positive."""
    h, m0, c2, c3 = _segment_coeffs(m)
    m1 = m.derivs[1:]
    lo = np.minimum(m0, m1)
    # interior vertex of p'(dx) = m0 + 2 c2 dx + 3 c3 dx^2
    with np.errstate(divide="ignore", invalid="ignore"):
        vx = np.where(c3 != 0.0, -c2 / (3.0 * c3), -1.0)
    inside = (vx > 0) & (vx < h)
    pv = m0 + 2.0 * c2 * vx + 3.0 * c3 * vx * vx
    lo = np.where(inside, np.minimum(lo, pv), lo)
    return np.nonzero(lo <= 0.0)[0]


# ---------------------------------------------------------------------------
# constructors


def pl_map(knots: Sequence[float], values: Sequence[float], tol: float = 0.0) -> Homeo1D:
    return Homeo1D(_as_array(knots), _as_array(values), None, "pl", tol)


def cubic_map(
    knots: Sequence[float],
    values: Sequence[float],
    derivs: Sequence[float],
    tol: float = 0.0,
) -> Homeo1D:
    return Homeo1D(_as_array(knots), _as_array(values), _as_array(derivs), "cubic", tol)


_IDENTITY = None


def identity() -> Homeo1D:
    global _IDENTITY
    if _IDENTITY is None:
        _IDENTITY = pl_map([0.0, 1.0], [0.0, 1.0])
    return _IDENTITY


def is_identity(m: Homeo1D, tol: float = 0.0) -> bool:
    if m.kind == "pl":
        return bool(np.all(np.abs(m.values - m.knots) <= tol))
    return bool(
        np.all(np.abs(m.values - m.knots) <= tol) and np.all(np.abs(m.derivs - 1.0) <= tol)
    )


def from_function(
    fn: Callable[[np.ndarray], np.ndarray],
    dfn: Callable[[np.ndarray], np.ndarray] | None = None,
    n_knots: int = 1025,
    kind: str = "cubic",
    knots: Sequence[float] | None = None,
) -> Homeo1D:
    """Sample a closed-form increasing function with f(0)=0, f(1)=1."""
    x = np.linspace(0.0, 1.0, n_knots) if knots is None else _as_array(knots)
    y = np.asarray(fn(x), dtype=float).copy()
    y[0], y[-1] = 0.0, 1.0
    if kind == "pl":
        return pl_map(x, y)
    if dfn is not None:
        d = np.asarray(dfn(x), dtype=float)
    else:
        d = np.gradient(y, x)
        d = np.maximum(d, 1e-12)
    return cubic_map(x, y, d)


# ---------------------------------------------------------------------------
# evaluation


def _check_domain(x: np.ndarray) -> None:
    if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
        raise DomainError(f"argument outside [0,1]: range [{x.min()}, {x.max()}]")


def eval_map(m: Homeo1D, x):
    """Evaluate m at x (scalar or array), strictly increasing, fixing 0 and 1."""
    scalar = np.isscalar(x)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(xa)
    xa = np.clip(xa, 0.0, 1.0)
    if m.kind == "pl":
        out = np.interp(xa, m.knots, m.values)
    else:
        idx = np.clip(np.searchsorted(m.knots, xa, side="right") - 1, 0, len(m.knots) - 2)
        dx = xa - m.knots[idx]
        h, m0, c2, c3 = _segment_coeffs(m)
        out = m.values[idx] + dx * (m0[idx] + dx * (c2[idx] + dx * c3[idx]))
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def eval_inverse(m: Homeo1D, y):
    """Evaluate the inverse map at y; exact for pl, bisection-exact for cubic."""
    scalar = np.isscalar(y)
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    _check_domain(ya)
    ya = np.clip(ya, 0.0, 1.0)
    if m.kind == "pl":
        out = np.interp(ya, m.values, m.knots)
    else:
        idx = np.clip(np.searchsorted(m.values, ya, side="right") - 1, 0, len(m.knots) - 2)
        lo = m.knots[idx]
        hi = m.knots[idx + 1]
        h, m0, c2, c3 = _segment_coeffs(m)
        y0 = m.values[idx]
        a, b = lo.copy(), hi.copy()
        for _ in range(60):  # bisection to full double precision on [0,1]
            mid = 0.5 * (a + b)
            dx = mid - lo
            val = y0 + dx * (m0[idx] + dx * (c2[idx] + dx * c3[idx]))
            takes = val < ya
            a = np.where(takes, mid, a)
            b = np.where(takes, b, mid)
        out = 0.5 * (a + b)
    return float(out[0]) if scalar else out


def deriv(m: Homeo1D, x):
    """One-sided derivative: right slope at knots, left slope at x=1."""
    scalar = np.isscalar(x)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(xa)
    xa = np.clip(xa, 0.0, 1.0)
    idx = np.clip(np.searchsorted(m.knots, xa, side="right") - 1, 0, len(m.knots) - 2)
    if m.kind == "pl":
        slopes = np.diff(m.values) / np.diff(m.knots)
        out = slopes[idx]
    else:
        h, m0, c2, c3 = _segment_coeffs(m)
        dx = xa - m.knots[idx]
        out = m0[idx] + dx * (2.0 * c2[idx] + dx * 3.0 * c3[idx])
    return float(out[0]) if scalar else out


def derivative_bounds(m: Homeo1D) -> tuple[float, float]:
    """Exact (min, max) of the derivative over [0,1], segment by segment."""
    if m.kind == "pl":
        slopes = np.diff(m.values) / np.diff(m.knots)
        return float(slopes.min()), float(slopes.max())
    h, m0, c2, c3 = _segment_coeffs(m)
    m1 = m.derivs[1:]
    lo = np.minimum(m0, m1)
    hi = np.maximum(m0, m1)
    with np.errstate(divide="ignore", invalid="ignore"):
        vx = np.where(c3 != 0.0, -c2 / (3.0 * c3), -1.0)
    inside = (vx > 0) & (vx < h)
    pv = m0 + 2.0 * c2 * vx + 3.0 * c3 * vx * vx
    lo = np.where(inside, np.minimum(lo, pv), lo)
    hi = np.where(inside, np.maximum(hi, pv), hi)
    return float(lo.min()), float(hi.max())


def derivative_sup(m: Homeo1D) -> float:
    return derivative_bounds(m)[1]


def second_deriv(m: Homeo1D, x):
    """Right-sided second derivative (0 for pl maps away from knots)."""
    scalar = np.isscalar(x)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    _check_domain(xa)
    xa = np.clip(xa, 0.0, 1.0)
    if m.kind == "pl":
        out = np.zeros_like(xa)
    else:
        idx = np.clip(np.searchsorted(m.knots, xa, side="right") - 1, 0, len(m.knots) - 2)
        h, m0, c2, c3 = _segment_coeffs(m)
        dx = xa - m.knots[idx]
        out = 2.0 * c2[idx] + 6.0 * c3[idx] * dx
    return float(out[0]) if scalar else out


def second_derivative_sup(m: Homeo1D) -> float:
    """Exact sup of |p''| for cubic (p'' linear per segment); 0 for pl."""
    if m.kind == "pl":
        return 0.0
    h, m0, c2, c3 = _segment_coeffs(m)
    end0 = np.abs(2.0 * c2)
    end1 = np.abs(2.0 * c2 + 6.0 * c3 * h)
    return float(np.maximum(end0, end1).max())


# ---------------------------------------------------------------------------
# composition / inversion


def _merge_knots(parts: Iterable[np.ndarray]) -> np.ndarray:
    merged = np.unique(np.concatenate([np.atleast_1d(p) for p in parts]))
    merged = np.clip(merged, 0.0, 1.0)
    merged = np.unique(merged)
    # drop near-duplicates that would create zero-width segments
    keep = np.concatenate(([True], np.diff(merged) > 1e-14))
    merged = merged[keep]
    if merged[0] != 0.0:
        merged = np.concatenate(([0.0], merged))
    if merged[-1] != 1.0:
        if 1.0 - merged[-1] <= 1e-14:
            merged[-1] = 1.0
        else:
            merged = np.concatenate((merged, [1.0]))
    return merged


def _thin(knots: np.ndarray, budget: int) -> np.ndarray:
    n = len(knots)
    if n <= budget:
        return knots
    idx = np.unique(np.round(np.linspace(0, n - 1, budget)).astype(int))
    return knots[idx]


def compose(
    f: Homeo1D,
    g: Homeo1D,
    budget: int = DEFAULT_KNOT_BUDGET,
    on_budget: str = "error",
) -> Homeo1D:
    """The composite x -> f(g(x)).

    The knot set is g's knots merged with the g-preimages of f's knots, so pl
    composed with pl is exact.  When a cubic map is involved the result
    interpolates the true composite between knots; the measured midpoint error
    is added to ``tol``.  If the merged knot set exceeds ``budget`` the
    behavior follows ``on_budget``: "error" raises, "resample" thins the knot
    set and records the measured loss in ``tol`` (never silent).
    """
    if is_identity(g):
        return f
    if is_identity(f):
        return g
    pre = eval_inverse(g, f.knots[1:-1]) if f.n_knots > 2 else np.empty(0)
    knots = _merge_knots([g.knots, pre])
    thinned = False
    if len(knots) > budget:
        if on_budget == "error":
            raise ComposeBudgetError(
                f"merged knot count {len(knots)} exceeds budget {budget}"
            )
        knots = _thin(knots, budget)
        thinned = True
    mid_vals = eval_map(g, knots)
    values = eval_map(f, mid_vals)
    values = np.maximum.accumulate(values)  # guard against float ties
    keep = np.concatenate(([True], np.diff(values) > 0))
    keep[0] = keep[-1] = True
    knots, values = knots[keep], values[keep]

    pure_pl = f.kind == "pl" and g.kind == "pl"
    tol = f.tol + g.tol
    if pure_pl:
        out = pl_map(knots, values, tol=tol)
        if thinned:
            out = replace(out, tol=tol + _measure_tol(f, g, out))
        return out

    dg = deriv(g, knots)
    df = deriv(f, np.clip(mid_vals[keep], 0.0, 1.0))
    d = np.maximum(df * dg, 1e-300)
    try:
        out = cubic_map(knots, values, d, tol=tol)
    except HomeoError:
        # chain-rule knot derivatives can break Hermite monotonicity on
        # coarse merges; fall back to a refined pl representation
        fine = _merge_knots([knots, 0.5 * (knots[:-1] + knots[1:])])
        vals = np.maximum.accumulate(eval_map(f, eval_map(g, fine)))
        keep2 = np.concatenate(([True], np.diff(vals) > 0))
        keep2[0] = keep2[-1] = True
        out = pl_map(fine[keep2], vals[keep2], tol=tol)
    return replace(out, tol=tol + _measure_tol(f, g, out))


def _measure_tol(f: Homeo1D, g: Homeo1D, result: Homeo1D) -> float:
    mids = 0.5 * (result.knots[:-1] + result.knots[1:])
    if len(mids) > 4096:
        mids = mids[:: max(1, len(mids) // 4096)]
    truth = eval_map(f, eval_map(g, mids))
    approx = eval_map(result, mids)
    return float(np.max(np.abs(truth - approx))) if len(mids) else 0.0


def compose_chain(maps: Sequence[Homeo1D], budget: int = DEFAULT_KNOT_BUDGET) -> Homeo1D:
    """compose(maps[0], compose(maps[1], ...)): maps[0] applied last."""
    out = identity()
    for m in reversed(maps):
        out = compose(m, out, budget=budget, on_budget="resample")
    return out


def invert(f: Homeo1D) -> Homeo1D:
    """Inverse map: exact knot swap for pl; knot-exact with measured tol for cubic."""
    if f.kind == "pl":
        return pl_map(f.values, f.knots, tol=f.tol)
    out = cubic_map(f.values, f.knots, 1.0 / f.derivs, tol=f.tol)
    xs = np.linspace(0.0, 1.0, 4097)
    err = float(np.max(np.abs(eval_map(out, eval_map(f, xs)) - xs)))
    return replace(out, tol=f.tol + err)


def power(f: Homeo1D, n: int, budget: int = DEFAULT_KNOT_BUDGET) -> Homeo1D:
    """f composed with itself n times (negative n inverts first), by squaring."""
    if n == 0:
        return identity()
    base = f if n > 0 else invert(f)
    n = abs(n)
    result: Homeo1D | None = None
    while n:
        if n & 1:
            result = base if result is None else compose(
                result, base, budget=budget, on_budget="resample"
            )
        n >>= 1
        if n:
            base = compose(base, base, budget=budget, on_budget="resample")
    return result


# ---------------------------------------------------------------------------
# metrics


def _metric_grid(f: Homeo1D, g: Homeo1D, grid: int) -> np.ndarray:
    xs = np.linspace(0.0, 1.0, grid)
    extra = [f.knots, g.knots]
    extra.append(0.5 * (f.knots[:-1] + f.knots[1:]))
    extra.append(0.5 * (g.knots[:-1] + g.knots[1:]))
    return _merge_knots([xs] + extra)


def c0_dist(f: Homeo1D, g: Homeo1D, grid: int = 4096) -> MetricReport:
    """Sup |f - g| over a grid augmented with both maps' knots and midpoints."""
    if grid < 2:
        raise HomeoError("grid must be >= 2")
    xs = _metric_grid(f, g, grid)
    d = np.abs(eval_map(f, xs) - eval_map(g, xs))
    i = int(np.argmax(d))
    lip = derivative_sup(f) + derivative_sup(g)
    h = float(np.max(np.diff(xs)))
    return MetricReport(
        c0=float(d[i]),
        grid_size=grid,
        attained_at=float(xs[i]),
        c0_upper=float(d[i]) + 0.5 * h * lip + f.tol + g.tol,
    )


def c1_dist(f: Homeo1D, g: Homeo1D, grid: int = 4096) -> MetricReport:
    """Sup |f' - g'| (and the C0 sup) over the augmented grid."""
    if grid < 2:
        raise HomeoError("grid must be >= 2")
    for m in (f, g):
        if m.kind == "cubic" and m.derivs is None:
            raise CapabilityError("c1_dist needs derivative data")
    xs = _metric_grid(f, g, grid)
    d0 = np.abs(eval_map(f, xs) - eval_map(g, xs))
    i0 = int(np.argmax(d0))
    d1 = np.abs(deriv(f, xs) - deriv(g, xs))
    i1 = int(np.argmax(d1))
    h = float(np.max(np.diff(xs)))
    curv = second_derivative_sup(f) + second_derivative_sup(g)
    lip = derivative_sup(f) + derivative_sup(g)
    return MetricReport(
        c0=float(d0[i0]),
        grid_size=grid,
        attained_at=float(xs[i0]),
        c1=float(d1[i1]),
        c1_attained_at=float(xs[i1]),
        c0_upper=float(d0[i0]) + 0.5 * h * lip + f.tol + g.tol,
        c1_upper=float(d1[i1]) + 0.5 * h * curv,
    )


def fixed_points(f: Homeo1D, tol: float = 1e-9, grid: int = 8193) -> list[tuple[float, float]]:
    """Maximal intervals where |f(x) - x| <= tol; {0} and {1} always included."""
    xs = _merge_knots([np.linspace(0.0, 1.0, grid), f.knots])
    d = eval_map(f, xs) - xs
    mask = np.abs(d) <= tol
    mask[0] = mask[-1] = True  # endpoints are fixed by definition
    intervals: list[tuple[float, float]] = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            intervals.append((float(xs[start]), float(xs[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(xs[start]), float(xs[-1])))
    return intervals


# ---------------------------------------------------------------------------
# monotone-derivative interpolation


def hermite_bridge(
    x0: float, x1: float, y0: float, y1: float, d0: float, d1: float
) -> tuple[list[float], list[float], list[float]]:
    """Strictly increasing C1 piece with prescribed boundary values/slopes.

    Uses a trapezoidal derivative profile (d0 -> plateau -> d1) whose plateau
    level is solved from the integral constraint, so the piece exists for any
    positive boundary slopes.  Returns knot/value/deriv lists including both
    endpoints; every sub-segment is quadratic, hence reproduced exactly by the
    cubic Hermite evaluator.
    """
    h = x1 - x0
    if h <= 0 or y1 <= y0 or d0 <= 0 or d1 <= 0:
        raise MonotoneConstructionError("bridge needs increasing data and positive slopes")
    delta = (y1 - y0) / h
    tau = min(1.0 / 3.0, delta / (d0 + d1))
    m = (delta - tau * (d0 + d1) / 2.0) / (1.0 - tau)
    if m <= 0:
        raise MonotoneConstructionError("bridge plateau collapsed")
    t1, t2 = x0 + tau * h, x1 - tau * h
    v1 = y0 + 0.5 * (d0 + m) * tau * h
    v2 = v1 + m * (t2 - t1)
    if tau < 1e-9:
        return [x0, x1], [y0, y1], [d0, d1]
    return [x0, t1, t2, x1], [y0, v1, v2, y1], [d0, m, m, d1]


def _hermite_deriv_monotone(delta: float, m0: float, m1: float) -> bool:
    a = delta - m0
    b = m1 - delta
    return (2.0 * a - b) * (2.0 * b - a) >= 0.0


def _hermite_positive(h: float, delta: float, m0: float, m1: float) -> bool:
    c2 = (3.0 * delta - 2.0 * m0 - m1) / h
    c3 = (m0 + m1 - 2.0 * delta) / (h * h)
    lo = min(m0, m1)
    if c3 != 0.0:
        vx = -c2 / (3.0 * c3)
        if 0.0 < vx < h:
            lo = min(lo, m0 + 2.0 * c2 * vx + 3.0 * c3 * vx * vx)
    return lo > 0.0


def monotone_segment(
    x0: float, x1: float, y0: float, y1: float, m0: float, m1: float, strict: bool = True
) -> tuple[list[float], list[float], list[float]]:
    """Knot data for one segment with monotone derivative where feasible.

    With the secant slope strictly between the endpoint slopes a monotone
    derivative profile exists and is constructed (single Hermite piece when
    its own derivative is already monotone, otherwise one inserted knot
    carrying a constant-then-linear profile).  With both endpoint slopes
    strictly on one side of the secant no such profile exists: raise when
    ``strict``, else fall back to a positive bridge.
    """
    h = x1 - x0
    delta = (y1 - y0) / h
    a = delta - m0
    b = m1 - delta
    scale = max(abs(m0), abs(m1), abs(delta), 1e-30)
    tiny = 1e-13 * scale

    if abs(a) <= tiny and abs(b) <= tiny:
        return [x0, x1], [y0, y1], [m0, m1]
    if a * b < 0 and not (abs(a) <= tiny or abs(b) <= tiny):
        if strict:
            raise MonotoneConstructionError(
                f"slopes {m0:.6g},{m1:.6g} lie on one side of secant {delta:.6g} "
                f"on [{x0:.6g},{x1:.6g}]"
            )
        return hermite_bridge(x0, x1, y0, y1, m0, m1)
    if abs(a) <= tiny or abs(b) <= tiny:
        # boundary bracketing: monotone profile impossible, positivity suffices
        if _hermite_positive(h, delta, m0, m1):
            return [x0, x1], [y0, y1], [m0, m1]
        return hermite_bridge(x0, x1, y0, y1, m0, m1)
    if _hermite_deriv_monotone(delta, m0, m1):
        return [x0, x1], [y0, y1], [m0, m1]
    mu = a / (a + b)
    if mu <= 0.5:
        theta = 1.0 - 2.0 * mu
        xm = x0 + theta * h
        vm = y0 + m0 * theta * h
        dm = m0
    else:
        theta = 2.0 * (1.0 - mu)
        xm = x0 + theta * h
        vm = y0 + 0.5 * (m0 + m1) * theta * h
        dm = m1
    if theta < 1e-9 or theta > 1.0 - 1e-9:
        return [x0, x1], [y0, y1], [m0, m1]
    return [x0, xm, x1], [y0, vm, y1], [m0, dm, m1]


def assemble_segments(
    knots: Sequence[float],
    values: Sequence[float],
    derivs: Sequence[float],
    strict: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stitch per-segment monotone constructions into one knot table."""
    ks, vs, ds = [float(knots[0])], [float(values[0])], [float(derivs[0])]
    for i in range(len(knots) - 1):
        sk, sv, sd = monotone_segment(
            knots[i], knots[i + 1], values[i], values[i + 1],
            derivs[i], derivs[i + 1], strict=strict,
        )
        ks.extend(sk[1:])
        vs.extend(sv[1:])
        ds.extend(sd[1:])
    return np.array(ks), np.array(vs), np.array(ds)


def make_monotone_interpolant(
    knots: Sequence[float], values: Sequence[float], derivs: Sequence[float]
) -> Homeo1D:
    """C1 interpolant with the prescribed knot values and derivatives.

    The derivative is monotone on every knot interval whose endpoint slopes
    strictly bracket the secant slope.  Infeasible segments (both slopes on
    one side of the secant) raise ``MonotoneConstructionError`` naming the
    interval.
    """
    k = np.asarray(knots, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.asarray(derivs, dtype=float)
    if len(k) < 2 or len(k) != len(v) or len(k) != len(d):
        raise HomeoError("need matching knot/value/deriv arrays, length >= 2")
    if not (np.all(np.diff(k) > 0) and np.all(np.diff(v) > 0) and np.all(d > 0)):
        raise HomeoError("knots/values must increase strictly and derivs be positive")
    ks, vs, ds = assemble_segments(k, v, d, strict=True)
    return cubic_map(ks, vs, ds)


# ---------------------------------------------------------------------------
# serialization (round-trips bit-exactly for finite doubles)


def to_json_dict(m: Homeo1D) -> dict:
    return {
        "interp": m.kind,
        "knots": list(map(float, m.knots)),
        "values": list(map(float, m.values)),
        "derivs": None if m.derivs is None else list(map(float, m.derivs)),
    }


def from_json_dict(d: dict) -> Homeo1D:
    for key in ("interp", "knots", "values", "derivs"):
        if key not in d:
            raise HomeoError(f"map JSON missing field {key!r}")
    if d["interp"] not in ("pl", "cubic"):
        raise HomeoError(f"map JSON has unknown interp {d['interp']!r}")
    kind = d["interp"]
    derivs = d["derivs"]
    if kind == "cubic":
        return cubic_map(d["knots"], d["values"], derivs)
    m = pl_map(d["knots"], d["values"])
    if derivs is not None:
        m = replace(m, derivs=_as_array(derivs))
    return m


def save_map(m: Homeo1D, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_json_dict(m), fh)


def load_map(path: str) -> Homeo1D:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
