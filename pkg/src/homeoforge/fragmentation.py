"""Factoring interval maps into pieces supported in the cells of a cover.

The rightward relay: given an increasing map K with K(x) >= x and a chain of
overlapping cells, points are swept left to right; after stage j everything
destined below the j-th barrier has arrived and the rest is parked just
below it, so each stage's correction is supported in one cell.  A general
map splits as T = R o L with R = T o L^{-1} >= id and L = min(T, id) <= id
(both strictly increasing), and L is relayed through the inverse.

Factor order convention: ``fragment_interval`` returns factors k_0..k_m with
T = k_m o ... o k_0 (k_0 applied first).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import map_core as mc
from .map_core import Homeo1D

__all__ = ["Fragment", "fragment_interval", "relay_rightward", "split_monotone"]


@dataclass(frozen=True)
class Fragment:
    map: Homeo1D
    cell: int  # index into the cover


def _crossings(f: Homeo1D) -> np.ndarray:
    """Points where f crosses the diagonal, located by bisection."""
    xs = np.unique(np.concatenate((f.knots, np.linspace(0.0, 1.0, 2049))))
    d = mc.eval_map(f, xs) - xs
    out = []
    for i in range(len(xs) - 1):
        if d[i] == 0.0:
            out.append(xs[i])
        elif d[i] * d[i + 1] < 0:
            lo, hi = xs[i], xs[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if (mc.eval_map(f, mid) - mid) * d[i] > 0:
                    lo = mid
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
    return np.array(out)


def split_monotone(f: Homeo1D) -> tuple[Homeo1D, Homeo1D]:
    """(R, L) with f = R o L, L = min(f, id) <= id and R >= id."""
    ks = np.unique(np.concatenate((f.knots, _crossings(f), [0.0, 1.0])))
    lv = np.minimum(mc.eval_map(f, ks), ks)
    lv = np.maximum.accumulate(lv)
    keep = np.concatenate(([True], np.diff(lv) > 0))
    keep[0] = keep[-1] = True
    L = mc.pl_map(ks[keep], lv[keep])
    R = mc.compose(f, mc.invert(L), on_budget="resample")
    rk = R.knots
    rv = np.maximum(R.values, rk)  # clamp float dips below the diagonal
    rv = np.maximum.accumulate(rv)
    keep = np.concatenate(([True], np.diff(rv) > 0))
    keep[0] = keep[-1] = True
    R = mc.pl_map(rk[keep], rv[keep], tol=R.tol)
    return R, L


def relay_rightward(
    K: Homeo1D, cells: list[tuple[float, float]], nu_frac: float = 0.25
) -> list[Homeo1D]:
    """Factors k_0..k_m of K (K >= id) with supp(k_j) inside cells[j].

    Cells must ascend and consecutive ones overlap; all displacement of K
    must happen inside the union of cells.  K = k_m o ... o k_0.
    """
    m = len(cells)
    if m == 1:
        return [K]
    barriers = []
    for j in range(m - 1):
        lo = max(cells[j + 1][0], cells[j][0])
        hi = min(cells[j][1], cells[j + 1][1])
        if not lo < hi:
            raise mc.HomeoError(f"cells {j} and {j + 1} do not overlap")
        barriers.append(0.5 * (lo + hi))
    nus = [
        nu_frac * min(barriers[j] - max(cells[j + 1][0], cells[j][0]),
                      min(cells[j][1], cells[j + 1][1]) - barriers[j])
        for j in range(m - 1)
    ]

    def stage(j: int) -> Homeo1D:
        t = barriers[j]
        nu = nus[j]
        s = float(mc.eval_inverse(K, t - nu))
        ks = K.knots[K.knots < s - 1e-15]
        xs = np.concatenate((ks, [s, t, 1.0]))
        vs = np.concatenate((mc.eval_map(K, ks), [t - nu, t, 1.0]))
        xs2, vs2 = [0.0], [0.0]
        for x, v in zip(xs, vs):
            if x > xs2[-1] + 1e-15 and v > vs2[-1] + 1e-15:
                xs2.append(float(x))
                vs2.append(float(v))
        if xs2[-1] != 1.0:
            xs2.append(1.0)
            vs2.append(1.0)
        return mc.pl_map(np.array(xs2), np.array(vs2))

    factors = []
    prev = mc.identity()
    for j in range(m - 1):
        H = stage(j)
        factors.append(mc.compose(H, mc.invert(prev), on_budget="resample"))
        prev = H
    factors.append(mc.compose(K, mc.invert(prev), on_budget="resample"))
    return factors


def fragment_interval(
    T: Homeo1D, cells: list[tuple[float, float]], check: bool = True
) -> list[Fragment]:
    """Factor T into cell-supported pieces: T = k_m o ... o k_0.

    The rightward part relays directly; the leftward part is the inverted
    relay of its inverse, so its factor order reverses (still cell-supported).
    """
    R, L = split_monotone(T)
    out: list[Fragment] = []
    if mc.c0_dist(L, mc.identity()).c0 > 1e-12:
        inv_factors = relay_rightward(mc.invert(L), cells)
        for j in reversed(range(len(inv_factors))):
            out.append(Fragment(mc.invert(inv_factors[j]), j))
    if mc.c0_dist(R, mc.identity()).c0 > 1e-12:
        for j, k in enumerate(relay_rightward(R, cells)):
            out.append(Fragment(k, j))
    if not out:
        out.append(Fragment(mc.identity(), 0))
    if check:
        comp = mc.identity()
        for fr in out:
            comp = mc.compose(fr.map, comp, on_budget="resample")
        err = mc.c0_dist(comp, T).c0
        if err > 1e-8 + comp.tol + T.tol:
            raise mc.HomeoError(f"fragment recomposition error {err:.3g}")
        for fr in out:
            lo, hi = cells[fr.cell]
            xs = np.linspace(0.0, 1.0, 4097)
            moved = np.abs(mc.eval_map(fr.map, xs) - xs) > 1e-12
            if np.any(moved & ((xs < lo) | (xs > hi))):
                raise mc.HomeoError(f"factor escaped cell {fr.cell}")
    return out
