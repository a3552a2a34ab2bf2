"""Harnack-type quantities of curve shortening flows, evaluated pointwise.

For curves the second fundamental form is the scalar ``kappa`` and the
expressions reduce to

    steady:     dH/dt + 2 V H_s + kappa V^2
    expanding:  dH/dt + H / (2 t) + 2 V H_s + kappa V^2

``dH/dt`` is a material derivative: it follows a fixed point index across
slices, so the history must carry the solver's normal parametrization.
The optimal tangential field is ``V = -H_s / kappa``.
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields

import numpy as np

from .geometry import Curve, _kappa_normal, interior_mask
from .history import FlowHistory
from .solitons import SolitonSpec, residual

__all__ = [
    "HarnackSample",
    "EPS_CONVEX",
    "material_dH_dt",
    "steady_harnack",
    "expanding_harnack",
    "sqrt_t_H",
    "sqrt_t_H_monotone",
    "rotator_minimality_check",
    "write_samples_csv",
    "CSV_HEADER",
]

EPS_CONVEX = 1e-4
CONVEX_TOL = 1e-6
CSV_HEADER = "index,t,H,dHdt,gradH,V,quantity,valid"


@dataclass(frozen=True)
class HarnackSample:
    index: int
    t: float
    H: float
    dHdt: float
    gradH: float
    V: float
    quantity: float
    valid: bool


def _kappa(points: np.ndarray, closed: bool) -> np.ndarray:
    return _kappa_normal(np.ascontiguousarray(points), closed)[0]


def _slice_kappa(history: FlowHistory, k: int) -> np.ndarray:
    return _kappa(history.points[k], history.closed)


def _time_weights(t: np.ndarray, k: int) -> tuple[list, list, bool]:
    """Stencil (slice indices, weights) for d/dt at slice ``k``."""
    K = len(t)
    if K < 2:
        raise ValueError("need at least two slices for a time derivative")
    if 0 < k < K - 1:
        h1, h2 = t[k] - t[k - 1], t[k + 1] - t[k]
        w = [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
        return [k - 1, k, k + 1], w, False
    if K == 2:
        h = t[1] - t[0]
        return [0, 1], [-1 / h, 1 / h], True
    if k == 0:
        idx = [0, 1, 2]
    else:
        idx = [K - 3, K - 2, K - 1]
    # second-order one-sided weights on a nonuniform grid (Lagrange derivative)
    x = t[idx]
    x0 = t[k]
    w = []
    for a in range(3):
        others = [x[b] for b in range(3) if b != a]
        num = sum(x0 - o for o in others)
        den = np.prod([x[a] - o for o in others])
        w.append(num / den)
    return idx, w, True


def _dkappa_dt(history: FlowHistory, k: int, cache: dict) -> tuple[np.ndarray, bool]:
    idx, w, one_sided = _time_weights(history.times, k)
    out = np.zeros(history.n_points)
    for i, wi in zip(idx, w):
        if i not in cache:
            cache[i] = _slice_kappa(history, i)
        out += wi * cache[i]
    return out, one_sided


def material_dH_dt(history: FlowHistory, i: int, t: float) -> tuple[float, bool]:
    """``d kappa / dt`` at index ``i`` and slice time ``t``.

    Centered three-slice difference inside the history; second-order
    one-sided at the first and last slice, in which case the flag is true.
    """
    k = history.index_of(t)
    if not 0 <= i < history.n_points:
        raise IndexError(f"index {i} out of range")
    d, one_sided = _dkappa_dt(history, k, {})
    return float(d[i]), one_sided


def _arclength_gradient(points: np.ndarray, f: np.ndarray, closed: bool) -> np.ndarray:
    """Centered nonuniform difference of ``f`` in arclength."""
    if closed:
        hm = np.hypot(*(points - np.roll(points, 1, axis=0)).T)
        hp = np.roll(hm, -1)
        fm, fp = np.roll(f, 1), np.roll(f, -1)
        return (hm**2 * fp - hp**2 * fm + (hp**2 - hm**2) * f) / (hm * hp * (hm + hp))
    h = np.hypot(*np.diff(points, axis=0).T)
    g = np.empty_like(f)
    hm, hp = h[:-1], h[1:]
    g[1:-1] = (hm**2 * f[2:] - hp**2 * f[:-2] + (hp**2 - hm**2) * f[1:-1]) / (hm * hp * (hm + hp))
    g[0] = (f[1] - f[0]) / h[0]
    g[-1] = (f[-1] - f[-2]) / h[-1]
    return g


def _samples(history: FlowHistory, t: float, v_mode: str, extra) -> list[HarnackSample]:
    if v_mode not in ("zero", "optimal"):
        raise ValueError("v_mode must be 'zero' or 'optimal'")
    k = history.index_of(t)
    cache: dict = {}
    dk, one_sided = _dkappa_dt(history, k, cache)
    kappa = cache.get(k)
    if kappa is None:
        kappa = _slice_kappa(history, k)
    pts = history.points[k]
    grad = _arclength_gradient(pts, kappa, history.closed)
    inner = interior_mask(Curve(pts, history.closed, history.truncated))
    convex = bool(kappa[inner].min() >= -CONVEX_TOL)
    base = dk + extra(kappa)
    out = []
    for i in range(history.n_points):
        valid = convex and bool(inner[i]) and not one_sided
        V = 0.0
        q = base[i]
        if v_mode == "optimal":
            if kappa[i] > EPS_CONVEX:
                V = -grad[i] / kappa[i]
                q = base[i] + 2 * V * grad[i] + kappa[i] * V * V
            else:
                valid = False
        out.append(HarnackSample(i, float(history.times[k]), float(kappa[i]), float(dk[i]),
                                 float(grad[i]), float(V), float(q), valid))
    return out


def steady_harnack(history: FlowHistory, t: float, v_mode: str = "zero") -> list[HarnackSample]:
    """``dH/dt + 2 V H_s + kappa V^2`` at every point of the slice at ``t``.

    ``valid`` is false for collar points, one-sided time stencils,
    slices that are not weakly convex, and (optimal mode) points with
    ``kappa <= 1e-4`` where ``V`` is left at 0.
    """
    return _samples(history, t, v_mode, lambda kappa: 0.0)


def expanding_harnack(history: FlowHistory, t: float, v_mode: str = "zero",
                      t_origin: float = 0.0) -> list[HarnackSample]:
    """Steady quantity plus ``H / (2 (t - t_origin))``.

    ``t_origin`` is the time the immortal flow starts from; it is 0 for
    spliced expanding flows.
    """
    te = t - t_origin
    if not te > 0:
        raise ValueError("expanding Harnack needs t > t_origin")
    return _samples(history, t, v_mode, lambda kappa: kappa / (2.0 * te))


def sqrt_t_H(history: FlowHistory, t_origin: float = 0.0) -> np.ndarray:
    """``sqrt(t - t_origin) * kappa`` for every slice and index, shape ``(K, N)``."""
    te = history.times - t_origin
    if np.any(te < 0):
        raise ValueError("all slice times must be at or after t_origin")
    kappa = np.stack([_slice_kappa(history, k) for k in range(len(history))])
    return np.sqrt(te)[:, None] * kappa


def sqrt_t_H_monotone(history: FlowHistory, i: int, t_origin: float = 0.0) -> dict:
    """Slopes of ``sqrt(t) H`` at fixed index ``i``.

    ``monotone`` means the smallest slope is at least ``-1e-6``; ``valid``
    records whether every slice is weakly convex, the hypothesis under
    which monotonicity is expected.
    """
    if len(history) < 3:
        raise ValueError("need at least three slices")
    if not 0 <= i < history.n_points:
        raise IndexError(f"index {i} out of range")
    series = sqrt_t_H(history, t_origin)
    slopes = np.diff(series[:, i]) / np.diff(history.times)
    mask = interior_mask(history.curve(0))
    valid = bool(series[:, mask].min() >= -CONVEX_TOL)
    return {
        "index": int(i),
        "min_slope": float(slopes.min()),
        "max_slope": float(slopes.max()),
        "monotone": bool(slopes.min() >= -1e-6),
        "valid": valid,
        "series": series[:, i].tolist(),
    }


def _local_fit(s: np.ndarray, values: np.ndarray, deg: int = 4) -> np.polynomial.Polynomial:
    return np.polynomial.Polynomial.fit(s, values, deg)


def rotator_minimality_check(curve: Curve, omega: float, gate: float = 1e-2) -> dict:
    """At the point of ``curve`` closest to the origin, is ``H = 0``?

    The discrete minimizer of ``|x|`` is refined by fitting quartics to the
    five surrounding samples and solving ``<x, x'> = 0``.  ``pass`` needs
    the rotator residual below ``gate`` and ``|H| < 1e-3 max|kappa|`` there.
    """
    pts = curve.points
    N = len(pts)
    r = np.hypot(*pts.T)
    m = int(np.argmin(r))
    if not curve.closed and (m < 2 or m > N - 3):
        raise ValueError("closest point lies within two samples of the window boundary")
    kappa, _, _, _ = _kappa_normal(np.ascontiguousarray(pts), curve.closed)
    mask = interior_mask(curve)
    kmax = float(np.abs(kappa[mask]).max())
    spec = SolitonSpec(0.0, omega, (0.0, 0.0), "rotator" if omega else "custom")
    res = residual(curve, spec)

    idx = np.arange(m - 2, m + 3) % N
    local = pts[idx]
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(local, axis=0).T))])
    s -= s[2]
    px, py, pk = (_local_fit(s, local[:, 0]), _local_fit(s, local[:, 1]), _local_fit(s, kappa[idx]))
    if r[m] == 0.0:
        s_star = 0.0
        defect = 0.0
    else:
        g = px * px.deriv() + py * py.deriv()
        s_star = 0.0
        for _ in range(50):
            dg = g.deriv()(s_star)
            if dg == 0:
                break
            step = g(s_star) / dg
            s_star -= step
            if abs(step) < 1e-15:
                break
        if abs(s_star) > abs(s[-1] - s[0]):
            s_star = 0.0
        x = np.array([px(s_star), py(s_star)])
        tvec = np.array([px.deriv()(s_star), py.deriv()(s_star)])
        defect = float(abs(x @ tvec) / (np.linalg.norm(x) * np.linalg.norm(tvec)))
    H = float(pk(s_star))
    residual_ok = bool(res < gate)
    return {
        "argmin": m,
        "argmin_offset": float(s_star),
        "min_radius": float(np.hypot(px(s_star), py(s_star))) if r[m] else 0.0,
        "H_at_argmin": H,
        "max_kappa": kmax,
        "tangency_defect": defect,
        "residual": float(res),
        "residual_ok": residual_ok,
        "pass": bool(residual_ok and abs(H) < 1e-3 * kmax),
    }


def write_samples_csv(path, samples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(HarnackSample)])
        for smp in samples:
            row = list(astuple(smp))
            row[-1] = int(row[-1])
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
