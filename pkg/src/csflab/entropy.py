"""Gaussian-weighted functionals along curve shortening flows.

All integrals are trapezoid sums ``sum f(x_i) w_i`` with the arclength
weights of :func:`csflab.geometry.measure_weights`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import Curve, measure_weights, signed_curvature
from .history import FlowHistory

__all__ = [
    "EntropyReport",
    "GammaReport",
    "MonotonicityReport",
    "DivergentFunctionalError",
    "backward_heat_kernel",
    "huisken_functional",
    "deficit",
    "verify_monotonicity",
    "sup_entropy",
    "gamma_integral",
    "breather_gamma_threshold",
    "gamma_admissible",
]


class DivergentFunctionalError(ValueError):
    """The weighted integral of a truncated curve cannot be shown finite."""


@dataclass(frozen=True)
class EntropyReport:
    value: float
    deficit: float
    x0: tuple
    t0: float
    t: float
    tail_estimate: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["x0"] = list(self.x0)
        return d


@dataclass(frozen=True)
class GammaReport:
    gamma: float
    window_values: list
    verdict: str
    threshold: float | None = None
    windows: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    tail_bounds: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MonotonicityReport:
    lhs_drop: float
    integrated_deficit: float
    discrepancy: float
    max_increase: float
    expected_scale: float
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    deficits: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "lhs_drop": self.lhs_drop,
            "integrated_deficit": self.integrated_deficit,
            "discrepancy": self.discrepancy,
            "max_increase": self.max_increase,
            "expected_scale": self.expected_scale,
        }


def backward_heat_kernel(x, t: float, x0, t0: float):
    """``(4 pi (t0 - t))^(-1/2) exp(-|x - x0|^2 / (4 (t0 - t)))`` for curves.

    ``x`` may be a single point or an ``(N, 2)`` array.
    """
    tau = t0 - t
    if not tau > 0:
        raise ValueError(f"kernel needs t < t0 (t={t}, t0={t0})")
    d = np.asarray(x, float) - np.asarray(x0, float)
    r2 = np.sum(d * d, axis=-1)
    return (4.0 * math.pi * tau) ** -0.5 * np.exp(-r2 / (4.0 * tau))


def _end_growth(curve: Curve, x0, end: int) -> tuple[float, float]:
    """Distance of an end point from ``x0`` and ``d(arclength)/d(distance)`` there."""
    pts = curve.points if end == -1 else curve.points[::-1]
    m = max(3, len(pts) // 20)
    tail = pts[-m:]
    r = np.hypot(*(tail - np.asarray(x0, float)).T)
    ds = np.hypot(*np.diff(tail, axis=0).T).sum()
    dr = r[-1] - r[0]
    return float(r[-1]), (float(ds / dr) if dr > 0 else math.inf)


def _gauss_tail(d: float, rate: float, c: float) -> float:
    """Bound on ``rate * int_d^inf exp(-c r^2) dr``."""
    if not math.isfinite(rate) or d <= 0:
        return math.inf
    return rate * math.exp(-c * d * d) / (2.0 * c * d)


def huisken_functional(curve: Curve, t: float, x0, t0: float) -> EntropyReport:
    """Weighted length ``sum Phi(x_i) w_i``; tail bound for truncated curves."""
    phi = backward_heat_kernel(curve.points, t, x0, t0)
    value = float(np.dot(phi, measure_weights(curve)))
    tail = 0.0
    if curve.truncated:
        tau = t0 - t
        pref = (4.0 * math.pi * tau) ** -0.5
        for end in (0, -1):
            d, rate = _end_growth(curve, x0, end)
            tail += pref * _gauss_tail(d, rate, 1.0 / (4.0 * tau))
    return EntropyReport(value, 0.0, tuple(map(float, np.asarray(x0, float))), float(t0), float(t), tail)


def deficit(curve: Curve, t: float, x0, t0: float) -> float:
    """``sum |kappa n + (x - x0)^perp / (2 (t0 - t))|^2 Phi w``."""
    phi = backward_heat_kernel(curve.points, t, x0, t0)
    kappa, n = signed_curvature(curve)
    normal_part = np.einsum("ij,ij->i", curve.points - np.asarray(x0, float), n)
    f = kappa + normal_part / (2.0 * (t0 - t))
    return float(np.dot(f * f * phi, measure_weights(curve)))


def verify_monotonicity(history: FlowHistory, x0, t0: float) -> MonotonicityReport:
    """Compare the drop of the functional with the time integral of the deficit."""
    if np.any(history.times >= t0):
        raise ValueError("all slice times must precede t0")
    values, defs = [], []
    for k, (t, c) in enumerate(history.slices()):
        rep = huisken_functional(c, t, x0, t0)
        if k == 0 and c.truncated and not rep.tail_estimate < 0.01 * rep.value:
            raise DivergentFunctionalError(
                "initial weighted length is not finite within tolerance "
                f"(tail {rep.tail_estimate:.3g} vs value {rep.value:.3g})"
            )
        values.append(rep.value)
        defs.append(deficit(c, t, x0, t0))
    values = np.array(values)
    defs = np.array(defs)
    t = history.times
    if len(t) > 1:
        integ = float(np.sum(0.5 * (defs[1:] + defs[:-1]) * np.diff(t)))
        max_inc = float(np.max(np.diff(values)))
        dt = float(np.max(np.diff(t)))
    else:
        integ, max_inc, dt = 0.0, 0.0, 0.0
    drop = float(values[0] - values[-1])
    h = history.points[0]
    h_max = float(np.hypot(*np.diff(h, axis=0).T).max())
    return MonotonicityReport(
        lhs_drop=drop,
        integrated_deficit=integ,
        discrepancy=abs(drop - integ),
        max_increase=max_inc,
        expected_scale=dt + h_max**2,
        times=t,
        values=values,
        deficits=defs,
    )


def sup_entropy(curve: Curve, t: float, t0: float, spacing: float | None = None,
                iterations: int = 30) -> tuple[float, np.ndarray]:
    """Maximize the functional over centers ``x0`` for a closed curve.

    Coarse grid over the bounding box inflated by ``4 sqrt(t0 - t)`` with
    spacing ``sqrt(t0 - t) / 2``, then compass search that halves its step
    ``iterations`` times.
    """
    if not curve.closed:
        raise ValueError("sup_entropy is defined for closed curves only")
    tau = t0 - t
    if not tau > 0:
        raise ValueError("need t < t0")
    pts = curve.points
    w = measure_weights(curve)
    step = spacing or math.sqrt(tau) / 2.0

    def F(c):
        d = pts - c
        return float(np.dot(np.exp(-np.sum(d * d, axis=1) / (4.0 * tau)), w)) * (4.0 * math.pi * tau) ** -0.5

    lo = pts.min(axis=0) - 4.0 * math.sqrt(tau)
    hi = pts.max(axis=0) + 4.0 * math.sqrt(tau)
    gx = lo[0] + step * np.arange(int(np.floor((hi[0] - lo[0]) / step)) + 1)
    gy = lo[1] + step * np.arange(int(np.floor((hi[1] - lo[1]) / step)) + 1)
    centroid = np.dot(w, pts) / w.sum()
    best, best_c = F(centroid), centroid
    for x in gx:
        for y in gy:
            v = F(np.array([x, y]))
            if v > best:
                best, best_c = v, np.array([x, y])
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    h = step
    for _ in range(iterations):
        moved = True
        while moved:
            moved = False
            cands = best_c + h * dirs
            vals = [F(c) for c in cands]
            k = int(np.argmax(vals))
            if vals[k] > best:
                best, best_c, moved = vals[k], cands[k], True
        h *= 0.5
    return best, best_c


def gamma_integral(curve: Curve, gamma: float, windows) -> GammaReport:
    """Partial integrals of ``exp(-gamma |x|^2)`` over growing arclength windows.

    Window ``c`` keeps the vertices within arclength ``c`` of the vertex
    closest to the origin (measured around the curve when it is closed; a
    closed curve is ``convergent`` once a window covers all of it).  The verdict is a heuristic read of the last
    three windows:

    * ``convergent``: the last increment is below ``1e-8`` of the total and
      the Gaussian tail bounds at the window ends decrease;
    * ``divergent``: the increments per unit of added arclength stay within
      a factor two of each other and are not negligible;
    * ``inconclusive`` otherwise.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    windows = [float(c) for c in windows]
    if any(b <= a for a, b in zip(windows, windows[1:])):
        raise ValueError("windows must be increasing")
    if not windows:
        return GammaReport(float(gamma), [], "inconclusive")
    pts = curve.points
    r = np.hypot(pts[:, 0], pts[:, 1])
    f = np.exp(-gamma * r * r) * measure_weights(curve)
    s = curve.arclength
    b = int(np.argmin(r))
    d = np.abs(s - s[b])
    if curve.closed:
        return _closed_gamma(curve, f, np.minimum(d, curve.length - d), gamma, windows)
    values, tails = [], []
    for c in windows:
        inside = d <= c
        values.append(float(f[inside].sum()))
        tail = 0.0
        for side in (np.flatnonzero(inside & (s <= s[b])), np.flatnonzero(inside & (s >= s[b]))):
            end = side[0] if side[0] < b else side[-1]
            if end == b:
                continue
            lo, hi = sorted((b, end))
            seg = pts[lo:hi + 1] if end > b else pts[lo:hi + 1][::-1]
            m = max(3, len(seg) // 20)
            rr = np.hypot(*seg[-m:].T)
            dr = rr[-1] - rr[0]
            rate = np.hypot(*np.diff(seg[-m:], axis=0).T).sum() / dr if dr > 0 else math.inf
            tail += _gauss_tail(float(rr[-1]), rate, gamma)
        tails.append(tail)
    incs = list(np.diff([0.0] + values))
    total = values[-1]
    verdict = "inconclusive"
    if len(values) >= 3:
        last_inc = incs[-3:]
        last_tail = tails[-3:]
        widths = np.diff([0.0] + windows)[-3:]
        dens = np.array(last_inc) / widths
        if (last_inc[-1] < 1e-8 * total and all(math.isfinite(x) for x in last_tail)
                and last_tail[0] >= last_tail[1] >= last_tail[2]):
            verdict = "convergent"
        elif dens.min() > 0 and dens.min() >= 0.5 * dens.max() and last_inc[-1] > 1e-6 * total:
            verdict = "divergent"
    return GammaReport(float(gamma), values, verdict, None, windows, [float(x) for x in incs], tails)


def _closed_gamma(curve, f, d, gamma, windows) -> GammaReport:
    # a closed curve has finite weighted length; windows only report partial sums
    values = [float(f[d <= c].sum()) for c in windows]
    incs = [float(x) for x in np.diff([0.0] + values)]
    verdict = "convergent" if windows[-1] >= d.max() else "inconclusive"
    return GammaReport(float(gamma), values, verdict, None, windows, incs, [0.0] * len(windows))


def breather_gamma_threshold(alpha: float, t1: float, t2: float) -> float:
    """Supremum ``(1 - alpha^2) / (4 (t2 - t1))`` of admissible decay rates."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1) for a shrinking breather")
    if not t2 > t1:
        raise ValueError("need t2 > t1")
    return (1.0 - alpha * alpha) / (4.0 * (t2 - t1))


def gamma_admissible(gamma: float, threshold: float, no_translation: bool = False) -> bool:
    """``gamma < threshold``; equality is allowed when the isometry has no translation."""
    return gamma < threshold or (no_translation and gamma == threshold)
