"""Profiles of self-similar curve shortening flows.

Every soliton type is one instance of the profile equation

    x'(s) = (cos theta, sin theta),
    theta'(s) = kappa = < lam x + omega J x + e, n >,

with ``J`` the +90 degree rotation and ``n = J x'``.  Sign dictionary:
shrinkers have ``lam = -1/2``, expanders ``lam = +1/2``, translators
``e`` a unit vector, and rotators (``H = -<J x, n>`` in the other common
sign) ``omega = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .geometry import ROT90, Curve, interior_mask, signed_curvature

__all__ = [
    "SolitonSpec",
    "Preset",
    "PRESETS",
    "generate",
    "generate_preset",
    "residual",
    "classify_counterexample",
]

KINDS = ("shrinker", "expander", "translator", "rotator", "mixed", "custom")


@dataclass(frozen=True)
class SolitonSpec:
    lam: float = 0.0
    omega: float = 0.0
    e: tuple = (0.0, 0.0)
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "e", tuple(float(v) for v in self.e))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "omega", float(self.omega))
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        lam, om, e = self.lam, self.omega, np.array(self.e)
        ok = {
            "shrinker": lam < 0 and om == 0 and not e.any(),
            "expander": lam > 0 and om == 0 and not e.any(),
            "translator": lam == 0 and om == 0 and abs(np.linalg.norm(e) - 1) < 1e-12,
            "rotator": lam == 0 and not e.any() and om != 0,
            "mixed": lam != 0 and om != 0,
            "custom": True,
        }[self.kind]
        if not ok:
            raise ValueError(f"parameters inconsistent with kind {self.kind!r}: {self}")

    def field(self, pts: np.ndarray) -> np.ndarray:
        """``lam x + omega J x + e`` at each point."""
        return self.lam * pts + self.omega * pts @ ROT90.T + np.asarray(self.e)

    def scaled(self, a: float) -> "SolitonSpec":
        """Spec solved by ``a * curve`` when ``curve`` solves this one."""
        e = tuple(v / a for v in self.e)
        kind = "custom" if self.kind == "translator" and a != 1 else self.kind
        return SolitonSpec(self.lam / a**2, self.omega / a**2, e, kind)


@numba.njit(cache=True)
def _rk4(lam, om, ex, ey, x0, y0, th0, ds, n, kmax):
    out = np.empty((n + 1, 3))
    out[0, 0] = x0
    out[0, 1] = y0
    out[0, 2] = th0
    x, y, th = x0, y0, th0
    last = n
    k = np.empty((4, 3))  # stage derivatives of (x, y, theta)
    for i in range(n):
        xs, ys, ts = x, y, th
        for st in range(4):
            c = math.cos(ts)
            s = math.sin(ts)
            vx = lam * xs - om * ys + ex
            vy = lam * ys + om * xs + ey
            k[st, 0] = c
            k[st, 1] = s
            k[st, 2] = -vx * s + vy * c
            if st < 3:
                h = 0.5 * ds if st < 2 else ds
                xs = x + h * k[st, 0]
                ys = y + h * k[st, 1]
                ts = th + h * k[st, 2]
        x += ds / 6.0 * (k[0, 0] + 2 * k[1, 0] + 2 * k[2, 0] + k[3, 0])
        y += ds / 6.0 * (k[0, 1] + 2 * k[1, 1] + 2 * k[2, 1] + k[3, 1])
        th += ds / 6.0 * (k[0, 2] + 2 * k[1, 2] + 2 * k[2, 2] + k[3, 2])
        out[i + 1, 0] = x
        out[i + 1, 1] = y
        out[i + 1, 2] = th
        if abs(k[3, 2]) > kmax or not (math.isfinite(x) and math.isfinite(y)):
            last = i + 1
            break
    return out[: last + 1]


def _integrate(spec, x0, th0, length, ds, kmax):
    n = int(round(length / abs(ds)))
    if n == 0:
        return np.array([[x0[0], x0[1], th0]])
    step = math.copysign(length / n, ds)
    return _rk4(spec.lam, spec.omega, spec.e[0], spec.e[1],
                float(x0[0]), float(x0[1]), float(th0), step, n, kmax)


def generate(spec: SolitonSpec, start, s_max: float, ds: float = 1e-3,
             s_min: float = 0.0, kappa_max: float = 1e6) -> Curve:
    """Integrate the profile from ``start = ((x, y), theta)`` with classical RK4.

    The curve runs over arclength ``[-s_min, s_max]``; the step is adjusted
    so both ends are hit exactly.  If ``|kappa|`` exceeds ``kappa_max`` the
    output stops there and ``meta["blowup_s"]`` records where.
    """
    (x0, th0) = (np.asarray(start[0], float), float(start[1]))
    if not s_max > 0 or s_min < 0 or not ds > 0:
        raise ValueError("need s_max > 0, s_min >= 0, ds > 0")
    fwd = _integrate(spec, x0, th0, s_max, ds, kappa_max)
    parts = [fwd]
    meta = {"s_min": s_min, "s_max": s_max, "kind": spec.kind}
    n_fwd = int(round(s_max / ds))
    if len(fwd) < n_fwd + 1:
        meta["blowup_s"] = (len(fwd) - 1) * s_max / n_fwd
    if s_min > 0:
        bwd = _integrate(spec, x0, th0, s_min, -ds, kappa_max)
        n_bwd = int(round(s_min / ds))
        if len(bwd) < n_bwd + 1:
            meta["blowup_s_min"] = -(len(bwd) - 1) * s_min / n_bwd
        parts = [bwd[:0:-1], fwd]
        meta["start_index"] = len(bwd) - 1
    else:
        meta["start_index"] = 0
    state = np.vstack(parts)
    return Curve(state[:, :2], closed=False, truncated=True, meta=meta)


@dataclass(frozen=True)
class Preset:
    spec: SolitonSpec
    start: tuple
    s_max: float
    ds: float = 1e-3
    s_min: float = 0.0
    description: str = field(default="", compare=False)


PRESETS = {
    "grim-reaper": Preset(
        SolitonSpec(0.0, 0.0, (0.0, 1.0), "translator"), ((0.0, 0.0), 0.0), 8.0, 1e-3, 8.0,
        "y = -log cos x, apex at the origin, moving up"),
    "shrinker-circle": Preset(
        SolitonSpec(-0.5, 0.0, (0.0, 0.0), "shrinker"), ((math.sqrt(2), 0.0), math.pi / 2),
        2 * math.pi * math.sqrt(2), 1e-3, 0.0, "circle of radius sqrt(2), counterclockwise"),
    "expander": Preset(
        SolitonSpec(0.5, 0.0, (0.0, 0.0), "expander"), ((0.0, 1.0), 0.0), 6.0, 1e-3, 6.0,
        "symmetric expander with apex (0, 1)"),
    "yin-yang": Preset(
        SolitonSpec(0.0, -1.0, (0.0, 0.0), "rotator"), ((0.0, 0.0), 0.0), 30.0, 1e-3, 30.0,
        "double spiral rotator through the origin"),
    "shrink-rotator": Preset(
        SolitonSpec(-0.5, 2.0, (0.0, 0.0), "mixed"), ((1.0, 0.0), math.pi / 2), 100.0, 1e-3, 0.0,
        "rotating shrinker spiralling onto the circle of radius sqrt(2)"),
    "expand-rotator": Preset(
        SolitonSpec(0.5, 2.0, (0.0, 0.0), "mixed"), ((1.0, 0.0), math.pi / 2), 30.0, 5e-4, 30.0,
        "rotating expander spiral"),
}


def generate_preset(name: str, **overrides) -> Curve:
    p = PRESETS[name]
    kw = dict(start=p.start, s_max=p.s_max, ds=p.ds, s_min=p.s_min)
    kw.update(overrides)
    curve = generate(p.spec, **kw)
    if name == "shrinker-circle" and kw["s_min"] == 0:
        # one full turn: drop the duplicated end point and close the curve
        curve = Curve(curve.points[:-1], closed=True, meta=dict(curve.meta))
    return curve


def residual(curve: Curve, spec: SolitonSpec, collar: int = 2) -> float:
    """``max |kappa - <lam x + omega J x + e, n>|`` over interior vertices."""
    kappa, n = signed_curvature(curve)
    rhs = np.einsum("ij,ij->i", spec.field(curve.points), n)
    m = interior_mask(curve, collar)
    return float(np.abs(kappa - rhs)[m].max())


def _weakly_convex(kappa: np.ndarray, tol: float = 1e-6) -> bool:
    # orientation-free: all kappa of one sign
    return bool(kappa.min() >= -tol or kappa.max() <= tol)


def classify_counterexample(spec: SolitonSpec, curve: Curve, gamma: float = 0.1) -> dict:
    """Which no-breather hypotheses a generated profile satisfies.

    ``gamma_ok`` is the Gaussian-weighted length verdict of
    :func:`csflab.entropy.gamma_integral` on four doubling arclength windows
    around the point closest to the origin; ``bounded_orbit`` says ``|x|``
    stops growing along the sampled window.
    """
    from .entropy import gamma_integral

    kappa, _ = signed_curvature(curve)
    kappa = kappa[interior_mask(curve)]
    convex = _weakly_convex(kappa)
    s = curve.arclength
    r = np.hypot(*curve.points.T)
    base = s[int(np.argmin(r))]
    d = np.abs(s - base)
    reach = float(d.max())
    windows = [reach / 8, reach / 4, reach / 2, reach]
    g = gamma_integral(curve, gamma, windows)
    outer = d > 0.75 * reach
    bounded = bool(r[outer].max() <= 1.05 * r[~outer].max()) if outer.any() else True
    return {
        "weakly_convex": convex,
        "weakly_mean_convex": convex,
        "gamma": gamma,
        "gamma_ok": g.verdict == "convergent",
        "gamma_verdict": g.verdict,
        "bounded_orbit": bounded,
        "residual": residual(curve, spec),
    }
