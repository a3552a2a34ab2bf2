"""Curve shortening flow time steppers and exact self-similar flows."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .geometry import (
    Curve,
    _kappa_normal,
    resample_by_arclength,
    rotation,
    segment_lengths,
    signed_curvature,
    tangents,
)
from .history import FlowHistory

__all__ = [
    "SolverOptions",
    "StepError",
    "step_csf",
    "step_drifted",
    "evolve",
    "analytic_selfsimilar_flow",
    "analytic_history",
    "solve_cyclic_tridiagonal",
]

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    """A time step produced a degenerate or non-finite polyline."""

    def __init__(self, message: str, t: float | None = None):
        if t is not None:
            message = f"{message} at t={t:.12g}"
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class SolverOptions:
    """Options for :func:`evolve`.

    ``dt="auto"`` picks ``cfl * h_min**2`` every step for the explicit
    scheme (and for the semi-implicit one, where it is merely conservative).
    ``redistribute=k`` resamples by arclength every ``k`` steps.  Only every
    ``save_every``-th step is stored, plus the final slice.  The flow stops
    once ``max|kappa|`` exceeds ``blowup_factor`` times its initial value or
    the smallest curvature radius drops below ``4`` mean segment lengths.
    """

    scheme: str = "explicit"
    dt: float | str = "auto"
    cfl: float = 0.2
    redistribute: int | None = None
    save_every: int = 1
    blowup_factor: float = 10.0

    def __post_init__(self):
        if self.scheme not in ("explicit", "semi-implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.cfl <= 0.5:
            raise ValueError("cfl must lie in (0, 0.5]")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError("dt must be positive or 'auto'")
        if self.redistribute is not None and self.redistribute < 1:
            raise ValueError("redistribute must be a positive step count")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")


def solve_cyclic_tridiagonal(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system.

    Row ``i`` reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``
    with indices taken mod N.  ``rhs`` may have trailing columns.
    Sherman-Morrison on top of a banded solve.
    """
    lower = np.asarray(lower, float)
    diag = np.asarray(diag, float)
    upper = np.asarray(upper, float)
    rhs = np.asarray(rhs, float)
    n = len(diag)
    gamma = -diag[0]
    b = diag.copy()
    b[0] -= gamma
    b[-1] -= upper[-1] * lower[0] / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = b
    ab[2, :-1] = lower[1:]
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = upper[-1]
    v0, vn = 1.0, lower[0] / gamma
    y = solve_banded((1, 1), ab, rhs)
    q = solve_banded((1, 1), ab, u)
    vy = v0 * y[0] + vn * y[-1]
    vq = v0 * q[0] + vn * q[-1]
    return y - np.multiply.outer(q, vy / (1.0 + vq))


def _checked(curve: Curve, pts: np.ndarray, t=None) -> Curve:
    if not np.all(np.isfinite(pts)):
        raise StepError("non-finite coordinates after step", t)
    if np.any(segment_lengths(pts, curve.closed) <= 0):
        raise StepError("segment collapsed to zero length", t)
    return curve.with_points(pts)


def _semi_implicit(curve: Curve, dt: float) -> np.ndarray:
    pts = curve.points
    h = segment_lengths(pts, curve.closed)
    if curve.closed:
        hm = np.roll(h, 1)
        hp = h
        a = 2.0 / ((hm + hp) * hm)
        c = 2.0 / ((hm + hp) * hp)
        return solve_cyclic_tridiagonal(-dt * a, 1.0 + dt * (a + c), -dt * c, pts)
    n = len(pts)
    hm, hp = h[:-1], h[1:]
    a = 2.0 / ((hm + hp) * hm)
    c = 2.0 / ((hm + hp) * hp)
    ab = np.zeros((3, n))
    ab[1] = 1.0
    ab[1, 1:-1] = 1.0 + dt * (a + c)
    ab[0, 2:] = -dt * c
    ab[2, :-2] = -dt * a
    rhs = pts.copy()
    kappa, nrm = signed_curvature(curve)
    rhs[0] += dt * kappa[0] * nrm[0]
    rhs[-1] += dt * kappa[-1] * nrm[-1]
    return solve_banded((1, 1), ab, rhs)


def step_csf(curve: Curve, dt: float, scheme: str = "explicit") -> Curve:
    """Advance ``x_t = kappa n`` by one step of length ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if scheme == "explicit":
        kappa, n = signed_curvature(curve)
        with np.errstate(over="ignore", invalid="ignore"):
            pts = curve.points + dt * kappa[:, None] * n
    elif scheme == "semi-implicit":
        pts = _semi_implicit(curve, dt)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return _checked(curve, pts)


def step_drifted(curve: Curve, dt: float, x0, t0: float, t: float) -> Curve:
    """Explicit step of ``x_t = kappa n - (x - x0)^T / (2 (t0 - t))``.

    The added term is tangential, so the image moves as under
    :func:`step_csf`; only the parametrization differs.
    """
    if not t0 - t > dt:
        raise ValueError("t0 - t must exceed dt (kernel scale collapses)")
    x0 = np.asarray(x0, float)
    kappa, n = signed_curvature(curve)
    T = tangents(curve)
    rel = curve.points - x0
    tang = np.einsum("ij,ij->i", rel, T)[:, None] * T
    pts = curve.points + dt * (kappa[:, None] * n - tang / (2.0 * (t0 - t)))
    return _checked(curve, pts)


def evolve(curve: Curve, t_start: float, t_end: float, opts: SolverOptions | None = None) -> FlowHistory:
    """Run the flow from ``t_start`` to ``t_end`` and record slices.

    Returns a truncated history with ``singular_time`` set if a singularity
    is detected first; ``meta["extinction_estimate"]`` then extrapolates the
    blow-up time from ``max|kappa|^-2 ~ 2 (T - t)``.
    """
    opts = opts or SolverOptions()
    if t_end < t_start:
        raise ValueError("t_end must not precede t_start")
    times = [float(t_start)]
    slices = [curve.points]
    events = []
    if t_end == t_start:
        return FlowHistory(np.array(times), np.stack(slices), curve.closed, curve.truncated)

    N = len(curve)
    closed = curve.closed
    pts = curve.points.copy()
    kappa, nrm, hmin, htot = _kappa_normal(pts, closed)
    k_ref = max(np.abs(kappa).max(), 2 * math.pi / htot)
    t = float(t_start)
    step = 0
    singular = None
    meta = {}
    while t < t_end:
        dt = opts.cfl * hmin * hmin if opts.dt == "auto" else float(opts.dt)
        if t + dt >= t_end or t_end - (t + dt) < 1e-9 * dt:
            dt = t_end - t
        if opts.scheme == "explicit":
            pts = pts + dt * kappa[:, None] * nrm
        else:
            pts = _semi_implicit(Curve(pts, closed, curve.truncated), dt)
        step += 1
        t = t_end if dt == t_end - t else t + dt
        if not np.all(np.isfinite(pts)):
            raise StepError("non-finite coordinates after step", t)
        if opts.redistribute and step % opts.redistribute == 0:
            pts = resample_by_arclength(Curve(pts, closed, curve.truncated), N).points.copy()
            events.append(t)
        kappa, nrm, hmin, htot = _kappa_normal(pts, closed)
        if not hmin > 0:
            raise StepError("segment collapsed to zero length", t)
        kmax = float(np.abs(kappa).max())
        mean_seg = htot / (N if closed else N - 1)
        if kmax > opts.blowup_factor * k_ref or (kmax > 0 and 1.0 / kmax < 4.0 * mean_seg):
            singular = t
            meta["extinction_estimate"] = t + 1.0 / (2.0 * kmax * kmax)
            log.info("singularity detected at t=%.6g (max|kappa|=%.4g)", t, kmax)
        if step % opts.save_every == 0 or t >= t_end or singular is not None:
            times.append(t)
            slices.append(pts)
        if singular is not None:
            break
    return FlowHistory(
        np.array(times), np.stack(slices), curve.closed, curve.truncated,
        events=tuple(events), singular_time=singular, meta=meta,
    )


def _scale_angle(spec, t: float) -> tuple[float, float]:
    lam, om = spec.lam, spec.omega
    g = 1.0 + 2.0 * lam * t
    if g <= 0:
        raise ValueError(f"t={t} is past extinction (1 + 2 lambda t = {g:.3g})")
    if lam == 0:
        return 1.0, om * t
    return math.sqrt(g), om / (2.0 * lam) * math.log(g)


def analytic_selfsimilar_flow(spec, profile: Curve, t: float) -> Curve:
    """Image at time ``t`` of the self-similar flow generated by ``profile``.

    ``x(t) = a(t) R(theta(t)) profile + e t`` with ``a = sqrt(1 + 2 lambda t)``
    and ``theta' = omega / a^2``.  Points keep their profile index, so this
    is the image of the flow, not its normal parametrization
    (``meta["image_only"]`` is set).
    """
    e = np.asarray(spec.e, float)
    if np.any(e != 0) and (spec.lam != 0 or spec.omega != 0):
        raise ValueError("translation combined with scaling/rotation is not self-similar")
    a, theta = _scale_angle(spec, t)
    pts = a * profile.points @ rotation(theta).T + e * t
    return profile.with_points(pts, image_only=True)


def analytic_history(spec, profile: Curve, times) -> FlowHistory:
    curves = [analytic_selfsimilar_flow(spec, profile, float(t)) for t in times]
    return FlowHistory.from_curves(times, curves, meta={"image_only": True})
