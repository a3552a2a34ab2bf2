"""Breather detection and the spliced ancient, immortal and eternal flows.

A breather period is a :class:`~csflab.history.FlowHistory` over ``t in [0, 1]``
together with a :class:`~csflab.geometry.Similarity` ``s`` such that
``x(., 1) = s(x(., 0))``.  Copies of the period are chained with powers of
``s`` so that consecutive copies agree at the junction times.

Shrinking splices run in backward time ``tau = 1 - t``; their history times
are values of ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Curve,
    Similarity,
    compose,
    inverse,
    resample_by_arclength,
    signed_curvature,
)
from .entropy import deficit, huisken_functional
from .history import FlowHistory

__all__ = [
    "SpliceResult",
    "SpliceError",
    "detect",
    "splice_shrinking",
    "splice_expanding",
    "splice_steady",
    "junction_smoothness",
    "rescale_sequence",
    "orbit_boundedness",
    "splice_entropy_bound",
    "rescaled_deficit",
    "shrinking_junctions",
    "expanding_junctions",
    "STEADY_TOL",
]

STEADY_TOL = 1e-6
MODES = ("shrinking", "expanding", "steady-backward", "steady-eternal")


class SpliceError(ValueError):
    """Breather data that cannot be spliced in the requested mode."""


@dataclass(frozen=True, eq=False)
class SpliceResult:
    """A spliced flow.

    ``period`` gives, for every slice, the index ``j`` of the copy it was
    taken from (negative for backward steady copies).  ``junction_gaps``
    holds, per junction, the largest distance between the junction curve as
    produced by the two adjacent copies.
    """

    history: FlowHistory
    junction_times: list
    similarity: Similarity
    mode: str
    period: np.ndarray = field(repr=False)
    junction_gaps: list = field(default_factory=list)

    @property
    def period_data(self) -> tuple:
        s = self.similarity
        return s.alpha, s.R, s.V, s.shift

    def sidecar(self) -> dict:
        s = self.similarity
        return {
            "mode": self.mode,
            "alpha": s.alpha,
            "rotation": s.R.tolist(),
            "V": s.V.tolist(),
            "shift": s.shift,
            "reversed": s.reversed,
            "junctions": [float(t) for t in self.junction_times],
            "period": [int(p) for p in self.period],
            "junction_gaps": [float(g) for g in self.junction_gaps],
        }

    @classmethod
    def from_sidecar(cls, history: FlowHistory, d: dict) -> "SpliceResult":
        sim = Similarity(d["alpha"], np.array(d["rotation"], float), np.array(d["V"], float),
                         int(d.get("shift", 0)), bool(d.get("reversed", False)))
        if d["mode"] not in MODES:
            raise ValueError(f"unknown splice mode {d['mode']!r}")
        period = np.array(d.get("period", np.zeros(len(history))), int)
        if len(period) != len(history):
            raise ValueError("sidecar period list does not match the history")
        gaps = [float(g) for g in d.get("junction_gaps", [])]
        return cls(history, list(d["junctions"]), sim, d["mode"], period, gaps)


# ---------------------------------------------------------------- detection

def _procrustes(P: np.ndarray, Q: np.ndarray, alpha: float, reflect: bool):
    """Best ``R`` (proper or improper) for ``Q ~ alpha R P + V``; batch over axis 0."""
    pm = P.mean(axis=1, keepdims=True)
    qm = Q.mean(axis=1, keepdims=True)
    M = np.einsum("kia,kib->kab", Q - qm, P - pm)
    if reflect:
        ang = np.arctan2(M[:, 1, 0] + M[:, 0, 1], M[:, 0, 0] - M[:, 1, 1])
        c, s = np.cos(ang), np.sin(ang)
        R = np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2)
    else:
        ang = np.arctan2(M[:, 1, 0] - M[:, 0, 1], M[:, 0, 0] + M[:, 1, 1])
        c, s = np.cos(ang), np.sin(ang)
        R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    V = qm[:, 0] - alpha * np.einsum("kab,kb->ka", R, pm[:, 0])
    fit = alpha * np.einsum("kab,kib->kia", R, P) + V[:, None, :]
    rms = np.sqrt(np.mean(np.sum((fit - Q) ** 2, axis=2), axis=1))
    return R, V, rms


def detect(slice1: Curve, slice2: Curve, allow_reflection: bool = False,
           resample: int | None = None) -> Similarity:
    """Recover ``s`` with ``slice2 ~ s(slice1)``.

    The scale is the length ratio.  Every cyclic shift (closed curves) is
    tried, with orientation reversal and improper ``R`` when
    ``allow_reflection`` is set.  The smallest RMS residual wins; near-ties
    go to the smallest shift, then to ``det R = +1``.  Pass ``resample`` to
    bring both slices to a common arclength-uniform sampling first.
    """
    if slice1.closed != slice2.closed:
        raise ValueError("slices must share a topology")
    if resample:
        slice1 = resample_by_arclength(slice1, resample)
        slice2 = resample_by_arclength(slice2, resample)
    N = len(slice1)
    if len(slice2) != N:
        raise ValueError(f"point counts differ ({N} vs {len(slice2)}); pass resample=N")
    L1 = slice1.length
    if not L1 > 0:
        raise ValueError("first slice has zero length")
    alpha = slice2.length / L1
    P0, Q = slice1.points, slice2.points

    candidates = []  # (shift, det branch, reversed) in tie-break order
    shifts = range(N) if slice1.closed else [0]
    for sh in shifts:
        for reflect in ([False, True] if allow_reflection else [False]):
            for rev in ([False, True] if allow_reflection else [False]):
                candidates.append((sh, reflect, rev))
    perms = np.array([Similarity(shift=sh, reversed=rev).permutation(N, slice1.closed)
                      for sh, _, rev in candidates])
    best = None
    for reflect in ({c[1] for c in candidates}):
        sel = np.array([c[1] == reflect for c in candidates])
        R, V, rms = _procrustes(P0[perms[sel]], np.broadcast_to(Q, (sel.sum(), N, 2)), alpha, reflect)
        idx = np.flatnonzero(sel)
        for k, i in enumerate(idx):
            if best is None:
                best = [None] * len(candidates)
            best[i] = (rms[k], R[k], V[k])
    res = np.array([b[0] for b in best])
    scale = max(1.0, float(np.abs(Q).max()))
    ok = np.flatnonzero(res <= res.min() * (1 + 1e-6) + 1e-12 * scale)
    order = sorted(ok, key=lambda i: (candidates[i][0], candidates[i][1], candidates[i][2]))
    i = order[0]
    sh, _, rev = candidates[i]
    return Similarity(alpha, best[i][1], best[i][2], sh, rev, float(best[i][0]))


# ---------------------------------------------------------------- splicing

def shrinking_junctions(alpha: float, J: int) -> np.ndarray:
    """``tau_j = sum_{k<=j} alpha^(-2k)`` for ``j = 0..J``."""
    return np.cumsum(alpha ** (-2.0 * np.arange(J + 1)))


def expanding_junctions(alpha: float, J: int) -> np.ndarray:
    """``t_j = sum_{k<=j} alpha^(2k)`` for ``j = 0..J``."""
    return np.cumsum(alpha ** (2.0 * np.arange(J + 1)))


def _power(s: Similarity, j: int) -> Similarity:
    base = s if j >= 0 else inverse(s)
    out = Similarity()
    for _ in range(abs(j)):
        out = compose(base, out)
    return out


def _apply_batch(points: np.ndarray, s: Similarity, closed: bool) -> np.ndarray:
    perm = s.permutation(points.shape[1], closed)
    return s.alpha * points[:, perm] @ s.R.T + s.V


def _check_period(history: FlowHistory, s: Similarity) -> None:
    t = history.times
    if len(t) < 2 or abs(t[0]) > 1e-9 or abs(t[-1] - 1.0) > 1e-9:
        raise SpliceError("the breather period must be a history over t in [0, 1]")
    N = history.n_points
    if history.closed:
        if not -N < s.shift < N:
            raise SpliceError(f"shift {s.shift} incompatible with {N} points")
    elif s.shift != 0:
        raise SpliceError("open curves only support shift 0")


def _max_gap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.hypot(*(a - b).T)))


def _assemble(pieces, s, mode, closed, truncated, junctions) -> SpliceResult:
    """``pieces``: list of (j, local times, global times, points) in time order."""
    times, pts, period, gaps = [], [], [], []
    for n, (j, glob, P) in enumerate(pieces):
        if n > 0:
            gaps.append(_max_gap(pts[-1][-1], P[0]))
            glob, P = glob[1:], P[1:]
        times.append(glob)
        pts.append(P)
        period.append(np.full(len(glob), j))
    hist = FlowHistory(np.concatenate(times), np.concatenate(pts), closed, truncated,
                       meta={"mode": mode})
    return SpliceResult(hist, [float(x) for x in junctions], s, mode, np.concatenate(period), gaps)


def splice_shrinking(history: FlowHistory, s: Similarity, J: int) -> SpliceResult:
    """Chain ``J + 1`` copies of a shrinking period into an ancient flow.

    With ``y0(tau) = x(1 - tau)``, copy ``j`` is ``s^(-j)`` applied to
    ``y0(alpha^(2j) (tau - tau_(j-1)))`` on ``[tau_(j-1), tau_j]``.
    """
    _check_period(history, s)
    if not s.alpha < 1:
        raise SpliceError(f"shrinking splice needs alpha < 1, got {s.alpha}")
    if J < 0:
        raise SpliceError("copy count must be nonnegative")
    tau_loc = (1.0 - history.times)[::-1]
    tau_loc[0] = 0.0
    y0 = history.points[::-1]
    taus = shrinking_junctions(s.alpha, J)
    pieces = []
    for j in range(J + 1):
        start = taus[j - 1] if j else 0.0
        glob = start + tau_loc * s.alpha ** (-2.0 * j)
        glob[-1] = taus[j]
        pieces.append((j, glob, _apply_batch(y0, _power(s, -j), history.closed)))
    return _assemble(pieces, s, "shrinking", history.closed, history.truncated, taus)


def splice_expanding(history: FlowHistory, s: Similarity, J: int) -> SpliceResult:
    """Chain copies of an expanding period into an immortal flow.

    Copy ``j`` is ``s^j`` applied to ``x0(alpha^(-2j) (t - t_(j-1)))`` on
    ``[t_(j-1), t_j]``.
    """
    _check_period(history, s)
    if not s.alpha > 1:
        raise SpliceError(f"expanding splice needs alpha > 1, got {s.alpha}")
    if J < 0:
        raise SpliceError("copy count must be nonnegative")
    ts = expanding_junctions(s.alpha, J)
    pieces = []
    for j in range(J + 1):
        start = ts[j - 1] if j else 0.0
        glob = start + history.times * s.alpha ** (2.0 * j)
        glob[0], glob[-1] = start, ts[j]
        pieces.append((j, glob, _apply_batch(history.points, _power(s, j), history.closed)))
    return _assemble(pieces, s, "expanding", history.closed, history.truncated, ts)


def splice_steady(history: FlowHistory, s: Similarity, J: int, eternal: bool = False) -> SpliceResult:
    """Chain unit-length copies of a steady period.

    Backward copies ``x_(-j)(t) = s^(-j)(x0(t + j))`` cover ``[-J, 1]``;
    with ``eternal`` the forward copies ``s^j(x0(t - j))`` extend this to
    ``[-J, J + 1]``.
    """
    _check_period(history, s)
    if abs(s.alpha - 1.0) >= STEADY_TOL:
        raise SpliceError(f"steady splice needs |alpha - 1| < {STEADY_TOL}, got {s.alpha}")
    if J < 0:
        raise SpliceError("copy count must be nonnegative")
    js = range(-J, J + 1) if eternal else range(-J, 1)
    pieces = []
    for j in js:
        glob = history.times + j
        glob[0], glob[-1] = float(j), float(j + 1)
        pieces.append((j, glob, _apply_batch(history.points, _power(s, j), history.closed)))
    junctions = [float(j) for j in range(-J + 1, (J + 1 if eternal else 0) + 1)]
    mode = "steady-eternal" if eternal else "steady-backward"
    return _assemble(pieces, s, mode, history.closed, history.truncated, junctions)


def steady_drift_norms(s: Similarity, J: int) -> list:
    """``|R^(-j-1) V|`` for ``j = 0..J``; all equal ``|V|`` since ``R`` is orthogonal."""
    out, Rinv = [], s.R.T
    M = Rinv.copy()
    for _ in range(J + 1):
        out.append(float(np.linalg.norm(M @ s.V)))
        M = Rinv @ M
    return out


# ---------------------------------------------------------------- junctions

def _vector_field(hist: FlowHistory, k: int, order: int) -> np.ndarray:
    if order == 1:
        return hist.points[k]
    kappa, n = signed_curvature(hist.curve(k))
    return kappa[:, None] * n


def junction_smoothness(splice: SpliceResult, order: int = 1) -> list:
    """Compare one-sided time difference quotients at every junction.

    ``order=1`` differentiates positions, ``order=2`` the curvature vector
    ``kappa n``.  Each entry reports the largest pointwise mismatch, the
    position gap between the two adjacent copies, and the step sizes that
    set the expected first-order scale.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    hist = splice.history
    t = hist.times
    out = []
    inner = [tj for tj in splice.junction_times if t[0] < tj < t[-1]]
    gaps = splice.junction_gaps
    for n, tj in enumerate(inner):
        k = int(np.argmin(np.abs(t - tj)))
        if abs(t[k] - tj) > 1e-9 * max(1.0, abs(tj)):
            raise ValueError(f"junction {tj} is not a stored slice")
        if k < 2 or k > len(t) - 3:
            raise ValueError("need two slices on each side of every junction")
        f = [_vector_field(hist, i, order) for i in (k - 1, k, k + 1)]
        dm, dp = t[k] - t[k - 1], t[k + 1] - t[k]
        back = (f[1] - f[0]) / dm
        fwd = (f[2] - f[1]) / dp
        # junction j of the splice sits after copy j; pick its recorded gap
        j_idx = list(splice.junction_times).index(tj) if tj in splice.junction_times else n
        gap = float(gaps[j_idx]) if j_idx < len(gaps) else None
        out.append({
            "t": float(tj),
            "discrepancy": float(np.max(np.hypot(*(fwd - back).T))),
            "position_gap": gap,
            "dt_minus": float(dm),
            "dt_plus": float(dp),
            "expected_scale": float(max(dm, dp)),
        })
    return out


# ---------------------------------------------------------------- rescaling

@dataclass(frozen=True, eq=False)
class RescaleReport:
    history: FlowHistory
    j: int
    scale_factor: float
    scale_limit: float
    scale_identity: float
    drift: np.ndarray
    drift_bound: float

    def to_json(self) -> dict:
        return {
            "j": self.j,
            "scale_factor": self.scale_factor,
            "scale_limit": self.scale_limit,
            "scale_identity": self.scale_identity,
            "drift": self.drift.tolist(),
            "drift_norm": float(np.linalg.norm(self.drift)),
            "drift_bound": self.drift_bound,
        }


def rescale_sequence(splice: SpliceResult, j: int) -> RescaleReport:
    """Blow down a shrinking splice by ``tau_j^(-1/2)`` onto ``[1, tau_(j+1) / tau_j]``.

    The returned history holds copy ``j + 1`` with indices pulled back so
    that point ``i`` tracks the same base-period point, times divided by
    ``tau_j`` and positions scaled by ``tau_j^(-1/2)``.  The report
    carries ``alpha^(2(j+1)) tau_j`` (its closed form and its limit
    ``c0 = (alpha^-2 - 1)^-1``) and the drift vector with its bound.
    """
    if splice.mode != "shrinking":
        raise ValueError("rescaling applies to shrinking splices")
    J = int(splice.period.max())
    if not 0 <= j < J:
        raise IndexError(f"j must lie in [0, {J - 1}] for a splice with {J + 1} copies")
    s = splice.similarity
    a = s.alpha
    taus = shrinking_junctions(a, J)
    tj = taus[j]
    hist = splice.history
    sel = (splice.period == j + 1) | (np.arange(len(hist)) == np.flatnonzero(splice.period == j + 1)[0] - 1)
    P = hist.points[sel]
    # undo the index shift of s^(-(j+1)) so index i is the base-period point
    N = hist.n_points
    pull = _power(s, -(j + 1)).permutation(N, hist.closed)
    unperm = np.empty(N, int)
    unperm[pull] = np.arange(N)
    P = P[:, unperm]
    times = hist.times[sel] / tj
    times[0] = 1.0
    times[-1] = taus[j + 1] / tj
    rescaled = FlowHistory(times, P / math.sqrt(tj), hist.closed, hist.truncated)
    g = inverse(s)
    drift = np.zeros(2)
    Rk = np.eye(2)
    for k in range(j + 1):
        drift += a ** (-k) * Rk @ g.V
        Rk = g.R @ Rk
    drift /= math.sqrt(tj)
    c = float(np.sum(a ** (-np.arange(j + 1.0)))) / math.sqrt(tj)
    c0 = 1.0 / (a ** -2 - 1.0)
    return RescaleReport(
        rescaled, j,
        scale_factor=float(a ** (2 * (j + 1)) * tj),
        scale_limit=c0,
        scale_identity=float((1.0 - a ** (2 * (j + 1))) * c0),
        drift=drift,
        drift_bound=c * float(np.linalg.norm(g.V)),
    )


def rescaled_deficit(history: FlowHistory, tau_lo: float, tau_hi: float, x0=(0.0, 0.0)) -> float:
    """Trapezoid integral of the monotonicity deficit over ``[tau_lo, tau_hi]``.

    Times of ``history`` are backward times ``tau`` and the kernel is
    centered at ``(x0, 0)``, so its scale at slice ``tau`` is ``tau`` itself.
    """
    t = history.times
    sel = np.flatnonzero((t >= tau_lo - 1e-12) & (t <= tau_hi + 1e-12))
    if len(sel) < 2:
        raise ValueError("fewer than two slices inside the window")
    if np.any(t[sel] <= 0):
        raise ValueError("backward times must be positive")
    vals = np.array([deficit(history.curve(k), -t[k], x0, 0.0) for k in sel])
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(t[sel])))


def splice_entropy_bound(splice: SpliceResult, samples: int = 50, reference_end: float | None = None,
                         kernel_offset: float = 0.0, x0=(0.0, 0.0), factor: float = 1.05) -> dict:
    """Huisken functional along a shrinking splice against its early maximum.

    The slice at backward time ``tau`` is weighted by the kernel of scale
    ``tau + kernel_offset`` centered at ``x0``.  ``samples`` stored slices
    spread over ``(0, tau_J]`` are compared with the maximum over
    ``(0, reference_end]`` (default ``tau_1``).
    """
    if splice.mode != "shrinking":
        raise ValueError("entropy bound applies to shrinking splices")
    hist = splice.history
    t = hist.times
    if reference_end is None:
        reference_end = splice.junction_times[1] if len(splice.junction_times) > 1 else t[-1]

    def value(k):
        return huisken_functional(hist.curve(k), -t[k], x0, kernel_offset).value

    pos = np.flatnonzero(t + kernel_offset > 0)
    targets = np.linspace(t[pos[0]], t[-1], samples)
    picks = np.unique(pos[np.clip(np.searchsorted(t[pos], targets), 0, len(pos) - 1)])
    ref = [k for k in pos if t[k] <= reference_end + 1e-12]
    ref_max = max(value(k) for k in ref)
    vals = [value(k) for k in picks]
    return {
        "times": [float(t[k]) for k in picks],
        "values": vals,
        "reference_end": float(reference_end),
        "reference_max": float(ref_max),
        "max": float(max(vals)),
        "ratio": float(max(vals) / ref_max),
        "bounded": bool(max(vals) <= factor * ref_max),
    }


# ---------------------------------------------------------------- orbits

def orbit_boundedness(history: FlowHistory, s: Similarity, p0: int,
                      direction: str = "forward", J: int = 20) -> dict:
    """Follow ``p0, phi(p0), phi^2(p0), ...`` on the first slice.

    ``phi`` is the index shift of ``s`` (its inverse for ``backward``).  On
    open curves an iterate that leaves the sampled window ends the orbit
    and marks it ``escaped``.  ``bounded`` compares the largest ``|x|`` over
    the later half of the iterates with the earlier half (5% slack).
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if J < 1:
        raise ValueError("J must be at least 1")
    N = history.n_points
    if not 0 <= p0 < N:
        raise IndexError(f"p0 out of range for {N} points")
    x = history.points[0]
    step = s.shift if direction == "forward" else -s.shift
    p, radii, idx = p0, [], []
    escaped = False
    for _ in range(J + 1):
        idx.append(int(p))
        radii.append(float(np.hypot(*x[p])))
        if history.closed:
            if s.reversed:
                p = (s.shift - p) % N
            else:
                p = (p + step) % N
        else:
            if s.reversed:
                p = N - 1 - p
            p = p + step
            if not 0 <= p < N:
                escaped = True
                break
    half = max(1, len(radii) // 2)
    early, late = radii[:half], radii[half:] or radii[-1:]
    bounded = (not escaped) and max(late) <= 1.05 * max(early)
    return {
        "direction": direction,
        "p0": int(p0),
        "indices": idx,
        "radii": radii,
        "sup": float(max(radii)),
        "escaped": escaped,
        "bounded": bool(bounded),
    }
