"""Plane polylines, discrete curvature, arclength measure and similarities.

Conventions used throughout the package:

* the unit tangent ``T`` at a vertex is the normalized sum of the unit
  chords on either side of it;
* the unit normal is ``n = J T`` with ``J`` the +90 degree rotation;
* the signed curvature comes from the circle through three consecutive
  vertices, with the sign of ``<second difference, n>``.  A counterclockwise
  circle of radius ``R`` therefore has ``kappa = 1/R`` and ``n`` pointing at
  the center, and the curvature vector is ``kappa * n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

__all__ = [
    "Curve",
    "Similarity",
    "InvalidCurveError",
    "ROT90",
    "rotation",
    "segment_lengths",
    "resample_by_arclength",
    "tangents",
    "signed_curvature",
    "measure_weights",
    "apply_similarity",
    "compose",
    "inverse",
    "hausdorff_distance",
    "interior_mask",
]

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


class InvalidCurveError(ValueError):
    """Raised when a polyline violates the Curve invariants."""


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Curve:
    """An immersed plane polyline.

    ``points`` has shape ``(N, 2)``.  Closed curves carry an implicit segment
    from the last point back to the first.  ``truncated`` marks an open curve
    as a finite window of a noncompact immersion.  ``meta`` holds free-form
    markers (e.g. ``image_only`` for analytic flows, ``blowup_s`` for
    profiles whose curvature exploded).
    """

    points: np.ndarray
    closed: bool = True
    truncated: bool = False
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidCurveError(f"points must have shape (N, 2), got {pts.shape}")
        need = 4 if self.closed else 3
        if len(pts) < need:
            kind = "closed" if self.closed else "open"
            raise InvalidCurveError(f"{kind} curve needs at least {need} points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise InvalidCurveError("non-finite coordinates")
        if np.any(segment_lengths(pts, self.closed) <= 0.0):
            raise InvalidCurveError("repeated consecutive points")
        if self.truncated and self.closed:
            raise InvalidCurveError("a closed curve cannot be a truncation")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def topology(self) -> str:
        return "closed" if self.closed else "open"

    @property
    def length(self) -> float:
        return float(segment_lengths(self.points, self.closed).sum())

    @property
    def arclength(self) -> np.ndarray:
        """Cumulative chord length at each vertex, starting from 0."""
        seg = segment_lengths(self.points, self.closed)
        return np.concatenate([[0.0], np.cumsum(seg[: len(self.points) - 1])])

    def with_points(self, points, **meta) -> "Curve":
        m = dict(self.meta)
        m.update(meta)
        return Curve(points, self.closed, self.truncated, m)

    def __repr__(self) -> str:
        return f"Curve(N={len(self)}, {self.topology}, length={self.length:.6g})"


def segment_lengths(points: np.ndarray, closed: bool) -> np.ndarray:
    d = np.diff(points, axis=0)
    if closed:
        d = np.vstack([d, points[:1] - points[-1:]])
    return np.hypot(d[:, 0], d[:, 1])


def resample_by_arclength(curve: Curve, N: int) -> Curve:
    """Place ``N`` points equally spaced in chord length.

    The new points lie on the cubic spline (periodic for closed curves)
    through the input vertices, parametrized by cumulative chord length.
    The first point is kept fixed, so index 0 tracks the same material point.
    """
    need = 4 if curve.closed else 3
    if N < need:
        raise ValueError(f"N must be at least {need} for a {curve.topology} curve")
    pts = curve.points
    L = curve.length
    if not L > 0:
        raise InvalidCurveError("degenerate curve of zero length")
    if curve.closed:
        pts = np.vstack([pts, pts[:1]])
        targets = L * np.arange(N) / N
        bc = "periodic"
    else:
        targets = L * np.arange(N) / (N - 1)
        bc = "not-a-knot"
    s = np.concatenate([[0.0], np.cumsum(segment_lengths(pts, False))])
    targets[-1] = min(targets[-1], s[-1])
    out = CubicSpline(s, pts, bc_type=bc)(targets)
    out[0] = pts[0]
    if not curve.closed:
        out[-1] = pts[-1]
    return curve.with_points(out)


def _neighbours(points: np.ndarray, closed: bool):
    if closed:
        return np.roll(points, 1, axis=0), np.roll(points, -1, axis=0)
    prev = np.vstack([points[:1], points[:-1]])
    nxt = np.vstack([points[1:], points[-1:]])
    return prev, nxt


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.hypot(v[:, 0], v[:, 1])[:, None]


def tangents(curve: Curve) -> np.ndarray:
    pts = curve.points
    prev, nxt = _neighbours(pts, curve.closed)
    fwd = nxt - pts
    bwd = pts - prev
    if not curve.closed:
        fwd[-1] = bwd[-1]
        bwd[0] = fwd[0]
    return _unit(_unit(fwd) + _unit(bwd))


@numba.njit(cache=True)
def _kappa_normal(pts, closed):
    """Curvature, unit normal, min and total segment length of a polyline."""
    N = pts.shape[0]
    kappa = np.empty(N)
    nrm = np.empty((N, 2))
    hmin = np.inf
    htot = 0.0
    for i in range(N):
        if closed:
            ia = (i - 1) % N
            ic = (i + 1) % N
            ib = i
        else:
            ib = min(max(i, 1), N - 2)
            ia = ib - 1
            ic = ib + 1
        ux = pts[ib, 0] - pts[ia, 0]
        uy = pts[ib, 1] - pts[ia, 1]
        vx = pts[ic, 0] - pts[ib, 0]
        vy = pts[ic, 1] - pts[ib, 1]
        wx = pts[ic, 0] - pts[ia, 0]
        wy = pts[ic, 1] - pts[ia, 1]
        la = math.sqrt(ux * ux + uy * uy)
        lb = math.sqrt(vx * vx + vy * vy)
        lc = math.sqrt(wx * wx + wy * wy)
        # tangent: average of the unit chords at vertex i itself
        if closed or (0 < i < N - 1):
            tx = ux / la + vx / lb
            ty = uy / la + vy / lb
        elif i == 0:
            tx = ux / la
            ty = uy / la
        else:
            tx = vx / lb
            ty = vy / lb
        tn = math.sqrt(tx * tx + ty * ty)
        nx = -ty / tn
        ny = tx / tn
        nrm[i, 0] = nx
        nrm[i, 1] = ny
        cross = ux * vy - uy * vx
        k = 2.0 * abs(cross) / (la * lb * lc)
        sx = vx / lb - ux / la
        sy = vy / lb - uy / la
        dot = sx * nx + sy * ny
        kappa[i] = k if dot > 0 else (-k if dot < 0 else 0.0)
        if closed or i < N - 1:
            j = (i + 1) % N
            h = math.sqrt((pts[j, 0] - pts[i, 0]) ** 2 + (pts[j, 1] - pts[i, 1]) ** 2)
            hmin = min(hmin, h)
            htot += h
    return kappa, nrm, hmin, htot


def signed_curvature(curve: Curve) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(kappa, normal)`` at every vertex.

    Open-curve endpoints reuse the circle through the first (last) three
    vertices and the one-sided chord as tangent.
    """
    kappa, n, _, _ = _kappa_normal(curve.points, curve.closed)
    return kappa, n


def measure_weights(curve: Curve) -> np.ndarray:
    """Trapezoid arclength weights; they sum to the polygon length."""
    seg = segment_lengths(curve.points, curve.closed)
    w = np.empty(len(curve))
    if curve.closed:
        w[:] = 0.5 * (seg + np.roll(seg, 1))
    else:
        w[0] = 0.5 * seg[0]
        w[-1] = 0.5 * seg[-1]
        w[1:-1] = 0.5 * (seg[:-1] + seg[1:])
    return w


def interior_mask(curve: Curve, collar: int = 2) -> np.ndarray:
    """Boolean mask excluding ``collar`` points at each end of an open curve."""
    m = np.ones(len(curve), dtype=bool)
    if not curve.closed and collar > 0:
        m[:collar] = False
        m[-collar:] = False
    return m


@dataclass(frozen=True, eq=False)
class Similarity:
    """``c -> alpha * R @ c[perm(i)] + V`` with a cyclic index permutation.

    ``perm(i) = i + shift`` (mod N), or ``shift - i`` when ``reversed``.
    For open curves only ``shift == 0`` is meaningful and reversal maps
    ``i -> N - 1 - i``.
    """

    alpha: float = 1.0
    R: np.ndarray = field(default_factory=lambda: np.eye(2))
    V: np.ndarray = field(default_factory=lambda: np.zeros(2))
    shift: int = 0
    reversed: bool = False
    residual: float = 0.0

    def __post_init__(self):
        R = _frozen(self.R)
        V = _frozen(self.V)
        if R.shape != (2, 2) or V.shape != (2,):
            raise ValueError("R must be 2x2 and V a 2-vector")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if np.max(np.abs(R.T @ R - np.eye(2))) > 1e-10:
            raise ValueError("R is not orthogonal")
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "shift", int(self.shift))
        object.__setattr__(self, "reversed", bool(self.reversed))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.R))

    @property
    def angle(self) -> float:
        """Rotation angle of ``R`` (of ``R @ diag(1, -1)`` for reflections)."""
        R = self.R if self.det > 0 else self.R @ np.diag([1.0, -1.0])
        return float(np.arctan2(R[1, 0], R[0, 0]))

    def permutation(self, N: int, closed: bool = True) -> np.ndarray:
        i = np.arange(N)
        if closed:
            return (self.shift - i) % N if self.reversed else (i + self.shift) % N
        if self.shift:
            raise ValueError("open curves only support shift 0")
        return N - 1 - i if self.reversed else i

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "rotation": self.R.tolist(),
            "V": self.V.tolist(),
            "shift": self.shift,
            "reversed": self.reversed,
            "residual": self.residual,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Similarity":
        return cls(
            alpha=d["alpha"],
            R=np.array(d["rotation"], dtype=float),
            V=np.array(d["V"], dtype=float),
            shift=int(d.get("shift", 0)),
            reversed=bool(d.get("reversed", False)),
            residual=float(d.get("residual", 0.0)),
        )


def apply_similarity(curve: Curve, s: Similarity) -> Curve:
    perm = s.permutation(len(curve), curve.closed)
    pts = s.alpha * curve.points[perm] @ s.R.T + s.V
    return curve.with_points(pts)


def compose(s2: Similarity, s1: Similarity) -> Similarity:
    """Similarity equal to applying ``s1`` first, then ``s2``."""
    # out[i] = a2 R2 (a1 R1 c[p1(p2(i))] + V1) + V2
    if not s1.reversed and not s2.reversed:
        shift, rev = s1.shift + s2.shift, False
    elif s1.reversed and not s2.reversed:
        shift, rev = s1.shift - s2.shift, True
    elif not s1.reversed and s2.reversed:
        shift, rev = s2.shift + s1.shift, True
    else:
        shift, rev = s1.shift - s2.shift, False
    return Similarity(
        alpha=s2.alpha * s1.alpha,
        R=s2.R @ s1.R,
        V=s2.alpha * s2.R @ s1.V + s2.V,
        shift=shift,
        reversed=rev,
    )


def inverse(s: Similarity) -> Similarity:
    return Similarity(
        alpha=1.0 / s.alpha,
        R=s.R.T,
        V=-(s.R.T @ s.V) / s.alpha,
        shift=s.shift if s.reversed else -s.shift,
        reversed=s.reversed,
    )


def _point_to_polyline(points: np.ndarray, poly: np.ndarray, closed: bool) -> np.ndarray:
    tree = cKDTree(poly)
    _, k = tree.query(points)
    M = len(poly)
    best = np.hypot(*(points - poly[k]).T)
    for off in (-1, 0):
        i0 = k + off
        i1 = i0 + 1
        if closed:
            i0, i1 = i0 % M, i1 % M
            ok = np.ones(len(k), dtype=bool)
        else:
            ok = (i0 >= 0) & (i1 < M)
            i0, i1 = np.clip(i0, 0, M - 1), np.clip(i1, 0, M - 1)
        a, b = poly[i0], poly[i1]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        denom[denom == 0] = 1.0
        u = np.clip(np.einsum("ij,ij->i", points - a, ab) / denom, 0.0, 1.0)
        d = np.hypot(*(points - a - u[:, None] * ab).T)
        best = np.where(ok, np.minimum(best, d), best)
    return best


def hausdorff_distance(a: Curve, b: Curve, mask_a=None, mask_b=None) -> float:
    """Symmetric vertex-to-polyline Hausdorff distance.

    ``mask_a`` / ``mask_b`` restrict which vertices are measured (the target
    polylines are always used whole); pass ``False``-only masks to skip a
    direction.
    """
    pa = a.points if mask_a is None else a.points[mask_a]
    pb = b.points if mask_b is None else b.points[mask_b]
    d = 0.0
    if len(pa):
        d = max(d, float(_point_to_polyline(pa, b.points, b.closed).max()))
    if len(pb):
        d = max(d, float(_point_to_polyline(pb, a.points, a.closed).max()))
    return d
