"""Time-ordered flows of curves and their on-disk formats.

Curve files are single JSON objects::

    {"topology": "closed", "truncated": false, "points": [[x, y], ...]}

Flow histories are JSON Lines: a header ``{"topology": ..., "count": N}``
followed by one ``{"t": t, "points": [[x, y], ...]}`` object per slice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence

import numpy as np

from .geometry import Curve

__all__ = [
    "FlowHistory",
    "FormatError",
    "curve_to_json",
    "curve_from_json",
    "read_curve",
    "write_curve",
    "read_history",
    "write_history",
    "dumps",
]


class FormatError(ValueError):
    """A file does not follow the curve / history format."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class FlowHistory:
    """Slices ``(t_k, x(., t_k))`` sharing one index set.

    Index ``i`` is the same material point in every slice.  ``events`` lists
    times at which the solver rebuilt the correspondence by arclength
    resampling.  ``singular_time`` is set when a solver stopped at a
    detected singularity.
    """

    times: np.ndarray
    points: np.ndarray
    closed: bool = True
    truncated: bool = False
    events: tuple = ()
    singular_time: float | None = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        p = np.array(self.points, dtype=float)
        if t.ndim != 1 or p.ndim != 3 or p.shape[0] != len(t) or p.shape[2] != 2:
            raise ValueError("times must be (K,) and points (K, N, 2)")
        if len(t) == 0:
            raise ValueError("empty history")
        if np.any(np.diff(t) <= 0):
            raise ValueError("slice times must be strictly increasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @classmethod
    def from_curves(cls, times: Sequence[float], curves: Sequence[Curve], **kw) -> "FlowHistory":
        first = curves[0]
        if any(len(c) != len(first) or c.closed != first.closed for c in curves):
            raise ValueError("all slices need the same point count and topology")
        return cls(
            np.asarray(times, dtype=float),
            np.stack([c.points for c in curves]),
            first.closed,
            first.truncated,
            **kw,
        )

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n_points(self) -> int:
        return self.points.shape[1]

    def curve(self, k: int) -> Curve:
        return Curve(self.points[k], self.closed, self.truncated)

    def slices(self) -> Iterator[tuple[float, Curve]]:
        for k in range(len(self)):
            yield float(self.times[k]), self.curve(k)

    def index_of(self, t: float, tol: float = 1e-12) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no slice at t={t}")
        return k

    def window(self, t_lo: float, t_hi: float) -> "FlowHistory":
        sel = (self.times >= t_lo) & (self.times <= t_hi)
        return FlowHistory(self.times[sel], self.points[sel], self.closed, self.truncated)


def curve_to_json(curve: Curve) -> dict:
    return {
        "topology": curve.topology,
        "truncated": bool(curve.truncated),
        "points": curve.points.tolist(),
    }


def _topology(value, offset: int) -> bool:
    if value not in ("closed", "open"):
        raise FormatError(f"topology must be 'closed' or 'open', got {value!r}", offset)
    return value == "closed"


def _points(value, offset: int) -> np.ndarray:
    try:
        pts = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("points must be a list of [x, y] pairs", offset) from None
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FormatError("points must be a list of [x, y] pairs", offset)
    return pts


def curve_from_json(obj: Mapping, offset: int = 0) -> Curve:
    if not isinstance(obj, Mapping) or "points" not in obj or "topology" not in obj:
        raise FormatError("curve object needs 'topology' and 'points'", offset)
    closed = _topology(obj["topology"], offset)
    try:
        return Curve(_points(obj["points"], offset), closed, bool(obj.get("truncated", False)))
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc), offset) from None


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _loads(text: str, base: int = 0):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", base + len(text[: exc.pos].encode())) from None


def write_curve(path, curve: Curve) -> None:
    Path(path).write_text(dumps(curve_to_json(curve)) + "\n")


def read_curve(path) -> Curve:
    return curve_from_json(_loads(Path(path).read_text()))


def write_history(path, history: FlowHistory) -> None:
    lines = [dumps({"topology": "closed" if history.closed else "open",
                    "count": history.n_points,
                    "truncated": bool(history.truncated)})]
    for k in range(len(history)):
        lines.append(dumps({"t": float(history.times[k]), "points": history.points[k].tolist()}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_history(path) -> FlowHistory:
    data = Path(path).read_bytes()
    offset = 0
    header = None
    times, slices = [], []
    for raw in data.splitlines(keepends=True):
        line = raw.decode()
        here = offset
        offset += len(raw)
        if not line.strip():
            continue
        obj = _loads(line, here)
        if header is None:
            if not isinstance(obj, Mapping) or "topology" not in obj or "count" not in obj:
                raise FormatError("history header needs 'topology' and 'count'", here)
            header = obj
            closed = _topology(obj["topology"], here)
            count = int(obj["count"])
            continue
        if not isinstance(obj, Mapping) or "t" not in obj or "points" not in obj:
            raise FormatError("slice needs 't' and 'points'", here)
        pts = _points(obj["points"], here)
        if len(pts) != count:
            raise FormatError(f"slice has {len(pts)} points, header says {count}", here)
        if times and not float(obj["t"]) > times[-1]:
            raise FormatError("slice times must be strictly increasing", here)
        times.append(float(obj["t"]))
        slices.append(pts)
    if header is None or not times:
        raise FormatError("history has no header or no slices", offset)
    return FlowHistory(np.array(times), np.stack(slices), closed, bool(header.get("truncated", False)))
