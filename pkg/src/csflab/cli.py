"""Command line entry point: ``csflab <subcommand> [flags]``.

Curves and histories use the JSON / JSON Lines formats of
:mod:`csflab.history`; reports are JSON (written to ``--report`` or
stdout); Harnack samples can also go to CSV.  Failures exit with status 2
and a single ``E:<code>:<message>`` line on stderr.  ``CSFLAB_LOG`` sets
the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import breather, entropy, flow, harnack, solitons
from .geometry import Similarity, resample_by_arclength
from .history import (
    FormatError,
    dumps,
    read_curve,
    read_history,
    write_curve,
    write_history,
)

log = logging.getLogger("csflab")


class CLIError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message)


def _floats(text: str, n: int | None = None) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _pair(text):
    return _floats(text, 2)


def _triple(text):
    return _floats(text, 3)


def _dt(text):
    return text if text == "auto" else float(text)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(report, path) -> None:
    text = json.dumps(report, sort_keys=True, separators=(",", ":"), default=_default) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", len(text[: exc.pos].encode())) from None


def _read_similarity(path) -> Similarity:
    d = _read_json(path)
    try:
        return Similarity.from_json(d.get("similarity", d))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"similarity file lacks field {exc}", 0) from None


def _sidecar_path(splice_path, sidecar) -> str:
    return sidecar or f"{splice_path}.sidecar.json"


def _read_splice(path, sidecar=None) -> breather.SpliceResult:
    hist = read_history(path)
    return breather.SpliceResult.from_sidecar(hist, _read_json(_sidecar_path(path, sidecar)))


# ---------------------------------------------------------------- commands

def cmd_evolve(a):
    curve = read_curve(a.input)
    if a.n:
        curve = resample_by_arclength(curve, a.n)
    opts = flow.SolverOptions(scheme=a.scheme, dt=a.dt, cfl=a.cfl,
                              redistribute=a.redistribute, save_every=a.save_every)
    hist = flow.evolve(curve, a.t0, a.t1, opts)
    write_history(a.output, hist)
    _emit({
        "slices": len(hist),
        "t_first": float(hist.times[0]),
        "t_last": float(hist.times[-1]),
        "singular_time": hist.singular_time,
        "extinction_estimate": hist.meta.get("extinction_estimate"),
        "resample_events": len(hist.events),
    }, a.report)


def _entropy_report(a, verify: bool):
    hist = read_history(a.history)
    x0 = np.array(a.center)
    rows = []
    for t, c in hist.slices():
        rep = entropy.huisken_functional(c, t, x0, a.t0)
        row = rep.to_json()
        if verify:
            row["deficit"] = entropy.deficit(c, t, x0, a.t0)
        rows.append(row)
    out = {"slices": rows}
    if verify:
        out["monotonicity"] = entropy.verify_monotonicity(hist, x0, a.t0).to_json()
    _emit(out, a.report)


def cmd_entropy(a):
    _entropy_report(a, verify=False)


def cmd_entropy_verify(a):
    _entropy_report(a, verify=True)


def cmd_sup_entropy(a):
    value, center = entropy.sup_entropy(read_curve(a.input), a.t, a.t0)
    _emit({"value": value, "center": center.tolist(), "t": a.t, "t0": a.t0}, a.report)


def cmd_gamma_check(a):
    out = {}
    threshold = None
    if a.alpha is not None or a.t1 is not None or a.t2 is not None:
        if None in (a.alpha, a.t1, a.t2):
            raise CLIError("usage", "--alpha, --t1 and --t2 go together")
        threshold = entropy.breather_gamma_threshold(a.alpha, a.t1, a.t2)
        print(f"threshold {threshold:.5f}")
        out["threshold"] = threshold
        if a.gamma is not None:
            out["admissible"] = entropy.gamma_admissible(a.gamma, threshold, a.no_translation)
    if a.input:
        if a.gamma is None or a.windows is None:
            raise CLIError("usage", "--input needs --gamma and --windows")
        rep = entropy.gamma_integral(read_curve(a.input), a.gamma, a.windows)
        d = rep.to_json()
        d["threshold"] = threshold
        out["gamma_report"] = d
    if a.report or a.input:
        _emit(out, a.report)


def _soliton_spec(a) -> tuple:
    if a.kind in solitons.PRESETS:
        p = solitons.PRESETS[a.kind]
        spec = p.spec
        if a.lam is not None or a.omega is not None or a.e is not None:
            spec = solitons.SolitonSpec(
                spec.lam if a.lam is None else a.lam,
                spec.omega if a.omega is None else a.omega,
                spec.e if a.e is None else a.e, "custom")
        start = p.start
        s_max, s_min, ds = p.s_max, p.s_min, p.ds
    else:
        spec = solitons.SolitonSpec(a.lam or 0.0, a.omega or 0.0, a.e or (0.0, 0.0), a.kind)
        start, s_max, s_min, ds = ((0.0, 0.0), 0.0), None, 0.0, 1e-3
    if a.start is not None:
        start = ((a.start[0], a.start[1]), a.start[2])
    s_max = a.smax if a.smax is not None else s_max
    s_min = a.smin if a.smin is not None else s_min
    ds = a.ds if a.ds is not None else ds
    if s_max is None:
        raise CLIError("usage", "--smax is required for non-preset kinds")
    return spec, start, s_max, s_min, ds


def cmd_soliton(a):
    spec, start, s_max, s_min, ds = _soliton_spec(a)
    untouched = a.start is None and a.lam is None and a.omega is None and a.e is None
    if a.kind in solitons.PRESETS and untouched:
        curve = solitons.generate_preset(a.kind, s_max=s_max, s_min=s_min, ds=ds)
    else:
        curve = solitons.generate(spec, start, s_max, ds=ds, s_min=s_min)
    write_curve(a.output, curve)
    rep = {
        "kind": a.kind,
        "lambda": spec.lam,
        "omega": spec.omega,
        "e": list(spec.e),
        "points": len(curve),
        "topology": curve.topology,
        "residual": solitons.residual(curve, spec),
    }
    for key in ("blowup_s", "blowup_s_min"):
        if key in curve.meta:
            rep[key] = curve.meta[key]
    _emit(rep, a.report)


def cmd_breather_detect(a):
    if a.history:
        hist = read_history(a.history)
        c1, c2 = hist.curve(0), hist.curve(len(hist) - 1)
    else:
        if not (a.slice1 and a.slice2):
            raise CLIError("usage", "give --slice1 and --slice2, or --history")
        c1, c2 = read_curve(a.slice1), read_curve(a.slice2)
    s = breather.detect(c1, c2, a.allow_reflection, resample=a.resample)
    d = s.to_json()
    d["angle"] = s.angle
    d["det"] = s.det
    _emit(d, a.report)


def cmd_splice(a):
    hist = read_history(a.history)
    s = _read_similarity(a.similarity)
    if a.mode == "shrinking":
        res = breather.splice_shrinking(hist, s, a.copies)
    elif a.mode == "expanding":
        res = breather.splice_expanding(hist, s, a.copies)
    else:
        res = breather.splice_steady(hist, s, a.copies, eternal=(a.mode == "eternal"))
    write_history(a.output, res.history)
    side = res.sidecar()
    side["junction_gaps"] = res.junction_gaps
    Path(_sidecar_path(a.output, a.sidecar)).write_text(dumps(side) + "\n")
    _emit({"mode": res.mode, "slices": len(res.history),
           "junctions": res.junction_times,
           "max_junction_gap": max(res.junction_gaps, default=0.0)}, a.report)


def cmd_junction_check(a):
    res = _read_splice(a.splice, a.sidecar)
    rows = breather.junction_smoothness(res, a.order)
    _emit({"order": a.order, "junctions": rows, "slices": len(res.history)}, a.report)


def cmd_rescale(a):
    res = _read_splice(a.splice, a.sidecar)
    rep = breather.rescale_sequence(res, a.j)
    write_history(a.output, rep.history)
    _emit(rep.to_json(), a.report)


def _pick_time(hist, t):
    if t is None:
        return float(hist.times[len(hist) // 2])
    return float(hist.times[hist.index_of(t, tol=1e-9)])


def cmd_harnack(a):
    hist = read_history(a.history)
    if a.quantity == "sqrtTH":
        idx = range(hist.n_points) if a.index is None else [a.index]
        rows = [harnack.sqrt_t_H_monotone(hist, i, a.t_origin) for i in idx]
        for r in rows:
            r.pop("series")
        _emit({
            "quantity": "sqrtTH",
            "min_slope": min(r["min_slope"] for r in rows),
            "monotone": all(r["monotone"] for r in rows),
            "valid": all(r["valid"] for r in rows),
            "indices": len(rows),
        }, a.report)
        return
    t = _pick_time(hist, a.t)
    if a.quantity == "steady":
        samples = harnack.steady_harnack(hist, t, a.v_mode)
    else:
        samples = harnack.expanding_harnack(hist, t, a.v_mode, a.t_origin)
    if a.csv:
        harnack.write_samples_csv(a.csv, samples)
    valid = [s.quantity for s in samples if s.valid]
    _emit({
        "quantity": a.quantity,
        "v_mode": a.v_mode,
        "t": t,
        "samples": len(samples),
        "valid_samples": len(valid),
        "max_abs_quantity": max(map(abs, valid)) if valid else None,
        "min_quantity": min(valid) if valid else None,
        "noncompact_max_assumed": bool(hist.truncated),
    }, a.report)


def cmd_rotator_check(a):
    _emit(harnack.rotator_minimality_check(read_curve(a.input), a.omega), a.report)


def cmd_orbit(a):
    hist = read_history(a.history)
    s = _read_similarity(a.similarity)
    _emit(breather.orbit_boundedness(hist, s, a.p0, a.direction, a.j), a.report)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csflab", description="Curve shortening flow laboratory.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    e = add("evolve", cmd_evolve, "run the flow on a curve file")
    e.add_argument("--input", required=True)
    e.add_argument("--t0", type=float, default=0.0)
    e.add_argument("--t1", type=float, required=True)
    e.add_argument("--n", type=int, help="resample to N points first")
    e.add_argument("--dt", type=_dt, default="auto")
    e.add_argument("--cfl", type=float, default=0.2)
    e.add_argument("--scheme", choices=["explicit", "semi-implicit"], default="explicit")
    e.add_argument("--redistribute", type=int)
    e.add_argument("--save-every", type=int, default=1)
    e.add_argument("--output", required=True)
    e.add_argument("--report")

    for name, func in (("entropy", cmd_entropy), ("entropy-verify", cmd_entropy_verify)):
        s = add(name, func, "weighted length per slice" + (" with deficit check" if "verify" in name else ""))
        s.add_argument("--history", required=True)
        s.add_argument("--center", type=_pair, default=(0.0, 0.0))
        s.add_argument("--t0", type=float, required=True)
        s.add_argument("--report")

    s = add("sup-entropy", cmd_sup_entropy, "maximize the weighted length over centers")
    s.add_argument("--input", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--t0", type=float, required=True)
    s.add_argument("--report")

    g = add("gamma-check", cmd_gamma_check, "Gaussian-weighted length and the breather threshold")
    g.add_argument("--input")
    g.add_argument("--gamma", type=float)
    g.add_argument("--windows", type=_floats)
    g.add_argument("--alpha", type=float)
    g.add_argument("--t1", type=float)
    g.add_argument("--t2", type=float)
    g.add_argument("--no-translation", action="store_true")
    g.add_argument("--report")

    so = add("soliton", cmd_soliton, "generate a soliton profile")
    so.add_argument("--kind", required=True,
                    choices=sorted(solitons.PRESETS) + list(solitons.KINDS))
    so.add_argument("--lambda", dest="lam", type=float)
    so.add_argument("--omega", type=float)
    so.add_argument("--e", type=_pair)
    so.add_argument("--smax", type=float)
    so.add_argument("--smin", type=float)
    so.add_argument("--ds", type=float)
    so.add_argument("--start", type=_triple)
    so.add_argument("--output", required=True)
    so.add_argument("--report")

    b = add("breather-detect", cmd_breather_detect, "recover the similarity between two slices")
    b.add_argument("--slice1")
    b.add_argument("--slice2")
    b.add_argument("--history", help="use the first and last slice of a history")
    b.add_argument("--allow-reflection", action="store_true")
    b.add_argument("--resample", type=int)
    b.add_argument("--report")

    sp = add("splice", cmd_splice, "chain copies of a breather period")
    sp.add_argument("--history", required=True)
    sp.add_argument("--similarity", required=True)
    sp.add_argument("--mode", choices=["shrinking", "expanding", "steady", "eternal"], required=True)
    sp.add_argument("--copies", type=int, required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--sidecar")
    sp.add_argument("--report")

    j = add("junction-check", cmd_junction_check, "one-sided derivative match at junctions")
    j.add_argument("--splice", required=True)
    j.add_argument("--sidecar")
    j.add_argument("--order", type=int, choices=[1, 2], default=1)
    j.add_argument("--report")

    r = add("rescale", cmd_rescale, "rescaled copy of a shrinking splice")
    r.add_argument("--splice", required=True)
    r.add_argument("--sidecar")
    r.add_argument("--j", type=int, required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--report")

    h = add("harnack", cmd_harnack, "Harnack quantities on a history")
    h.add_argument("--history", required=True)
    h.add_argument("--quantity", choices=["steady", "expanding", "sqrtTH"], required=True)
    h.add_argument("--v-mode", choices=["zero", "optimal"], default="zero")
    h.add_argument("--t", type=float, help="slice time (default: middle slice)")
    h.add_argument("--t-origin", type=float, default=0.0)
    h.add_argument("--index", type=int)
    h.add_argument("--csv")
    h.add_argument("--report")

    rc = add("rotator-check", cmd_rotator_check, "curvature at the point closest to the origin")
    rc.add_argument("--input", required=True)
    rc.add_argument("--omega", type=float, required=True)
    rc.add_argument("--report")

    o = add("orbit", cmd_orbit, "follow a point under the breather index map")
    o.add_argument("--history", required=True)
    o.add_argument("--similarity", required=True)
    o.add_argument("--p0", type=int, required=True)
    o.add_argument("--direction", choices=["forward", "backward"], default="forward")
    o.add_argument("--j", type=int, default=20)
    o.add_argument("--report")
    return p


def _setup_logging() -> None:
    level = os.environ.get("CSFLAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except CLIError as exc:
        code, msg = exc.code, str(exc)
    except FormatError as exc:
        code, msg = "format", str(exc)
    except FileNotFoundError as exc:
        code, msg = "io", f"{exc.strerror}: {exc.filename}"
    except flow.StepError as exc:
        code, msg = "step", str(exc)
    except (ValueError, IndexError, KeyError) as exc:
        code, msg = "precondition", str(exc)
    else:
        return 0
    print(f"E:{code}:{msg}".replace("\n", " "), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
