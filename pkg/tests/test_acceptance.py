"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from csflab.breather import (
    detect,
    expanding_junctions,
    junction_smoothness,
    rescale_sequence,
    rescaled_deficit,
    shrinking_junctions,
    splice_entropy_bound,
    splice_expanding,
    splice_shrinking,
)
from csflab.entropy import breather_gamma_threshold, deficit, gamma_integral, huisken_functional, verify_monotonicity
from csflab.flow import SolverOptions, analytic_history, evolve
from csflab.geometry import Curve, Similarity, apply_similarity, resample_by_arclength, rotation
from csflab.harnack import rotator_minimality_check, sqrt_t_H, sqrt_t_H_monotone, steady_harnack
from csflab.history import FlowHistory
from csflab.solitons import PRESETS, SolitonSpec, classify_counterexample, generate, generate_preset, residual

from conftest import SQRT_2PI_E, circle, line, random_convex


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def circle_period(K=101, N=256, R0=2.0):
    th = 2 * np.pi * np.arange(N) / N
    ts = np.linspace(0, 1, K)
    P = np.stack([math.sqrt(R0**2 - 2 * t) * np.c_[np.cos(th), np.sin(th)] for t in ts])
    return FlowHistory(ts, P, True, False)


def circle_monotonicity(dt, x0):
    opts = SolverOptions(dt=dt, save_every=max(1, round(1e-3 / dt)))
    h = evolve(circle(2.0, 512), 0.0, 1.0, opts)
    return verify_monotonicity(h, x0, 2.0)


def test_criterion_01_monotonicity(verdict):
    start = time.perf_counter()
    h = evolve(circle(2.0, 512), 0.0, 1.0, SolverOptions(save_every=20))
    rep = verify_monotonicity(h, (0.0, 0.0), 2.0)
    elapsed = time.perf_counter() - start
    ok = rep.max_increase <= 1e-6 and rep.discrepancy < 1e-2 and elapsed < 10
    verdict("1 (monotonicity identity)", ok,
            f"max increase {rep.max_increase:.2e}, discrepancy {rep.discrepancy:.2e}, {elapsed:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="the centered circle is an exact shrinker; the discrepancy "
                                       "is second order in dt, not first")
def test_criterion_01_dt_halving(verdict):
    d1 = circle_monotonicity(1e-4, (0.0, 0.0)).discrepancy
    d2 = circle_monotonicity(5e-5, (0.0, 0.0)).discrepancy
    ratio = d1 / d2
    ok = 1.8 <= ratio <= 2.2
    verdict("1 (dt halving at center (0,0))", ok, f"discrepancies {d1:.2e} -> {d2:.2e}, ratio {ratio:.2f}")
    assert ok


def test_criterion_01_dt_halving_off_center(verdict):
    d1 = circle_monotonicity(1e-4, (0.5, 0.3)).discrepancy
    d2 = circle_monotonicity(5e-5, (0.5, 0.3)).discrepancy
    ratio = d1 / d2
    ok = 1.8 <= ratio <= 2.2 and d1 < 1e-2
    verdict("1 (dt halving at center (0.5,0.3))", ok, f"discrepancies {d1:.2e} -> {d2:.2e}, ratio {ratio:.2f}")
    assert ok


def test_criterion_02_shrinker_criticality(verdict):
    prof = circle(math.sqrt(2), 1024)
    h = analytic_history(PRESETS["shrinker-circle"].spec, prof, np.linspace(0.0, 0.5, 11))
    defs = [deficit(c, t, (0, 0), 1.0) for t, c in h.slices()]
    value = huisken_functional(prof, 0.0, (0, 0), 1.0).value
    ok = max(defs) < 1e-6 and abs(value - SQRT_2PI_E) < 1e-4
    verdict(2, ok, f"max deficit {max(defs):.2e}, value {value:.6f} vs {SQRT_2PI_E:.6f}")
    assert ok


def test_criterion_03_soliton_residuals(verdict):
    names = ["grim-reaper", "shrinker-circle", "yin-yang", "shrink-rotator", "expand-rotator"]
    res = {n: residual(generate_preset(n), PRESETS[n].spec) for n in names}
    c = generate_preset("shrinker-circle")
    radius_err = float(np.max(np.abs(np.hypot(*c.points.T) - math.sqrt(2))))
    spec = PRESETS["shrinker-circle"].spec
    L = 2 * math.pi * math.sqrt(2)
    errs = [float(np.hypot(*(generate(spec, ((math.sqrt(2), 0), math.pi / 2), L, ds).points[-1]
                             - [math.sqrt(2), 0]))) for ds in (0.04, 0.02)]
    ratio = errs[0] / errs[1]
    ok = max(res.values()) < 1e-6 and radius_err < 1e-5 and 14 <= ratio <= 18
    verdict(3, ok, f"max residual {max(res.values()):.2e}, radius error {radius_err:.1e}, ds ratio {ratio:.2f}")
    assert ok


def test_criterion_04_detection(verdict):
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(10):
        c = random_convex(rng, 128, amp=0.3)
        s = Similarity(rng.uniform(0.3, 3), rotation(rng.uniform(-3, 3)), rng.normal(size=2), int(rng.integers(128)))
        g = detect(c, apply_similarity(c, s))
        err = max(abs(g.alpha - s.alpha), np.abs(g.R - s.R).max(), np.abs(g.V - s.V).max())
        worst = max(worst, err if g.shift == s.shift else math.inf)
    h = evolve(circle(2.0, 256), 0.0, 1.0, SolverOptions(save_every=100_000))
    a = detect(h.curve(0), h.curve(-1)).alpha
    ok = worst < 1e-9 and abs(a - math.sqrt(2) / 2) < 1e-3
    verdict(4, ok, f"round-trip error {worst:.1e}, evolved circle alpha {a:.6f}")
    assert ok


def test_criterion_05_splices(verdict):
    j = np.arange(41)
    a = math.sqrt(0.5)
    geo = np.max(np.abs(shrinking_junctions(a, 40) / (2.0 ** (j + 1) - 1) - 1))
    geo = max(geo, np.max(np.abs(expanding_junctions(1 / a, 40) / (2.0 ** (j + 1) - 1) - 1)))
    disc = []
    for K in (1001, 2001):
        h = circle_period(K=K, N=64)
        sp = splice_shrinking(h, detect(h.curve(0), h.curve(-1)), 2)
        disc.append(max(r["discrepancy"] for r in junction_smoothness(sp, 1)))
    ratio = disc[0] / disc[1]
    h = circle_period()
    sp = splice_shrinking(h, detect(h.curve(0), h.curve(-1)), 3)
    r = np.hypot(*sp.history.points.transpose(2, 0, 1)).mean(axis=1)
    tau0 = 1 / (a**-2 - 1)
    rad_err = float(np.max(np.abs(r - np.sqrt(2 * (sp.history.times + tau0)))))
    gap = max(sp.junction_gaps)
    ok = geo < 1e-12 and gap <= 1e-10 and 1.8 <= ratio <= 2.2 and rad_err < 1e-3
    verdict(5, ok, f"series rel. error {geo:.1e}, junction gap {gap:.1e}, velocity ratio {ratio:.2f}, "
                   f"ancient circle error {rad_err:.1e}")
    assert ok


def test_criterion_06_entropy_along_splice(verdict):
    h = circle_period()
    rep = splice_entropy_bound(splice_shrinking(h, detect(h.curve(0), h.curve(-1)), 8))
    sp = splice_shrinking(h, detect(h.curve(0), h.curve(-1)), 7)
    d = [rescaled_deficit(rescale_sequence(sp, j).history, 1.1, 2.0) for j in range(2, 7)]
    mono = all(x > y for x, y in zip(d, d[1:]))
    ok = rep["bounded"] and mono
    verdict(6, ok, f"sup/early max {rep['ratio']:.4f}, rescaled deficits {', '.join(f'{x:.1e}' for x in d)}")
    assert ok


def test_criterion_07_gamma(verdict):
    a = math.sqrt(0.5)
    thr = breather_gamma_threshold(a, 0.0, 1.0)
    ln = gamma_integral(line(40001, half=200.0), 0.1, [10, 20, 40])
    sp = gamma_integral(generate_preset("shrink-rotator", s_max=800.0), 0.1, [100, 200, 400, 800])
    gr = classify_counterexample(PRESETS["grim-reaper"].spec, generate_preset("grim-reaper", s_max=30.0, s_min=30.0))
    er = classify_counterexample(PRESETS["expand-rotator"].spec,
                                 generate_preset("expand-rotator", s_max=120.0, s_min=120.0, ds=1e-3))
    line_err = abs(ln.window_values[-1] - math.sqrt(10 * math.pi))
    ok = thr == (1 - a * a) / 4 and abs(thr - 0.125) < 1e-15 and ln.verdict == "convergent" and line_err < 1e-4 \
        and sp.verdict == "divergent" and gr["gamma_ok"] and er["gamma_ok"]
    verdict(7, ok, f"threshold {thr:.15f}, line error {line_err:.1e}, spiral {sp.verdict}, "
                   f"grim reaper {gr['gamma_verdict']}, expanding spiral {er['gamma_verdict']}")
    assert ok


def test_criterion_08_harnack(verdict):
    gr = resample_by_arclength(generate_preset("grim-reaper"), 1024)
    hg = evolve(gr, 0.0, 1.0, SolverOptions(scheme="semi-implicit", dt=1e-3, save_every=1))
    q = [s.quantity for s in steady_harnack(hg, hg.times[500], "optimal") if s.valid]
    trans = max(map(abs, q))

    hc = circle_period(K=21, N=256)
    circ = max(abs(s.quantity - s.H**3) for s in steady_harnack(hc, 0.5, "zero"))

    prof = generate_preset("expander", s_max=3.0, s_min=3.0, ds=1e-2)
    he = analytic_history(PRESETS["expander"].spec, prof, np.linspace(0, 3, 31))
    spread = float(np.max(np.ptp(sqrt_t_H(he, t_origin=-1.0)[:, 2:-2], axis=0)))

    hp = analytic_history(PRESETS["expander"].spec, prof, np.linspace(0, 1, 41))
    sp = splice_expanding(hp, detect(hp.curve(0), hp.curve(-1)), 3)
    mono = all(sqrt_t_H_monotone(sp.history, i)["monotone"] for i in range(0, sp.history.n_points, 25))
    ok = trans < 5e-3 and circ < 1e-3 and spread < 1e-3 and mono
    verdict(8, ok, f"translator {trans:.1e}, circle vs kappa^3 {circ:.1e}, expander sqrt(t)H spread {spread:.1e}, "
                   f"spliced expander monotone {mono}")
    assert ok


def test_criterion_09_rotators(verdict):
    profiles = [
        (-1.0, generate_preset("yin-yang")),
        (-1.0, generate(SolitonSpec(0, -1.0, kind="rotator"), ((2.0, 0.0), math.pi / 2), 10.0, s_min=10.0)),
        (-1.0, generate(SolitonSpec(0, -1.0, kind="rotator"), ((0.5, 0.3), 1.0), 10.0, s_min=10.0)),
        (2.0, generate(SolitonSpec(0, 2.0, kind="rotator"), ((1.0, 0.0), 0.3), 10.0, s_min=10.0)),
    ]
    reps = [rotator_minimality_check(c, om) for om, c in profiles]
    yy = profiles[0][1]
    origin = reps[0]["argmin"] == yy.meta["start_index"] and reps[0]["min_radius"] == 0.0
    controls = [rotator_minimality_check(generate_preset(n), -1.0)
                for n in ("grim-reaper", "shrinker-circle", "expander", "expand-rotator")]
    controls.append(rotator_minimality_check(circle(1.5, 512), -1.0))
    ok = all(r["pass"] and r["tangency_defect"] < 1e-6 for r in reps) and origin \
        and all(not r["residual_ok"] and not r["pass"] for r in controls)
    worst = max(abs(r["H_at_argmin"]) / r["max_kappa"] for r in reps)
    verdict(9, ok, f"max |H|/max|kappa| at argmin {worst:.1e}, yin-yang origin {origin}, "
                   f"controls rejected {sum(not r['pass'] for r in controls)}/{len(controls)}")
    assert ok


def _pipeline(d):
    d.mkdir()
    run = [
        ["soliton", "--kind", "grim-reaper", "--smax", "4", "--smin", "4", "--output", "gr.json", "--report", "r1.json"],
        ["evolve", "--input", "gr.json", "--n", "256", "--t1", "0.2", "--save-every", "40",
         "--output", "gr.jsonl", "--report", "r2.json"],
        ["harnack", "--history", "gr.jsonl", "--quantity", "steady", "--v-mode", "optimal",
         "--csv", "hk.csv", "--report", "r3.json"],
        ["soliton", "--kind", "shrinker-circle", "--output", "c.json", "--report", "r4.json"],
        ["evolve", "--input", "c.json", "--n", "128", "--t1", "0.5", "--save-every", "20",
         "--output", "c.jsonl", "--report", "r5.json"],
        ["entropy-verify", "--history", "c.jsonl", "--center", "0,0", "--t0", "1", "--report", "r6.json"],
        ["breather-detect", "--history", "c.jsonl", "--report", "sim.json"],
        ["gamma-check", "--input", "gr.json", "--gamma", "0.1", "--windows", "1,2,4", "--alpha", "0.7071",
         "--t1", "0", "--t2", "1", "--report", "r7.json"],
        ["rotator-check", "--input", "gr.json", "--omega", "-1", "--report", "r8.json"],
    ]
    for argv in run:
        proc = subprocess.run([sys.executable, "-m", "csflab", *argv], cwd=d, capture_output=True)
        assert proc.returncode == 0, proc.stderr
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_criterion_10_determinism(tmp_path, verdict):
    a = _pipeline(tmp_path / "a")
    b = _pipeline(tmp_path / "b")
    same = [n for n in a if a[n] == b.get(n)]
    ok = a == b and len(a) == 14
    verdict(10, ok, f"{len(same)}/{len(a)} output files byte-identical across reruns")
    assert ok
