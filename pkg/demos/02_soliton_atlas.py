"""Profiles of the self-similar flows and which hypotheses they meet.

All six presets integrate one profile equation with different
(lambda, omega, e).  For each we report the discrete soliton residual and
the classification used when looking for counterexamples: convexity, the
Gaussian-weighted length at gamma = 0.1, and whether |x| stays bounded.
"""

from csflab.solitons import PRESETS, classify_counterexample, generate_preset

# longer windows where the Gaussian tail needs room to decay
longer = {"grim-reaper": dict(s_max=30.0, s_min=30.0),
          "expand-rotator": dict(s_max=120.0, s_min=120.0)}

print(f"{'preset':16} {'lambda':>6} {'omega':>6} {'points':>7} {'residual':>9}  convex  gamma     bounded")
for name, p in PRESETS.items():
    curve = generate_preset(name, **longer.get(name, {}))
    rep = classify_counterexample(p.spec, curve, gamma=0.1)
    print(f"{name:16} {p.spec.lam:6.2f} {p.spec.omega:6.2f} {len(curve):7d} {rep['residual']:9.1e}  "
          f"{str(rep['weakly_convex']):6}  {rep['gamma_verdict']:9} {rep['bounded_orbit']}")
