"""Harnack quantities on translators, shrinking circles and expanders.

The grim reaper translates, so the steady Harnack expression with the
optimal tangential field vanishes along its flow.  On a shrinking circle
it equals kappa^3.  Along an expander, sqrt(t) H is constant at every
point once time is measured from the expander's origin.
"""

import numpy as np

from csflab import SolverOptions, evolve, resample_by_arclength
from csflab.flow import analytic_history
from csflab.harnack import rotator_minimality_check, sqrt_t_H, steady_harnack
from csflab.solitons import PRESETS, generate_preset

gr = resample_by_arclength(generate_preset("grim-reaper"), 1024)
h = evolve(gr, 0.0, 1.0, SolverOptions(scheme="semi-implicit", dt=1e-3, save_every=1))
q = [smp.quantity for smp in steady_harnack(h, 0.5, "optimal") if smp.valid]
print(f"grim reaper, optimal V, t=0.5: max |quantity| = {max(map(abs, q)):.2e} over {len(q)} points")

prof = generate_preset("expander", s_max=3.0, s_min=3.0, ds=1e-2)
he = analytic_history(PRESETS["expander"].spec, prof, np.linspace(0, 3, 31))
series = sqrt_t_H(he, t_origin=-1.0)
print(f"expander: spread of sqrt(t) H over t in [1, 4], worst point: {np.ptp(series[:, 2:-2], axis=0).max():.1e}")

for name, omega in [("yin-yang", -1.0), ("grim-reaper", -1.0)]:
    rep = rotator_minimality_check(generate_preset(name), omega)
    print(f"{name}: closest point radius {rep['min_radius']:.3f}, H there {rep['H_at_argmin']:.2e}, "
          f"rotator residual {rep['residual']:.1e}, pass={rep['pass']}")
