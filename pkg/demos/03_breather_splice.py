"""From one period of a shrinking circle to an ancient solution.

One unit of time of the flow of a radius-2 circle is a breather: the last
slice is the first one scaled by alpha = 1/sqrt(2).  Detecting that
similarity and chaining rescaled copies backwards in time produces the
ancient shrinking circle of radius sqrt(2 (tau + 1)).  Rescaling the copies
by the junction times drives them toward the self-shrinker, which shows up
as a shrinking monotonicity deficit.
"""

import numpy as np

from csflab import Curve, SolverOptions, detect, evolve, splice_shrinking
from csflab.breather import junction_smoothness, rescale_sequence, rescaled_deficit, splice_entropy_bound

N = 256
th = 2 * np.pi * np.arange(N) / N
period = evolve(Curve(2.0 * np.c_[np.cos(th), np.sin(th)], closed=True), 0.0, 1.0,
                SolverOptions(dt=1e-4, save_every=10))
s = detect(period.curve(0), period.curve(-1))
print(f"detected alpha={s.alpha:.6f} angle={s.angle:.2e} |V|={np.hypot(*s.V):.1e} shift={s.shift} "
      f"residual={s.residual:.1e}")

splice = splice_shrinking(period, s, 6)
r = np.hypot(*splice.history.points.transpose(2, 0, 1)).mean(axis=1)
err = np.max(np.abs(r - np.sqrt(2 * (splice.history.times + 1))))
print("junction times:", [round(t, 6) for t in splice.junction_times])
print(f"largest deviation from sqrt(2(tau+1)): {err:.2e}")
for row in junction_smoothness(splice, 1):
    print(f"  junction tau={row['t']:.1f}: velocity mismatch {row['discrepancy']:.2e} (step {row['expected_scale']:.1e})")

bound = splice_entropy_bound(splice)
print(f"weighted length along the splice: max {bound['max']:.5f}, early max {bound['reference_max']:.5f}")
for j in range(1, 6):
    rep = rescale_sequence(splice, j)
    d = rescaled_deficit(rep.history, 1.1, 1.9)
    print(f"  rescaled copy j={j}: scale factor {rep.scale_factor:.6f}, deficit {d:.3e}")
