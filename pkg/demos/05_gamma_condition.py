"""The Gaussian decay condition on a breather's time slice.

A shrinking breather with scale alpha over a period t2 - t1 can only be
ruled out if its slice has finite e^{-gamma |x|^2}-weighted length for some
gamma below (1 - alpha^2) / (4 (t2 - t1)).  The rotating shrinker spiral
accumulates on a circle, so its weighted length grows without bound.
"""

import math

from csflab.entropy import breather_gamma_threshold, gamma_integral
from csflab.solitons import generate_preset

print(f"threshold for alpha^2 = 1/2 over a unit period: {breather_gamma_threshold(math.sqrt(0.5), 0, 1):.5f}")

spiral = generate_preset("shrink-rotator", s_max=800.0)
rep = gamma_integral(spiral, 0.1, [100, 200, 400, 800])
widths = [100, 100, 200, 400]
for c, v, inc, w in zip(rep.windows, rep.window_values, rep.increments, widths):
    print(f"  spiral window {c:5.0f}: partial {v:9.3f}  increment per unit length {inc / w:.4f}")
print("verdict:", rep.verdict)

gr = generate_preset("grim-reaper", s_max=30.0, s_min=30.0)
rep = gamma_integral(gr, 0.1, [3.75, 7.5, 15, 30])
print(f"grim reaper: partials {[round(v, 8) for v in rep.window_values]}, verdict {rep.verdict}")
