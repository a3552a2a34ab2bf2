import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from csflab.entropy import (
    DivergentFunctionalError,
    backward_heat_kernel,
    breather_gamma_threshold,
    deficit,
    gamma_admissible,
    gamma_integral,
    huisken_functional,
    sup_entropy,
    verify_monotonicity,
)
from csflab.flow import SolverOptions, analytic_history, evolve
from csflab.geometry import Curve, rotation
from csflab.history import FlowHistory
from csflab.solitons import PRESETS, generate_preset

from conftest import SQRT_2PI_E, circle, line, random_convex


def circle_oracle(R, d, tau, integrand=lambda th: 1.0):
    """Weighted length of the circle of radius R centered at (d, 0), kernel center 0."""
    def f(th):
        r2 = (d + R * math.cos(th)) ** 2 + (R * math.sin(th)) ** 2
        return integrand(th) * R * math.exp(-r2 / (4 * tau)) / math.sqrt(4 * math.pi * tau)
    return quad(f, 0, 2 * math.pi, epsabs=1e-13, limit=200)[0]


class TestKernel:
    def test_normalization(self):
        assert backward_heat_kernel((1.0, 2.0), 0.0, (1.0, 2.0), 1 / (4 * math.pi)) == pytest.approx(1.0, abs=1e-15)

    def test_unit_exponent(self):
        tau = 0.7
        x = (math.sqrt(4 * tau), 0.0)
        assert backward_heat_kernel(x, 0.0, (0, 0), tau) == pytest.approx(math.exp(-1) / math.sqrt(4 * math.pi * tau), rel=1e-14)

    def test_kernel_scale_identity(self):
        alpha2 = 0.5
        tau0 = 1 / (1 / alpha2 - 1)
        assert tau0 == 1.0
        assert backward_heat_kernel((0, 0), 0.0, (0, 0), tau0) == pytest.approx((4 * math.pi) ** -0.5)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 10))
    def test_bounded_by_peak(self, x, y, tau):
        v = backward_heat_kernel((x, y), 0.0, (0.0, 0.0), tau)
        assert 0 <= v <= (4 * math.pi * tau) ** -0.5

    @pytest.mark.parametrize("t", [1.0, 2.0])
    def test_requires_past(self, t):
        with pytest.raises(ValueError):
            backward_heat_kernel((0, 0), t, (0, 0), 1.0)


class TestFunctional:
    def test_line_normalization(self):
        rep = huisken_functional(line(4096, half=12.0), 0.0, (0, 0), 1.0)
        assert abs(rep.value - 1.0) < 1e-6
        assert 0 <= rep.tail_estimate < 1e-12

    def test_shrinker_circle(self):
        rep = huisken_functional(circle(math.sqrt(2), 1024), 0.0, (0, 0), 1.0)
        assert abs(rep.value - SQRT_2PI_E) < 1e-4
        # the inscribed polygon is shorter than the circle by O(h^2)
        assert abs(rep.value - circle_oracle(math.sqrt(2), 0.0, 1.0)) < 1e-5
        assert rep.tail_estimate == 0.0 and rep.deficit == 0.0

    def test_far_circle_decays(self):
        vals = [huisken_functional(circle(math.sqrt(2), 512, center=(d, 0)), 0.0, (0, 0), 1.0).value
                for d in (0, 5, 10, 20)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-30
        assert vals[1] == pytest.approx(circle_oracle(math.sqrt(2), 5.0, 1.0), rel=1e-5)

    def test_short_line_has_tail(self):
        rep = huisken_functional(line(201, half=1.0), 0.0, (0, 0), 1.0)
        assert rep.tail_estimate > 0.1

    def test_json_fields(self):
        d = huisken_functional(circle(), 0.0, (0, 0), 1.0).to_json()
        assert set(d) == {"value", "deficit", "x0", "t0", "t", "tail_estimate"}
        json.dumps(d)

    @given(st.floats(-math.pi, math.pi), st.floats(-3, 3), st.floats(-3, 3))
    def test_rigid_motion_equivariance(self, th, vx, vy):
        rng = np.random.default_rng(7)
        c = random_convex(rng, 256)
        R = rotation(th)
        V = np.array([vx, vy])
        moved = Curve(c.points @ R.T + V, closed=True)
        c0 = np.array([0.2, -0.1])
        a = huisken_functional(c, 0.1, c0, 0.6).value
        b = huisken_functional(moved, 0.1, R @ c0 + V, 0.6).value
        assert abs(a - b) < 1e-10


class TestDeficit:
    def test_vanishes_on_shrinker(self):
        assert deficit(circle(math.sqrt(2), 1024), 0.0, (0, 0), 1.0) < 1e-6

    def test_wrong_scale(self):
        # kappa = 1/sqrt2 and <x, n> = -sqrt2 on the circle, so the integrand is a constant
        f2 = (1 / math.sqrt(2) - math.sqrt(2) / 4) ** 2
        oracle = circle_oracle(math.sqrt(2), 0.0, 2.0, lambda th: f2)
        val = deficit(circle(math.sqrt(2), 1024), 0.0, (0, 0), 2.0)
        assert val > 0.1
        assert val == pytest.approx(oracle, rel=1e-4)

    def test_line_through_center(self):
        assert deficit(line(301, direction=(1, 1), through=(0.3, 0.3)), 0.0, (0.3, 0.3), 1.0) < 1e-10


class TestMonotonicity:
    def test_shrinker_flow_is_critical(self):
        prof = circle(math.sqrt(2), 1024)
        h = analytic_history(PRESETS["shrinker-circle"].spec, prof, np.linspace(0, 0.4, 9))
        rep = verify_monotonicity(h, (0, 0), 1.0)
        assert abs(rep.lhs_drop) < 1e-6 and rep.integrated_deficit < 1e-6

    def test_single_slice(self):
        h = FlowHistory.from_curves([0.0], [circle()])
        rep = verify_monotonicity(h, (0, 0), 1.0)
        assert rep.lhs_drop == 0 and rep.integrated_deficit == 0

    def test_slices_after_t0(self):
        h = FlowHistory.from_curves([0.0, 1.0], [circle(), circle(0.5)])
        with pytest.raises(ValueError):
            verify_monotonicity(h, (0, 0), 1.0)

    def test_divergent_initial_functional(self):
        seg = line(101, half=1.0)
        h = FlowHistory.from_curves([0.0], [seg])
        with pytest.raises(DivergentFunctionalError):
            verify_monotonicity(h, (0, 0), 1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_random_convex_non_increasing(self, seed):
        rng = np.random.default_rng(1000 + seed)
        c = random_convex(rng, 512)
        x0 = rng.uniform(-0.3, 0.3, 2)
        h = evolve(c, 0.0, 0.05, SolverOptions(save_every=100))
        rep = verify_monotonicity(h, x0, 1.0)
        assert rep.max_increase <= 1e-6
        assert rep.lhs_drop >= -1e-6


class TestSupEntropy:
    def test_shrinker_circle(self):
        val, x0 = sup_entropy(circle(math.sqrt(2), 1024), 0.0, 1.0)
        assert np.hypot(*x0) < 1e-3
        assert abs(val - SQRT_2PI_E) < 1e-4

    def test_point_like(self):
        R = 1e-3
        val, _ = sup_entropy(circle(R, 256), 0.0, 1.0)
        c = circle(R, 256)
        assert abs(val - c.length / math.sqrt(4 * math.pi)) < 1e-6

    def test_translation(self, rng):
        c = random_convex(rng, 256)
        V = np.array([0.3, -1.1])
        v1, x1 = sup_entropy(c, 0.0, 0.5)
        v2, x2 = sup_entropy(c.with_points(c.points + V), 0.0, 0.5)
        assert abs(v1 - v2) < 1e-8
        assert np.allclose(x2 - x1, V, atol=1e-6)

    def test_at_least_centroid(self, rng):
        c = random_convex(rng, 256)
        val, _ = sup_entropy(c, 0.0, 0.3)
        assert val >= huisken_functional(c, 0.0, c.points.mean(axis=0), 0.3).value

    def test_open_rejected(self):
        with pytest.raises(ValueError):
            sup_entropy(line(), 0.0, 1.0)


class TestGamma:
    def test_line(self):
        rep = gamma_integral(line(40001, half=200.0), 0.1, [10, 20, 40])
        assert rep.verdict == "convergent"
        assert abs(rep.window_values[-1] - math.sqrt(10 * math.pi)) < 1e-4
        assert all(b >= a for a, b in zip(rep.window_values, rep.window_values[1:]))

    def test_shrinking_spiral_diverges(self):
        sp = generate_preset("shrink-rotator", s_max=800.0)
        rep = gamma_integral(sp, 0.1, [100, 200, 400, 800])
        assert rep.verdict == "divergent"
        density = np.array(rep.increments) / np.diff([0, 100, 200, 400, 800])
        assert density.max() / density.min() < 1.1 and density.min() > 0.1

    def test_closed_curve(self):
        c = circle(math.sqrt(2), 512)
        rep = gamma_integral(c, 0.1, [1.0, 2.0, 4.0, 8.0])
        assert rep.verdict == "convergent"
        total = float(np.dot(np.exp(-0.1 * 2.0) * np.ones(512), np.full(512, c.length / 512)))
        assert rep.window_values[-1] == pytest.approx(total, rel=1e-12)
        assert gamma_integral(c, 0.1, [1.0, 2.0]).verdict == "inconclusive"

    def test_empty(self):
        rep = gamma_integral(line(), 0.1, [])
        assert rep.window_values == [] and rep.verdict == "inconclusive"

    def test_bad_input(self):
        with pytest.raises(ValueError):
            gamma_integral(line(), 0.0, [1])
        with pytest.raises(ValueError):
            gamma_integral(line(), 0.1, [2, 1])

    def test_threshold(self):
        assert breather_gamma_threshold(math.sqrt(0.5), 0.0, 1.0) == pytest.approx(1 / 8, abs=1e-15)
        assert breather_gamma_threshold(math.sqrt(0.5), 0.0, 2.0) == pytest.approx(1 / 16, abs=1e-15)
        assert breather_gamma_threshold(1 - 1e-9, 0.0, 1.0) < 1e-8
        for a in (1.0, 1.3):
            with pytest.raises(ValueError):
                breather_gamma_threshold(a, 0.0, 1.0)

    def test_admissible_boundary(self):
        assert gamma_admissible(0.1, 0.125)
        assert not gamma_admissible(0.125, 0.125)
        assert gamma_admissible(0.125, 0.125, no_translation=True)
