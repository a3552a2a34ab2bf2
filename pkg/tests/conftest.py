import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from csflab.geometry import Curve

settings.register_profile(
    "csflab", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("csflab")


def circle(R=1.0, N=256, center=(0.0, 0.0), phase=0.0):
    th = phase + 2 * np.pi * np.arange(N) / N
    return Curve(np.c_[R * np.cos(th), R * np.sin(th)] + np.asarray(center, float), closed=True)


def ellipse(a=1.5, b=1.0, N=256):
    th = 2 * np.pi * np.arange(N) / N
    return Curve(np.c_[a * np.cos(th), b * np.sin(th)], closed=True)


def line(N=101, half=5.0, direction=(1.0, 0.0), through=(0.0, 0.0)):
    d = np.asarray(direction, float) / np.hypot(*direction)
    s = np.linspace(-half, half, N)
    return Curve(np.asarray(through, float) + s[:, None] * d, closed=False, truncated=True)


def grim_reaper_graph(N=1025, xmax=1.4):
    x = np.linspace(-xmax, xmax, N)
    return Curve(np.c_[x, -np.log(np.cos(x))], closed=False, truncated=True)


def random_convex(rng, N=512, modes=3, amp=0.08):
    """Closed star-shaped curve r(th) = 1 + small Fourier perturbation, convex for small amp."""
    th = 2 * np.pi * np.arange(N) / N
    r = np.ones(N)
    for k in range(2, modes + 2):
        r += amp / k**2 * (rng.normal() * np.cos(k * th) + rng.normal() * np.sin(k * th))
    return Curve(np.c_[r * np.cos(th), r * np.sin(th)], closed=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


SQRT_2PI_E = math.sqrt(2 * math.pi / math.e)
