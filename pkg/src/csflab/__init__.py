"""Numerical laboratory for curve shortening flow in the plane.

Submodules: :mod:`geometry` (curves, curvature, similarities),
:mod:`history` (flow histories and file formats), :mod:`flow` (solvers),
:mod:`entropy` (Gaussian-weighted functionals), :mod:`solitons`
(self-similar profiles), :mod:`breather` (detection and splicing),
:mod:`harnack` (Harnack quantities) and :mod:`cli`.
"""

from .geometry import (
    Curve,
    InvalidCurveError,
    Similarity,
    apply_similarity,
    compose,
    hausdorff_distance,
    inverse,
    measure_weights,
    resample_by_arclength,
    rotation,
    signed_curvature,
)
from .history import FlowHistory, FormatError, read_curve, read_history, write_curve, write_history
from .flow import SolverOptions, StepError, analytic_selfsimilar_flow, evolve, step_csf, step_drifted
from .entropy import (
    backward_heat_kernel,
    breather_gamma_threshold,
    deficit,
    gamma_integral,
    huisken_functional,
    sup_entropy,
    verify_monotonicity,
)
from .solitons import PRESETS, SolitonSpec, generate, generate_preset, residual
from .breather import (
    SpliceResult,
    detect,
    junction_smoothness,
    orbit_boundedness,
    rescale_sequence,
    splice_expanding,
    splice_shrinking,
    splice_steady,
)
from .harnack import (
    HarnackSample,
    expanding_harnack,
    material_dH_dt,
    rotator_minimality_check,
    sqrt_t_H_monotone,
    steady_harnack,
)

__version__ = "0.1.0"
