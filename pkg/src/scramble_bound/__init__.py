"""Numerical checks of scrambling-time lower bounds from spectral data."""
from .bound import (
    ELL_OPT,
    BoundReport,
    EnvelopeParams,
    StripInterval,
    TriangleDOS,
    default_interval,
    envelope,
    exceptional_set_measure,
    lambda_ell,
    lambda_thermo,
    lambda_tilde,
    optimize_interval,
    ts_entropy_lower_bound,
    ts_lower_bound,
    z_max,
)
from .continuum import ContinuumProfile, QuadratureSpec, self_convolution
from .dynamics import FiniteSystem, SignalTrace, TimeGrid, return_probability, sweep
from .kernels import BACKEND
from .operators import (
    DensityOperator,
    RegularizedDOS,
    SubsystemSplit,
    maximally_mixed,
    pure_state,
    sample_gue,
    thermal_state,
)

__version__ = "0.1.0"
