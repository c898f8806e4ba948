"""nlslab: pseudospectral Schrodinger flows with localization experiments."""

from .core import (
    Field,
    Grid,
    SobolevOrder,
    critical_order,
    field_from_array,
    gradient,
    grad_norm_l2,
    make_grid,
    norm_hs,
    norm_lp,
    translate,
    zero_field,
)
from .regions import (
    Ball,
    Complement,
    Dilation,
    HalfSpace,
    NoAnalyticDistance,
    cutoff_build,
    region_distance,
)
from .dynamics import (
    BlowupSignal,
    CoupledParams,
    NLSParams,
    SolveConfig,
    Termination,
    Trajectory,
    energy,
    evolve,
    evolve_coupled,
    evolve_harmonic,
    galilean_boost,
    mass,
    step_harmonic_nls,
    step_linear,
    step_nls,
)

__version__ = "0.1.0"
