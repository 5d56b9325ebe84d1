"""Carleson-measure criteria for admissibility of diagonal control systems."""

from .errors import CarlesonError, InputError, NumericalError, ParseError
from .measures import (
    CarlesonReport,
    DiscreteMeasure,
    HalfPlaneAtom,
    Interval,
    MaximalFunction,
    geometric_constant,
    geometric_constant_grid,
    maximal_function_at,
    tent_contains,
    tent_measure,
)
from .kernels import HalfPlanePoint, cp_constant, repkernel_hp_norm, repkernel_lq_mu_norm, rkt_sup
from .systems import (
    DiagonalSystem,
    Indicator,
    StepFunction,
    TruncatedExponential,
    output_norm_exponential,
    poisson_measure,
    reciprocal_measure,
    sandwich_check,
    sandwich_check_dilated,
)
from .serialization import parse_spec, serialize

__version__ = "0.1.0"
