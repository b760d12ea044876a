"""Numerical verification lab for Wegner estimates and IDS continuity.

Submodules:

measures     single-site laws and their modulus ``s(eps)``
operators    finite-box random Schroedinger operators (with magnetic field)
spectra      eigensolves, counting functions, spectral projectors
averaging    certified spectral-averaging sums and resolvent expectations
tracebounds  trace-norm decay, cutoff comparisons, iterated traces
experiments  seeded ensemble runners and result tables
cli          the ``wegnerlab`` command
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError, DegenerateFit, DimensionExceeded, DimensionMismatch, EmptyProjector,
    FluxNotQuantized, InvalidMeasure, NoAdmissibleFlux, NonPositiveData, NotAProjector,
    RealizationError, ShiftTooSmall, VectorsNotRetained, WegnerLabError,
)
from .measures import (  # noqa: E402
    Atomic, CantorMeasure, PiecewiseLinearDensity, ToeplitzCorrelated, UniformDensity,
    modulus_curve, modulus_s,
)
from .operators import BoxSpec, OperatorSpec, assemble_anderson, build_background  # noqa: E402
from .spectra import counting_function, eigensolve, interval_trace, ucp_constant  # noqa: E402
from .averaging import (  # noqa: E402
    AveragingInstance, averaging_bound, averaging_sum, dissipative_bound, dissipative_sum,
    ell_bound, ell_value,
)
from .experiments import ExperimentConfig, ResultTable, run_experiment  # noqa: E402
