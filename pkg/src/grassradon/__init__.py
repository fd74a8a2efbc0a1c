"""k-plane Radon transforms, their duals, and numerical comparison experiments.

Submodules: :mod:`geometry` (subspaces, Grassmann quadrature), :mod:`fields`
(test functions), :mod:`transforms` (forward/dual transforms and integrals),
:mod:`analysis` (mapping-property diagnostics, admissible class),
:mod:`experiments` (inequality harnesses) and :mod:`cli`.
"""

from .analysis import (
    AdmissibleFunction,
    CapMeasureResult,
    admissible_distance,
    admissible_from_density,
    cap_measure,
    decay_exponent,
    fourier_slice_residual,
    gaussian_admissible,
    gaussian_family,
    property_H_residual,
)
from .errors import (
    ConfigError,
    GrassRadonError,
    InadmissibleError,
    NoEstimateError,
    ParameterError,
    UndefinedSlopeError,
    UnderdeterminedFitError,
    UnsupportedFieldError,
    UnsupportedInputError,
)
from .experiments import (
    EXPERIMENTS,
    CheckGrid,
    ExperimentReport,
    SearchConfig,
    search_counterexample,
    solmon_ratio,
    verify_affirmative_chain,
    verify_general_slicing,
    verify_p1_monotonicity,
    verify_pinched_gaussian_slicing,
)
from .fields import (
    DiscreteMeasure,
    GrassmannFunction,
    SpatialField,
    bump_field,
    bump_z,
    constant_function,
    field_fourier,
    gaussian_field,
    gaussian_radon_closed_form,
    gaussian_z,
    measure_fourier,
    radial_function,
    sum_fields,
)
from .geometry import (
    GrassmannQuadrature,
    Subspace,
    grassmann_grid,
    grassmann_mass,
    haar_sample,
    project_complement,
    sphere_volume,
)
from .transforms import (
    PlaneQuadratureSpec,
    dual_radon,
    dual_radon_radial,
    grassmann_lp_norm,
    pairing,
    pushforward_measure,
    radon,
    radon_function,
    set_threads,
    slice_fourier,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
