"""Formulation, diagnostics, and regularization of time-dependent inverse problems.

The package discretizes spaces of time-dependent spatial vectors with mixed
space-time norms, composes matrix-free forward maps out of time-indexed
operator families and causal accumulation kernels, exposes ill-posedness
probes (frozen-time and stacked spectra, integrability tails, translation
moduli), and solves the resulting systems with tracking Tikhonov, uniform
Tikhonov, and Kaczmarz-type iterations.  The `dynreg` command line drives
the built-in benchmark problems from sectioned key=value configs.
"""

from .bochner import (
    BochnerFunction,
    SpatialGrid,
    TimeGrid,
    bochner_inner,
    bochner_norm,
    holder_pairing,
    interpolate_tracked,
    read_csv,
    spatial_norm,
    translate,
    write_csv,
)
from .diagnostics import (
    SpectrumReport,
    assemble_dense,
    integrability_tail,
    singular_values,
    stacked_spectrum,
    temporal_spectrum,
    translation_modulus,
)
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    DomainError,
    DynregError,
    InvalidInputError,
    InvalidParameterError,
    ResourceLimitError,
    UnsupportedGeometryError,
    UnsupportedKindError,
)
from .operators import (
    ACCUMULATE_THEN_OBSERVE,
    KINDS,
    OBSERVE_THEN_ACCUMULATE,
    POINTWISE,
    DynamicForward,
    OperatorFamily,
    apply_adjoint,
    apply_forward,
    compose,
    identity_family,
    load_kernel_csv,
    load_pattern_csv,
    make_causal_kernel,
    make_gaussian_smoothing,
    make_scaling_family,
    make_subsample_observer,
    rotating_window_pattern,
)
from .problems import (
    BUILTIN_PROBLEMS,
    NoiseSpec,
    ProblemInstance,
    add_noise,
    export_instance,
    make_dct_analogue,
    make_identity_problem,
    make_mpi_analogue,
    make_nonuniform_example,
)
from .solvers import (
    KaczmarzConfig,
    LinearSubproblem,
    ParameterRule,
    SolveReport,
    TikhonovConfig,
    choose_alpha,
    kaczmarz_multi_direction,
    landweber_kaczmarz,
    tikhonov_temporal,
    tikhonov_uniform,
    time_subproblems,
)

__version__ = "0.1.0"

__all__ = [
    "ACCUMULATE_THEN_OBSERVE",
    "BUILTIN_PROBLEMS",
    "BochnerFunction",
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "DomainError",
    "DynamicForward",
    "DynregError",
    "InvalidInputError",
    "InvalidParameterError",
    "KINDS",
    "KaczmarzConfig",
    "LinearSubproblem",
    "NoiseSpec",
    "OBSERVE_THEN_ACCUMULATE",
    "OperatorFamily",
    "POINTWISE",
    "ParameterRule",
    "ProblemInstance",
    "ResourceLimitError",
    "SolveReport",
    "SpatialGrid",
    "SpectrumReport",
    "TikhonovConfig",
    "TimeGrid",
    "UnsupportedGeometryError",
    "UnsupportedKindError",
    "add_noise",
    "apply_adjoint",
    "apply_forward",
    "assemble_dense",
    "bochner_inner",
    "bochner_norm",
    "choose_alpha",
    "compose",
    "export_instance",
    "holder_pairing",
    "identity_family",
    "integrability_tail",
    "interpolate_tracked",
    "kaczmarz_multi_direction",
    "landweber_kaczmarz",
    "load_kernel_csv",
    "load_pattern_csv",
    "make_causal_kernel",
    "make_dct_analogue",
    "make_gaussian_smoothing",
    "make_identity_problem",
    "make_mpi_analogue",
    "make_nonuniform_example",
    "make_scaling_family",
    "make_subsample_observer",
    "read_csv",
    "rotating_window_pattern",
    "singular_values",
    "spatial_norm",
    "stacked_spectrum",
    "temporal_spectrum",
    "tikhonov_temporal",
    "tikhonov_uniform",
    "time_subproblems",
    "translate",
    "translation_modulus",
    "write_csv",
]
