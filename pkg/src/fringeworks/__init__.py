"""Decoherence and fringe-visibility toolkit for two-slit matter-wave interferometry."""

__version__ = "0.1.0"

from .analysis import (
    ExperimentalDataset,
    ExtremaList,
    VisibilityTrace,
    find_extrema,
    fringe_visibility,
    visibility_theoretical,
    visibility_trace,
)
from .bessel import bessel_j0
from .config import RunConfig, load_config, parse_config
from .dynamics import (
    AnsatzState,
    Trajectory,
    coefficient_derivatives,
    free_gaussian_reference,
    initial_state,
    integrate,
    master_equation_residual,
)
from .environment import (
    DerivedCoefficients,
    EnvironmentSpec,
    derive_coefficients,
    positivity_transient,
)
from .fitting import FitResult, fit_parameter
from .geometry import ExperimentGeometry, GeometryError, validate_geometry
from .overlap import (
    Overlap,
    composite_overlap,
    decoherence_time,
    dephasing_average_oracle,
    dephasing_factor,
    overlap_at,
    overlap_qbm,
    overlap_qbm_model,
    overlap_scattering,
    parameter_bound,
)
from .pattern import (
    IntensityProfile,
    coefficients_from_experiment,
    density_matrix,
    farfield_intensity,
    farfield_profile,
    intensity,
    intensity_profile,
)
from .units import UnitSystem

__all__ = [
    "AnsatzState",
    "DerivedCoefficients",
    "EnvironmentSpec",
    "ExperimentGeometry",
    "ExperimentalDataset",
    "ExtremaList",
    "FitResult",
    "GeometryError",
    "IntensityProfile",
    "Overlap",
    "RunConfig",
    "Trajectory",
    "UnitSystem",
    "VisibilityTrace",
    "bessel_j0",
    "coefficient_derivatives",
    "coefficients_from_experiment",
    "composite_overlap",
    "decoherence_time",
    "density_matrix",
    "dephasing_average_oracle",
    "dephasing_factor",
    "derive_coefficients",
    "farfield_intensity",
    "farfield_profile",
    "find_extrema",
    "fit_parameter",
    "free_gaussian_reference",
    "fringe_visibility",
    "initial_state",
    "integrate",
    "intensity",
    "intensity_profile",
    "load_config",
    "master_equation_residual",
    "overlap_at",
    "overlap_qbm",
    "overlap_qbm_model",
    "overlap_scattering",
    "parameter_bound",
    "parse_config",
    "positivity_transient",
    "validate_geometry",
    "visibility_theoretical",
    "visibility_trace",
]
