"""A convex body of revolution that is not centrally symmetric, paired with an
origin-symmetric body having the same maximal hyperplane sections."""

from .construction import (
    VerificationReport,
    build_K,
    build_L,
    central_symmetry_defect,
    critical_epsilon_K,
    curvature_profile,
    verify_counterexample,
)
from .core import BodyOfRevolution, GegenbauerSeries, RadialProfile, fit_gegenbauer, unit_ball
from .radon import radon_inverse_fourier, radon_inverse_spectral, spherical_radon
from .sections import inner_section_function, klee_profile, parallel_section_area

__version__ = "0.1.0"

__all__ = [
    "BodyOfRevolution",
    "GegenbauerSeries",
    "RadialProfile",
    "VerificationReport",
    "build_K",
    "build_L",
    "central_symmetry_defect",
    "critical_epsilon_K",
    "curvature_profile",
    "fit_gegenbauer",
    "inner_section_function",
    "klee_profile",
    "parallel_section_area",
    "radon_inverse_fourier",
    "radon_inverse_spectral",
    "spherical_radon",
    "unit_ball",
    "verify_counterexample",
]
