"""Lattice heat kernels: exact Fourier evaluation and large-time asymptotics."""

__version__ = "0.1.0"

from .exceptions import (ExtractionFailedError, NotAGeneratorError, ToleranceNotMetError,
                         UnsupportedCaseError)
from .expansion import (AsymptoticValue, KernelExpansion, RemainderProbe, continuous_kernel,
                        correction_profiles, expansion_for, f_profile, first_asymptotic, h_profile,
                        omega, remainder_probe, s_profile, second_asymptotic)
from .kernel_exact import (KernelField, QuadSpec, first_green, green_field, omega_integral,
                           second_green)
from .polyalg import GradedSeries, HomoPoly, Poly, expansion_polynomials
from .stencil import (Stencil, approximation_order, check_ellipticity, laplacian_1d, parse_stencil,
                      simple_walk, triangular)
from .walk import (CTRWSpec, Histogram, LatticeMap, compare, generator_from_stencil, pushforward,
                   simulate)

__all__ = [
    "__version__",
    "AsymptoticValue",
    "CTRWSpec",
    "ExtractionFailedError",
    "GradedSeries",
    "Histogram",
    "HomoPoly",
    "KernelExpansion",
    "KernelField",
    "LatticeMap",
    "NotAGeneratorError",
    "Poly",
    "QuadSpec",
    "RemainderProbe",
    "Stencil",
    "ToleranceNotMetError",
    "UnsupportedCaseError",
    "approximation_order",
    "check_ellipticity",
    "compare",
    "continuous_kernel",
    "correction_profiles",
    "expansion_for",
    "expansion_polynomials",
    "f_profile",
    "first_asymptotic",
    "first_green",
    "generator_from_stencil",
    "green_field",
    "h_profile",
    "laplacian_1d",
    "omega",
    "omega_integral",
    "parse_stencil",
    "pushforward",
    "remainder_probe",
    "s_profile",
    "second_asymptotic",
    "second_green",
    "simple_walk",
    "simulate",
    "triangular",
]
