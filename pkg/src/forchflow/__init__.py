"""Generalized Forchheimer flows of compressible fluids: solver and a-priori
estimate toolkit."""
from .constitutive import (ConstitutiveError, ForchheimerLaw, RootSearchError, eval_dg,
                           eval_g, eval_H, eval_K, fit_K_bounds, inverse_s)
from .exponents import (AdmissibilityError, AssumptionError, ExponentProfile, build_profile,
                        exponent_report, gradsec_profile, nu_family, profile_for,
                        lebesgue_bound)
from .fluid import (Drift, FluidModel, ProblemData, constant_data, derive_parameters,
                    gravity_drift, validate_assumptions, volumetric_flux_data, zero_data,
                    zero_drift)
from .moser import (build_schedule, direct_recursion, genn_bound, limit_products,
                    linf_bound, max_contiguous_product)
from .solver import Grid, ProblemSpec, Solver, SolverConfig, SolverError, run, simulate
from .verification import EstimateReport, Verdict, estimate_report, manufactured_case

__version__ = "0.1.0"

__all__ = [
    "ConstitutiveError", "ForchheimerLaw", "RootSearchError", "eval_dg", "eval_g", "eval_H",
    "eval_K", "fit_K_bounds", "inverse_s",
    "AdmissibilityError", "AssumptionError", "ExponentProfile", "build_profile",
    "exponent_report", "gradsec_profile", "nu_family", "profile_for", "lebesgue_bound",
    "Drift", "FluidModel", "ProblemData", "constant_data", "derive_parameters",
    "gravity_drift", "validate_assumptions", "volumetric_flux_data", "zero_data",
    "zero_drift",
    "build_schedule", "direct_recursion", "genn_bound", "limit_products", "linf_bound",
    "max_contiguous_product",
    "Grid", "ProblemSpec", "Solver", "SolverConfig", "SolverError", "run", "simulate",
    "EstimateReport", "Verdict", "estimate_report", "manufactured_case",
]
