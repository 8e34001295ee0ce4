"""Multiband quality-of-transmission engine for Raman-amplified WDM links.

Pipeline: solve the exact per-span power evolution (coupled Raman power
equations, backward pumps as a BVP), fit two-exponential field-loss profiles
per channel and direction, evaluate per-channel NLI in closed form, and
assemble per-channel GSNR from NLI plus measured ASE.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, FitError, RamanlinkError,
                     SingularityError)
from .link_model import (AseSpec, ChannelSpec, Curve, LinkDescription, Options,
                         PumpSpec, SpanSpec, ValidatedLink, parse_link_config,
                         serialize_link_config, validate_link)
from .nli import (CorrectionModel, GsnrReport, NliBreakdown, accumulate_link,
                  correction_rho, effective_beta2, gamma_nm, gsnr,
                  gsnr_from_measurement, nli_span, psi, series_order)
from .pipeline import LinkReport, run_pipeline
from .profile_fit import (FittedLossProfile, SpanProfiles, fit_chain,
                          fit_profile, fit_span, ls_alpha_given_sigma,
                          normalized_profile)
from .raman_solver import (PowerEvolution, SpanSolution, SpanWaves,
                           chain_spans, raman_rhs, scale_raman_gain,
                           solve_power_evolution)

__all__ = [
    "AseSpec", "ChannelSpec", "ConfigError", "ConvergenceError",
    "CorrectionModel", "Curve", "FitError", "FittedLossProfile", "GsnrReport",
    "LinkDescription", "LinkReport", "NliBreakdown", "Options",
    "PowerEvolution", "PumpSpec", "RamanlinkError", "SingularityError",
    "SpanProfiles", "SpanSolution", "SpanSpec", "SpanWaves", "ValidatedLink",
    "accumulate_link", "chain_spans", "correction_rho", "effective_beta2",
    "fit_chain", "fit_profile", "fit_span", "gamma_nm", "gsnr",
    "gsnr_from_measurement", "ls_alpha_given_sigma", "nli_span",
    "normalized_profile", "parse_link_config", "psi", "raman_rhs",
    "run_pipeline", "scale_raman_gain", "serialize_link_config",
    "series_order", "solve_power_evolution", "validate_link",
]
