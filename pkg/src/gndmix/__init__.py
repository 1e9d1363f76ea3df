"""Maximum likelihood fitting of generalized normal mixtures with ECM and ECMs."""

from .em import (
    ComponentCollapse,
    FitConfig,
    FitError,
    FitResult,
    InitializationError,
    e_step,
    fit,
    fit_multistart,
    kmeans_init,
)
from .estimator import GNDMixture
from .gnd import GndParams, gnd_kurtosis, gnd_log_pdf, gnd_sample, gnd_variance
from .mixture import MgndModel, log_likelihood, mixture_log_pdf, mixture_moments, responsibilities
from .selection import aic, bic, compare_models, describe, log_returns
from .simulation import ScenarioSpec, SimReport, builtin_scenarios, run_scenario, sample_mixture

__version__ = "0.1.0"

__all__ = [
    "ComponentCollapse",
    "FitConfig",
    "FitError",
    "FitResult",
    "GNDMixture",
    "GndParams",
    "InitializationError",
    "MgndModel",
    "ScenarioSpec",
    "SimReport",
    "aic",
    "bic",
    "builtin_scenarios",
    "compare_models",
    "describe",
    "e_step",
    "fit",
    "fit_multistart",
    "gnd_kurtosis",
    "gnd_log_pdf",
    "gnd_sample",
    "gnd_variance",
    "kmeans_init",
    "log_likelihood",
    "log_returns",
    "mixture_log_pdf",
    "mixture_moments",
    "responsibilities",
    "run_scenario",
    "sample_mixture",
]
