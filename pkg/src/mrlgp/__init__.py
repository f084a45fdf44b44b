"""Gaussian-process regression with Markov region links between change-points.

Per-region stationary kernels are joined at change-points through a shared
boundary covariance.  On top of that the package provides bias and drift
fault removal, windowed-artifact separation, Monte-Carlo hyperparameter
marginalization, synthetic scenarios and a CLI (``mrl-gp``).
"""

__version__ = "0.1.0"

from .exceptions import (ConditioningError, DegenerateModelError, InferenceError, MrlGpError,
                         NumericalError, ParameterError, UnsupportedOperationError)
from .faults import (FaultPrior, FaultSpec, OnlineConfig, default_fault_prior, online_filter,
                     remove_fault)
from .gp import PosteriorEstimate, TimeSeries, dual_posterior, log_evidence, posterior, sample_prior
from .hyper import Fixed, LogUniform, Uniform, marginal_predict, mc_marginalize
from .kernels import KernelSpec, constant, gibbs, gram, squared_exponential, white_noise, zero
from .mrl import RegionModel, assemble_global, chain_regions, mrl_eval
from .separation import SeparationModel, apportion, separate

__all__ = [
    "ConditioningError", "DegenerateModelError", "InferenceError", "MrlGpError", "NumericalError",
    "ParameterError", "UnsupportedOperationError", "FaultPrior", "FaultSpec", "OnlineConfig",
    "default_fault_prior", "online_filter", "remove_fault", "PosteriorEstimate", "TimeSeries",
    "dual_posterior", "log_evidence", "posterior", "sample_prior", "Fixed", "LogUniform",
    "Uniform", "marginal_predict", "mc_marginalize", "KernelSpec", "constant", "gibbs", "gram",
    "squared_exponential", "white_noise", "zero", "RegionModel", "assemble_global",
    "chain_regions", "mrl_eval", "SeparationModel", "apportion", "separate",
]
