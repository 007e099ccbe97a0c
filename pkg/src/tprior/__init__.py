"""Objective-Bayes inference for the degrees of freedom of the Student t-distribution."""

from tprior.errors import DegenerateDataError, DomainError, NumericalError, TPriorError
from tprior.priors import NuDomain, PriorSpec, log_prior_joint, log_prior_nu
from tprior.posterior import Dataset, DiscreteNuPosterior, Summary, grid_posterior, summarize
from tprior.gibbs import ChainDraws, GibbsConfig, run_chain

__version__ = "0.1.0"

__all__ = [
    "ChainDraws",
    "Dataset",
    "DegenerateDataError",
    "DiscreteNuPosterior",
    "DomainError",
    "GibbsConfig",
    "NuDomain",
    "NumericalError",
    "PriorSpec",
    "Summary",
    "TPriorError",
    "grid_posterior",
    "log_prior_joint",
    "log_prior_nu",
    "run_chain",
    "summarize",
]
