"""Robust Bayesian bounds for random-effects meta-analysis."""

from ._core import (
    Dataset,
    InputError,
    NumericalError,
    PriorSet,
    __version__,
    bound,
    build_prior_set,
    ess_mcmc,
    grid_bound,
    lemma_integrals,
    posterior_mean_mu,
    reweight,
    run_chain,
    set_max_threads,
)

__all__ = [
    "Dataset",
    "InputError",
    "NumericalError",
    "PriorSet",
    "__version__",
    "bound",
    "build_prior_set",
    "ess_mcmc",
    "grid_bound",
    "lemma_integrals",
    "posterior_mean_mu",
    "reweight",
    "run_chain",
    "set_max_threads",
]
