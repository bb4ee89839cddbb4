"""Empirical Bayes estimation of allele frequencies with booster populations.

A target sample's allele counts are combined with a Beta prior whose
parameters depend on the allele frequencies observed in one or more related
(booster) samples.  The prior is fitted across all markers by maximising the
beta-binomial marginal likelihood, and each marker is then estimated by its
posterior mean.
"""

from .core import BetaParams, CountPair, log_beta, log_betabinom_pmf, posterior_mean, posterior_update, posterior_variance_proxy
from .data import DataError, MarkerDataset, MarkerRecord
from .estimate import EstimateRecord, estimate_all, estimate_eb, estimate_mle, estimate_pooled
from .evaluate import EvalReport, ProfileBin, bias_variance_profile, mse_vs_truth, mse_vs_validation
from .fit import FitResult, fit, fit_parametric, fit_spline, fit_windowed, neg_log_likelihood
from .priors import EB1Prior, EB2Prior, SplinePrior, WindowedPrior, affinity, eval_prior, local_affinity
from .simulate import SimConfig, draw_truth, sample_counts, sample_validation, simulate_dataset, split_dataset

__version__ = "0.1.0"
