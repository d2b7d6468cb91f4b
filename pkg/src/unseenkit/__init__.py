"""Predict the number of hitherto-unseen features that further samples will
reveal, under the stable-Beta scaled process prior and classical baselines."""

from ._backend import BACKEND
from .baselines import (
    FreqSpectrum,
    SBBParams,
    good_toulmin,
    jackknife,
    jackknife_richness,
    sbb_efpf_log,
    sbb_posterior_unseen,
    sbb_posterior_unseen_rare,
    sbb_prior_predictive,
)
from .bench import BenchmarkConfig, accuracy, coverage, coverage_study, run_benchmark
from .condiment import CondimentConfig, condiment_posterior_unseen, psi, sbd_posterior_unseen
from .distributions import GammaLaw, NegativeBinomial, Poisson
from .ebayes import FitConfig, FitResult, fit_sbb, fit_sbsp, minimize
from .errors import (
    ApproximationWarning,
    DataError,
    DomainError,
    InsufficientSignalError,
    NumericalError,
    SamplerOverflowError,
    TruncationBudgetExceeded,
    UnseenKitError,
)
from .featureset import (
    BinaryFeatureMatrix,
    FeatureCounts,
    ZipfConfig,
    counts,
    parse_sparse,
    read_sparse,
    subsample,
    write_sparse,
    zipf_generate,
)
from .params import read_params, write_params
from .sbsp import (
    SBSPParams,
    asymptotic_limit,
    efpf_log,
    latent_jump_posterior,
    posterior_unseen,
    posterior_unseen_rare,
    prior_predictive,
    sample_dataset,
)
from .specfun import beta_sum, gamma_sum, rho

__version__ = "0.1.0"
