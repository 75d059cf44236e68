"""R2D2 shrinkage prior for right-censored Weibull regression."""

from .errors import *  # noqa: F401,F403
from .model import (SurvivalDataset, WeibullParams, log_likelihood, read_survival_csv,
                    standardize, weibull_mle_theta)
from .prior import (GBPParams, MixtureSpec, R2D2Hyper, fit_gbp_approx, gbp_density,
                    mixture_prior_w_density, mixture_r2_from_w, prior_w_density, r2_from_w,
                    r2_max, w_from_r2)
from .kernels import BACKEND

__version__ = "0.1.0"
