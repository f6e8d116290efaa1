"""PAC-Bayesian bounds for weighted majority votes.

First-order (FO), tandem (TND) and Chebyshev-Cantelli (CmuTND, COTND)
bounds, their minimisation over the posterior, and the bagging and data
plumbing needed to evaluate them.
"""
from .bounds import (
    BoundReport,
    Posterior,
    cmu_tnd_bound,
    cmu_tnd_bound_kl,
    co_tnd_bound,
    fo_bound,
    kl_divergence,
    pb_bennett,
    pb_bernstein,
    pb_kl_lower,
    pb_kl_upper,
    pb_lambda_lower,
    pb_lambda_upper,
    tnd_bound,
    variance_bound,
)
from .dataio import Dataset, PredictionTable, read_libsvm, read_prediction_table, write_prediction_table
from .ensemble import TreeConfig, mv_predict, mv_test_loss, train_bagged
from .grids import GridSet, gamma_grid, lambda_grid, mu_grid, offset_grids
from .lossstats import LossStats, loss_stats, mu_tandem_stats
from .optimize import OptimizerConfig, optimize_cmu_tnd, optimize_co_tnd, optimize_fo, optimize_tnd

__version__ = "0.1.0"
