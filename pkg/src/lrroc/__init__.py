"""ROC estimation under the likelihood ratio ordering.

The main estimator models the log density ratio of diseased to healthy
values as a nondecreasing Bernstein polynomial, fitted by constrained
logistic regression on the pooled sample; the cdfs follow as empirical
likelihood weights. Empirical, kernel and Box-Cox binormal estimators are
included for comparison, with a Monte-Carlo harness and bootstrap tools.
"""

from .baselines import boxcox_summary, ecdf_summary, kernel_summary
from .bp_estimator import (
    BpModelFit,
    CdfEstimate,
    GofResult,
    RocSummary,
    auc,
    cdf_at,
    fit_bp,
    gof_bootstrap,
    gof_statistic,
    roc_eval,
    summarize,
    theta_hat,
    youden_cutoff,
)
from .data_model import DUAL, SINGLE, TwoSampleData, pool_and_count
from .errors import LrrocError
from .eval_sim import (
    CATALOG,
    MetricReport,
    Scenario,
    bootstrap_ci,
    estimate,
    generate,
    get_scenario,
    run_scenario,
    true_summary,
)

__version__ = "0.1.0"

__all__ = [
    "BpModelFit", "CdfEstimate", "GofResult", "RocSummary", "auc", "cdf_at", "fit_bp",
    "gof_bootstrap", "gof_statistic", "roc_eval", "summarize", "theta_hat", "youden_cutoff",
    "boxcox_summary", "ecdf_summary", "kernel_summary", "DUAL", "SINGLE", "TwoSampleData",
    "pool_and_count", "LrrocError", "CATALOG", "MetricReport", "Scenario", "bootstrap_ci",
    "estimate", "generate", "get_scenario", "run_scenario", "true_summary",
]
