"""Model-based authentication of grouped multivariate measurements.

A hierarchical Gaussian model with group-specific fixed effects and
covariances, level-indexed random effects drawn from a Dirichlet process
mixture (with a single-atom parametric variant), posterior-predictive group
classification, and the model-comparison and sampler-validation tooling
around it.
"""

from .bpref import LdaModel, lda_fit, lda_predict_proba, run_bp_chain
from .classify import (ClassificationReport, classify_dataset,
                       classify_label, classify_probabilities, loocv,
                       predictive_group_density)
from .datagen import (MixtureSpec, builtin_sim_spec, load_csv, simulate,
                      validate)
from .diagnostics import (DicResult, GewekeResult, RocCurve, cpo_lpml, dic,
                          geweke_harness, macro_auc, roc_curve,
                          roc_curves_ovr)
from .domain import (BpState, BspState, Dataset, Hyperparameters,
                     McmcSettings, PosteriorChain, design_row, z_apply)
from .dpmm import gibbs_sweep, initial_state, run_chain
from .randmat import FactorizationError, RngStream

__version__ = "0.1.0"

__all__ = [
    "BpState",
    "BspState",
    "ClassificationReport",
    "Dataset",
    "DicResult",
    "FactorizationError",
    "GewekeResult",
    "Hyperparameters",
    "LdaModel",
    "McmcSettings",
    "MixtureSpec",
    "PosteriorChain",
    "RngStream",
    "RocCurve",
    "builtin_sim_spec",
    "classify_dataset",
    "classify_label",
    "classify_probabilities",
    "cpo_lpml",
    "design_row",
    "dic",
    "geweke_harness",
    "gibbs_sweep",
    "initial_state",
    "lda_fit",
    "lda_predict_proba",
    "load_csv",
    "loocv",
    "macro_auc",
    "predictive_group_density",
    "roc_curve",
    "roc_curves_ovr",
    "run_bp_chain",
    "run_chain",
    "simulate",
    "validate",
    "z_apply",
]
