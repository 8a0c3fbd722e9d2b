"""Variance-reduced stochastic proximal AUC maximization."""
from .analysis import (InvariantReport, TheoryConstants, VarianceReport, run_invariant_suite,
                       theory_constants, update_variance)
from .dataio import (Dataset, DatasetStats, Sample, binarize_labels, compute_stats,
                     load_dataset, normalize, parse_libsvm, split)
from .objective import (auc_score, full_gradient, objective_value, objective_value_bruteforce,
                        saddle_params, stochastic_gradient)
from .regularizer import RegKind, RegularizerSpec, prox, reg_value, strong_convexity
from .solvers import (EvalHooks, SolveResult, SolverConfig, TraceRecord, default_step_size,
                      pgd, prox_full_gradient, spam, vrspam)

__all__ = [
    "Dataset", "DatasetStats", "EvalHooks", "InvariantReport", "RegKind", "RegularizerSpec",
    "Sample", "SolveResult", "SolverConfig", "TheoryConstants", "TraceRecord", "VarianceReport",
    "auc_score", "binarize_labels", "compute_stats", "default_step_size", "full_gradient",
    "load_dataset", "normalize", "objective_value", "objective_value_bruteforce",
    "parse_libsvm", "pgd", "prox", "prox_full_gradient", "reg_value", "run_invariant_suite",
    "saddle_params", "spam", "split", "stochastic_gradient", "strong_convexity",
    "theory_constants", "update_variance", "vrspam",
]
