"""odefind: sparse identification of externally forced nonlinear ODEs."""

__version__ = "0.1.0"

from .dataset import (DerivativeSet, NormalizationStats, SplitIndices,
                      TimeSeriesDataset, denormalize, ingest_csv, normalize,
                      split_311, write_csv)
from .differentiation import (central_difference, integrate_back,
                              tv_differentiate, tv_derivative_1d, tv_reg_sweep)
from .estimator import SparseDynamicsRegressor
from .evaluation import (EvaluationReport, evaluate, integrate_model,
                         predict_derivatives, run_protocol_suite)
from .library import CandidateLibrary, TermDescriptor, build_library, evaluate_library
from .plants import (PerturbationSignal, PlantSpec, builtin_plants,
                     generate_signal, sample_signal, simulate)
from .regression import (RegularizationPath, SparseModel, fit_all_states,
                         fit_path, lasso_cd, soft_threshold)
from .render import render_equations
from .selection import (SelectionReport, complexity_score, cv_r2,
                        select_by_score, select_cv_peak)

__all__ = [
    "CandidateLibrary", "DerivativeSet", "EvaluationReport",
    "NormalizationStats", "PerturbationSignal", "PlantSpec",
    "RegularizationPath", "SelectionReport", "SparseDynamicsRegressor",
    "SparseModel", "SplitIndices", "TermDescriptor", "TimeSeriesDataset",
    "build_library", "builtin_plants", "central_difference",
    "complexity_score", "cv_r2", "denormalize", "evaluate",
    "evaluate_library", "fit_all_states", "fit_path", "generate_signal",
    "ingest_csv", "integrate_back", "integrate_model", "lasso_cd",
    "normalize", "predict_derivatives", "render_equations",
    "run_protocol_suite", "sample_signal", "select_by_score",
    "select_cv_peak", "simulate", "soft_threshold", "split_311",
    "tv_differentiate", "tv_derivative_1d", "tv_reg_sweep", "write_csv",
]
