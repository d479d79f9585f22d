"""Scikit-learn style estimator wrapping the full identification pipeline:
autoscale, differentiate, build and evaluate the candidate library, fit
per-state regularization paths, select one model per state."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .dataset import TimeSeriesDataset, compute_stats, normalize, split_311
from .errors import NumericalError, ParameterError, SchemaError
from .evaluation import compute_derivatives, integrate_model, predict_derivatives_raw
from .library import UNARY_FNS, build_library, evaluate_library
from .regression import SparseModel, fit_all_states, r_squared
from .selection import fill_cv, select


def _as_dataset(X, u=None, dt=None, names=None, input_name="u"):
    if isinstance(X, TimeSeriesDataset):
        return X
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if u is None or dt is None:
        raise ParameterError("array input needs both u and dt")
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(X.shape[1]))
    times = np.arange(X.shape[0]) * float(dt)
    return TimeSeriesDataset(names=names, times=times, states=X,
                             input=np.asarray(u, dtype=float), dt=float(dt),
                             input_name=input_name)


class SparseDynamicsRegressor(BaseEstimator):
    """Identify sparse forced ODEs from uniformly sampled time series.

    fit accepts either a TimeSeriesDataset or an (m, n) state array
    plus u and dt. After fitting, `model_` holds the portable
    SparseModel, `paths_` the per-state regularization paths and
    `reports_` the selection reports.

    Parameters mirror the pipeline stages: differentiation (`diff`,
    `tv_reg`, `tv_iters`), library generation (`max_total_degree`,
    `exponent_min`, `exponent_max`, `unary_fns`, `include_constant`),
    path fitting (`n_lambdas`, `lambda_min_ratio`, `refit`, `cd_tol`,
    `cd_max_iters`) and selection (`selection`, `score_alpha`,
    `score_beta`). With refit="ols" each path entry's coefficients are
    re-estimated by least squares on the LASSO support plus the
    constant column, which removes shrinkage bias from reported
    coefficients and from the CV values used for selection.
    """

    def __init__(self, diff="central", tv_reg=1e-3, tv_iters=100,
                 max_total_degree=2, exponent_min=-2, exponent_max=2,
                 unary_fns=UNARY_FNS, include_constant=True,
                 n_lambdas=30, lambda_min_ratio=1e-3, refit="ols",
                 selection="cv-peak", score_alpha=-0.05, score_beta=-1.0,
                 split_seed=0, cd_tol=1e-6, cd_max_iters=10000):
        self.diff = diff
        self.tv_reg = tv_reg
        self.tv_iters = tv_iters
        self.max_total_degree = max_total_degree
        self.exponent_min = exponent_min
        self.exponent_max = exponent_max
        self.unary_fns = unary_fns
        self.include_constant = include_constant
        self.n_lambdas = n_lambdas
        self.lambda_min_ratio = lambda_min_ratio
        self.refit = refit
        self.selection = selection
        self.score_alpha = score_alpha
        self.score_beta = score_beta
        self.split_seed = split_seed
        self.cd_tol = cd_tol
        self.cd_max_iters = cd_max_iters

    def fit(self, X, u=None, dt=None, names=None):
        ds = _as_dataset(X, u, dt, names)
        stats = compute_stats(ds)
        ds_n, _ = normalize(ds, stats)
        derivs = compute_derivatives(ds_n, self.diff, tv_reg=self.tv_reg,
                                     tv_iters=self.tv_iters)
        library = build_library(
            ds.variable_names(), max_total_degree=self.max_total_degree,
            include_constant=self.include_constant, unary_fns=self.unary_fns,
            exponent_min=self.exponent_min, exponent_max=self.exponent_max)
        theta = evaluate_library(library, ds_n)
        split = split_311(ds.m, self.split_seed)

        const = library.constant_index()
        always = (const,) if (self.refit == "ols" and const is not None) else ()
        result = fit_all_states(
            theta[split.train], derivs.derivs[split.train],
            n_lambdas=self.n_lambdas, lambda_min_ratio=self.lambda_min_ratio,
            tol=self.cd_tol, max_iters=self.cd_max_iters, refit=self.refit,
            always_include=always)
        if result.errors:
            summary = "; ".join(f"state {i}: {e}" for i, e in
                                sorted(result.errors.items()))
            raise NumericalError(f"path fitting failed for {summary}")

        theta_cv = theta[split.cv]
        reports = []
        for i, path in enumerate(result.paths):
            fill_cv(path, theta_cv, derivs.derivs[split.cv, i])
            reports.append(select(path, self.selection,
                                  score_alpha=self.score_alpha,
                                  score_beta=self.score_beta))

        xi = np.column_stack([
            result.paths[i].entries[reports[i].chosen_index].coefficients
            for i in range(ds.n)])
        lambdas = np.array([r.chosen_lambda for r in reports])
        train_r2 = [
            result.paths[i].entries[reports[i].chosen_index].train_r2
            for i in range(ds.n)]

        self.dataset_ = ds
        self.stats_ = stats
        self.derivs_ = derivs
        self.library_ = library
        self.split_ = split
        self.theta_ = theta
        self.paths_ = result.paths
        self.reports_ = reports
        self.model_ = SparseModel(
            xi=xi,
            lambda_per_state=lambdas,
            library=library,
            norm_stats=stats,
            fitted_on=ds.fingerprint(),
            meta={
                "train_r2": train_r2,
                "diff": self.diff,
                "tv_reg": self.tv_reg,
                "tv_iters": self.tv_iters,
                "diff_converged": derivs.converged,
                "dt": ds.dt,
                "split_seed": self.split_seed,
                "selection": self.selection,
                "selection_reports": [r.to_dict() for r in reports],
                "n_lambdas": self.n_lambdas,
                "lambda_min_ratio": self.lambda_min_ratio,
                "refit": self.refit if self.refit else "none",
            },
        )
        return self

    def _require_fit(self):
        if not hasattr(self, "model_"):
            raise SchemaError("estimator is not fitted")

    def predict(self, X, u=None, dt=None, names=None):
        """Raw-unit derivative predictions, shape (m, n)."""
        self._require_fit()
        ds = _as_dataset(X, u, dt, names,
                         input_name=self.model_.norm_stats.names[-1])
        return predict_derivatives_raw(self.model_, ds)

    def score(self, X, u=None, dt=None, names=None):
        """Mean per-state R^2 against numerically differentiated targets."""
        self._require_fit()
        ds = _as_dataset(X, u, dt, names,
                         input_name=self.model_.norm_stats.names[-1])
        ds_n, _ = normalize(ds, self.model_.norm_stats)
        derivs = compute_derivatives(ds_n, self.diff, tv_reg=self.tv_reg,
                                     tv_iters=self.tv_iters)
        pred = predict_derivatives_raw(self.model_, ds)
        pred_n = pred / self.model_.norm_stats.scales[:self.model_.n]
        return float(np.mean([r_squared(derivs.derivs[:, i], pred_n[:, i])
                              for i in range(self.model_.n)]))

    def simulate(self, x0, u, t_span, dt_out=None):
        """Forward-integrate the selected model (see integrate_model)."""
        self._require_fit()
        return integrate_model(self.model_, x0, u, t_span, dt_out=dt_out)
