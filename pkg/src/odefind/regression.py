"""Sparse regression: per-state LASSO by cyclic coordinate descent.

The solver minimizes

    (1/(2m)) * ||y - Theta xi||_2^2 + lambda * ||xi||_1

with no intercept (data are pre-centered by the normalization stage;
the library's constant column plays that role). Columns are internally
rescaled to mean square one so lambda means the same thing for every
term, and coefficients are mapped back afterwards; exact zeros from the
soft-threshold update survive the back-transformation.

Paths are solved on a decreasing logarithmic lambda grid with warm
starts. Coordinate descent runs on the Gram matrix (covariance updates)
with active-set cycling: full sweeps alternate with sweeps over the
current support until neither moves any coefficient by more than tol.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import NormalizationStats
from .errors import ParameterError, UndefinedR2Error
from .library import CandidateLibrary


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0), elementwise."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("soft-threshold level must be nonnegative")
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _standardize_columns(theta):
    m = theta.shape[0]
    norms = np.sqrt((theta ** 2).sum(axis=0) / m)
    safe = np.where(norms > 0, norms, 1.0)
    return theta / safe, norms, safe


def r_squared(y, y_hat):
    """1 - SS_res/SS_tot with SS_tot about the mean of y."""
    y = np.asarray(y, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedR2Error("target has zero variance")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


class _GramProblem:
    """Shared per-target quantities for one design matrix."""

    def __init__(self, theta, y):
        theta = np.asarray(theta, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if theta.shape[0] != y.size:
            raise ParameterError(
                f"theta has {theta.shape[0]} rows, y has {y.size}")
        self.m = theta.shape[0]
        self.theta_std, self.norms, self.safe_norms = _standardize_columns(theta)
        self.gram = self.theta_std.T @ self.theta_std
        self.corr = self.theta_std.T @ y
        self.y_sq = float(y @ y)
        self.zero_cols = np.flatnonzero(self.norms == 0)

    def lambda_max(self):
        live = np.ones(self.corr.size, dtype=bool)
        live[self.zero_cols] = False
        if not np.any(live):
            raise ParameterError("all candidate columns are identically zero")
        return float(np.max(np.abs(self.corr[live])) / self.m)

    def objective(self, xi, lam):
        quad = self.y_sq - 2.0 * float(self.corr @ xi) + float(xi @ self.gram @ xi)
        return quad / (2.0 * self.m) + lam * float(np.sum(np.abs(xi)))

    def solve(self, lam, xi0=None, tol=1e-6, max_iters=10000,
              check_objective=False):
        """Cyclic coordinate descent; returns (xi_std, converged, sweeps)."""
        if lam <= 0:
            raise ParameterError(f"lambda must be positive, got {lam}")
        k = self.corr.size
        xi = np.zeros(k) if xi0 is None else np.array(xi0, dtype=float)
        gv = self.gram @ xi
        m = self.m
        lam_m = lam * m
        gram = self.gram
        corr = self.corr
        dead = set(self.zero_cols.tolist())
        prev_obj = self.objective(xi, lam) if check_objective else None

        def sweep(indices):
            moved = 0.0
            for j in indices:
                if j in dead:
                    continue
                rho = corr[j] - gv[j] + m * xi[j]
                new = soft_threshold(rho, lam_m) / m
                d = new - xi[j]
                if d != 0.0:
                    np.add(gv, d * gram[:, j], out=gv)
                    xi[j] = new
                    moved = max(moved, abs(d))
            return moved

        sweeps = 0
        all_idx = range(k)
        while sweeps < max_iters:
            sweeps += 1
            moved = sweep(all_idx)
            if check_objective:
                obj = self.objective(xi, lam)
                assert obj <= prev_obj + 1e-12 * max(1.0, abs(prev_obj)), \
                    f"objective increased: {prev_obj} -> {obj}"
                prev_obj = obj
            if moved < tol:
                return xi, True, sweeps
            active = np.flatnonzero(xi)
            while sweeps < max_iters:
                sweeps += 1
                if sweep(active) < tol:
                    break
        return xi, False, sweeps


def lasso_cd(theta, y, lam, tol=1e-6, max_iters=10000, check_objective=False):
    """Solve one LASSO problem.

    Returns (coefficients, converged, n_sweeps) in the original column
    scaling. Zero columns get coefficient exactly 0.
    """
    prob = _GramProblem(theta, y)
    xi_std, converged, sweeps = prob.solve(
        lam, tol=tol, max_iters=max_iters, check_objective=check_objective)
    return xi_std / prob.safe_norms, converged, sweeps


def kkt_violation(theta, y, coef, lam):
    """Max KKT residual of a solution, in the solver's standardized scale.

    Active coordinates should have gradient lam * sign(coef); inactive
    ones gradient magnitude at most lam.
    """
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    theta_std, norms, safe = _standardize_columns(theta)
    xi_std = np.asarray(coef, dtype=float) * safe
    m = theta.shape[0]
    grad = theta_std.T @ (y - theta_std @ xi_std) / m
    worst = 0.0
    for j in range(xi_std.size):
        if norms[j] == 0:
            continue
        if xi_std[j] != 0.0:
            worst = max(worst, abs(grad[j] - lam * np.sign(xi_std[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam))
    return worst


@dataclass
class PathEntry:
    lambda_: float
    coefficients: np.ndarray
    train_r2: float
    term_count: int
    cv_r2: float = None
    converged: bool = True


@dataclass
class RegularizationPath:
    """Per-state sequence of solutions over strictly decreasing lambdas."""

    state_index: int
    entries: list

    def __post_init__(self):
        lams = [e.lambda_ for e in self.entries]
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise ParameterError("path lambdas must be strictly decreasing")

    def lambdas(self):
        return np.array([e.lambda_ for e in self.entries])


def _ols_refit(theta, y, support, always_include):
    coef = np.zeros(theta.shape[1])
    cols = sorted(set(support) | set(always_include))
    if cols:
        sol, *_ = np.linalg.lstsq(theta[:, cols], y, rcond=None)
        coef[cols] = sol
    return coef


def fit_path(theta, y, n_lambdas=30, lambda_min_ratio=1e-3, tol=1e-6,
             max_iters=10000, refit="ols", always_include=(), state_index=0):
    """Warm-started LASSO path on a logarithmic lambda grid.

    The grid runs from lambda_max (smallest lambda with an all-zero
    solution) down to lambda_max * lambda_min_ratio. Supports come from
    the LASSO solutions; with refit="ols" (the default used by the fit
    pipeline) each entry's stored coefficients are re-estimated by least
    squares on that support plus the `always_include` columns, which
    removes the L1 shrinkage bias from the reported coefficients. Pass
    refit=None for raw LASSO coefficients.

    cv_r2 fields are left unset; the selection module fills them.
    """
    if n_lambdas < 2:
        raise ParameterError("need at least 2 lambdas")
    if not (0 < lambda_min_ratio < 1):
        raise ParameterError("lambda_min_ratio must be in (0, 1)")
    if refit not in (None, "ols"):
        raise ParameterError(f"unknown refit mode {refit!r}")
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    prob = _GramProblem(theta, y)
    lam_max = prob.lambda_max()
    if lam_max <= 0:
        raise ParameterError("lambda_max is zero: target uncorrelated with "
                             "every candidate")
    lams = np.geomspace(lam_max, lam_max * lambda_min_ratio, n_lambdas)
    entries = []
    xi_std = None
    for lam in lams:
        xi_std, converged, _ = prob.solve(lam, xi0=xi_std, tol=tol,
                                          max_iters=max_iters)
        lasso_coef = xi_std / prob.safe_norms
        support = np.flatnonzero(lasso_coef)
        if refit == "ols":
            coef = _ols_refit(theta, y, support, always_include)
        else:
            coef = lasso_coef
        entries.append(PathEntry(
            lambda_=float(lam),
            coefficients=coef,
            train_r2=r_squared(y, theta @ coef),
            term_count=int(support.size),
            converged=converged,
        ))
    return RegularizationPath(state_index=state_index, entries=entries)


@dataclass
class StatesFit:
    """Per-state results of fit_all_states; errors are collected, not raised."""

    xi: np.ndarray = None
    converged: list = None
    paths: list = None
    errors: dict = field(default_factory=dict)


def fit_all_states(theta, ydots, lam=None, n_lambdas=30, lambda_min_ratio=1e-3,
                   tol=1e-6, max_iters=10000, refit="ols", always_include=()):
    """Independent LASSO per derivative column.

    With a scalar `lam`, returns StatesFit with the k x n coefficient
    matrix; otherwise one RegularizationPath per state. Per-state
    failures are recorded in .errors under the state index.
    """
    ydots = np.asarray(ydots, dtype=float)
    if ydots.ndim == 1:
        ydots = ydots.reshape(-1, 1)
    n = ydots.shape[1]
    out = StatesFit()
    if lam is not None:
        out.xi = np.zeros((theta.shape[1], n))
        out.converged = [False] * n
        for i in range(n):
            try:
                coef, conv, _ = lasso_cd(theta, ydots[:, i], lam, tol=tol,
                                         max_iters=max_iters)
                out.xi[:, i] = coef
                out.converged[i] = conv
            except Exception as exc:  # noqa: BLE001 - collected by contract
                out.errors[i] = exc
        return out
    out.paths = [None] * n
    for i in range(n):
        try:
            out.paths[i] = fit_path(
                theta, ydots[:, i], n_lambdas=n_lambdas,
                lambda_min_ratio=lambda_min_ratio, tol=tol,
                max_iters=max_iters, refit=refit,
                always_include=always_include, state_index=i)
        except Exception as exc:  # noqa: BLE001 - collected by contract
            out.errors[i] = exc
    return out


@dataclass
class SparseModel:
    """Discovered sparse dynamics in normalized (fit) coordinates.

    Column i of `xi` gives the coefficients of d z_i/dt over the
    library terms, where z are the autoscaled states. `norm_stats`
    suffices to evaluate the model on raw data and to map polynomial
    coefficients back to raw coordinates.
    """

    xi: np.ndarray
    lambda_per_state: np.ndarray
    library: CandidateLibrary
    norm_stats: NormalizationStats
    fitted_on: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.xi.shape[1]

    @property
    def state_names(self):
        return self.norm_stats.names[:self.n]

    def term_counts(self):
        return [int(np.count_nonzero(self.xi[:, i])) for i in range(self.n)]

    def to_dict(self):
        return {
            "format": "odefind-model",
            "library": self.library.to_dict(),
            "norm_stats": self.norm_stats.to_dict(),
            "xi": [[float(v) for v in row] for row in self.xi],
            "lambda_per_state": [float(v) for v in self.lambda_per_state],
            "fitted_on": self.fitted_on,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            xi=np.array(d["xi"], dtype=float),
            lambda_per_state=np.array(d["lambda_per_state"], dtype=float),
            library=CandidateLibrary.from_dict(d["library"]),
            norm_stats=NormalizationStats.from_dict(d["norm_stats"]),
            fitted_on=d["fitted_on"],
            meta=d.get("meta", {}),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
