"""Model evaluation: derivative prediction, forward integration, and the
held-out / long-time / outside-perturbation protocols."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import TimeSeriesDataset, normalize
from .differentiation import central_difference, tv_differentiate
from .errors import DivergenceError, ParameterError, SchemaError
from .library import evaluate_library
from .plants import PerturbationSignal, generate_signal, simulate
from .regression import r_squared

DIVERGENCE_LIMIT = 1e6
LONG_TIME_FACTOR = 2.5


@dataclass
class EvaluationReport:
    """Per-state R^2 of derivative predictions under one protocol."""

    protocol: str
    fingerprint: str
    per_state: list  # dicts: name, train_r2, test_r2, term_count

    def to_dict(self):
        return {"format": "odefind-evaluation", "protocol": self.protocol,
                "fingerprint": self.fingerprint, "per_state": self.per_state}

    @classmethod
    def from_dict(cls, d):
        return cls(protocol=d["protocol"], fingerprint=d["fingerprint"],
                   per_state=d["per_state"])

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def render(self):
        """Aligned text table: one row per state, Train / Test / N columns."""
        def fmt(v):
            return "---" if v is None else f"{v:.4g}"
        rows = [(s["name"], fmt(s.get("train_r2")), fmt(s.get("test_r2")),
                 str(s["term_count"])) for s in self.per_state]
        headers = ("Variable", "Train", "Test", "N")
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
                  for i, h in enumerate(headers)]
        lines = [f"# protocol: {self.protocol}   dataset: {self.fingerprint}"]
        lines.append("  ".join(h.ljust(widths[i]) if i == 0 else h.rjust(widths[i])
                               for i, h in enumerate(headers)))
        for r in rows:
            lines.append("  ".join(r[0].ljust(widths[0]) if i == 0
                                   else r[i].rjust(widths[i])
                                   for i in range(len(headers))))
        return "\n".join(lines) + "\n"


def predict_derivatives(model, ds):
    """Predicted derivatives of the normalized states, one column per state.

    The dataset is normalized with the model's stored stats before the
    library is evaluated, so predictions live in fit coordinates;
    multiply by the state scales for raw-unit derivatives.
    """
    if ds.variable_names() != model.norm_stats.names:
        raise SchemaError(
            f"dataset variables {ds.variable_names()} do not match the "
            f"model's {model.norm_stats.names}")
    ds_n, _ = normalize(ds, model.norm_stats)
    theta = evaluate_library(model.library, ds_n)
    return theta @ model.xi


def predict_derivatives_raw(model, ds):
    scales = model.norm_stats.scales[:model.n]
    return predict_derivatives(model, ds) * scales


def compute_derivatives(ds, method, tv_reg=1e-3, tv_iters=100):
    if method == "central":
        return central_difference(ds)
    if method == "tv":
        return tv_differentiate(ds, reg=tv_reg, iterations=tv_iters)
    raise ParameterError(f"unknown differentiation method {method!r}")


def evaluate(model, ds, derivs, rows=None, protocol="held-out"):
    """Per-state R^2 between predictions and numerical derivatives.

    `derivs` must hold derivatives of the *normalized* states of `ds`
    (fit coordinates), as produced by the fit pipeline. `rows`
    restricts scoring to a row subset (e.g. the held-out test rows).
    Stored fit-time train R^2 values are carried into the report when
    the model has them. Negative R^2 is reported as-is.
    """
    pred = predict_derivatives(model, ds)
    target = derivs.derivs
    if target.shape != pred.shape:
        raise SchemaError(
            f"derivative matrix {target.shape} does not match predictions "
            f"{pred.shape}")
    if rows is not None:
        rows = np.asarray(rows, dtype=int)
        pred, target = pred[rows], target[rows]
    train_r2s = model.meta.get("train_r2")
    counts = model.term_counts()
    per_state = []
    for i, name in enumerate(model.state_names):
        per_state.append({
            "name": name,
            "train_r2": None if train_r2s is None else train_r2s[i],
            "test_r2": r_squared(target[:, i], pred[:, i]),
            "term_count": counts[i],
        })
    return EvaluationReport(protocol=protocol, fingerprint=ds.fingerprint(),
                            per_state=per_state)


class _RowEvaluator:
    """Fast single-row library evaluation for ODE integration."""

    def __init__(self, library):
        self.lib = library
        n_vars = len(library.variable_names)
        exps, self.unary = [], []
        for t in library.terms:
            if t.kind == "power-product":
                exps.append(t.exponents)
                self.unary.append(None)
            else:
                exps.append((0,) * n_vars)
                self.unary.append((t.unary_fn, t.var_index))
        self.exps = np.array(exps, dtype=float)
        self.neg = np.array([t.kind == "power-product" and any(e < 0 for e in t.exponents)
                             for t in library.terms])

    def __call__(self, z):
        zc = np.where(np.abs(z) < 1e-8, np.where(z < 0, -1e-8, 1e-8), z)
        base = np.where(self.exps < 0, zc, z)
        row = np.prod(base ** self.exps, axis=1)
        for j, u in enumerate(self.unary):
            if u is None:
                continue
            fn, v = u
            if fn == "sin":
                row[j] = np.sin(z[v])
            elif fn == "cos":
                row[j] = np.cos(z[v])
            elif fn == "log-abs":
                row[j] = np.log(abs(zc[v]))
            elif fn == "exp":
                row[j] = np.exp(z[v])
            else:
                row[j] = np.sqrt(abs(z[v]))
        return row


def integrate_model(model, x0, u, t_span, dt_out=None):
    """Integrate the learned ODEs with fixed-step RK4.

    Runs in normalized coordinates (the model's fit space) and returns
    a de-normalized dataset. `u` is either a PerturbationSignal
    (evaluated exactly at substeps) or a (times, values) pair from
    which substep inputs are linearly interpolated. Raises
    DivergenceError when any normalized state exceeds 1e6.
    """
    t0, t1 = t_span
    if not t1 > t0:
        raise ParameterError("need t_span with t1 > t0")
    stats = model.norm_stats
    n = model.n
    dt = dt_out if dt_out is not None else model.meta.get("dt", 0.01)
    m = round((t1 - t0) / dt) + 1
    times = t0 + np.arange(m) * dt

    if isinstance(u, PerturbationSignal):
        u_half = u.sample(np.minimum(t0 + np.arange(2 * m - 1) * (dt / 2.0), u.span))
    else:
        ut, uv = u
        u_half = np.interp(t0 + np.arange(2 * m - 1) * (dt / 2.0), ut, uv)
    u_mean, u_scale = stats.means[n], stats.scales[n]
    u_norm = (u_half - u_mean) / u_scale

    rows = _RowEvaluator(model.library)
    xi = model.xi

    def f(z, uval):
        return rows(np.append(z, uval)) @ xi

    z = (np.asarray(x0, dtype=float) - stats.means[:n]) / stats.scales[:n]
    Z = np.empty((m, n))
    Z[0] = z
    for k in range(m - 1):
        u0, um, u1 = u_norm[2 * k], u_norm[2 * k + 1], u_norm[2 * k + 2]
        k1 = f(z, u0)
        k2 = f(z + 0.5 * dt * k1, um)
        k3 = f(z + 0.5 * dt * k2, um)
        k4 = f(z + dt * k3, u1)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"integrated model diverged at t={times[k + 1]:.6g}",
                time=float(times[k + 1]))
        Z[k + 1] = z
    states = Z * stats.scales[:n] + stats.means[:n]
    return TimeSeriesDataset(names=model.state_names, times=times,
                             states=states, input=u_half[::2], dt=dt,
                             input_name=stats.names[n])


def run_protocol_suite(model, spec, *, span, dt, segment_duration, kinds,
                       seed_outside, seed_long, diff_method, tv_reg=1e-3,
                       tv_iters=100, base_ds=None, base_derivs=None,
                       test_rows=None, long_time_factor=LONG_TIME_FACTOR):
    """The three evaluation protocols against a surrogate plant.

    held-out: the fit dataset's test rows. outside-perturbation: a new
    simulation whose forcing amplitudes come from the plant's outside
    band, disjoint from the training band. long-time: a new simulation
    long_time_factor times the training span. Returns the reports in
    that order.
    """
    reports = []
    if base_ds is not None:
        reports.append(evaluate(model, base_ds, base_derivs, rows=test_rows,
                                protocol="held-out"))

    def fresh(protocol, bounds, this_span, seed):
        sig = generate_signal(this_span, segment_duration, bounds, kinds, seed)
        ds = simulate(spec, sig, dt)
        ds_n, _ = normalize(ds, model.norm_stats)
        derivs = compute_derivatives(ds_n, diff_method, tv_reg=tv_reg,
                                     tv_iters=tv_iters)
        return evaluate(model, ds, derivs, protocol=protocol)

    reports.append(fresh("outside-perturbation", spec.outside_bounds, span,
                         seed_outside))
    reports.append(fresh("long-time", spec.train_bounds,
                         long_time_factor * span, seed_long))
    return reports
