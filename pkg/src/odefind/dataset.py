"""Time-series data model: ingestion, normalization, splitting.

Datasets are uniformly sampled: a `time` column, one designated input
column (the external forcing) and any number of state columns. All
values are float64 throughout; CSV output uses %.17g so that files
round-trip bit-exactly.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DataError, DegenerateColumnError, GridError,
                     InsufficientDataError, SchemaError)

GRID_RTOL = 1e-9


def _as_float_matrix(a, name):
    out = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{name} contains non-finite values")
    return out


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Uniformly sampled states plus a scalar forcing signal.

    Attributes
    ----------
    names : tuple of str
        State-variable names, one per column of `states`.
    times : ndarray, shape (m,)
        Strictly increasing, uniformly spaced sample instants (hours).
    states : ndarray, shape (m, n)
    input : ndarray, shape (m,)
        The forcing u(t) sampled on the same grid.
    dt : float
        Sampling interval.
    input_name : str
        Column name used for the input when writing CSV.
    """

    names: tuple
    times: np.ndarray
    states: np.ndarray
    input: np.ndarray
    dt: float
    input_name: str = "u"

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        times = _as_float_matrix(self.times, "times").ravel()
        states = _as_float_matrix(self.states, "states")
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        u = _as_float_matrix(self.input, "input").ravel()
        if times.size != states.shape[0] or times.size != u.size:
            raise SchemaError(
                f"row mismatch: {times.size} times, {states.shape[0]} state rows, "
                f"{u.size} input values")
        if len(self.names) != states.shape[1]:
            raise SchemaError(
                f"{len(self.names)} names for {states.shape[1]} state columns")
        diffs = np.diff(times)
        if times.size >= 2:
            if np.any(diffs <= 0):
                k = int(np.argmax(diffs <= 0))
                raise GridError(f"times not strictly increasing at row {k + 1}")
            if abs(diffs.mean() - self.dt) > GRID_RTOL * abs(self.dt) or \
               np.any(np.abs(diffs - self.dt) > GRID_RTOL * abs(self.dt)):
                k = int(np.argmax(np.abs(diffs - self.dt)))
                raise GridError(
                    f"non-uniform time grid at row {k + 1}: spacing {diffs[k]!r} "
                    f"vs dt {self.dt!r}")
        for a in (times, states, u):
            a.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "input", u)

    @property
    def m(self):
        return self.states.shape[0]

    @property
    def n(self):
        return self.states.shape[1]

    def values(self):
        """States and input stacked as an m x (n+1) matrix."""
        return np.column_stack([self.states, self.input])

    def variable_names(self):
        return tuple(self.names) + (self.input_name,)

    def fingerprint(self):
        """Short content hash covering names, grid and values."""
        h = hashlib.sha256()
        h.update(",".join(self.variable_names()).encode())
        for a in (self.times, self.states, self.input):
            h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def restricted_to(self, rows):
        rows = np.asarray(rows, dtype=int)
        # row subsets break grid uniformity, so return plain arrays
        return self.states[rows], self.input[rows]


@dataclass(frozen=True)
class DerivativeSet:
    """Numerical derivatives aligned row-for-row with a dataset."""

    derivs: np.ndarray
    method: str
    converged: bool = True

    def __post_init__(self):
        d = _as_float_matrix(self.derivs, "derivs")
        if d.ndim == 1:
            d = d.reshape(-1, 1)
        d.setflags(write=False)
        object.__setattr__(self, "derivs", d)
        if self.method not in ("tv-regularized", "central-difference"):
            raise SchemaError(f"unknown differentiation method {self.method!r}")


@dataclass(frozen=True)
class NormalizationStats:
    """Per-column mean and population standard deviation.

    Covers the n state columns followed by the input column, in the
    order of `variable_names`.
    """

    names: tuple
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        means = _as_float_matrix(self.means, "means").ravel()
        scales = _as_float_matrix(self.scales, "scales").ravel()
        if means.size != scales.size or means.size != len(self.names):
            raise SchemaError("means/scales/names length mismatch")
        if np.any(scales <= 0):
            bad = self.names[int(np.argmax(scales <= 0))]
            raise DegenerateColumnError(f"non-positive scale for column {bad!r}")
        means.setflags(write=False)
        scales.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)

    def to_dict(self):
        return {"names": list(self.names),
                "means": [float(v) for v in self.means],
                "scales": [float(v) for v in self.scales]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), np.array(d["means"], dtype=float),
                   np.array(d["scales"], dtype=float))


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/cv/test row sets covering all rows exactly once."""

    train: np.ndarray
    cv: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train", "cv", "test"):
            a = np.asarray(getattr(self, name), dtype=int)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def m(self):
        return self.train.size + self.cv.size + self.test.size


def ingest_csv(path, input_column):
    """Read a dataset from CSV.

    The header must contain a `time` column and `input_column`; every
    other column becomes a state, in header order. The grid must be
    uniform within GRID_RTOL and all cells finite.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "time" not in header:
            raise SchemaError(f"{path}: no 'time' column in header {header}")
        if input_column not in header:
            raise SchemaError(f"{path}: input column {input_column!r} not in header")
        t_idx = header.index("time")
        u_idx = header.index(input_column)
        state_cols = [(i, h) for i, h in enumerate(header)
                      if i not in (t_idx, u_idx)]
        if not state_cols:
            raise SchemaError(f"{path}: no state columns")
        rows = []
        for r, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DataError(f"{path}: row {r} has {len(rec)} cells, "
                                f"expected {len(header)}")
            vals = []
            for i, cell in enumerate(rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {r}, column {header[i]!r}: cannot parse "
                        f"{cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {r}, column {header[i]!r}: non-finite value")
                vals.append(v)
            rows.append(vals)
    if len(rows) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 data rows")
    data = np.array(rows, dtype=float)
    times = data[:, t_idx]
    diffs = np.diff(times)
    dt = float(diffs.mean())
    if np.any(diffs <= 0) or np.any(np.abs(diffs - dt) > GRID_RTOL * abs(dt)):
        k = int(np.argmax(np.abs(diffs - dt)))
        raise GridError(f"{path}: non-uniform time grid near row {k + 2}")
    return TimeSeriesDataset(
        names=tuple(h for _, h in state_cols),
        times=times,
        states=data[:, [i for i, _ in state_cols]],
        input=data[:, u_idx],
        dt=dt,
        input_name=header[u_idx],
    )


def write_csv(ds, path):
    """Write a dataset with %.17g formatting (lossless round trip)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", *ds.names, ds.input_name])
        for k in range(ds.m):
            w.writerow([f"{ds.times[k]:.17g}",
                        *(f"{v:.17g}" for v in ds.states[k]),
                        f"{ds.input[k]:.17g}"])


def compute_stats(ds):
    """Column means and population standard deviations (states then input)."""
    Z = ds.values()
    means = Z.mean(axis=0)
    scales = Z.std(axis=0, ddof=0)
    names = ds.variable_names()
    if np.any(scales == 0):
        bad = names[int(np.argmax(scales == 0))]
        raise DegenerateColumnError(f"column {bad!r} has zero variance")
    return NormalizationStats(names, means, scales)


def normalize(ds, stats=None):
    """Mean-shift and scale every state column and the input.

    Returns the normalized dataset and the stats used. When `stats` is
    None they are computed from `ds` itself.
    """
    if stats is None:
        stats = compute_stats(ds)
    elif stats.names != ds.variable_names():
        raise SchemaError(
            f"stats cover {stats.names}, dataset has {ds.variable_names()}")
    Z = (ds.values() - stats.means) / stats.scales
    out = TimeSeriesDataset(ds.names, ds.times, Z[:, :ds.n], Z[:, ds.n],
                            ds.dt, ds.input_name)
    return out, stats


def denormalize(ds, stats):
    """Invert `normalize`."""
    if stats.names != ds.variable_names():
        raise SchemaError(
            f"stats cover {stats.names}, dataset has {ds.variable_names()}")
    Z = ds.values() * stats.scales + stats.means
    return TimeSeriesDataset(ds.names, ds.times, Z[:, :ds.n], Z[:, ds.n],
                             ds.dt, ds.input_name)


def split_311(m, seed):
    """Random 3:1:1 row partition, reproducible for a fixed seed.

    |train| = round(0.6 m); cv takes the larger half of the remainder.
    """
    if m < 5:
        raise InsufficientDataError(f"need at least 5 rows to split, got {m}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_train = round(0.6 * m)
    rem = m - n_train
    n_cv = (rem + 1) // 2
    return SplitIndices(
        train=np.sort(perm[:n_train]),
        cv=np.sort(perm[n_train:n_train + n_cv]),
        test=np.sort(perm[n_train + n_cv:]),
        seed=int(seed),
    )
