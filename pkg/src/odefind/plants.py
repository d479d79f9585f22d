"""Surrogate forced plants with known sparse ground truth.

Each plant is a polynomial ODE system driven by a scalar piecewise
forcing signal (random steps, linear ramps and sigmoid ramps). The
true right-hand sides are exponent-dict polynomials over
(states..., input), so recovered models can be checked against them
exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import TimeSeriesDataset
from .errors import DivergenceError, ParameterError
from .library import _power_display

SIGNAL_KINDS = ("step", "linear-ramp", "sigmoid-ramp")
SIGMOID_STEEPNESS = 12.0
BLOWUP_LIMIT = 1e12


@dataclass(frozen=True)
class Segment:
    kind: str
    duration: float
    start_level: float
    end_level: float

    def to_dict(self):
        return {"kind": self.kind, "duration": self.duration,
                "start_level": self.start_level, "end_level": self.end_level}


@dataclass(frozen=True)
class PerturbationSignal:
    """Piecewise forcing signal with exact analytic evaluation."""

    segments: tuple
    seed: int

    @property
    def span(self):
        return sum(s.duration for s in self.segments)

    def sample(self, t):
        """Evaluate at scalar or array times; exact, no grid."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        span = self.span
        if np.any(t_arr < 0) or np.any(t_arr > span * (1 + 1e-12)):
            raise ParameterError(
                f"time outside signal span [0, {span}]")
        durs = np.array([s.duration for s in self.segments])
        edges = np.concatenate([[0.0], np.cumsum(durs)])
        idx = np.clip(np.searchsorted(edges, t_arr, side="right") - 1,
                      0, len(self.segments) - 1)
        out = np.empty_like(t_arr)
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if not np.any(mask):
                continue
            tau = (t_arr[mask] - edges[i]) / seg.duration
            if seg.kind == "step":
                out[mask] = seg.end_level
            elif seg.kind == "linear-ramp":
                out[mask] = seg.start_level + (seg.end_level - seg.start_level) * tau
            elif seg.kind == "sigmoid-ramp":
                logistic = 1.0 / (1.0 + np.exp(-SIGMOID_STEEPNESS * (tau - 0.5)))
                out[mask] = seg.start_level + (seg.end_level - seg.start_level) * logistic
            else:
                raise ParameterError(f"unknown segment kind {seg.kind!r}")
        return out if np.ndim(t) else float(out[0])

    def to_dict(self):
        return {"seed": self.seed,
                "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Segment(**s) for s in d["segments"]), d["seed"])


def sample_signal(signal, t):
    return signal.sample(t)


def generate_signal(span, segment_duration, bounds, kinds, seed):
    """Random piecewise signal: per segment a uniform kind and a uniform
    target level in `bounds`; segments last `segment_duration` each."""
    lo, hi = bounds
    if not lo < hi:
        raise ParameterError(f"need bounds lo < hi, got {bounds}")
    n_seg = round(span / segment_duration)
    if abs(n_seg * segment_duration - span) > 1e-9 * span or n_seg < 1:
        raise ParameterError(
            f"span {span} is not a multiple of segment duration "
            f"{segment_duration}")
    kinds = tuple(k for k in SIGNAL_KINDS if k in set(kinds))
    if not kinds:
        raise ParameterError("no valid segment kinds given")
    rng = np.random.default_rng(seed)
    level = rng.uniform(lo, hi)
    segments = []
    for _ in range(n_seg):
        kind = kinds[rng.integers(len(kinds))]
        target = rng.uniform(lo, hi)
        segments.append(Segment(kind=kind, duration=float(segment_duration),
                                start_level=float(level),
                                end_level=float(target)))
        level = target
    return PerturbationSignal(segments=tuple(segments), seed=int(seed))


@dataclass(frozen=True)
class PlantSpec:
    """Polynomial forced ODE system with known sparse right-hand sides.

    rhs holds, per state, a tuple of (coefficient, exponents) pairs
    where exponents range over (states..., input).
    """

    name: str
    state_names: tuple
    x0: tuple
    rhs: tuple
    train_bounds: tuple
    outside_bounds: tuple
    input_name: str = "u"

    @property
    def n(self):
        return len(self.state_names)

    def variable_names(self):
        return tuple(self.state_names) + (self.input_name,)

    def raw_polynomials(self):
        """Ground truth as one exponent-dict polynomial per state."""
        out = []
        for terms in self.rhs:
            poly = {}
            for coef, exps in terms:
                exps = tuple(exps)
                poly[exps] = poly.get(exps, 0.0) + float(coef)
            out.append(poly)
        return out

    def fully_representable(self, max_total_degree=2, exponent_min=-2,
                            exponent_max=2):
        """Whether every true term exists in a power-product library
        with the given exponent constraints."""
        for poly in self.raw_polynomials():
            for exps in poly:
                deg = sum(abs(e) for e in exps)
                if deg > max_total_degree:
                    return False
                if any(e < exponent_min or e > exponent_max for e in exps):
                    return False
        return True

    def truth_manifest(self):
        names = self.variable_names()
        states = []
        for state, poly in zip(self.state_names, self.raw_polynomials()):
            states.append({
                "state": state,
                "terms": [{"exponents": list(e), "coefficient": c,
                           "display": _power_display(e, names)}
                          for e, c in sorted(poly.items())],
            })
        return {
            "format": "odefind-truth",
            "plant": self.name,
            "state_names": list(self.state_names),
            "input_name": self.input_name,
            "fully_representable": self.fully_representable(),
            "states": states,
        }

    def _flattened(self):
        coefs, exps, owner = [], [], []
        for i, terms in enumerate(self.rhs):
            for c, e in terms:
                coefs.append(float(c))
                exps.append(tuple(e))
                owner.append(i)
        C = np.zeros((self.n, len(coefs)))
        C[owner, np.arange(len(coefs))] = coefs
        return C, np.array(exps, dtype=float)

    def rhs_values(self, states, u):
        """True derivatives along a trajectory (m x n states, m inputs)."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        Z = np.column_stack([states, np.asarray(u, dtype=float).reshape(-1, 1)])
        C, E = self._flattened()
        monos = np.stack([np.prod(Z ** E[t], axis=1) for t in range(E.shape[0])])
        return (C @ monos).T


def simulate(spec, signal, dt, noise_sigma=0.0, seed=0):
    """Fixed-step RK4 integration of a plant under a forcing signal.

    The signal is evaluated exactly at RK4 substeps. Optional
    measurement noise (standard deviation noise_sigma times each
    column's clean standard deviation) is added to the states after
    integration; the input column stays exact.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    span = signal.span
    m = round(span / dt) + 1
    times = np.arange(m) * dt
    u_half = signal.sample(np.minimum(np.arange(2 * m - 1) * (dt / 2.0), span))
    C, E = spec._flattened()
    n = spec.n

    def f(x, u):
        z = np.append(x, u)
        return C @ np.prod(z ** E, axis=1)

    X = np.empty((m, n))
    x = np.array(spec.x0, dtype=float)
    X[0] = x
    for k in range(m - 1):
        u0, um, u1 = u_half[2 * k], u_half[2 * k + 1], u_half[2 * k + 2]
        k1 = f(x, u0)
        k2 = f(x + 0.5 * dt * k1, um)
        k3 = f(x + 0.5 * dt * k2, um)
        k4 = f(x + dt * k3, u1)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_LIMIT:
            raise DivergenceError(
                f"plant {spec.name!r} diverged at t={times[k + 1]:.4g}",
                time=float(times[k + 1]))
        X[k + 1] = x
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        X = X + rng.normal(0.0, noise_sigma, X.shape) * X.std(axis=0, ddof=0)
    return TimeSeriesDataset(
        names=spec.state_names, times=times, states=X,
        input=u_half[::2], dt=dt, input_name=spec.input_name)


FORCED_LINEAR_2 = PlantSpec(
    name="forced-linear-2",
    state_names=("x1", "x2"),
    x0=(0.0, 0.0),
    rhs=(
        ((1.0, (0, 1, 0)),),
        ((-1.0, (1, 0, 0)), (-0.1, (0, 1, 0)), (0.002, (0, 0, 1))),
    ),
    train_bounds=(1000.0, 3000.0),
    outside_bounds=(3000.0, 4000.0),
)

FORCED_VANDERPOL = PlantSpec(
    name="forced-vanderpol",
    state_names=("x1", "x2"),
    x0=(1.0, 0.0),
    rhs=(
        ((1.0, (0, 1, 0)),),
        ((1.0, (0, 1, 0)), (-1.0, (2, 1, 0)), (-1.0, (1, 0, 0)),
         (0.002, (0, 0, 1))),
    ),
    train_bounds=(1000.0, 3000.0),
    outside_bounds=(3000.0, 4000.0),
)

# Mixing network: an input-forced counter-coupled pair feeding two slow
# tanks, one through a product coupling. Coefficients are chosen so
# every true term contributes well above the recovery floor and no
# state is a near-copy of another (see the builtin docstring).
MIX_CASCADE_4 = PlantSpec(
    name="mix-cascade-4",
    state_names=("c1", "c2", "c3", "c4"),
    x0=(0.5, -1.0, 1.0, 0.3),
    rhs=(
        ((0.002, (0, 0, 0, 0, 1)), (-4.0, (0, 0, 0, 0, 0)),
         (-0.4, (1, 0, 0, 0, 0)), (-0.3, (0, 1, 0, 0, 0))),
        ((0.5, (1, 0, 0, 0, 0)), (-0.2, (0, 1, 0, 0, 0)),
         (-0.08, (1, 1, 0, 0, 0))),
        ((0.05, (0, 1, 0, 0, 0)), (-0.08, (0, 0, 1, 0, 0))),
        ((0.03, (1, 0, 1, 0, 0)), (-0.1, (0, 0, 0, 1, 0))),
    ),
    train_bounds=(1000.0, 3000.0),
    outside_bounds=(3000.0, 4000.0),
)


def builtin_plants():
    """The bundled surrogate plants.

    forced-linear-2 and mix-cascade-4 have all true terms inside the
    default degree-2 library (recovery-test eligible); forced-vanderpol
    contains a cubic term and is flagged not fully representable, for
    misspecification experiments.
    """
    return {p.name: p for p in (FORCED_LINEAR_2, FORCED_VANDERPOL,
                                MIX_CASCADE_4)}


def get_plant(name):
    plants = builtin_plants()
    if name not in plants:
        raise ParameterError(
            f"unknown plant {name!r}; available: {sorted(plants)}")
    return plants[name]


def write_truth_manifest(spec, path):
    with open(path, "w") as fh:
        json.dump(spec.truth_manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
