"""Candidate-function library: generation and evaluation.

Terms are power products of the state variables and input with integer
exponents, plus optional elementwise unary functions. The ordering is
deterministic: constant first, then power products in graded
lexicographic order of their exponent vectors, then unary terms grouped
by function and variable index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParameterError, SchemaError

UNARY_FNS = ("sin", "cos", "log-abs", "exp", "sqrt-abs")
CLAMP = 1e-8


@dataclass(frozen=True)
class TermDescriptor:
    """One candidate function.

    kind is "power-product" (exponents set; the constant term is the
    all-zero vector) or "unary" (unary_fn and var_index set).
    """

    kind: str
    display: str
    exponents: tuple = None
    unary_fn: str = None
    var_index: int = None

    def to_dict(self):
        d = {"kind": self.kind, "display": self.display}
        if self.kind == "power-product":
            d["exponents"] = list(self.exponents)
        else:
            d["unary_fn"] = self.unary_fn
            d["var_index"] = self.var_index
        return d

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "power-product":
            return cls(kind="power-product", display=d["display"],
                       exponents=tuple(d["exponents"]))
        return cls(kind="unary", display=d["display"],
                   unary_fn=d["unary_fn"], var_index=d["var_index"])


def _power_display(exponents, names):
    parts = []
    for name, e in zip(names, exponents):
        if e == 0:
            continue
        parts.append(name if e == 1 else f"{name}^{e}")
    return " ".join(parts) if parts else "1"


@dataclass(frozen=True)
class CandidateLibrary:
    """Ordered candidate terms over named variables (states then input)."""

    variable_names: tuple
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "terms", tuple(self.terms))
        seen = set()
        for t in self.terms:
            if t.display in seen:
                raise SchemaError(f"duplicate term display name {t.display!r}")
            seen.add(t.display)

    @property
    def k(self):
        return len(self.terms)

    def display_names(self):
        return [t.display for t in self.terms]

    def constant_index(self):
        """Index of the constant term, or None."""
        for i, t in enumerate(self.terms):
            if t.kind == "power-product" and all(e == 0 for e in t.exponents):
                return i
        return None

    def transform(self, Z):
        """Evaluate every term on an m x n_vars value matrix."""
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != len(self.variable_names):
            raise SchemaError(
                f"expected m x {len(self.variable_names)} values, got {Z.shape}")
        # clamp only feeds negative exponents and log-abs
        Zc = np.where(np.abs(Z) < CLAMP, np.where(Z < 0, -CLAMP, CLAMP), Z)
        cols = np.empty((Z.shape[0], self.k))
        for j, t in enumerate(self.terms):
            if t.kind == "power-product":
                col = np.ones(Z.shape[0])
                for v, e in enumerate(t.exponents):
                    if e > 0:
                        col = col * Z[:, v] ** e
                    elif e < 0:
                        col = col * Zc[:, v] ** float(e)
            elif t.unary_fn == "sin":
                col = np.sin(Z[:, t.var_index])
            elif t.unary_fn == "cos":
                col = np.cos(Z[:, t.var_index])
            elif t.unary_fn == "log-abs":
                col = np.log(np.abs(Zc[:, t.var_index]))
            elif t.unary_fn == "exp":
                col = np.exp(Z[:, t.var_index])
            elif t.unary_fn == "sqrt-abs":
                col = np.sqrt(np.abs(Z[:, t.var_index]))
            else:
                raise EvaluationError(f"unknown unary function {t.unary_fn!r}")
            if not np.all(np.isfinite(col)):
                raise EvaluationError(
                    f"term {t.display!r} evaluated to non-finite values")
            cols[:, j] = col
        return cols

    def to_dict(self):
        return {"variable_names": list(self.variable_names),
                "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["variable_names"]),
                   tuple(TermDescriptor.from_dict(t) for t in d["terms"]))


def enumerate_exponents(n_vars, max_total_degree, exponent_min, exponent_max):
    """All nonzero exponent vectors with entries in range and total
    absolute degree <= max_total_degree, in graded lexicographic order."""
    vecs = []
    for e in itertools.product(range(exponent_min, exponent_max + 1),
                               repeat=n_vars):
        deg = sum(abs(v) for v in e)
        if 0 < deg <= max_total_degree:
            vecs.append((deg, e))
    vecs.sort()
    return [e for _, e in vecs]


def build_library(variable_names, max_total_degree=2, include_constant=True,
                  unary_fns=UNARY_FNS, exponent_min=-2, exponent_max=2):
    """Enumerate the candidate library for the given variables.

    Power products take every integer exponent vector with entries in
    [exponent_min, exponent_max] and total absolute degree at most
    max_total_degree; one unary term is added per (function, variable)
    pair. Pass unary_fns=() for a pure power-product library.
    """
    variable_names = tuple(variable_names)
    n_vars = len(variable_names)
    if n_vars < 1:
        raise ParameterError("need at least one variable")
    if exponent_min > 0 or exponent_max < 1:
        raise ParameterError("exponent range must allow at least [0, 1]")
    for fn in unary_fns:
        if fn not in UNARY_FNS:
            raise ParameterError(f"unknown unary function {fn!r}")
    terms = []
    if include_constant:
        zero = tuple([0] * n_vars)
        terms.append(TermDescriptor(kind="power-product", exponents=zero,
                                    display="1"))
    for e in enumerate_exponents(n_vars, max_total_degree, exponent_min,
                                 exponent_max):
        terms.append(TermDescriptor(
            kind="power-product", exponents=e,
            display=_power_display(e, variable_names)))
    for fn in UNARY_FNS:
        if fn not in unary_fns:
            continue
        for v, name in enumerate(variable_names):
            label = {"log-abs": "log", "sqrt-abs": "sqrt"}.get(fn, fn)
            terms.append(TermDescriptor(
                kind="unary", unary_fn=fn, var_index=v,
                display=f"{label}({name})"))
    return CandidateLibrary(variable_names=variable_names, terms=tuple(terms))


def evaluate_library(lib, ds):
    """Evaluate a library on a dataset (states plus input columns)."""
    if lib.variable_names != ds.variable_names():
        raise SchemaError(
            f"library variables {lib.variable_names} do not match dataset "
            f"variables {ds.variable_names()}")
    return lib.transform(ds.values())
