"""Exponent-dict polynomials over the (states..., input) variables.

A polynomial is a dict mapping integer exponent tuples (one entry per
variable, nonnegative) to float coefficients. Used to move model
coefficients between raw and normalized coordinates: normalization is
an affine change of variables, so polynomial supports are not preserved
by it and must be mapped explicitly.
"""
from __future__ import annotations

from math import comb

import numpy as np


def substitute_affine(poly, scale, shift):
    """Substitute variable_j -> scale_j * variable_j + shift_j.

    Exact binomial expansion; requires nonnegative exponents. Terms
    whose coefficients cancel to exactly 0.0 are dropped.
    """
    scale = np.asarray(scale, dtype=float)
    shift = np.asarray(shift, dtype=float)
    out = {}
    for exps, coef in poly.items():
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}; cannot expand")
        partial = {tuple([0] * len(exps)): float(coef)}
        for j, ej in enumerate(exps):
            if ej == 0:
                continue
            grown = {}
            for i in range(ej + 1):
                w = comb(ej, i) * scale[j] ** i * shift[j] ** (ej - i)
                if w == 0.0:
                    continue
                for pe, pc in partial.items():
                    ne = list(pe)
                    ne[j] += i
                    ne = tuple(ne)
                    grown[ne] = grown.get(ne, 0.0) + pc * w
            partial = grown
        for pe, pc in partial.items():
            out[pe] = out.get(pe, 0.0) + pc
    return {e: c for e, c in out.items() if c != 0.0}


def to_normalized(poly, stats, state_index):
    """Map a raw-coordinate polynomial RHS into fit (normalized) coordinates.

    With x_j = scale_j * z_j + mean_j and the target scaled by
    1/scale_i, the returned polynomial gives d z_i/dt as a function of
    the normalized variables.
    """
    zpoly = substitute_affine(poly, stats.scales, stats.means)
    s = stats.scales[state_index]
    return {e: c / s for e, c in zpoly.items()}


def to_raw(poly, stats, state_index):
    """Inverse of `to_normalized`: z_j = x_j/scale_j - mean_j/scale_j."""
    raw = substitute_affine(poly, 1.0 / stats.scales,
                            -stats.means / stats.scales)
    s = stats.scales[state_index]
    return {e: c * s for e, c in raw.items()}


def evaluate(poly, Z):
    """Evaluate on an m x n_vars matrix of raw variable values."""
    Z = np.asarray(Z, dtype=float)
    out = np.zeros(Z.shape[0])
    for exps, coef in poly.items():
        term = np.full(Z.shape[0], coef)
        for j, ej in enumerate(exps):
            if ej:
                term = term * Z[:, j] ** ej
        out += term
    return out


def contribution_scales(poly, Z):
    """Standard deviation of each term's sample contribution.

    Raw coefficients have mixed units; the per-term contribution std
    over an actual trajectory is the scale-free way to ask whether a
    term matters.
    """
    Z = np.asarray(Z, dtype=float)
    out = {}
    for exps, coef in poly.items():
        mono = np.ones(Z.shape[0])
        for j, ej in enumerate(exps):
            if ej:
                mono = mono * Z[:, j] ** ej
        out[exps] = abs(coef) * float(mono.std())
    return out


def floored_support(poly, Z, floor_abs):
    """Non-constant exponent tuples whose contribution std >= floor_abs."""
    scales = contribution_scales(poly, Z)
    return {e for e, s in scales.items()
            if any(v != 0 for v in e) and s >= floor_abs}


def from_model_column(library, coefficients):
    """Exponent-dict polynomial of one model column.

    Fails if any unary or negative-exponent term carries a nonzero
    coefficient; only pure polynomial models can be mapped between
    coordinate systems exactly.
    """
    poly = {}
    n_vars = len(library.variable_names)
    for term, coef in zip(library.terms, coefficients):
        if coef == 0.0:
            continue
        if term.kind != "power-product" or any(e < 0 for e in term.exponents):
            raise ValueError(
                f"term {term.display!r} is not expandable to raw coordinates")
        exps = tuple(term.exponents)
        poly[exps] = poly.get(exps, 0.0) + float(coef)
    if not poly:
        poly[tuple([0] * n_vars)] = 0.0
    return poly
