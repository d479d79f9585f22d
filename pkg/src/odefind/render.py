"""Render discovered ODEs as readable equations.

One line per state: `d<name>/dt = c1 term1 + c2 term2 + ...` with
coefficients to four significant digits, terms in canonical library
order and zero coefficients omitted. States with an all-zero column
render as `d<name>/dt = 0`.
"""
from __future__ import annotations

import numpy as np


def _fmt_coef(value):
    return f"{abs(value):.4g}"


def render_equations(model):
    lines = []
    names = model.library.display_names()
    for i, state in enumerate(model.state_names):
        col = model.xi[:, i]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            lines.append(f"d{state}/dt = 0")
            continue
        parts = []
        for j in nz:
            coef = col[j]
            term = names[j]
            body = _fmt_coef(coef) if term == "1" else f"{_fmt_coef(coef)} {term}"
            if not parts:
                parts.append(body if coef >= 0 else f"-{body}")
            else:
                parts.append(f"{'+' if coef >= 0 else '-'} {body}")
        lines.append(f"d{state}/dt = " + " ".join(parts))
    return "\n".join(lines) + "\n"
