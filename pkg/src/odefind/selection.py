"""Model selection along a regularization path.

Two rules: the cross-validation peak (largest CV R^2), and the
complexity-penalized score

    score = score_alpha * k - score_beta * ln(R^2_CV)

maximized over entries with positive CV R^2. The score weights are
signed and user-supplied; the shipped defaults (score_alpha=-0.05,
score_beta=-1.0) make higher scores favor sparse, accurate models. All
ties break toward the larger lambda, i.e. the sparser end of the path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SelectionError
from .regression import r_squared

DEFAULT_SCORE_ALPHA = -0.05
DEFAULT_SCORE_BETA = -1.0


@dataclass
class SelectionReport:
    state_index: int
    method: str
    chosen_index: int
    chosen_lambda: float
    chosen_term_count: int
    cv_r2: float
    score: float = None
    peak_found: bool = None
    excluded: tuple = ()

    def to_dict(self):
        return {
            "state_index": self.state_index,
            "method": self.method,
            "chosen_index": self.chosen_index,
            "chosen_lambda": self.chosen_lambda,
            "chosen_term_count": self.chosen_term_count,
            "cv_r2": self.cv_r2,
            "score": self.score,
            "peak_found": self.peak_found,
            "excluded": [list(e) for e in self.excluded],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            state_index=d["state_index"], method=d["method"],
            chosen_index=d["chosen_index"], chosen_lambda=d["chosen_lambda"],
            chosen_term_count=d["chosen_term_count"], cv_r2=d["cv_r2"],
            score=d["score"], peak_found=d["peak_found"],
            excluded=tuple(tuple(e) for e in d["excluded"]),
        )


def cv_r2(entry, theta_cv, ydot_cv):
    """CV R^2 of one path entry's coefficients on held-out rows."""
    return r_squared(ydot_cv, np.asarray(theta_cv) @ entry.coefficients)


def fill_cv(path, theta_cv, ydot_cv):
    """Populate cv_r2 on every entry of a path; returns the path."""
    for entry in path.entries:
        entry.cv_r2 = cv_r2(entry, theta_cv, ydot_cv)
    return path


def _require_cv(path, minimum=1):
    filled = [e for e in path.entries if e.cv_r2 is not None]
    if len(filled) < minimum:
        raise ParameterError(
            f"path needs >= {minimum} entries with cv_r2 filled, "
            f"has {len(filled)}")


def select_cv_peak(path):
    """Entry with maximal CV R^2; first of any ties (larger lambda).

    peak_found is False when the maximum sits at the smallest lambda,
    the regime where accuracy keeps increasing to the end of the path.
    """
    _require_cv(path, minimum=3)
    cvs = [e.cv_r2 for e in path.entries]
    best = int(np.argmax(cvs))
    entry = path.entries[best]
    return SelectionReport(
        state_index=path.state_index,
        method="cv-peak",
        chosen_index=best,
        chosen_lambda=entry.lambda_,
        chosen_term_count=entry.term_count,
        cv_r2=entry.cv_r2,
        peak_found=best != len(path.entries) - 1,
    )


def complexity_score(k, cv_r2_value, score_alpha, score_beta):
    """score_alpha * k - score_beta * ln(cv_r2)."""
    if cv_r2_value <= 0:
        raise ParameterError(
            f"score undefined for cv_r2 <= 0 (got {cv_r2_value})")
    return score_alpha * k - score_beta * math.log(cv_r2_value)


def select_by_score(path, score_alpha=DEFAULT_SCORE_ALPHA,
                    score_beta=DEFAULT_SCORE_BETA):
    """Entry maximizing the complexity score over entries with cv_r2 > 0.

    Entries with cv_r2 <= 0 are excluded (never clamped) and listed in
    the report with the reason.
    """
    _require_cv(path)
    best_idx, best_score, excluded = None, None, []
    for idx, entry in enumerate(path.entries):
        if entry.cv_r2 is None or entry.cv_r2 <= 0:
            excluded.append((entry.lambda_, f"cv_r2 {entry.cv_r2} <= 0"))
            continue
        s = complexity_score(entry.term_count, entry.cv_r2, score_alpha,
                             score_beta)
        if best_score is None or s > best_score:
            best_idx, best_score = idx, s
    if best_idx is None:
        raise SelectionError("no path entry has cv_r2 > 0")
    entry = path.entries[best_idx]
    return SelectionReport(
        state_index=path.state_index,
        method="score",
        chosen_index=best_idx,
        chosen_lambda=entry.lambda_,
        chosen_term_count=entry.term_count,
        cv_r2=entry.cv_r2,
        score=best_score,
        excluded=tuple(excluded),
    )


def select(path, method, score_alpha=DEFAULT_SCORE_ALPHA,
           score_beta=DEFAULT_SCORE_BETA):
    if method == "cv-peak":
        return select_cv_peak(path)
    if method == "score":
        return select_by_score(path, score_alpha, score_beta)
    raise ParameterError(f"unknown selection method {method!r}")
