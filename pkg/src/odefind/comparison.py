"""Structural comparison of discovered models across systems.

Supports are sets of canonical term display names with coefficients
discarded; membership means an exactly nonzero coefficient. Pairwise
counts follow the row-oriented convention: common_terms(a, b) reports
|a intersect b| against |a|, the row system's own total.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ComparabilityError, ParameterError


def library_digest(library):
    payload = json.dumps(library.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class TermSupport:
    system_id: str
    state: str
    terms: frozenset
    library_key: str

    def __len__(self):
        return len(self.terms)


def support_of(model, state_index, system_id="model"):
    """Terms with exactly nonzero coefficients for one state."""
    if not 0 <= state_index < model.n:
        raise ParameterError(f"state index {state_index} out of range")
    names = model.library.display_names()
    nz = np.flatnonzero(model.xi[:, state_index])
    return TermSupport(
        system_id=system_id,
        state=model.state_names[state_index],
        terms=frozenset(names[j] for j in nz),
        library_key=library_digest(model.library),
    )


def _check_comparable(a, b):
    if a.library_key != b.library_key:
        raise ComparabilityError(
            f"supports from different library manifests "
            f"({a.system_id} vs {b.system_id})")
    if a.state != b.state:
        raise ComparabilityError(
            f"supports for different states ({a.state!r} vs {b.state!r})")


def common_terms(a, b):
    """(|a intersect b|, |a|), oriented from a's row."""
    _check_comparable(a, b)
    return len(a.terms & b.terms), len(a.terms)


def excluding_common(supports, idx):
    """Terms common to every system except supports[idx].

    Returns (count, |supports[idx]|): the row convention again, with
    the row system's own support size as the total.
    """
    others = [s for i, s in enumerate(supports) if i != idx]
    if len(others) < 1:
        raise ParameterError("need at least 2 systems")
    for s in others:
        _check_comparable(supports[idx], s)
    inter = frozenset.intersection(*[s.terms for s in others])
    return len(inter), len(supports[idx].terms)


def repetition_census(supports, order=None):
    """(term, repeat count) forall terms present in >= 1 system.

    Sorted by count descending, then by canonical library order when
    `order` (a display-name list) is given, else lexicographically.
    """
    if len(supports) < 2:
        raise ParameterError("census needs at least 2 systems")
    for s in supports[1:]:
        _check_comparable(supports[0], s)
    counts = {}
    for s in supports:
        for t in s.terms:
            counts[t] = counts.get(t, 0) + 1
    if order is not None:
        rank = {name: i for i, name in enumerate(order)}
        key = lambda item: (-item[1], rank.get(item[0], len(rank)), item[0])
    else:
        key = lambda item: (-item[1], item[0])
    return sorted(counts.items(), key=key)


def census_at_threshold(census, threshold):
    return [(t, c) for t, c in census if c >= threshold]


def render_pairwise_table(supports):
    """Appendix-style table: rows are systems; the first column pair is
    the terms common to all other systems, then one pair per column
    system."""
    ids = [s.system_id for s in supports]
    headers = ["", "Excl-Common", "Excl-Total"]
    for other in ids:
        headers += [f"{other}-Common", f"{other}-Total"]
    rows = []
    for i, a in enumerate(supports):
        exc_c, exc_t = excluding_common(supports, i)
        cells = [a.system_id, str(exc_c), str(exc_t)]
        for j, b in enumerate(supports):
            if j == i:
                cells += ["", ""]
            else:
                c, t = common_terms(a, b)
                cells += [str(c), str(t)]
        rows.append(cells)
    widths = [max(len(headers[c]), *(len(r[c]) for r in rows))
              for c in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[c]) if c == 0 else h.rjust(widths[c])
                       for c, h in enumerate(headers))]
    for r in rows:
        lines.append("  ".join(r[0].ljust(widths[0]) if c == 0
                               else r[c].rjust(widths[c])
                               for c in range(len(headers))))
    return "\n".join(lines) + "\n"


def render_census_table(census):
    """Two columns: terms retained in 2+ systems and in 3+ systems."""
    two = [t for t, _ in census_at_threshold(census, 2)]
    three = [t for t, _ in census_at_threshold(census, 3)]
    w = max([len("2 or more")] + [len(t) for t in two])
    lines = [f"{'2 or more'.ljust(w)}  3 or more"]
    for i in range(max(len(two), len(three))):
        left = two[i] if i < len(two) else ""
        right = three[i] if i < len(three) else ""
        lines.append(f"{left.ljust(w)}  {right}".rstrip())
    return "\n".join(lines) + "\n"
