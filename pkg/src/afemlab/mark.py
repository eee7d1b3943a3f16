"""Marking strategies: bulk-chasing (Dorfler) and maximum.

Both satisfy the abstract marking axiom: no unmarked element carries an
indicator above the largest marked one (realized with the identity
threshold function).  Dorfler selection is greedy over descending
indicator values with index tie-break, which yields a minimal-cardinality
marked set; the inequality is enforced on p-th powers to avoid root
cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimate import IndicatorField


@dataclass(frozen=True)
class MarkConfig:
    strategy: str = "dorfler"    # "dorfler" | "maximum"
    theta: float = 0.5           # dorfler bulk fraction, in (0, 1]
    mu: float = 0.5              # maximum-strategy fraction, in (0, 1]

    def __post_init__(self):
        if self.strategy not in ("dorfler", "maximum"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must be in (0, 1]")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("mu must be in (0, 1]")

    def select(self, field):
        if self.strategy == "dorfler":
            return dorfler(field, self.theta)
        return maximum_strategy(field, self.mu)


def _eta_p(field):
    if isinstance(field, IndicatorField):
        return field.eta.astype(float) ** field.p, field.p
    values = np.asarray(field, dtype=float)
    return values ** 2.0, 2.0


def dorfler(field, theta):
    """Minimal marked set with eta(M)^p >= theta^p eta(T)^p.

    Returns indices in greedy (descending indicator) order, so the last
    entry is the element whose removal breaks the inequality.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    powers, p = _eta_p(field)
    order = np.argsort(-powers, kind="stable")
    cum = np.cumsum(powers[order])
    total = cum[-1] if cum.size else 0.0
    if total == 0.0:
        return np.empty(0, dtype=np.int64)
    target = float(theta) ** p * total
    k = int(np.searchsorted(cum, target) + 1)
    k = min(k, int(np.count_nonzero(powers)))
    return order[:k].astype(np.int64)


def maximum_strategy(field, mu):
    """All elements within a fraction mu of the largest indicator.

    An all-zero field marks nothing (there is nothing to chase and the
    adaptive loop stops on a vanishing estimator anyway).
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must be in (0, 1]")
    values = field.eta if isinstance(field, IndicatorField) \
        else np.asarray(field, dtype=float)
    vmax = values.max() if values.size else 0.0
    if vmax == 0.0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(values >= mu * vmax).astype(np.int64)


def verify_mark_axiom(field, marked):
    """Check max over unmarked <= max over marked (empty max is 0).

    Returns (ok, witness): the witness is the offending unmarked element
    when the axiom fails, else None.
    """
    values = field.eta if isinstance(field, IndicatorField) \
        else np.asarray(field, dtype=float)
    marked = np.asarray(marked, dtype=np.int64)
    mask = np.zeros(values.shape[0], dtype=bool)
    mask[marked] = True
    marked_max = values[mask].max() if marked.size else 0.0
    unmarked = np.flatnonzero(~mask)
    if unmarked.size == 0:
        return True, None
    worst = unmarked[np.argmax(values[unmarked])]
    if values[worst] <= marked_max:
        return True, None
    return False, int(worst)


def dorfler_margin(field, marked, theta):
    """Certificate value eta(M)^p - theta^p eta(T)^p (want >= -1e-12)."""
    powers, p = _eta_p(field)
    total = float(powers.sum())
    got = float(powers[np.asarray(marked, dtype=np.int64)].sum())
    return got - float(theta) ** p * total


def dorfler_is_minimal(field, marked, theta):
    """True when dropping the last-added element breaks the bulk bound."""
    marked = np.asarray(marked, dtype=np.int64)
    if marked.size == 0:
        return True
    return dorfler_margin(field, marked[:-1], theta) < 0.0
