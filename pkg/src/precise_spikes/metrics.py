"""
Spike-train filtering, van Rossum distance and classification scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ClassificationOutcome:
    correct: bool
    per_spike_errors: tuple = field(default=())


def filtered_train_value(train, tau_q: float, t):
    """
    Unit-amplitude exponentially filtered spike train evaluated at ``t``.

    Only spikes at or before ``t`` contribute.
    """
    if tau_q <= 0:
        raise ValueError('tau_q must be positive')
    train = np.asarray(train, dtype=float).reshape(-1)
    t = np.asarray(t, dtype=float)
    lag = t[..., None] - train
    vals = np.where(lag >= 0, np.exp(-np.maximum(lag, 0.0) / tau_q), 0.0)
    return vals.sum(axis=-1)[()]


def _pair_sum(a, b, tau_q):
    if a.size == 0 or b.size == 0:
        return 0.0
    return np.exp(-np.abs(a[:, None] - b[None, :]) / tau_q).sum()


def vrd(a, b, tau_q: float = 10.0) -> float:
    """
    van Rossum distance between two spike trains.

    Normalised so that a lone unmatched spike costs 0.5 and two single spikes
    7 ms apart (tau_q = 10 ms) are about 0.5 apart.
    """
    if tau_q <= 0:
        raise ValueError('tau_q must be positive')
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    d = 0.5 * (_pair_sum(a, a, tau_q) + _pair_sum(b, b, tau_q)
               - 2.0 * _pair_sum(a, b, tau_q))
    # cancellation can leave a tiny negative residue
    return max(float(d), 0.0)


def classify(actual, target, precision: float) -> ClassificationOutcome:
    """
    Correct iff spike counts match and each actual spike lies within
    ``precision`` ms of its target, pairing spikes in sorted order.
    """
    if precision <= 0:
        raise ValueError('precision must be positive')
    actual = np.sort(np.asarray(actual, dtype=float).reshape(-1))
    target = np.sort(np.asarray(getattr(target, 'train', target),
                                dtype=float).reshape(-1))
    if actual.size != target.size:
        return ClassificationOutcome(False)
    errors = np.abs(actual - target)
    # tolerate float noise from grid times such as 100.5 = 1005 * 0.1
    ok = bool(np.all(errors <= precision + 1e-9))
    return ClassificationOutcome(ok, tuple(errors.tolist()))


def performance(outcomes: Sequence[ClassificationOutcome]) -> float:
    """Percentage of correct classifications."""
    if len(outcomes) == 0:
        raise ValueError('performance of an empty outcome list is undefined')
    return 100.0 * sum(o.correct for o in outcomes) / len(outcomes)
