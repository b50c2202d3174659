# src/core/statistics/optimal_k.py
"""Look-ahead depth selection from a k sweep."""
from __future__ import annotations

from typing import Mapping, Sequence, Union

import numpy as np

from ..errors import DomainError

SweepValues = Union[float, Sequence[float]]


def sweep_means(sweep: Mapping[int, SweepValues]) -> dict:
    means = {}
    for k, values in sweep.items():
        data = np.atleast_1d(np.asarray(values, dtype=float))
        if data.size == 0:
            raise DomainError(f"No results for k={k}")
        means[int(k)] = float(data.mean())
    return means


def optimal_k(sweep: Mapping[int, SweepValues], tolerance: float = 1e-12) -> int:
    """k with the smallest mean normalized peak power; ties go to the smaller k."""
    if not sweep:
        raise DomainError("optimal_k needs a non-empty sweep")
    means = sweep_means(sweep)
    best_k = None
    for k in sorted(means):
        if best_k is None or means[k] < means[best_k] - tolerance:
            best_k = k
    return best_k
