# src/core/statistics/comparison.py
"""Paired normalization of runs against a baseline and aggregation with confidence intervals."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from ..errors import PairingError
from .metrics import RATIO_METRICS, Metrics

logger = logging.getLogger('MCPeakPower')

PAIRING_KEYS = ('graph', 'platform', 'seed', 'periods')


@dataclass(frozen=True)
class ComparisonReport:
    """Ratios run_b / run_a for every normalizable metric."""
    ratios: Mapping[str, float]
    baseline: str = ''
    candidate: str = ''
    pairing: Mapping[str, object] = field(default_factory=dict)

    def __getitem__(self, metric: str) -> float:
        return self.ratios[metric]


def _ratio(a: float, b: float) -> float:
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def compare(run_a: Metrics, run_b: Metrics) -> ComparisonReport:
    """Normalize ``run_b`` against ``run_a``; both must share graph, platform and seed."""
    for key in PAIRING_KEYS:
        if run_a.pairing.get(key) != run_b.pairing.get(key):
            raise PairingError(f"Runs are not paired: {key} differs "
                               f"({run_a.pairing.get(key)!r} vs {run_b.pairing.get(key)!r})")
    ratios = {name: _ratio(run_a.value(name), run_b.value(name)) for name in RATIO_METRICS}
    return ComparisonReport(ratios, str(run_a.pairing.get('policy', '')), str(run_b.pairing.get('policy', '')),
                            {k: run_a.pairing.get(k) for k in PAIRING_KEYS})


def confidence_interval(values: Sequence[float], level: float = 0.95) -> Dict[str, float]:
    """Mean with a Student-t interval; a single value gives a zero-width interval."""
    data = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    n = data.size
    if n == 0:
        return {'mean': float('nan'), 'std': float('nan'), 'ci_low': float('nan'), 'ci_high': float('nan'), 'n': 0}
    mean = float(data.mean())
    if n == 1:
        return {'mean': mean, 'std': 0.0, 'ci_low': mean, 'ci_high': mean, 'n': 1}
    std = float(data.std(ddof=1))
    half = float(stats.t.ppf(0.5 + level / 2.0, n - 1)) * std / math.sqrt(n)
    return {'mean': mean, 'std': std, 'ci_low': mean - half, 'ci_high': mean + half, 'n': int(n)}


def impact_label(stat: Mapping[str, float]) -> str:
    """Direction of a ratio interval relative to 1.0."""
    if stat['n'] == 0:
        return 'No data'
    if stat['ci_high'] < 1.0:
        return 'Reduced'
    if stat['ci_low'] > 1.0:
        return 'Increased'
    return 'No change'


class ComparisonCalculator:
    """Aggregates paired comparison reports per metric."""

    def __init__(self, level: float = 0.95):
        self.level = level
        self.logger = logging.getLogger('MCPeakPower')

    def calculate(self, reports: Iterable[ComparisonReport]) -> Dict:
        reports = list(reports)
        self.logger.debug(f"Aggregating {len(reports)} paired comparisons")
        try:
            rows = []
            for metric in RATIO_METRICS:
                stat = confidence_interval([r.ratios[metric] for r in reports], self.level)
                stat.update({'metric': metric, 'impact': impact_label(stat)})
                rows.append(stat)
            table = pd.DataFrame(rows, columns=['metric', 'mean', 'std', 'ci_low', 'ci_high', 'n', 'impact'])
            return {
                'table': table,
                'n_pairs': len(reports),
                'status': 'success',
                'interpretation': self._get_interpretation(table),
            }
        except Exception as e:
            self.logger.error(f"Error aggregating comparisons: {str(e)}", exc_info=True)
            return {'status': 'error', 'message': str(e)}

    def _get_interpretation(self, table: pd.DataFrame) -> str:
        parts = []
        for row in table.itertuples():
            if row.n == 0:
                continue
            change = (1.0 - row.mean) * 100.0
            parts.append(f"{row.metric}: {change:+.1f}% reduction ({row.impact})")
        return '; '.join(parts) if parts else 'No paired runs'


def aggregate(reports: Iterable[ComparisonReport], level: float = 0.95) -> pd.DataFrame:
    result = ComparisonCalculator(level).calculate(reports)
    if result['status'] != 'success':
        raise PairingError(result['message'])
    return result['table']


def paired_reduction(proposed: Sequence[Metrics], immediate_next: Sequence[Metrics],
                     level: float = 0.95) -> pd.DataFrame:
    """Relative reduction 1 - proposed / immediate-next per metric, with a Student-t interval.

    Runs are paired position by position and must share graph, platform and seed.
    ``impact`` reads 'Reduced' when the whole interval lies above zero.
    """
    if len(proposed) != len(immediate_next):
        raise PairingError(f"Cannot pair {len(proposed)} runs with {len(immediate_next)} runs")
    reports = [compare(base, run) for run, base in zip(proposed, immediate_next)]
    rows = []
    for metric in RATIO_METRICS:
        stat = confidence_interval([1.0 - r.ratios[metric] for r in reports], level)
        if stat['n'] == 0:
            impact = 'No data'
        elif stat['ci_low'] > 0.0:
            impact = 'Reduced'
        elif stat['ci_high'] < 0.0:
            impact = 'Increased'
        else:
            impact = 'No change'
        rows.append({'metric': metric, **stat, 'impact': impact})
    return pd.DataFrame(rows, columns=['metric', 'mean', 'std', 'ci_low', 'ci_high', 'n', 'impact'])
