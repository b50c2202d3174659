# src/core/statistics/metrics.py
"""Run metrics computed from a trace."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np

from ..errors import ConfigError

METRICS_SCHEMA = 'mcpp-metrics/1'

# Metrics that can be normalized against a baseline run
RATIO_METRICS = ('peak_system_power', 'max_peak_core_power', 'total_energy', 'max_temperature')


@dataclass
class Metrics:
    peak_system_power: float = 0.0
    peak_core_power: Dict[int, float] = field(default_factory=dict)
    peak_cluster_power: Dict[int, float] = field(default_factory=dict)
    total_energy: float = 0.0
    max_temperature: float = 0.0
    deadline_miss_count: int = 0
    lc_dropped_count: int = 0
    mode_switch_count: int = 0
    executed_tasks: int = 0
    slack_events: int = 0
    vf_switches: int = 0
    remaps: int = 0
    makespan: float = 0.0
    pairing: Dict[str, object] = field(default_factory=dict)

    @property
    def max_peak_core_power(self) -> float:
        return max(self.peak_core_power.values(), default=0.0)

    def value(self, name: str) -> float:
        return float(getattr(self, name))

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['schema'] = METRICS_SCHEMA
        data['peak_core_power'] = {str(k): v for k, v in sorted(self.peak_core_power.items())}
        data['peak_cluster_power'] = {str(k): v for k, v in sorted(self.peak_cluster_power.items())}
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> 'Metrics':
        values = dict(data)
        schema = values.pop('schema', METRICS_SCHEMA)
        if schema != METRICS_SCHEMA:
            raise ConfigError(f"Unsupported metrics schema {schema!r}")
        unknown = set(values) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown metrics fields: {sorted(unknown)}")
        for key in ('peak_core_power', 'peak_cluster_power'):
            if key in values:
                values[key] = {int(k): float(v) for k, v in values[key].items()}
        return cls(**values)

    def save(self, path: str) -> str:
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write('\n')
        return path

    @classmethod
    def load(cls, path: str) -> 'Metrics':
        with open(path, 'r', encoding='utf-8') as fh:
            return cls.from_dict(json.load(fh))

    def summary_line(self) -> str:
        return (f"peak={self.peak_system_power:.4f}W energy={self.total_energy:.4f}J "
                f"Tmax={self.max_temperature:.2f}C misses={self.deadline_miss_count} "
                f"dropped={self.lc_dropped_count} switches={self.mode_switch_count}")


def peak_of_sum(intervals: Iterable[Tuple[float, float, float]]) -> float:
    """Exact maximum of a sum of piecewise-constant (t0, t1, power) contributions."""
    items = [(t0, t1, p) for t0, t1, p in intervals if t1 > t0]
    if not items:
        return 0.0
    times = np.array([t for t0, t1, _ in items for t in (t0, t1)])
    deltas = np.array([d for _, _, p in items for d in (p, -p)])
    order = np.lexsort((deltas, times))   # ends before starts at equal times
    return float(max(0.0, np.cumsum(deltas[order]).max()))


def summarize(trace) -> Metrics:
    """All metrics of a trace; an empty trace gives all-zero metrics."""
    metrics = Metrics(pairing=dict(trace.meta))
    if not trace.segments and not trace.events:
        return metrics

    segments = trace.segments
    metrics.peak_core_power = {core: 0.0 for core in trace.cores}
    for seg in segments:
        metrics.peak_core_power[seg.core] = max(metrics.peak_core_power.get(seg.core, 0.0), seg.power)
    metrics.peak_system_power = peak_of_sum((s.t0, s.t1, s.power) for s in segments)
    for cluster, cores in sorted(trace.clusters.items()):
        members = set(cores)
        metrics.peak_cluster_power[cluster] = peak_of_sum(
            (s.t0, s.t1, s.power) for s in segments if s.core in members)
    metrics.total_energy = float(sum(s.energy for s in segments))

    if not trace.samples.empty and trace.samples['temp_c'].notna().any():
        metrics.max_temperature = float(trace.samples['temp_c'].max())

    for event in trace.events:
        payload = event.payload
        if event.kind == 'task_end':
            if payload.get('aborted'):
                continue
            metrics.executed_tasks += 1
            metrics.deadline_miss_count += int(bool(payload.get('missed')))
            metrics.makespan = max(metrics.makespan, event.time)
        elif event.kind == 'mode_switch':
            metrics.mode_switch_count += 1
            metrics.lc_dropped_count += len(payload.get('dropped', ()))
        elif event.kind == 'slack':
            metrics.slack_events += 1
        elif event.kind == 'vf_switch':
            metrics.vf_switches += 1
        elif event.kind == 'remap':
            metrics.remaps += 1
    return metrics


def metrics_frame(runs: Iterable[Metrics]) -> List[Dict]:
    """Flat records for tabular reports."""
    rows = []
    for m in runs:
        row = {k: v for k, v in m.pairing.items()}
        row.update({
            'peak_system_power': m.peak_system_power,
            'max_peak_core_power': m.max_peak_core_power,
            'total_energy': m.total_energy,
            'max_temperature': m.max_temperature,
            'deadline_miss_count': m.deadline_miss_count,
            'lc_dropped_count': m.lc_dropped_count,
            'mode_switch_count': m.mode_switch_count,
        })
        rows.append(row)
    return rows
