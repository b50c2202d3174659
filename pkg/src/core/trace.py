# src/core/trace.py
"""Simulation trace: exact event records, exact power segments and 1 ms sampled series."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError
from .platform import Platform

TRACE_SCHEMA = 'mcpp-trace-events/1'
SAMPLE_COLUMNS = ['time_ms', 'core', 'task', 'freq_hz', 'power_w', 'temp_c']
EVENT_KINDS = ('task_start', 'task_end', 'slack', 'vf_switch', 'remap', 'mode_switch')
IDLE_TASK = -1
DEFAULT_SAMPLE_MS = 1.0

logger = logging.getLogger('MCPeakPower')


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str
    payload: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {'time': self.time, 'kind': self.kind, 'payload': dict(self.payload)}


@dataclass(frozen=True)
class PowerSegment:
    core: int
    t0: float
    t1: float
    power: float
    task: int = IDLE_TASK

    @property
    def energy(self) -> float:
        return self.power * (self.t1 - self.t0) / 1000.0


@dataclass(frozen=True)
class FreqSegment:
    cluster: int
    t0: float
    t1: float
    freq: int


class TraceRecorder:
    """Collects events and piecewise-constant power/frequency while a run progresses."""

    def __init__(self, platform: Platform,
                 on_segment: Optional[Callable[[PowerSegment], None]] = None):
        self.platform = platform
        self.on_segment = on_segment
        self.events: List[TraceEvent] = []
        self.segments: List[PowerSegment] = []
        self.freq_segments: List[FreqSegment] = []
        self._core_open: Dict[int, Tuple[float, float, int]] = {}
        self._freq_open: Dict[int, Tuple[float, int]] = {}
        self.end_time = 0.0

    def event(self, time: float, kind: str, **payload) -> None:
        if kind not in EVENT_KINDS:
            raise ConfigError(f"Unknown trace event kind {kind!r}")
        self.events.append(TraceEvent(time, kind, payload))
        self.end_time = max(self.end_time, time)

    def _close_core(self, core: int, time: float) -> None:
        opened = self._core_open.pop(core, None)
        if opened is None:
            return
        t0, power, task = opened
        if time > t0:
            segment = PowerSegment(core, t0, time, power, task)
            self.segments.append(segment)
            if self.on_segment is not None:
                self.on_segment(segment)
        self.end_time = max(self.end_time, time)

    def core_power(self, core: int, time: float, power: float, task: int = IDLE_TASK) -> None:
        opened = self._core_open.get(core)
        if opened is not None and opened[1] == power and opened[2] == task:
            return
        self._close_core(core, time)
        if power > 0:
            self._core_open[core] = (time, power, task)

    def cluster_freq(self, cluster: int, time: float, freq: int) -> None:
        opened = self._freq_open.get(cluster)
        if opened is not None and opened[1] == freq:
            return
        if opened is not None and time > opened[0]:
            self.freq_segments.append(FreqSegment(cluster, opened[0], time, opened[1]))
        self._freq_open[cluster] = (time, freq)

    def flush(self, time: float) -> None:
        """Close and reopen every running segment so energy consumers see everything up to ``time``."""
        for core in sorted(self._core_open):
            t0, power, task = self._core_open[core]
            if time > t0:
                self._close_core(core, time)
                self._core_open[core] = (time, power, task)

    def finish(self, time: float) -> None:
        for core in sorted(self._core_open):
            self._close_core(core, time)
        for cluster in sorted(self._freq_open):
            t0, freq = self._freq_open.pop(cluster)
            if time > t0:
                self.freq_segments.append(FreqSegment(cluster, t0, time, freq))
        self.end_time = max(self.end_time, time)

    def build(self, thermal=None, sample_ms: float = DEFAULT_SAMPLE_MS,
              meta: Optional[Mapping[str, Any]] = None) -> 'Trace':
        samples = sample_series(self.platform, self.segments, self.freq_segments,
                                self.end_time, sample_ms, thermal)
        return Trace(
            events=list(self.events),
            segments=sorted(self.segments, key=lambda s: (s.t0, s.core)),
            freq_segments=sorted(self.freq_segments, key=lambda s: (s.t0, s.cluster)),
            samples=samples,
            cores=self.platform.core_ids,
            clusters={c.id: list(c.core_ids) for c in self.platform.clusters},
            sample_ms=sample_ms,
            end_time=self.end_time,
            meta=dict(meta or {}),
        )


def sample_series(platform: Platform, segments: List[PowerSegment], freq_segments: List[FreqSegment],
                  end_time: float, sample_ms: float = DEFAULT_SAMPLE_MS, thermal=None) -> pd.DataFrame:
    """Bin exact segments into per-core average power, running task, frequency and temperature."""
    cores = platform.core_ids
    n_bins = int(math.ceil(end_time / sample_ms - 1e-9)) if end_time > 0 else 0
    if n_bins == 0:
        return pd.DataFrame({c: pd.Series(dtype='float64') for c in SAMPLE_COLUMNS})

    col = {core: i for i, core in enumerate(cores)}
    edges = np.arange(n_bins + 1, dtype=float) * sample_ms
    edges[-1] = end_time
    widths = np.diff(edges)
    power = np.zeros((n_bins, len(cores)))
    task = np.full((n_bins, len(cores)), IDLE_TASK, dtype=int)
    freq = np.zeros((n_bins, len(cores)), dtype=np.int64)
    starts = edges[:-1]

    for seg in segments:
        i0 = int(np.searchsorted(edges, seg.t0, side='right')) - 1
        i1 = int(np.searchsorted(edges, seg.t1, side='left'))
        i0, i1 = max(i0, 0), min(i1, n_bins)
        if i1 <= i0:
            continue
        lo = np.maximum(edges[i0:i1], seg.t0)
        hi = np.minimum(edges[i0 + 1:i1 + 1], seg.t1)
        power[i0:i1, col[seg.core]] += seg.power * np.clip(hi - lo, 0.0, None)
        window = starts[i0:i1]
        running = (window >= seg.t0) & (window < seg.t1)
        task[i0:i1, col[seg.core]][running] = seg.task
    power /= widths[:, None]

    for seg in freq_segments:
        mask = (starts >= seg.t0) & (starts < seg.t1)
        for core in platform.cluster(seg.cluster).core_ids:
            freq[mask, col[core]] = seg.freq

    if thermal is not None:
        temps = thermal.simulate(power, sample_ms)
    else:
        temps = np.full_like(power, np.nan)

    return pd.DataFrame({
        'time_ms': np.repeat(starts, len(cores)),
        'core': np.tile(np.asarray(cores, dtype=int), n_bins),
        'task': task.ravel(),
        'freq_hz': freq.ravel(),
        'power_w': power.ravel(),
        'temp_c': temps.ravel(),
    }, columns=SAMPLE_COLUMNS)


@dataclass
class Trace:
    events: List[TraceEvent]
    segments: List[PowerSegment]
    freq_segments: List[FreqSegment]
    samples: pd.DataFrame
    cores: List[int]
    clusters: Dict[int, List[int]]
    sample_ms: float = DEFAULT_SAMPLE_MS
    end_time: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def empty(cls, cores: Optional[List[int]] = None) -> 'Trace':
        frame = pd.DataFrame({c: pd.Series(dtype='float64') for c in SAMPLE_COLUMNS})
        return cls([], [], [], frame, list(cores or []), {})

    def events_of(self, kind: str) -> List[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    def system_power(self) -> pd.Series:
        """Sampled system power: the sum of all core powers per sample."""
        if self.samples.empty:
            return pd.Series(dtype='float64', name='power_w')
        return self.samples.groupby('time_ms')['power_w'].sum()

    def cluster_power(self) -> pd.DataFrame:
        if self.samples.empty:
            return pd.DataFrame()
        cluster_of = {core: cid for cid, cores in self.clusters.items() for core in cores}
        frame = self.samples.assign(cluster=self.samples['core'].map(cluster_of))
        return frame.pivot_table(index='time_ms', columns='cluster', values='power_w', aggfunc='sum')

    # ------------------------------------------------------------------
    def events_document(self) -> Dict:
        return {
            'schema': TRACE_SCHEMA,
            'meta': self.meta,
            'cores': self.cores,
            'clusters': {str(k): v for k, v in self.clusters.items()},
            'sample_ms': self.sample_ms,
            'end_time': self.end_time,
            'events': [e.to_dict() for e in self.events],
            'segments': [[s.core, s.t0, s.t1, s.power, s.task] for s in self.segments],
            'freq_segments': [[s.cluster, s.t0, s.t1, s.freq] for s in self.freq_segments],
        }

    def save(self, output_dir: str, stem: str = 'trace') -> Tuple[str, str]:
        os.makedirs(output_dir, exist_ok=True)
        csv_path = os.path.join(output_dir, f'{stem}.csv')
        json_path = os.path.join(output_dir, f'{stem}_events.json')
        self.samples.to_csv(csv_path, index=False, columns=SAMPLE_COLUMNS)
        with open(json_path, 'w', encoding='utf-8') as fh:
            json.dump(self.events_document(), fh, sort_keys=True, indent=1)
            fh.write('\n')
        logger.info(f"Trace written to {csv_path} and {json_path}")
        return csv_path, json_path

    @classmethod
    def load(cls, output_dir: str, stem: str = 'trace') -> 'Trace':
        json_path = os.path.join(output_dir, f'{stem}_events.json')
        with open(json_path, 'r', encoding='utf-8') as fh:
            doc = json.load(fh)
        if doc.get('schema') != TRACE_SCHEMA:
            raise ConfigError(f"Unsupported trace schema {doc.get('schema')!r}")
        samples = pd.read_csv(os.path.join(output_dir, f'{stem}.csv'), float_precision='round_trip')
        return cls(
            events=[TraceEvent(e['time'], e['kind'], e['payload']) for e in doc['events']],
            segments=[PowerSegment(int(c), t0, t1, p, int(t)) for c, t0, t1, p, t in doc['segments']],
            freq_segments=[FreqSegment(int(c), t0, t1, int(f)) for c, t0, t1, f in doc['freq_segments']],
            samples=samples,
            cores=[int(c) for c in doc['cores']],
            clusters={int(k): [int(c) for c in v] for k, v in doc['clusters'].items()},
            sample_ms=doc['sample_ms'],
            end_time=doc['end_time'],
            meta=doc['meta'],
        )
