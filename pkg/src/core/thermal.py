# src/core/thermal.py
"""Windowed per-core energy accounting and a lumped-RC temperature proxy."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import Deque, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, DomainError
from .platform import CoreKind, Platform

logger = logging.getLogger('MCPeakPower')

DEFAULT_WINDOW_S = 2.0


class EnergyLedger:
    """Per-core accumulated energy plus a sliding window of (t0, t1, power) samples.

    Times are milliseconds, energies joules.
    """

    def __init__(self, core_ids: Iterable[int], window_s: float = DEFAULT_WINDOW_S):
        if window_s <= 0:
            raise DomainError(f"Energy window must be positive, got {window_s}")
        self.window_ms = window_s * 1000.0
        self.accumulated: Dict[int, float] = {c: 0.0 for c in core_ids}
        self._samples: Dict[int, Deque[Tuple[float, float, float]]] = {c: deque() for c in self.accumulated}
        self._clock: Dict[int, float] = {c: 0.0 for c in self.accumulated}
        self.finish_times: Dict[int, List[float]] = {c: [] for c in self.accumulated}

    def _check(self, core: int) -> None:
        if core not in self.accumulated:
            raise DomainError(f"Core {core} is not tracked by the energy ledger")

    def charge(self, core: int, power_w: float, dt_ms: float, end_ms: Optional[float] = None) -> 'EnergyLedger':
        self._check(core)
        if dt_ms <= 0:
            raise DomainError(f"Charge interval must be positive, got {dt_ms}")
        if power_w < 0:
            raise DomainError(f"Power must be non-negative, got {power_w}")
        end = self._clock[core] + dt_ms if end_ms is None else end_ms
        self._clock[core] = max(self._clock[core], end)
        if power_w > 0:
            self.accumulated[core] += power_w * dt_ms / 1000.0
            self._samples[core].append((end - dt_ms, end, power_w))
        self._evict(core, self._clock[core])
        return self

    def _evict(self, core: int, now: float) -> None:
        horizon = now - self.window_ms
        samples = self._samples[core]
        while samples and samples[0][1] <= horizon:
            samples.popleft()

    def windowed_energy(self, core: int, now_ms: Optional[float] = None) -> float:
        self._check(core)
        now = self._clock[core] if now_ms is None else now_ms
        horizon = now - self.window_ms
        total = 0.0
        for t0, t1, p in self._samples[core]:
            lo, hi = max(t0, horizon), min(t1, now)
            if hi > lo:
                total += p * (hi - lo) / 1000.0
        return total

    def note_finish(self, core: int, time_ms: float) -> None:
        self._check(core)
        self.finish_times[core].append(time_ms)

    def total(self) -> float:
        return sum(self.accumulated.values())


def charge(ledger: EnergyLedger, core: int, power_w: float, dt_ms: float) -> EnergyLedger:
    return ledger.charge(core, power_w, dt_ms)


def remap_cost(ledger: EnergyLedger, core: int, gamma: float, now_ms: Optional[float] = None) -> float:
    """Gamma times the core's windowed accumulated energy."""
    return gamma * ledger.windowed_energy(core, now_ms)


@dataclass(frozen=True)
class ThermalParams:
    resistance: float       # K/W
    capacitance: float      # J/K
    ambient: float = 25.0   # deg C
    coupling: float = 0.1

    def __post_init__(self):
        if self.resistance <= 0 or self.capacitance <= 0:
            raise ConfigError("Thermal resistance and capacitance must be positive")
        if not 0.0 <= self.coupling < 1.0:
            raise ConfigError(f"Thermal coupling must lie in [0, 1), got {self.coupling}")

    @property
    def time_constant(self) -> float:
        return self.resistance * self.capacitance

    def steady_state(self, power_w: float) -> float:
        return self.ambient + self.resistance * power_w

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> 'ThermalParams':
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown thermal keys: {sorted(unknown)}")
        return cls(**data)


def _one_second(resistance: float) -> ThermalParams:
    return ThermalParams(resistance=resistance, capacitance=1.0 / resistance)


# 60 K rise at full power, one-second time constant
DEFAULT_THERMAL: Dict[CoreKind, ThermalParams] = {
    CoreKind.LITTLE: _one_second(60.0 / 0.940),
    CoreKind.BIG: _one_second(60.0 / 7.622),
}

ParamsLike = Union[ThermalParams, Sequence[ThermalParams]]


def _param_arrays(params: ParamsLike, n: int) -> Tuple[np.ndarray, ...]:
    seq = [params] * n if isinstance(params, ThermalParams) else list(params)
    if len(seq) != n:
        raise DomainError(f"Expected {n} thermal parameter sets, got {len(seq)}")
    return (np.array([p.resistance for p in seq]), np.array([p.capacitance for p in seq]),
            np.array([p.ambient for p in seq]), np.array([p.coupling for p in seq]))


def step_temperature(params: ParamsLike, temps, power, dt_s: float,
                     neighbors: Optional[Sequence[Sequence[int]]] = None) -> np.ndarray:
    """One explicit-Euler step of the lumped RC network; ``dt_s`` must not exceed RC/10."""
    temps = np.asarray(temps, dtype=float)
    power = np.asarray(power, dtype=float)
    resistance, capacitance, ambient, coupling = _param_arrays(params, temps.size)
    if dt_s <= 0 or dt_s > np.min(resistance * capacitance) / 10.0 + 1e-15:
        raise DomainError(f"Step {dt_s} s too large for RC constant {np.min(resistance * capacitance)} s")

    flow = power - (temps - ambient) / resistance
    if neighbors is not None:
        for i, adjacent in enumerate(neighbors):
            for j in adjacent:
                flow[i] += coupling[i] * (temps[j] - temps[i]) / resistance[i]
    return temps + dt_s / capacitance * flow


class ThermalModel:
    """Per-core RC nodes laid out linearly inside each cluster."""

    def __init__(self, platform: Platform, params_by_kind: Optional[Mapping[CoreKind, ThermalParams]] = None):
        by_kind = dict(DEFAULT_THERMAL)
        if params_by_kind:
            by_kind.update({CoreKind(k): v for k, v in params_by_kind.items()})
        self.cores = platform.core_ids
        position = {core: i for i, core in enumerate(self.cores)}
        self.params = [by_kind[platform.core_kind(c)] for c in self.cores]
        self.neighbors: List[List[int]] = [[] for _ in self.cores]
        for cluster in platform.clusters:
            ordered = [position[c] for c in cluster.core_ids]
            for a, b in zip(ordered, ordered[1:]):
                self.neighbors[a].append(b)
                self.neighbors[b].append(a)

    @property
    def ambient(self) -> np.ndarray:
        return np.array([p.ambient for p in self.params])

    def simulate(self, power_matrix: np.ndarray, dt_ms: float,
                 initial: Optional[np.ndarray] = None) -> np.ndarray:
        """Temperatures at the end of every sample interval, shape (n_samples, n_cores)."""
        power_matrix = np.asarray(power_matrix, dtype=float)
        temps = self.ambient.copy() if initial is None else np.asarray(initial, dtype=float).copy()
        out = np.empty_like(power_matrix)
        dt_s = dt_ms / 1000.0
        for i, row in enumerate(power_matrix):
            temps = step_temperature(self.params, temps, row, dt_s, self.neighbors)
            out[i] = temps
        return out
