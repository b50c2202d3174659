# src/core/platform.py
"""Clustered heterogeneous platform: V-f tables, analytic power model and frequency quantization."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DomainError
from .taskgraph import Task

PLATFORM_SCHEMA = 'mcpp-platform/1'
PLATFORM_NAMES = ('odroid-xu3', 'big-little', 'homogeneous')

_RHO_TOL = 1e-12
_FREQ_TOL_HZ = 1e-3

logger = logging.getLogger('MCPeakPower')


class CoreKind(str, Enum):
    LITTLE = 'LITTLE'
    BIG = 'BIG'


@dataclass(frozen=True, order=True)
class VfLevel:
    frequency: int   # Hz
    voltage: float   # V

    def __post_init__(self):
        if self.frequency <= 0 or self.voltage <= 0:
            raise DomainError(f"V-f level needs positive frequency and voltage, got {self}")

    @property
    def ghz(self) -> float:
        return self.frequency / 1e9

    def __str__(self):
        return f"{self.ghz:.2f}GHz@{self.voltage:.4f}V"


@dataclass(frozen=True)
class PowerParams:
    i_sub: float     # A
    c_load: float    # F
    p_ind: float     # W
    v_max: float     # V
    f_max: float     # Hz

    def __post_init__(self):
        for name in ('i_sub', 'c_load', 'p_ind', 'v_max', 'f_max'):
            if getattr(self, name) <= 0:
                raise DomainError(f"PowerParams.{name} must be positive")

    @classmethod
    def calibrated(cls, max_power: float, v_max: float, f_max: float,
                   p_ind_share: float = 0.10, static_share: float = 0.15) -> 'PowerParams':
        """Split ``max_power`` into frequency-independent, leakage and dynamic parts at the top level."""
        dynamic = max_power * (1.0 - p_ind_share - static_share)
        return cls(
            i_sub=max_power * static_share / v_max,
            c_load=dynamic / (v_max ** 2 * f_max),
            p_ind=max_power * p_ind_share,
            v_max=v_max,
            f_max=f_max,
        )

    def max_power(self) -> float:
        return power(self, 1.0, 1.0)

    def to_dict(self) -> Dict:
        return {'i_sub': self.i_sub, 'c_load': self.c_load, 'p_ind': self.p_ind,
                'v_max': self.v_max, 'f_max': self.f_max}


def _linear_voltages(freqs_mhz: Sequence[int], f_lo: int, f_hi: int, v_lo: float, v_hi: float) -> List[float]:
    return [round(v_lo + (min(f, f_hi) - f_lo) / (f_hi - f_lo) * (v_hi - v_lo), 6) for f in freqs_mhz]


def little_vf_table() -> Tuple[VfLevel, ...]:
    """13 levels 0.2-1.4 GHz; the top four frequencies share 1.3 V."""
    freqs = list(range(200, 1401, 100))
    volts = _linear_voltages(freqs, 200, 1100, 0.9, 1.3)
    return tuple(VfLevel(f * 1_000_000, v) for f, v in zip(freqs, volts))


def big_vf_table() -> Tuple[VfLevel, ...]:
    """19 levels 0.2-2.0 GHz, 0.9-1.3625 V."""
    freqs = list(range(200, 2001, 100))
    volts = _linear_voltages(freqs, 200, 2000, 0.9, 1.3625)
    return tuple(VfLevel(f * 1_000_000, v) for f, v in zip(freqs, volts))


DEFAULT_MAX_POWER = {CoreKind.LITTLE: 0.940, CoreKind.BIG: 7.622}


def default_vf_table(kind: CoreKind) -> Tuple[VfLevel, ...]:
    return little_vf_table() if CoreKind(kind) == CoreKind.LITTLE else big_vf_table()


def default_power_params(kind: CoreKind) -> PowerParams:
    kind = CoreKind(kind)
    top = default_vf_table(kind)[-1]
    return PowerParams.calibrated(DEFAULT_MAX_POWER[kind], top.voltage, float(top.frequency))


@dataclass(frozen=True)
class Cluster:
    id: int
    core_kind: CoreKind
    core_ids: Tuple[int, ...]
    vf_table: Tuple[VfLevel, ...]
    power_params: PowerParams

    def __post_init__(self):
        if not self.core_ids:
            raise ConfigError(f"Cluster {self.id} has no cores")
        if not self.vf_table:
            raise ConfigError(f"Cluster {self.id} has an empty V-f table")
        for lower, upper in zip(self.vf_table, self.vf_table[1:]):
            if upper.frequency <= lower.frequency:
                raise ConfigError(f"Cluster {self.id}: V-f table not strictly ascending in frequency")
            if upper.voltage < lower.voltage:
                raise ConfigError(f"Cluster {self.id}: voltage decreases with frequency")
        top = self.vf_table[-1]
        if abs(self.power_params.f_max - top.frequency) > _FREQ_TOL_HZ or \
                abs(self.power_params.v_max - top.voltage) > 1e-9:
            raise ConfigError(f"Cluster {self.id}: power params do not match the top V-f level")

    @property
    def max_level(self) -> VfLevel:
        return self.vf_table[-1]

    @property
    def min_level(self) -> VfLevel:
        return self.vf_table[0]

    @property
    def f_max(self) -> int:
        return self.max_level.frequency

    @property
    def f_min(self) -> int:
        return self.min_level.frequency

    def level_index(self, level: VfLevel) -> int:
        try:
            return self.vf_table.index(level)
        except ValueError:
            raise DomainError(f"Level {level} is not in the table of cluster {self.id}") from None

    @classmethod
    def default(cls, cluster_id: int, kind: CoreKind, core_ids: Sequence[int]) -> 'Cluster':
        kind = CoreKind(kind)
        return cls(cluster_id, kind, tuple(core_ids), default_vf_table(kind), default_power_params(kind))


@dataclass(frozen=True)
class Platform:
    name: str
    clusters: Tuple[Cluster, ...]
    _core_index: Dict[int, Cluster] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.clusters:
            raise ConfigError("A platform needs at least one cluster")
        index: Dict[int, Cluster] = {}
        for cluster in self.clusters:
            for core in cluster.core_ids:
                if core in index:
                    raise ConfigError(f"Core id {core} appears in more than one cluster")
                index[core] = cluster
        object.__setattr__(self, '_core_index', index)

    @property
    def core_ids(self) -> List[int]:
        return sorted(self._core_index)

    @property
    def n_cores(self) -> int:
        return len(self._core_index)

    def cluster_of(self, core_id: int) -> Cluster:
        try:
            return self._core_index[core_id]
        except KeyError:
            raise DomainError(f"Unknown core id {core_id}") from None

    def cluster(self, cluster_id: int) -> Cluster:
        for cluster in self.clusters:
            if cluster.id == cluster_id:
                return cluster
        raise DomainError(f"Unknown cluster id {cluster_id}")

    def core_kind(self, core_id: int) -> CoreKind:
        return self.cluster_of(core_id).core_kind

    def siblings(self, core_id: int) -> List[int]:
        return [c for c in self.cluster_of(core_id).core_ids if c != core_id]

    @classmethod
    def by_name(cls, name: str, n_cores: Optional[int] = None) -> 'Platform':
        if name == 'odroid-xu3':
            if n_cores not in (None, 8):
                raise ConfigError("odroid-xu3 has exactly 8 cores")
            return cls(name, (Cluster.default(0, CoreKind.LITTLE, range(0, 4)),
                              Cluster.default(1, CoreKind.BIG, range(4, 8))))
        if name == 'big-little':
            n = 8 if n_cores is None else n_cores
            if n < 2:
                raise ConfigError("big-little needs at least 2 cores")
            n_little = n - n // 2
            return cls(name, (Cluster.default(0, CoreKind.LITTLE, range(0, n_little)),
                              Cluster.default(1, CoreKind.BIG, range(n_little, n))))
        if name == 'homogeneous':
            n = 8 if n_cores is None else n_cores
            if n < 1:
                raise ConfigError("homogeneous needs at least 1 core")
            return cls(name, tuple(Cluster.default(i, CoreKind.LITTLE, (i,)) for i in range(n)))
        raise ConfigError(f"Unknown platform {name!r}; choose one of {PLATFORM_NAMES}")

    def to_dict(self) -> Dict:
        return {
            'schema': PLATFORM_SCHEMA,
            'name': self.name,
            'clusters': [
                {
                    'id': c.id,
                    'core_kind': c.core_kind.value,
                    'core_ids': list(c.core_ids),
                    'vf_table': [[lvl.frequency, lvl.voltage] for lvl in c.vf_table],
                    'power_params': c.power_params.to_dict(),
                }
                for c in self.clusters
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'Platform':
        if data.get('schema', PLATFORM_SCHEMA) != PLATFORM_SCHEMA:
            raise ConfigError(f"Unsupported platform schema {data.get('schema')!r}")
        try:
            clusters = tuple(
                Cluster(
                    id=int(c['id']),
                    core_kind=CoreKind(c['core_kind']),
                    core_ids=tuple(int(x) for x in c['core_ids']),
                    vf_table=tuple(VfLevel(int(f), float(v)) for f, v in c['vf_table']),
                    power_params=PowerParams(**c['power_params']),
                )
                for c in data['clusters']
            )
            return cls(str(data.get('name', 'custom')), clusters)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed platform document: {e}") from e

    def save(self, path: str) -> str:
        with open(path, 'w', encoding='utf-8') as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write('\n')
        return path

    @classmethod
    def load(cls, path: str) -> 'Platform':
        with open(path, 'r', encoding='utf-8') as fh:
            return cls.from_dict(json.load(fh))


def resolve_platform(spec: str, n_cores: Optional[int] = None) -> Platform:
    """Platform from a registered name or a platform JSON file."""
    if spec in PLATFORM_NAMES:
        return Platform.by_name(spec, n_cores)
    if spec.endswith('.json'):
        return Platform.load(spec)
    raise ConfigError(f"Unknown platform {spec!r}; choose one of {PLATFORM_NAMES} or a .json file")


def scaling_factors(cluster: Cluster, level: VfLevel) -> Tuple[float, float]:
    cluster.level_index(level)
    top = cluster.max_level
    return level.frequency / top.frequency, level.voltage / top.voltage


def power(params: PowerParams, rho1: float, rho2: float) -> float:
    """P = I_sub*(rho2*Vmax) + C_L*(rho2*Vmax)^2*(rho1*fmax) + P_ind."""
    if not (0.0 < rho1 <= 1.0 + _RHO_TOL and 0.0 < rho2 <= 1.0 + _RHO_TOL):
        raise DomainError(f"Scaling factors out of range: rho1={rho1}, rho2={rho2}")
    voltage = rho2 * params.v_max
    return params.i_sub * voltage + params.c_load * voltage ** 2 * (rho1 * params.f_max) + params.p_ind


def power_ratio(params: PowerParams, level: VfLevel) -> float:
    rho1 = level.frequency / params.f_max
    rho2 = level.voltage / params.v_max
    return power(params, rho1, rho2) / power(params, 1.0, 1.0)


def task_power_at_level(task: Task, core_kind, level: VfLevel,
                        params: Optional[PowerParams] = None) -> float:
    """Scale the task's max-frequency peak power to ``level``."""
    peak = task.power(core_kind)
    if params is None:
        params = default_power_params(CoreKind(getattr(core_kind, 'value', core_kind)))
    return peak * power_ratio(params, level)


def quantize_up(cluster: Cluster, f_req: float) -> VfLevel:
    """Smallest table level with frequency >= f_req."""
    if f_req > cluster.f_max + _FREQ_TOL_HZ:
        raise DomainError(f"Requested {f_req:.0f} Hz exceeds f_max {cluster.f_max} Hz of cluster {cluster.id}")
    freqs = np.fromiter((lvl.frequency for lvl in cluster.vf_table), dtype=float)
    idx = int(np.searchsorted(freqs, f_req - _FREQ_TOL_HZ, side='left'))
    return cluster.vf_table[min(idx, len(cluster.vf_table) - 1)]
