# src/core/config.py
"""Run-time policy, overhead and execution-time configuration plus config-file loading."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional

from .errors import ConfigError

logger = logging.getLogger('MCPeakPower')

CONFIG_SECTIONS = ('generation', 'platform', 'policy', 'overheads', 'execution', 'thermal', 'experiment')


def _check_keys(cls, data: Mapping, section: str) -> None:
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"Unknown {section} keys: {sorted(unknown)}")


class PolicyKind(str, Enum):
    PROPOSED = 'proposed'
    STATIC_MAX = 'static-max'
    IMMEDIATE_NEXT = 'immediate-next'


@dataclass(frozen=True)
class PolicyConfig:
    k: int = 4
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.9
    remap_enabled: bool = True
    kind: PolicyKind = PolicyKind.PROPOSED
    deduct_overheads: bool = True

    def validate(self) -> 'PolicyConfig':
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"alpha and beta must lie in [0, 1], got {self.alpha}, {self.beta}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        return self

    def effective(self) -> 'PolicyConfig':
        """Policy with the baseline restrictions applied."""
        if self.kind == PolicyKind.IMMEDIATE_NEXT:
            return replace(self, k=1, remap_enabled=False)
        if self.kind == PolicyKind.STATIC_MAX:
            return replace(self, remap_enabled=False)
        return self

    @property
    def reclaims_slack(self) -> bool:
        return self.kind != PolicyKind.STATIC_MAX

    def label(self) -> str:
        if self.kind == PolicyKind.STATIC_MAX:
            return 'static-max'
        eff = self.effective()
        remap = 'remap' if eff.remap_enabled else 'noremap'
        label = f"{self.kind.value}-k{eff.k}-a{eff.alpha:g}-b{eff.beta:g}-{remap}"
        return label if self.deduct_overheads else f"{label}-nodeduct"

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['kind'] = self.kind.value
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> 'PolicyConfig':
        _check_keys(cls, data, 'policy')
        values = dict(data)
        if 'kind' in values:
            try:
                values['kind'] = PolicyKind(values['kind'])
            except ValueError:
                raise ConfigError(f"Unknown policy kind {values['kind']!r}") from None
        return cls(**values).validate()


@dataclass(frozen=True)
class OverheadModel:
    to_lookahead_us: float = 56.417
    to_remap_per_core_us: float = 64.54
    to_vf_ms: float = 12.025
    to_remap_migration_ms: float = 3.75
    asymmetric_vf: bool = False
    scale_down_saving_ms: float = 0.342

    def validate(self) -> 'OverheadModel':
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, bool) and value < 0:
                raise ConfigError(f"Overhead {f.name} must be >= 0, got {value}")
        if self.to_remap_migration_ms > self.to_vf_ms:
            raise ConfigError("to_remap_migration_ms must not exceed to_vf_ms: "
                              "migration is hidden inside the V-f switch window")
        if self.asymmetric_vf and self.scale_down_saving_ms > self.to_vf_ms:
            raise ConfigError("scale_down_saving_ms exceeds to_vf_ms")
        return self

    @classmethod
    def zero(cls) -> 'OverheadModel':
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def lookahead_ms(self) -> float:
        return self.to_lookahead_us / 1000.0

    @property
    def remap_per_core_ms(self) -> float:
        return self.to_remap_per_core_us / 1000.0

    def scheduler_ms(self, n_cores_checked: int = 0) -> float:
        """TO_sch: look-ahead unit plus remap checks over ``n_cores_checked`` cores."""
        return self.lookahead_ms + self.remap_per_core_ms * n_cores_checked

    def vf_latency_ms(self, scaling_down: bool = False) -> float:
        if self.asymmetric_vf and scaling_down:
            return self.to_vf_ms - self.scale_down_saving_ms
        return self.to_vf_ms

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> 'OverheadModel':
        _check_keys(cls, data, 'overheads')
        return cls(**data).validate()


EXECUTION_KINDS = ('uniform', 'wcet')


@dataclass(frozen=True)
class ExecutionModel:
    """How actual execution times are drawn each period."""
    kind: str = 'uniform'
    overrun_probability: float = 0.0
    overrides: Mapping[int, float] = field(default_factory=dict)

    def validate(self) -> 'ExecutionModel':
        if self.kind not in EXECUTION_KINDS:
            raise ConfigError(f"execution kind must be one of {EXECUTION_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.overrun_probability <= 1.0:
            raise ConfigError(f"overrun_probability must lie in [0, 1], got {self.overrun_probability}")
        for tid, value in self.overrides.items():
            if value < 0:
                raise ConfigError(f"Override for task {tid} is negative")
        return self

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'overrun_probability': self.overrun_probability,
                'overrides': {str(k): v for k, v in sorted(self.overrides.items())}}

    @classmethod
    def from_dict(cls, data: Mapping) -> 'ExecutionModel':
        _check_keys(cls, data, 'execution')
        values = dict(data)
        if 'overrides' in values:
            values['overrides'] = {int(k): float(v) for k, v in values['overrides'].items()}
        return cls(**values).validate()


def load_config(path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    """Read a sectioned JSON config; missing file path gives an empty config."""
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    unknown = set(data) - set(CONFIG_SECTIONS) - {'schema'}
    if unknown:
        raise ConfigError(f"Unknown config sections: {sorted(unknown)}")
    logger.debug(f"Loaded config sections {sorted(data)} from {path}")
    return {k: dict(v) for k, v in data.items() if k != 'schema'}


def merge_overrides(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """File values overridden by explicitly given flags (``None`` means not given)."""
    merged = dict(base)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged
