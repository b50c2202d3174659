# src/core/generator.py
"""Random dual-criticality task-graph generation."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import truncnorm

from .errors import ConfigError, GenerationError
from .taskgraph import (
    DEFAULT_POWER_ENVELOPE,
    Criticality,
    Mode,
    Task,
    TaskGraph,
    earliest_finish_times,
    latest_finish_times,
)

logger = logging.getLogger('MCPeakPower')

TIME_RESOLUTION_DIGITS = 3   # WCETs are kept at microsecond resolution
POWER_DISTRIBUTIONS = ('normal', 'uniform')


@dataclass(frozen=True)
class GenParams:
    n_cores: int = 8
    utilization_range: Tuple[float, float] = (0.5, 0.75)
    edge_percent: float = 0.10
    n_tasks: int = 50
    hc_fraction: float = 0.5
    wcet_ratio_range: Tuple[float, float] = (1.5, 2.5)
    seed: int = 0
    period: float = 500.0
    deadline: Optional[float] = None
    power_distribution: str = 'normal'
    power_envelope: Mapping[str, Tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_POWER_ENVELOPE))
    max_attempts: int = 200

    def validate(self) -> 'GenParams':
        low, high = self.utilization_range
        if self.n_tasks < 1:
            raise ConfigError(f"n_tasks must be >= 1, got {self.n_tasks}")
        if self.n_cores < 1:
            raise ConfigError(f"n_cores must be >= 1, got {self.n_cores}")
        if not (0.0 <= low <= high <= 1.0):
            raise ConfigError(f"utilization_range must lie in [0, 1], got {self.utilization_range}")
        if not 0.0 <= self.edge_percent <= 1.0:
            raise ConfigError(f"edge_percent must lie in [0, 1], got {self.edge_percent}")
        if not 0.0 <= self.hc_fraction <= 1.0:
            raise ConfigError(f"hc_fraction must lie in [0, 1], got {self.hc_fraction}")
        r_low, r_high = self.wcet_ratio_range
        if not 1.0 <= r_low <= r_high:
            raise ConfigError(f"wcet_ratio_range must satisfy 1 <= low <= high, got {self.wcet_ratio_range}")
        if self.period <= 0:
            raise ConfigError(f"period must be positive, got {self.period}")
        if self.deadline is not None and not 0 < self.deadline <= self.period:
            raise ConfigError(f"deadline must lie in (0, period], got {self.deadline}")
        if self.power_distribution not in POWER_DISTRIBUTIONS:
            raise ConfigError(f"power_distribution must be one of {POWER_DISTRIBUTIONS}")
        for kind, (p_low, p_high) in self.power_envelope.items():
            if not 0 < p_low <= p_high:
                raise ConfigError(f"Invalid power envelope for {kind}: {(p_low, p_high)}")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['utilization_range'] = list(self.utilization_range)
        data['wcet_ratio_range'] = list(self.wcet_ratio_range)
        data['power_envelope'] = {k: list(v) for k, v in sorted(self.power_envelope.items())}
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> 'GenParams':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown generation keys: {sorted(unknown)}")
        values = dict(data)
        for key in ('utilization_range', 'wcet_ratio_range'):
            if key in values:
                values[key] = tuple(float(v) for v in values[key])
        if 'power_envelope' in values:
            values['power_envelope'] = {k: tuple(float(x) for x in v) for k, v in values['power_envelope'].items()}
        return cls(**values)


def uunifast_discard(n: int, total: float, rng: np.random.Generator,
                     cap: float = 1.0, limit: int = 1000) -> Optional[np.ndarray]:
    """UUniFast split of ``total`` into ``n`` shares, discarding splits with a share above ``cap``."""
    for _ in range(limit):
        remaining = total
        shares = []
        for i in range(1, n):
            next_remaining = remaining * rng.random() ** (1.0 / (n - i))
            shares.append(remaining - next_remaining)
            remaining = next_remaining
        shares.append(remaining)
        if max(shares) <= cap:
            return np.asarray(shares)
    return None


def _layered_edges(n: int, total_util: float, edge_percent: float,
                   rng: np.random.Generator) -> List[Tuple[int, int]]:
    if n < 2 or edge_percent <= 0:
        return []
    depth = max(1, min(n, int(math.floor(0.75 * n / max(total_util, 1.0)))))
    layer = np.zeros(n, dtype=int)
    layer[:depth] = np.arange(depth)
    if n > depth:
        layer[depth:] = rng.integers(0, depth, size=n - depth)
    layer = np.sort(layer)

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if layer[i] < layer[j]]
    if not pairs:
        return []
    total_pairs = n * (n - 1) / 2
    p_edge = min(1.0, edge_percent * total_pairs / len(pairs))
    draws = rng.random(len(pairs))
    return [pair for pair, u in zip(pairs, draws) if u < p_edge]


def _draw_power(params: GenParams, n: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    powers = {}
    for kind in sorted(params.power_envelope):
        low, high = params.power_envelope[kind]
        if high - low <= 0:
            powers[kind] = np.full(n, low)
        elif params.power_distribution == 'uniform':
            powers[kind] = rng.uniform(low, high, size=n)
        else:
            mean, sigma = (low + high) / 2.0, (high - low) / 6.0
            dist = truncnorm((low - mean) / sigma, (high - mean) / sigma, loc=mean, scale=sigma)
            powers[kind] = np.clip(dist.rvs(size=n, random_state=rng), low, high)
    return powers


def _attempt(params: GenParams, rng: np.random.Generator) -> Optional[TaskGraph]:
    n, period = params.n_tasks, params.period
    deadline = params.deadline if params.deadline is not None else period
    low, high = params.utilization_range
    total_util = rng.uniform(low, high) * params.n_cores
    if total_util > n:
        return None

    shares = uunifast_discard(n, total_util, rng)
    if shares is None:
        return None
    wcet_hi = np.round(shares * period, TIME_RESOLUTION_DIGITS)
    if np.any(wcet_hi > deadline):
        return None

    edges = _layered_edges(n, total_util, params.edge_percent, rng)
    successors: Dict[int, set] = {i: set() for i in range(n)}
    predecessors: Dict[int, set] = {i: set() for i in range(n)}
    for u, v in edges:
        successors[u].add(v)
        predecessors[v].add(u)

    # Criticality draw, then HC-closure over ancestors (ids are in topological order)
    is_hc = rng.random(n) < params.hc_fraction
    for v in range(n - 1, -1, -1):
        if is_hc[v]:
            for u in predecessors[v]:
                is_hc[u] = True

    ratios = rng.uniform(*params.wcet_ratio_range, size=n)
    wcet_lo = np.where(is_hc, np.round(wcet_hi / ratios, TIME_RESOLUTION_DIGITS), wcet_hi)

    hi_budget = {i: float(wcet_hi[i]) for i in range(n)}
    earliest = earliest_finish_times(predecessors, hi_budget)
    latest = latest_finish_times(successors, hi_budget, deadline)
    if any(earliest[i] > latest[i] + 1e-9 for i in range(n)):
        return None

    powers = _draw_power(params, n, rng)
    tasks = tuple(
        Task(
            id=i,
            criticality=Criticality.HC if is_hc[i] else Criticality.LC,
            wcet_lo=float(wcet_lo[i]),
            wcet_hi=float(wcet_hi[i]),
            deadline=float(latest[i]),
            successors=frozenset(successors[i]),
            predecessors=frozenset(predecessors[i]),
            peak_power={kind: float(values[i]) for kind, values in powers.items()},
        )
        for i in range(n)
    )
    return TaskGraph(tasks, period, deadline)


def generate(params: GenParams) -> TaskGraph:
    """Draw a random layered task graph; identical params (seed included) give identical graphs."""
    params.validate()
    low, _ = params.utilization_range
    if low * params.n_cores > params.n_tasks:
        raise GenerationError(
            f"Utilization {low * params.n_cores:.3f} unreachable with {params.n_tasks} tasks "
            f"(each task is limited to utilization 1)")

    rng = np.random.default_rng(params.seed)
    for attempt in range(1, params.max_attempts + 1):
        graph = _attempt(params, rng)
        if graph is not None:
            logger.debug(f"Generated graph seed={params.seed} after {attempt} attempt(s): "
                         f"{len(graph)} tasks, {len(graph.edges())} edges, U={graph.utilization():.3f}")
            return graph
    raise GenerationError(
        f"No feasible graph after {params.max_attempts} attempts "
        f"(n={params.n_tasks}, c={params.n_cores}, U/c={params.utilization_range})")


def draw_actual_execution_time(task: Task, mode: Mode, rng: np.random.Generator) -> float:
    """Actual execution time, uniform in [2/3 C, C] for the mode's WCET C."""
    budget = task.wcet(mode)
    if budget <= 0:
        return 0.0
    return float(rng.uniform(2.0 * budget / 3.0, budget))
