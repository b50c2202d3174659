# src/core/engine/state.py
"""Mutable per-period simulation state shared by the run-time policies."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from ..config import OverheadModel, PolicyConfig
from ..platform import Cluster, Platform, VfLevel
from ..schedule import ScheduleEntry, ScheduleTable
from ..taskgraph import EPS, Mode, TaskGraph, Violation
from ..thermal import EnergyLedger
from ..trace import TraceRecorder


@dataclass
class RuntimeEntry:
    """A table entry as the engine moves it: absolute times, optional reduced level."""
    task_id: int
    core_id: int
    start: float
    deadline: float
    bound: float                      # original finish bound: start + C^mode
    level: Optional[VfLevel] = None
    stall: float = 0.0

    @classmethod
    def from_schedule(cls, entry: ScheduleEntry, offset: float, budget: float) -> 'RuntimeEntry':
        start = entry.start + offset
        return cls(entry.task_id, entry.core_id, start, entry.deadline + offset, start + budget)


@dataclass
class VfRequest:
    core_id: int
    task_id: int
    level: VfLevel
    valid_from: float


@dataclass
class RunningTask:
    task_id: int
    core_id: int
    entry: RuntimeEntry
    request: VfLevel
    actual: float
    ready_at: float
    exec_start: Optional[float] = None
    done: float = 0.0
    last_t: float = 0.0
    rate: float = 1.0
    token: int = 0
    overrun_armed: bool = False

    @property
    def executing(self) -> bool:
        return self.exec_start is not None


@dataclass
class ClusterState:
    """The engine-owned V-f state of one cluster, including an in-flight transition."""
    cluster: Cluster
    current_level: VfLevel
    transition_level: Optional[VfLevel] = None
    transition_end: float = 0.0
    token: int = 0

    def effective_level(self, now: float) -> VfLevel:
        if self.transition_level is not None and now < self.transition_end - EPS:
            return max(self.current_level, self.transition_level, key=lambda lvl: lvl.frequency)
        return self.current_level


@dataclass
class SimState:
    graph: TaskGraph
    platform: Platform
    sch_lo: ScheduleTable
    sch_hi: ScheduleTable
    policy: PolicyConfig
    overheads: OverheadModel
    ledger: EnergyLedger
    recorder: TraceRecorder
    clusters: Dict[int, ClusterState]
    clock: float = 0.0
    period_start: float = 0.0
    period_index: int = 0
    mode: Mode = Mode.LO
    queues: Dict[int, List[RuntimeEntry]] = field(default_factory=dict)
    pending: Dict[int, VfRequest] = field(default_factory=dict)        # by task id
    running: Dict[int, RunningTask] = field(default_factory=dict)
    actual: Dict[int, float] = field(default_factory=dict)
    finished: Dict[int, float] = field(default_factory=dict)
    est_finish: Dict[int, float] = field(default_factory=dict)
    dropped: Set[int] = field(default_factory=set)
    busy_until: Dict[int, float] = field(default_factory=dict)
    unapplied_switches: List[Any] = field(default_factory=list)
    misses: int = 0
    last_activity: float = 0.0

    @property
    def active_table(self) -> ScheduleTable:
        return self.sch_hi if self.mode == Mode.HI else self.sch_lo

    def budget(self, task_id: int) -> float:
        return self.graph.task(task_id).wcet(self.mode)

    def cluster_state(self, core_id: int) -> ClusterState:
        return self.clusters[self.platform.cluster_of(core_id).id]

    def remap_cores_checked(self, core_id: int) -> int:
        if not self.policy.remap_enabled:
            return 0
        return len(self.platform.siblings(core_id))

    def release_time(self, task_id: int, shifted: Optional[Set[int]] = None, shift: float = 0.0) -> float:
        """Latest estimated predecessor finish, with ``shifted`` predecessors moved earlier by ``shift``."""
        release = self.period_start
        for pred in self.graph.task(task_id).predecessors:
            if pred in self.finished:
                finish = self.finished[pred]
            elif pred in self.est_finish:
                finish = self.est_finish[pred]
                if shifted and pred in shifted:
                    finish -= shift
            else:
                return float('inf')
            release = max(release, finish)
        return release

    def find_entry(self, task_id: int) -> Optional[Tuple[int, int]]:
        for core, queue in self.queues.items():
            for pos, entry in enumerate(queue):
                if entry.task_id == task_id:
                    return core, pos
        return None

    def exec_time(self, entry: RuntimeEntry) -> float:
        """Worst-case execution span of a queued entry at its granted level."""
        budget = self.budget(entry.task_id)
        if entry.level is None:
            return budget
        f_max = self.platform.cluster_of(entry.core_id).f_max
        return budget * f_max / entry.level.frequency


def validate_state(state: SimState) -> List[Violation]:
    """Per-core order, estimated-finish bounds and precedence of every queued entry."""
    violations: List[Violation] = []
    for core, queue in state.queues.items():
        running = state.running.get(core)
        prev_end = state.est_finish.get(running.task_id, state.clock) if running else None
        prev_id = running.task_id if running else None
        for entry in queue:
            if entry.core_id != core:
                violations.append(Violation(entry.task_id, 'core', f"Task {entry.task_id} queued on wrong core"))
            end = state.est_finish.get(entry.task_id)
            if end is None:
                violations.append(Violation(entry.task_id, 'estimate', f"Task {entry.task_id} has no finish estimate"))
                continue
            if prev_end is not None and entry.start < prev_end - 1e-6:
                violations.append(Violation(entry.task_id, 'overlap',
                                            f"Task {entry.task_id} starts before task {prev_id} ends on core {core}"))
            if end > entry.deadline + 1e-6:
                violations.append(Violation(entry.task_id, 'deadline',
                                            f"Task {entry.task_id} estimated to finish after its deadline"))
            if state.release_time(entry.task_id) > entry.start + 1e-6:
                violations.append(Violation(entry.task_id, 'precedence',
                                            f"Task {entry.task_id} starts before its predecessors finish"))
            prev_end, prev_id = end, entry.task_id
    return violations
