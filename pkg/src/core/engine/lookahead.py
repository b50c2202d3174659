# src/core/engine/lookahead.py
"""k-look-ahead slack reclamation: slack extraction, candidate scoring and V-f selection."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from ..errors import DomainError
from ..config import OverheadModel
from ..platform import Cluster, VfLevel, quantize_up
from ..taskgraph import EPS, Mode, Task
from .state import RunningTask, SimState, VfRequest

logger = logging.getLogger('MCPeakPower')


class SlackOrigin(str, Enum):
    EARLY_FINISH = 'early_finish'
    IDLE_GAP = 'idle_gap'


@dataclass(frozen=True)
class SlackEvent:
    core_id: int
    time: float
    amount: float
    origin: SlackOrigin

    def __post_init__(self):
        if self.amount <= 0:
            raise DomainError(f"Slack amount must be positive, got {self.amount}")


@dataclass(frozen=True)
class Candidate:
    task_id: int
    core_id: int
    position: int
    shift_ids: Tuple[int, ...]
    shift: float      # every entry up to the selected one moves earlier by this much
    usable: float     # slack that stretches the selected task's execution
    score: float
    event: SlackEvent


@dataclass(frozen=True)
class CostNormalizer:
    energy: float
    power: float

    @classmethod
    def from_tasks(cls, tasks: Sequence[Task], core_kind, mode: Mode) -> 'CostNormalizer':
        if not tasks:
            raise DomainError("Cost normalizer needs a non-empty candidate set")
        return cls(max(t.energy(core_kind, mode) for t in tasks),
                   max(t.power(core_kind) for t in tasks))


def extract_dynamic_slack(state: SimState, core_id: int,
                          finished: Optional[RunningTask] = None) -> Optional[SlackEvent]:
    """Time between now and the next entry on the core; early-finish when a task beat its bound."""
    queue = state.queues.get(core_id)
    if not queue:
        return None
    amount = queue[0].start - state.clock
    if amount <= EPS:
        return None
    origin = SlackOrigin.IDLE_GAP
    if finished is not None and state.clock < finished.entry.bound - EPS:
        origin = SlackOrigin.EARLY_FINISH
    return SlackEvent(core_id, state.clock, amount, origin)


def usable_slack(event: SlackEvent, overheads: OverheadModel, n_cores_checked: int) -> float:
    """Slack left after the scheduler decision and one V-f switch."""
    return event.amount - overheads.scheduler_ms(n_cores_checked) - overheads.vf_latency_ms()


def cost_task(task: Task, core_kind, alpha: float, beta: float,
              normalizer: CostNormalizer, mode: Mode = Mode.LO) -> float:
    energy = task.energy(core_kind, mode) / normalizer.energy if normalizer.energy > 0 else 0.0
    power = task.power(core_kind) / normalizer.power if normalizer.power > 0 else 0.0
    return alpha * energy + beta * power


def _slack_budget(state: SimState, event: SlackEvent) -> Tuple[float, float]:
    """(shift, usable) for the event under the policy's overhead accounting."""
    n_checked = state.remap_cores_checked(event.core_id)
    if state.policy.deduct_overheads:
        return (event.amount - state.overheads.scheduler_ms(n_checked),
                usable_slack(event, state.overheads, n_checked))
    return event.amount, event.amount


def select_lookahead_task(state: SimState, event: SlackEvent, k: int,
                          alpha: float, beta: float) -> Optional[Candidate]:
    """Best of the next ``k`` entries on the slack core that can start ``shift`` earlier."""
    queue = state.queues.get(event.core_id) or []
    shift, usable = _slack_budget(state, event)
    if not queue or usable <= EPS:
        return None

    window = queue[:k]
    kind = state.platform.core_kind(event.core_id)
    tasks = [state.graph.task(e.task_id) for e in window]
    normalizer = CostNormalizer.from_tasks(tasks, kind, state.mode)

    best: Optional[Candidate] = None
    shifted = set()
    for pos, (entry, task) in enumerate(zip(window, tasks)):
        if state.release_time(task.id, shifted, shift) > entry.start - shift + EPS:
            break   # later entries cannot move past this one
        if entry.level is None:
            score = cost_task(task, kind, alpha, beta, normalizer, state.mode)
            if best is None or score > best.score + 1e-12:
                best = Candidate(task.id, event.core_id, pos, tuple(e.task_id for e in window[:pos]),
                                 shift, usable, score, event)
        shifted.add(task.id)
    return best


def compute_frequency(task: Task, mode: Mode, usable: float, cluster: Cluster) -> VfLevel:
    """max(f_min, C/(C+S)*f_max) rounded up to the cluster's table."""
    budget = task.wcet(mode)
    if usable <= 0 or budget <= 0:
        return cluster.max_level if budget > 0 else cluster.min_level
    f_req = max(float(cluster.f_min), budget / (budget + usable) * cluster.f_max)
    return quantize_up(cluster, min(f_req, float(cluster.f_max)))


def apply_selection(state: SimState, candidate: Candidate, level: Optional[VfLevel]) -> SimState:
    """Move the window prefix earlier and grant ``level`` to the selected task.

    Prefix entries move their start and deadline together; the selected task
    keeps its deadline and absorbs the usable slack.

    ``level`` equal to the cluster maximum (or ``None``) only shifts entries.
    """
    queue = state.queues[candidate.core_id]
    cluster = state.platform.cluster_of(candidate.core_id)
    for entry in queue[:candidate.position]:
        entry.start -= candidate.shift
        entry.deadline -= candidate.shift
        entry.bound -= candidate.shift
        state.est_finish[entry.task_id] -= candidate.shift

    selected = queue[candidate.position]
    if selected.task_id != candidate.task_id:
        raise DomainError(f"Candidate {candidate.task_id} no longer at position {candidate.position}")
    selected.start -= candidate.shift
    if level is not None and level != cluster.max_level:
        selected.level = level
        selected.stall = state.overheads.vf_latency_ms(scaling_down=True)
        state.pending[selected.task_id] = VfRequest(candidate.core_id, selected.task_id, level, selected.start)
    state.est_finish[selected.task_id] = selected.start + selected.stall + state.exec_time(selected)
    logger.debug(f"t={state.clock:.3f} core {candidate.core_id}: task {candidate.task_id} "
                 f"shift={candidate.shift:.3f} level={level} window-shift={list(candidate.shift_ids)}")
    return state
