# src/core/engine/remap.py
"""Intra-cluster re-mapping of a slack-selected task to a less energy-loaded sibling core."""
from __future__ import annotations

import logging
from typing import Optional

from ..taskgraph import EPS, Mode
from ..thermal import EnergyLedger, remap_cost
from .lookahead import Candidate
from .state import RuntimeEntry, SimState

logger = logging.getLogger('MCPeakPower')


def _overlaps(a0: float, a1: float, b0: float, b1: float) -> bool:
    return a0 < b1 - EPS and b0 < a1 - EPS


def slot_is_free(state: SimState, core: int, start: float, finish: float, task_id: int) -> bool:
    """True when ``core`` is idle over [start, finish] in the live queues and, in LO mode, in Sch_H."""
    if state.busy_until.get(core, 0.0) > start + EPS:
        return False
    running = state.running.get(core)
    if running is not None and state.est_finish.get(running.task_id, float('inf')) > start + EPS:
        return False
    for entry in state.queues.get(core, ()):
        if _overlaps(start, finish, entry.start, state.est_finish.get(entry.task_id, entry.bound)):
            return False

    if state.mode == Mode.LO:
        # A later mode switch must still find this core free for its HI entries
        task = state.graph.task(task_id)
        hi_finish = finish + (task.wcet_hi - task.wcet_lo)
        for entry in state.sch_hi.core_entries(core):
            if entry.task_id == task_id or entry.task_id in state.finished:
                continue
            hi_start = entry.start + state.period_start
            hi_end = hi_start + state.graph.task(entry.task_id).wcet_hi
            if _overlaps(start, hi_finish, hi_start, hi_end):
                return False
    return True


def select_remap_core(state: SimState, candidate: Candidate, gamma: float,
                      ledger: EnergyLedger) -> Optional[int]:
    """Sibling core with the lowest windowed energy below gamma times the origin core's, if any."""
    origin = candidate.core_id
    location = state.find_entry(candidate.task_id)
    if location is None:
        return None
    entry: RuntimeEntry = state.queues[location[0]][location[1]]
    start, finish = entry.start, state.est_finish[candidate.task_id]

    threshold = remap_cost(ledger, origin, gamma, state.clock)
    best, best_energy = None, None
    for core in state.platform.siblings(origin):
        if not slot_is_free(state, core, start, finish, candidate.task_id):
            continue
        energy = ledger.windowed_energy(core, state.clock)
        if energy < threshold - 1e-15 and (best_energy is None or energy < best_energy):
            best, best_energy = core, energy
    if best is not None:
        logger.debug(f"t={state.clock:.3f} remap task {candidate.task_id}: core {origin} -> {best} "
                     f"(E={best_energy:.4f} J < {threshold:.4f} J)")
    return best


def apply_remap(state: SimState, task_id: int, target: int) -> SimState:
    """Move a queued entry to ``target``, waiting for the migration behind its V-f switch."""
    core, pos = state.find_entry(task_id)
    entry = state.queues[core].pop(pos)
    entry.core_id = target
    entry.stall = max(entry.stall, state.overheads.to_remap_migration_ms)
    queue = state.queues[target]
    idx = 0
    while idx < len(queue) and queue[idx].start <= entry.start:
        idx += 1
    queue.insert(idx, entry)
    if task_id in state.pending:
        request = state.pending[task_id]
        request.core_id = target
    state.est_finish[task_id] = entry.start + entry.stall + state.exec_time(entry)
    return state
