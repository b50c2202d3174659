# src/core/static_scheduler.py
"""Design-time EDF list scheduling of the LO and HI mode tables."""
from __future__ import annotations

import heapq
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import UnschedulableError
from .platform import Platform
from .schedule import ScheduleEntry, ScheduleTable
from .taskgraph import EPS, Mode, Task, TaskGraph, Violation

logger = logging.getLogger('MCPeakPower')

Interval = Tuple[float, float, int]   # (start, finish, task_id)


def earliest_slot(intervals: Sequence[Interval], ready: float, duration: float) -> float:
    """Earliest start >= ready of a ``duration`` gap in a core's sorted busy intervals."""
    candidate = ready
    for start, finish, _ in intervals:
        if candidate + duration <= start + EPS:
            return candidate
        candidate = max(candidate, finish)
    return candidate


def _insert(intervals: List[Interval], item: Interval) -> None:
    idx = 0
    while idx < len(intervals) and intervals[idx][0] <= item[0]:
        idx += 1
    intervals.insert(idx, item)


def plan_hi_continuation(graph: TaskGraph, sch_hi: ScheduleTable, clock: float,
                         finished: Mapping[int, float],
                         running: Mapping[int, Tuple[int, float]]) -> Dict[int, Tuple[int, float, float]]:
    """(core, start, finish) of every Sch_H entry not yet started at ``clock``.

    Entries keep their Sch_H core and order and start at their table time
    unless a running task still holds the core or a predecessor is still busy.
    ``running`` maps task id to (core, worst-case finish).
    """
    topo_pos = {tid: pos for pos, tid in enumerate(graph.topological_order())}
    core_free: Dict[int, float] = {}
    done: Dict[int, float] = dict(finished)
    for tid, (core, end) in running.items():
        core_free[core] = max(core_free.get(core, clock), end)
        done[tid] = end

    plan: Dict[int, Tuple[int, float, float]] = {}
    for entry in sorted(sch_hi.all_entries(), key=lambda e: (e.start, topo_pos[e.task_id])):
        tid = entry.task_id
        if tid in done:
            continue
        task = graph.task(tid)
        release = max((done.get(p, clock) for p in task.predecessors), default=clock)
        start = max(entry.start, clock, core_free.get(entry.core_id, clock), release)
        finish = start + task.wcet_hi
        plan[tid] = (entry.core_id, start, finish)
        core_free[entry.core_id] = finish
        done[tid] = finish
    return plan


def check_transition(graph: TaskGraph, sch_lo: ScheduleTable, sch_hi: ScheduleTable) -> List[Violation]:
    """Deadlines of a LO -> HI switch at every Sch_L start and HC overrun instant.

    Running HC tasks are charged C^HI, running LC tasks that Sch_H drops are
    abandoned and everything not yet started follows ``plan_hi_continuation``.
    """
    lo = {e.task_id: e for e in sch_lo.all_entries()}
    instants = {e.start for e in lo.values()}
    instants |= {e.start + graph.task(tid).wcet_lo for tid, e in lo.items() if graph.task(tid).is_hc}

    violations: List[Violation] = []
    late: Set[int] = set()
    for t in sorted(instants):
        finished: Dict[int, float] = {}
        running: Dict[int, Tuple[int, float]] = {}
        for tid, entry in lo.items():
            task = graph.task(tid)
            end_lo = entry.start + task.wcet_lo
            overrun = task.is_hc and abs(end_lo - t) <= EPS
            if entry.start <= t + EPS and (t < end_lo - EPS or overrun):
                if task.is_hc:
                    running[tid] = (entry.core_id, entry.start + task.wcet_hi)
                elif tid not in sch_hi.dropped_lc:
                    running[tid] = (entry.core_id, end_lo)
            elif end_lo <= t + EPS:
                finished[tid] = end_lo
        if not any(graph.task(tid).is_hc for tid in running):
            continue

        ends = {tid: end for tid, (_, end) in running.items()}
        ends.update({tid: f for tid, (_, _, f) in plan_hi_continuation(graph, sch_hi, t, finished, running).items()})
        for tid, end in sorted(ends.items()):
            if tid not in late and end > graph.task(tid).deadline + EPS:
                late.add(tid)
                violations.append(Violation(tid, 'transition',
                                            f"Task {tid} finishes at {end:.3f} ms, after its deadline, "
                                            f"when the mode switches at {t:.3f} ms"))
    return violations


class StaticScheduler:
    """Builds Sch_L and Sch_H for one graph on one platform.

    Sch_H holds every HC task at WCET C^HI and admits LC tasks greedily in
    EDF order. Sch_L list-schedules every task at C^LO by EDF with equal
    priority across criticalities. When that table cannot meet a deadline, or
    a switch to Sch_H from it could miss one, Sch_L falls back to the Sch_H
    mapping and per-core order started as soon as possible under C^LO, with
    the LC tasks Sch_H dropped inserted into the gaps.
    """

    def __init__(self, graph: TaskGraph, platform: Platform):
        self.graph = graph
        self.platform = platform
        self.cores = platform.core_ids
        self._topo_pos = {tid: pos for pos, tid in enumerate(graph.topological_order())}

    # ------------------------------------------------------------------
    def build(self) -> Tuple[ScheduleTable, ScheduleTable]:
        sch_hi, placement = self._build_hi()
        sch_lo = self._build_lo_edf()
        if sch_lo is None:
            logger.debug("EDF LO table misses a deadline; anchoring Sch_L on Sch_H")
            sch_lo = self._build_lo(sch_hi, placement)
        else:
            unsafe = check_transition(self.graph, sch_lo, sch_hi)
            if unsafe:
                logger.debug(f"EDF LO table has an unsafe mode switch ({unsafe[0].message}); "
                             f"anchoring Sch_L on Sch_H")
                sch_lo = self._build_lo(sch_hi, placement)
        logger.debug(f"Tables built: {len(sch_lo)} LO entries, {len(sch_hi)} HI entries, "
                     f"{len(sch_hi.dropped_lc)} LC tasks dropped in HI mode")
        return sch_lo, sch_hi

    def _build_lo_edf(self) -> Optional[ScheduleTable]:
        graph = self.graph
        busy: Dict[int, List[Interval]] = {c: [] for c in self.cores}
        finish: Dict[int, float] = {}
        starts: Dict[int, Tuple[int, float]] = {}

        waiting = {t.id: len(t.predecessors) for t in graph.tasks}
        ready = [(graph.task(tid).deadline, tid) for tid, n in waiting.items() if n == 0]
        heapq.heapify(ready)
        while ready:
            _, tid = heapq.heappop(ready)
            task = graph.task(tid)
            release = max((finish[p] for p in task.predecessors), default=0.0)
            core, start = self._place(busy, task, release, task.wcet_lo)
            if start + task.wcet_lo > task.deadline + EPS:
                return None
            _insert(busy[core], (start, start + task.wcet_lo, tid))
            finish[tid] = start + task.wcet_lo
            starts[tid] = (core, start)
            for succ in task.successors:
                waiting[succ] -= 1
                if waiting[succ] == 0:
                    heapq.heappush(ready, (graph.task(succ).deadline, succ))

        entries = {c: [] for c in self.cores}
        for tid, (core, start) in starts.items():
            entries[core].append(ScheduleEntry(tid, core, start, graph.task(tid).deadline, Mode.LO))
        return ScheduleTable(Mode.LO, {c: tuple(v) for c, v in entries.items()})

    def _place(self, busy: Dict[int, List[Interval]], task: Task, ready: float,
               duration: float) -> Tuple[int, float]:
        best: Optional[Tuple[float, int, float]] = None
        for core in self.cores:
            start = earliest_slot(busy[core], ready, duration)
            key = (start + duration, core, start)
            if best is None or key[:2] < best[:2]:
                best = key
        finish, core, start = best
        return core, start

    def _build_hi(self) -> Tuple[ScheduleTable, Dict[int, Tuple[int, float]]]:
        graph = self.graph
        busy: Dict[int, List[Interval]] = {c: [] for c in self.cores}
        placement: Dict[int, Tuple[int, float]] = {}
        finish: Dict[int, float] = {}

        # HC tasks first, EDF over the ready list
        hc_ids = {t.id for t in graph.hc_tasks}
        waiting = {tid: len(graph.task(tid).predecessors) for tid in hc_ids}
        ready = [(graph.task(tid).deadline, tid) for tid, n in waiting.items() if n == 0]
        heapq.heapify(ready)
        while ready:
            _, tid = heapq.heappop(ready)
            task = graph.task(tid)
            release = max((finish[p] for p in task.predecessors), default=0.0)
            core, start = self._place(busy, task, release, task.wcet_hi)
            if start + task.wcet_hi > task.deadline + EPS:
                raise UnschedulableError(
                    f"HC task {tid} cannot meet its deadline {task.deadline:.3f} ms in HI mode", tid)
            _insert(busy[core], (start, start + task.wcet_hi, tid))
            placement[tid] = (core, start)
            finish[tid] = start + task.wcet_hi
            for succ in task.successors:
                if succ in waiting:
                    waiting[succ] -= 1
                    if waiting[succ] == 0:
                        heapq.heappush(ready, (graph.task(succ).deadline, succ))

        # Greedy EDF admission of LC tasks into the remaining gaps
        dropped: Set[int] = set()
        lc_ids = {t.id for t in graph.lc_tasks}
        waiting = {tid: sum(1 for p in graph.task(tid).predecessors if p in lc_ids) for tid in lc_ids}
        ready = [(graph.task(tid).deadline, tid) for tid, n in waiting.items() if n == 0]
        heapq.heapify(ready)
        while ready:
            _, tid = heapq.heappop(ready)
            task = graph.task(tid)
            if any(p in dropped for p in task.predecessors):
                dropped.add(tid)
            else:
                release = max((finish[p] for p in task.predecessors), default=0.0)
                core, start = self._place(busy, task, release, task.wcet_hi)
                if start + task.wcet_hi <= task.deadline + EPS:
                    _insert(busy[core], (start, start + task.wcet_hi, tid))
                    placement[tid] = (core, start)
                    finish[tid] = start + task.wcet_hi
                else:
                    dropped.add(tid)
            for succ in task.successors:
                if succ in waiting:
                    waiting[succ] -= 1
                    if waiting[succ] == 0:
                        heapq.heappush(ready, (graph.task(succ).deadline, succ))

        entries = {c: [] for c in self.cores}
        for tid, (core, start) in placement.items():
            entries[core].append(ScheduleEntry(tid, core, start, graph.task(tid).deadline, Mode.HI))
        return ScheduleTable(Mode.HI, {c: tuple(v) for c, v in entries.items()}, frozenset(dropped)), placement

    def _build_lo(self, sch_hi: ScheduleTable, placement: Dict[int, Tuple[int, float]]) -> ScheduleTable:
        graph = self.graph
        busy: Dict[int, List[Interval]] = {c: [] for c in self.cores}
        core_free = {c: 0.0 for c in self.cores}
        finish: Dict[int, float] = {}
        starts: Dict[int, Tuple[int, float]] = {}

        # Same core and per-core order as Sch_H, as soon as possible under C^LO
        order = sorted(sch_hi.all_entries(),
                       key=lambda e: (e.start, e.start + graph.task(e.task_id).wcet_hi, self._topo_pos[e.task_id]))
        for entry in order:
            task = graph.task(entry.task_id)
            release = max((finish[p] for p in task.predecessors), default=0.0)
            start = max(core_free[entry.core_id], release)
            finish[task.id] = start + task.wcet_lo
            core_free[entry.core_id] = finish[task.id]
            busy[entry.core_id].append((start, finish[task.id], task.id))
            starts[task.id] = (entry.core_id, start)

        # LC tasks dropped from Sch_H go into the gaps, EDF over the ready list
        pending = set(sch_hi.dropped_lc)
        waiting = {tid: sum(1 for p in graph.task(tid).predecessors if p in pending) for tid in pending}
        ready = [(graph.task(tid).deadline, tid) for tid, n in waiting.items() if n == 0]
        heapq.heapify(ready)
        while ready:
            _, tid = heapq.heappop(ready)
            task = graph.task(tid)
            release = max((finish[p] for p in task.predecessors), default=0.0)
            core, start = self._place(busy, task, release, task.wcet_lo)
            if start + task.wcet_lo > task.deadline + EPS:
                raise UnschedulableError(f"LC task {tid} cannot be placed in the LO table", tid)
            _insert(busy[core], (start, start + task.wcet_lo, tid))
            finish[tid] = start + task.wcet_lo
            starts[tid] = (core, start)
            for succ in task.successors:
                if succ in waiting:
                    waiting[succ] -= 1
                    if waiting[succ] == 0:
                        heapq.heappush(ready, (graph.task(succ).deadline, succ))

        entries = {c: [] for c in self.cores}
        for tid, (core, start) in starts.items():
            entries[core].append(ScheduleEntry(tid, core, start, graph.task(tid).deadline, Mode.LO))
        return ScheduleTable(Mode.LO, {c: tuple(v) for c, v in entries.items()})


def build_tables(graph: TaskGraph, platform: Platform) -> Tuple[ScheduleTable, ScheduleTable]:
    """(Sch_L, Sch_H) for ``graph`` on ``platform``."""
    return StaticScheduler(graph, platform).build()


def check_table(graph: TaskGraph, table: ScheduleTable, platform: Platform,
                overheads=None) -> List[Violation]:
    """Coverage, non-overlap, precedence and deadline headroom at f_max; empty list iff feasible.

    Entries whose slack is below the V-f switch latency of ``overheads`` remain
    valid: they are simply never slowed down at run time.
    """
    mode = table.mode
    violations: List[Violation] = []
    cores = set(platform.core_ids)

    expected = set(graph.ids) if mode == Mode.LO else {t.id for t in graph.hc_tasks}
    seen: Dict[int, int] = {}
    for entry in table.all_entries():
        seen[entry.task_id] = seen.get(entry.task_id, 0) + 1
        if entry.core_id not in cores:
            violations.append(Violation(entry.task_id, 'unknown-core',
                                        f"Task {entry.task_id} mapped to unknown core {entry.core_id}"))
        if entry.task_id not in graph:
            violations.append(Violation(entry.task_id, 'unknown-task', f"Unknown task {entry.task_id} in table"))
    for tid, count in seen.items():
        if count > 1:
            violations.append(Violation(tid, 'duplicate', f"Task {tid} appears {count} times"))
    for tid in sorted(expected - set(seen)):
        if mode == Mode.HI or tid not in table.dropped_lc:
            violations.append(Violation(tid, 'coverage', f"Task {tid} missing from the {mode.value} table"))
    if mode == Mode.LO and table.dropped_lc:
        violations.append(Violation(None, 'coverage', "LO table must not drop tasks"))
    for tid in sorted(table.dropped_lc):
        if tid in graph and graph.task(tid).is_hc:
            violations.append(Violation(tid, 'hc-dropped', f"HC task {tid} listed as dropped"))
        if tid in seen:
            violations.append(Violation(tid, 'dropped-scheduled', f"Dropped task {tid} is also scheduled"))

    def budget(tid: int) -> float:
        return graph.task(tid).wcet(mode)

    for core, seq in table.entries.items():
        for prev, nxt in zip(seq, seq[1:]):
            if prev.task_id in graph and nxt.start < prev.start + budget(prev.task_id) - EPS:
                violations.append(Violation(nxt.task_id, 'overlap',
                                            f"Tasks {prev.task_id} and {nxt.task_id} overlap on core {core}"))

    for entry in table.all_entries():
        if entry.task_id not in graph:
            continue
        task = graph.task(entry.task_id)
        finish = entry.start + task.wcet(mode)
        if entry.start < -EPS:
            violations.append(Violation(task.id, 'negative-start', f"Task {task.id} starts before the period"))
        if finish > entry.deadline + EPS or entry.deadline > task.deadline + EPS:
            violations.append(Violation(task.id, 'deadline',
                                        f"Task {task.id} finishes at {finish:.3f} ms after its deadline"))
        for pred in task.predecessors:
            pred_entry = table.entry_for(pred)
            if pred_entry is None:
                violations.append(Violation(task.id, 'precedence',
                                            f"Task {task.id} scheduled but predecessor {pred} is not"))
            elif entry.start < pred_entry.start + budget(pred) - EPS:
                violations.append(Violation(task.id, 'precedence',
                                            f"Task {task.id} starts before predecessor {pred} finishes"))

    if overheads is not None and not violations:
        no_dvfs = sum(1 for e in table.all_entries()
                      if e.deadline - e.start - budget(e.task_id) < overheads.vf_latency_ms())
        logger.debug(f"{no_dvfs} {mode.value} entries have less headroom than one V-f switch")
    return violations
