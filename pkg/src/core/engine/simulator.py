# src/core/engine/simulator.py
"""Discrete-event execution of the static tables with run-time slack reclamation."""
from __future__ import annotations

import heapq
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import ExecutionModel, OverheadModel, PolicyConfig
from ..errors import ConfigError, DeadlineMissError, DomainError, SimulationFault
from ..generator import draw_actual_execution_time
from ..platform import Platform, task_power_at_level
from ..schedule import ScheduleTable
from ..static_scheduler import plan_hi_continuation
from ..statistics.metrics import Metrics, summarize
from ..taskgraph import EPS, Mode, TaskGraph
from ..thermal import DEFAULT_WINDOW_S, EnergyLedger, ThermalModel
from ..trace import DEFAULT_SAMPLE_MS, PowerSegment, Trace, TraceRecorder
from .governor import DvfsGovernor, SwitchAction, governor_tick
from .lookahead import (
    SlackEvent,
    apply_selection,
    compute_frequency,
    extract_dynamic_slack,
    select_lookahead_task,
    usable_slack,
)
from .remap import apply_remap, select_remap_core
from .state import ClusterState, RunningTask, RuntimeEntry, SimState, VfRequest, validate_state

logger = logging.getLogger('MCPeakPower')

# Event kinds double as priorities at equal timestamps
EV_BUDGET = 0
EV_VF_DONE = 1
EV_EXEC = 2
EV_WAKE = 3

MISS_TOLERANCE_MS = 1e-6


def mode_switch(state: SimState, task_id: int, elapsed: float) -> SimState:
    """LO -> HI: adopt Sch_H, abandon its dropped LC tasks and request max V-f on every cluster.

    Switch actions land in ``state.unapplied_switches`` for the engine to carry out.
    """
    task = state.graph.task(task_id)
    if not task.is_hc:
        raise DomainError(f"Task {task_id} is LC and cannot trigger a mode switch")
    if state.mode == Mode.HI:
        return state

    clock = state.clock
    state.mode = Mode.HI
    state.pending.clear()
    abandoned = set(state.sch_hi.dropped_lc) - set(state.finished)

    for core in sorted(state.running):
        run = state.running[core]
        if run.task_id in abandoned:
            state.recorder.core_power(core, clock, 0.0)
            state.recorder.event(clock, 'task_end', task=run.task_id, core=core, missed=False, aborted=True)
            del state.running[core]
            continue
        cluster = state.platform.cluster_of(core)
        other = state.graph.task(run.task_id)
        run.request = cluster.max_level
        run.overrun_armed = False
        exec_start = run.exec_start if run.executing else run.ready_at + run.entry.stall
        state.est_finish[run.task_id] = max(clock, exec_start) + max(0.0, other.wcet_hi - run.done)

    # Sch_H entries keep their core and order; starts move later while a core or predecessor is busy
    offset = state.period_start
    running = {run.task_id: (core, state.est_finish[run.task_id] - offset) for core, run in state.running.items()}
    finished = {tid: t - offset for tid, t in state.finished.items()}
    plan = plan_hi_continuation(state.graph, state.sch_hi, clock - offset, finished, running)
    for core in state.platform.core_ids:
        queue = []
        for entry in state.sch_hi.core_entries(core):
            if entry.task_id not in plan:
                continue
            _, start, finish = plan[entry.task_id]
            runtime = RuntimeEntry.from_schedule(entry, offset, state.graph.task(entry.task_id).wcet_hi)
            runtime.start, runtime.bound = start + offset, finish + offset
            state.est_finish[entry.task_id] = runtime.bound
            queue.append(runtime)
        state.queues[core] = queue
    state.dropped |= abandoned

    for cluster_state in state.clusters.values():
        top = cluster_state.cluster.max_level
        action = governor_tick(cluster_state, [VfRequest(cluster_state.cluster.core_ids[0], task_id, top, clock)],
                               state.overheads, clock)
        if action is not None:
            state.unapplied_switches.append(action)

    state.recorder.event(clock, 'mode_switch', task=task_id, elapsed=elapsed, dropped=sorted(abandoned),
                         period=state.period_index)
    logger.debug(f"t={clock:.3f} mode switch by task {task_id} after {elapsed:.3f} ms; "
                 f"{len(abandoned)} LC tasks abandoned")
    return state


class Simulator:
    """Runs one graph on one platform under one policy for one or more periods."""

    def __init__(self, graph: TaskGraph, tables: Tuple[ScheduleTable, ScheduleTable], platform: Platform,
                 policy: Optional[PolicyConfig] = None, overheads: Optional[OverheadModel] = None,
                 execution: Optional[ExecutionModel] = None, thermal_params=None,
                 sample_ms: float = DEFAULT_SAMPLE_MS, window_s: float = DEFAULT_WINDOW_S,
                 check_invariants: bool = False):
        self.graph = graph
        self.sch_lo, self.sch_hi = tables
        self.platform = platform
        self.policy = (policy or PolicyConfig()).validate().effective()
        self.overheads = (overheads or OverheadModel()).validate()
        self.execution = (execution or ExecutionModel()).validate()
        self.thermal = ThermalModel(platform, thermal_params)
        self.sample_ms = sample_ms
        self.window_s = window_s
        self.check_invariants = check_invariants
        self._events: List[Tuple] = []
        self._seq = 0
        self._tokens = 0
        self._wake: Dict[int, int] = {}

    # ------------------------------------------------------------------
    # run / periods
    # ------------------------------------------------------------------
    def run(self, seed: int, periods: int = 1) -> Tuple[Trace, Metrics]:
        if periods < 1:
            raise ConfigError(f"periods must be >= 1, got {periods}")
        rng = np.random.default_rng(seed)
        self.ledger = EnergyLedger(self.platform.core_ids, self.window_s)
        self.recorder = TraceRecorder(self.platform, on_segment=self._charge)
        self.governor = DvfsGovernor(self.overheads)
        self.clusters = {c.id: ClusterState(c, c.max_level) for c in self.platform.clusters}
        for cid, cluster_state in self.clusters.items():
            self.recorder.cluster_freq(cid, 0.0, cluster_state.current_level.frequency)
        self._wake = {core: 0 for core in self.platform.core_ids}

        period_start = 0.0
        misses = 0
        for index in range(periods):
            actual = self.draw_actual_times(rng)
            state = self._new_state(index, period_start, actual)
            self._run_period(state)
            misses += state.misses
            period_start = max(period_start + self.graph.period, state.last_activity)
        self.recorder.finish(period_start)

        meta = {
            'graph': self.graph.digest(),
            'platform': self.platform.name,
            'seed': int(seed),
            'periods': periods,
            'policy': self.policy.label(),
            'deduct_overheads': self.policy.deduct_overheads,
        }
        trace = self.recorder.build(self.thermal, self.sample_ms, meta)
        metrics = summarize(trace)
        logger.debug(f"Run {meta['policy']} seed={seed}: peak={metrics.peak_system_power:.4f} W, "
                     f"energy={metrics.total_energy:.4f} J, misses={misses}")
        return trace, metrics

    def draw_actual_times(self, rng: np.random.Generator) -> Dict[int, float]:
        """Actual execution times of one period; two draws per task keep streams paired across policies."""
        model = self.execution
        actual = {}
        for task in self.graph.tasks:
            u = rng.random()
            overrun = task.is_hc and task.wcet_hi > task.wcet_lo + EPS and u < model.overrun_probability
            if model.kind == 'wcet':
                rng.random()
                value = task.wcet_hi if overrun else task.wcet_lo
            elif overrun:
                value = float(rng.uniform(task.wcet_lo, task.wcet_hi))
                value = max(value, np.nextafter(task.wcet_lo, np.inf))
            else:
                value = draw_actual_execution_time(task, Mode.LO, rng)
            actual[task.id] = model.overrides.get(task.id, value)
        return actual

    def _new_state(self, index: int, start: float, actual: Dict[int, float]) -> SimState:
        state = SimState(self.graph, self.platform, self.sch_lo, self.sch_hi, self.policy, self.overheads,
                         self.ledger, self.recorder, self.clusters, clock=start, period_start=start,
                         period_index=index, last_activity=start)
        state.actual = actual
        for core in self.platform.core_ids:
            queue = []
            for entry in self.sch_lo.core_entries(core):
                runtime = RuntimeEntry.from_schedule(entry, start, self.graph.task(entry.task_id).wcet_lo)
                state.est_finish[entry.task_id] = runtime.bound
                queue.append(runtime)
            state.queues[core] = queue
            state.busy_until[core] = start
        return state

    def _run_period(self, state: SimState) -> None:
        self._events = []
        for cluster_state in state.clusters.values():
            action = self.governor.force(cluster_state, cluster_state.cluster.max_level, state.clock)
            if action is not None:
                self._after_switch(state, action)

        if self.policy.reclaims_slack:
            for core in self.platform.core_ids:
                event = extract_dynamic_slack(state, core)
                if event is not None:
                    self._reclaim(state, event)
        for core in self.platform.core_ids:
            self._dispatch(state, core)

        while self._events:
            time, kind, _, key, token = heapq.heappop(self._events)
            state.clock = max(state.clock, time)
            if kind == EV_WAKE:
                if token == self._wake[key]:
                    self._dispatch(state, key)
            elif kind == EV_EXEC:
                run = state.running.get(key)
                if run is not None and run.token == token and not run.executing:
                    self._begin_exec(state, run)
            elif kind == EV_BUDGET:
                run = state.running.get(key)
                if run is not None and run.token == token:
                    self._on_budget(state, run)
            elif kind == EV_VF_DONE:
                cluster_state = state.clusters[key]
                if token == cluster_state.token:
                    cluster_state.transition_level = None
                    self.recorder.cluster_freq(key, state.clock, cluster_state.current_level.frequency)
                    self._speed_changed(state, key)

        missing = [t.id for t in self.graph.tasks if t.id not in state.finished and t.id not in state.dropped]
        if missing:
            raise SimulationFault(f"Period {state.period_index} ended with unexecuted tasks {missing[:10]}")

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------
    def _push(self, time: float, kind: int, key: int, token: int) -> None:
        self._seq += 1
        heapq.heappush(self._events, (time, kind, self._seq, key, token))

    def _next_token(self) -> int:
        self._tokens += 1
        return self._tokens

    def _charge(self, segment: PowerSegment) -> None:
        self.ledger.charge(segment.core, segment.power, segment.t1 - segment.t0, segment.t1)

    # ------------------------------------------------------------------
    # task lifecycle
    # ------------------------------------------------------------------
    def _dispatch(self, state: SimState, core: int) -> None:
        queue = state.queues[core]
        if core in state.running or not queue:
            return
        head = queue[0]
        task = self.graph.task(head.task_id)
        if any(p not in state.finished for p in task.predecessors):
            return
        ready = max(head.start, state.busy_until[core])
        if ready > state.clock + EPS:
            self._wake[core] += 1
            self._push(ready, EV_WAKE, core, self._wake[core])
            return
        self._start(state, core)

    def _start(self, state: SimState, core: int) -> None:
        entry = state.queues[core].pop(0)
        task = self.graph.task(entry.task_id)
        cluster = self.platform.cluster_of(core)
        request = entry.level if entry.level is not None else cluster.max_level
        state.pending.pop(task.id, None)
        run = RunningTask(task.id, core, entry, request, actual=state.actual[task.id],
                          ready_at=state.clock, last_t=state.clock, token=self._next_token())
        run.overrun_armed = state.mode == Mode.LO and task.is_hc and run.actual > task.wcet_lo + EPS
        state.running[core] = run
        state.est_finish[task.id] = state.clock + entry.stall + state.exec_time(entry)
        self.recorder.event(state.clock, 'task_start', task=task.id, core=core,
                            level_hz=request.frequency, mode=state.mode.value, period=state.period_index)
        state.last_activity = max(state.last_activity, state.clock)
        self._tick(state, cluster.id)
        if entry.stall > EPS:
            self._push(state.clock + entry.stall, EV_EXEC, core, run.token)
        else:
            self._begin_exec(state, run)

    def _begin_exec(self, state: SimState, run: RunningTask) -> None:
        run.exec_start = state.clock
        run.last_t = state.clock
        self._set_rate(state, run)

    def _progress(self, state: SimState, run: RunningTask) -> None:
        if run.executing:
            run.done += (state.clock - run.last_t) * run.rate
            run.last_t = state.clock

    def _set_rate(self, state: SimState, run: RunningTask) -> None:
        cluster_state = state.cluster_state(run.core_id)
        cluster = cluster_state.cluster
        level = cluster_state.effective_level(state.clock)
        task = self.graph.task(run.task_id)
        run.rate = level.frequency / cluster.f_max
        run.token = self._next_token()
        power = task_power_at_level(task, cluster.core_kind, level, cluster.power_params)
        self.recorder.core_power(run.core_id, state.clock, power, task.id)
        target = task.wcet_lo if run.overrun_armed else run.actual
        remaining = max(0.0, target - run.done)
        self._push(state.clock + remaining / run.rate, EV_BUDGET, run.core_id, run.token)

    def _speed_changed(self, state: SimState, cluster_id: int) -> None:
        for core in state.clusters[cluster_id].cluster.core_ids:
            run = state.running.get(core)
            if run is not None and run.executing:
                self._progress(state, run)
                self._set_rate(state, run)

    def _on_budget(self, state: SimState, run: RunningTask) -> None:
        self._progress(state, run)
        task = self.graph.task(run.task_id)
        if run.overrun_armed and run.done >= task.wcet_lo - 1e-9:
            run.done = task.wcet_lo
            self._mode_switch(state, run)
            return
        run.done = run.actual
        self._finish(state, run)

    def _finish(self, state: SimState, run: RunningTask) -> None:
        core, task = run.core_id, self.graph.task(run.task_id)
        clock = state.clock
        del state.running[core]
        self.recorder.core_power(core, clock, 0.0)
        state.finished[task.id] = clock
        state.est_finish[task.id] = clock
        state.last_activity = max(state.last_activity, clock)
        deadline = state.period_start + task.deadline
        missed = clock > deadline + MISS_TOLERANCE_MS
        self.recorder.event(clock, 'task_end', task=task.id, core=core, missed=missed, aborted=False)
        self.ledger.note_finish(core, clock)
        if missed:
            if self.policy.deduct_overheads:
                raise DeadlineMissError(task.id, clock, deadline, 'finished late with overheads deducted')
            state.misses += 1
            logger.debug(f"t={clock:.3f} task {task.id} missed its deadline {deadline:.3f}")

        self._tick(state, self.platform.cluster_of(core).id)
        if self.policy.reclaims_slack:
            event = extract_dynamic_slack(state, core, run)
            if event is not None:
                self._reclaim(state, event)
        for other in self.platform.core_ids:
            self._dispatch(state, other)

    def _mode_switch(self, state: SimState, run: RunningTask) -> None:
        # HI budgets are re-estimated from the progress of every running task
        for other in state.running.values():
            self._progress(state, other)
        mode_switch(state, run.task_id, run.done)
        for action in state.unapplied_switches:
            self.governor.actions.append(action)
            self._after_switch(state, action)
        state.unapplied_switches.clear()
        # Disarmed overruns now run to their actual time
        for other in list(state.running.values()):
            if other.executing:
                self._progress(state, other)
                self._set_rate(state, other)
        for core in self.platform.core_ids:
            self._dispatch(state, core)

    # ------------------------------------------------------------------
    # DVFS
    # ------------------------------------------------------------------
    def _tick(self, state: SimState, cluster_id: int) -> None:
        cluster_state = state.clusters[cluster_id]
        requests = [VfRequest(core, run.task_id, run.request, run.ready_at)
                    for core, run in sorted(state.running.items())
                    if core in cluster_state.cluster.core_ids]
        action = self.governor.tick(cluster_state, requests, state.clock)
        if action is not None:
            self._after_switch(state, action)

    def _after_switch(self, state: SimState, action: SwitchAction) -> None:
        cluster_state = state.clusters[action.cluster_id]
        self.recorder.event(state.clock, 'vf_switch', **action.to_payload())
        self.recorder.cluster_freq(action.cluster_id, state.clock,
                                   cluster_state.effective_level(state.clock).frequency)
        self._push(cluster_state.transition_end, EV_VF_DONE, action.cluster_id, cluster_state.token)
        self._speed_changed(state, action.cluster_id)

    # ------------------------------------------------------------------
    # slack reclamation
    # ------------------------------------------------------------------
    def _reclaim(self, state: SimState, event: SlackEvent) -> None:
        core = event.core_id
        self.recorder.event(state.clock, 'slack', core=core, amount=event.amount, origin=event.origin.value)
        n_checked = state.remap_cores_checked(core)
        usable = usable_slack(event, self.overheads, n_checked) if self.policy.deduct_overheads else event.amount
        if usable <= EPS:
            return
        state.busy_until[core] = max(state.busy_until[core], state.clock + self.overheads.scheduler_ms(n_checked))

        candidate = select_lookahead_task(state, event, self.policy.k, self.policy.alpha, self.policy.beta)
        if candidate is None:
            return
        cluster = self.platform.cluster_of(core)
        task = self.graph.task(candidate.task_id)
        level = compute_frequency(task, state.mode, candidate.usable, cluster)
        apply_selection(state, candidate, level)

        selected = state.queues[core][candidate.position]
        if self.policy.remap_enabled and selected.level is not None and n_checked:
            self.recorder.flush(state.clock)
            target = select_remap_core(state, candidate, self.policy.gamma, self.ledger)
            if target is not None:
                apply_remap(state, candidate.task_id, target)
                self.recorder.event(state.clock, 'remap', task=candidate.task_id, from_core=core, to_core=target)
                self._dispatch(state, target)

        if self.check_invariants and self.policy.deduct_overheads:
            violations = validate_state(state)
            if violations:
                raise SimulationFault(f"Invariant broken after slack reclamation: {violations[0]}")


def run_period(graph: TaskGraph, tables: Tuple[ScheduleTable, ScheduleTable], platform: Platform,
               policy: Optional[PolicyConfig] = None, overheads: Optional[OverheadModel] = None,
               seed: int = 0, periods: int = 1, **kwargs) -> Tuple[Trace, Metrics]:
    """Simulate ``periods`` consecutive periods and summarize the trace."""
    return Simulator(graph, tables, platform, policy, overheads, **kwargs).run(seed, periods)
