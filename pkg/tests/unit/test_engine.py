import pytest

from src.core.engine.simulator import mode_switch
from src.core.engine.state import RunningTask, validate_state
from src.core.errors import DomainError
from src.core.platform import Platform
from src.core.static_scheduler import build_tables
from src.core.taskgraph import Mode, build_graph


def _start_running(state, task_id, clock):
    """Pop ``task_id`` from its queue and put it on the core with C^LO already consumed."""
    task = state.graph.task(task_id)
    core = next(c for c, q in state.queues.items() if any(e.task_id == task_id for e in q))
    queue = state.queues[core]
    entry = queue.pop(next(i for i, e in enumerate(queue) if e.task_id == task_id))
    level = state.platform.cluster_of(core).max_level
    state.running[core] = RunningTask(task_id, core, entry, level, actual=task.wcet_hi, ready_at=entry.start,
                                      exec_start=entry.start, done=task.wcet_lo, last_t=clock)
    state.clock = clock
    return core


def test_switch_drops_lc_tasks_missing_from_the_hi_table(state_factory):
    platform = Platform.by_name('homogeneous', 1)
    graph = build_graph([
        {'id': 0, 'criticality': 'HC', 'wcet_lo': 20, 'wcet_hi': 80},
        {'id': 1, 'criticality': 'LC', 'wcet_lo': 30},
    ], period=100)
    state = state_factory(graph, platform)
    assert [e.task_id for e in state.queues[0]] == [0, 1]
    _start_running(state, 0, 20.0)

    mode_switch(state, 0, 20.0)
    assert state.mode == Mode.HI
    assert state.queues[0] == []
    assert state.dropped == {1}
    assert state.est_finish[0] == pytest.approx(80.0)
    assert state.running[0].request == platform.cluster(0).max_level
    assert not state.running[0].overrun_armed

    switches = [e for e in state.recorder.events if e.kind == 'mode_switch']
    assert len(switches) == 1
    assert switches[0].payload['dropped'] == [1]


def test_every_hc_budget_after_the_switch_is_c_hi(uav_graph, odroid, state_factory):
    tables = build_tables(uav_graph, odroid)
    sch_hi = tables[1]
    state = state_factory(uav_graph, odroid, tables)
    clock = sch_hi.entry_for(0).start + uav_graph.task(0).wcet_lo
    _start_running(state, 0, clock)

    mode_switch(state, 0, uav_graph.task(0).wcet_lo)
    queued = {e.task_id: e for q in state.queues.values() for e in q}
    assert set(queued) == set(sch_hi.task_ids()) - {0}
    for tid, entry in queued.items():
        task = uav_graph.task(tid)
        assert entry.core_id == sch_hi.core_of(tid)
        assert entry.start >= clock - 1e-9
        if task.is_hc:
            assert entry.bound - entry.start == pytest.approx(task.wcet_hi)
    assert state.est_finish[0] == pytest.approx(clock + uav_graph.task(0).wcet_hi - uav_graph.task(0).wcet_lo)
    assert validate_state(state) == []


def test_second_switch_in_a_period_changes_nothing(uav_graph, odroid, state_factory):
    state = state_factory(uav_graph, odroid)
    _start_running(state, 0, 10.0)
    mode_switch(state, 0, 10.0)
    queues = {c: list(q) for c, q in state.queues.items()}
    mode_switch(state, 0, 12.0)
    assert state.mode == Mode.HI
    assert state.queues == queues
    assert len([e for e in state.recorder.events if e.kind == 'mode_switch']) == 1


def test_lc_task_cannot_switch_the_mode(uav_graph, odroid, state_factory):
    state = state_factory(uav_graph, odroid)
    with pytest.raises(DomainError):
        mode_switch(state, 7, 5.0)
    assert state.mode == Mode.LO
