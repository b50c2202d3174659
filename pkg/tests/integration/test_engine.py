import pytest

from src.core.config import ExecutionModel, OverheadModel, PolicyConfig, PolicyKind
from src.core.engine.simulator import Simulator, run_period
from src.core.errors import UnschedulableError
from src.core.generator import GenParams, generate
from src.core.platform import Platform
from src.core.static_scheduler import build_tables
from src.core.taskgraph import build_graph


@pytest.fixture
def one_core():
    return Platform.by_name('homogeneous', 1)


def _run(graph, platform, policy, overrides=None, seed=0, **kwargs):
    execution = ExecutionModel(overrides=overrides or {})
    return run_period(graph, build_tables(graph, platform), platform, policy, OverheadModel(),
                      seed=seed, execution=execution, **kwargs)


def test_ablation_counts_the_miss_it_causes(chain_graph, one_core):
    policy = PolicyConfig(deduct_overheads=False)
    trace, metrics = _run(chain_graph, one_core, policy, {0: 10.0, 1: 30.0})
    ends = {e.payload['task']: e for e in trace.events_of('task_end')}
    assert ends[1].payload['missed']
    assert ends[1].time > 60.0
    assert metrics.deadline_miss_count == 1
    assert trace.meta['policy'].endswith('-nodeduct')


def test_deducting_overheads_keeps_the_deadline(chain_graph, one_core):
    trace, metrics = _run(chain_graph, one_core, PolicyConfig(), {0: 10.0, 1: 30.0})
    ends = {e.payload['task']: e.time for e in trace.events_of('task_end')}
    starts = {e.payload['task']: e.payload['level_hz'] for e in trace.events_of('task_start')}
    assert starts[1] == 1_200_000_000
    assert ends[1] == pytest.approx(10.056417 + 12.025 + 35.0, abs=1e-6)
    assert metrics.deadline_miss_count == 0
    assert metrics.slack_events == 1


def test_small_slack_never_changes_the_level(chain_graph, one_core):
    trace, metrics = _run(chain_graph, one_core, PolicyConfig(), {0: 22.0, 1: 30.0})
    assert trace.events_of('vf_switch') == []
    assert metrics.vf_switches == 0
    assert metrics.deadline_miss_count == 0


def test_overrun_triggers_one_mode_switch(one_core):
    graph = build_graph([{'id': 0, 'criticality': 'HC', 'wcet_lo': 20.0, 'wcet_hi': 40.0,
                          'peak_power': {'LITTLE': 0.7}}], period=100.0)
    trace, metrics = _run(graph, one_core, PolicyConfig(), {0: 25.0})
    assert metrics.mode_switch_count == 1
    assert metrics.deadline_miss_count == 0
    switch = trace.events_of('mode_switch')[0]
    assert switch.time == pytest.approx(20.0)
    assert trace.events_of('task_end')[0].time == pytest.approx(25.0)


def test_static_max_never_scales(uav_graph, odroid):
    trace, metrics = _run(uav_graph, odroid, PolicyConfig(kind=PolicyKind.STATIC_MAX), seed=3)
    assert metrics.vf_switches == 0
    assert metrics.slack_events == 0
    assert metrics.executed_tasks == len(uav_graph)


def test_same_seed_same_trace(uav_graph, odroid):
    tables = build_tables(uav_graph, odroid)
    first = Simulator(uav_graph, tables, odroid).run(seed=11)
    second = Simulator(uav_graph, tables, odroid).run(seed=11)
    assert first[1].to_dict() == second[1].to_dict()
    assert first[0].events == second[0].events
    assert first[0].samples.equals(second[0].samples)


def test_multiple_periods(uav_graph, odroid):
    trace, metrics = _run(uav_graph, odroid, PolicyConfig(), seed=2, periods=3)
    assert metrics.executed_tasks == 3 * len(uav_graph)
    assert trace.end_time >= 3 * uav_graph.period - 1e-9
    assert not trace.samples.empty


def _random_cases(n_tasks, seeds):
    platform = Platform.by_name('big-little', 8)
    for seed in seeds:
        graph = generate(GenParams(n_cores=8, n_tasks=n_tasks, utilization_range=(0.25, 0.5), seed=seed))
        try:
            tables = build_tables(graph, platform)
        except UnschedulableError:
            continue
        yield graph, tables, platform


def _check_random(n_tasks, seeds):
    ran = 0
    for graph, tables, platform in _random_cases(n_tasks, seeds):
        for policy in (PolicyConfig(), PolicyConfig(kind=PolicyKind.IMMEDIATE_NEXT)):
            simulator = Simulator(graph, tables, platform, policy, check_invariants=True)
            _, metrics = simulator.run(seed=ran)
            assert metrics.deadline_miss_count == 0
        ran += 1
    assert ran > 0


def test_random_graphs_meet_every_deadline():
    _check_random(20, range(4))


@pytest.mark.slow
def test_many_random_graphs_meet_every_deadline():
    _check_random(50, range(20))


def test_reclamation_never_raises_a_core_peak(uav_graph, odroid):
    tables = build_tables(uav_graph, odroid)
    for seed in range(4):
        _, reference = Simulator(uav_graph, tables, odroid, PolicyConfig(kind=PolicyKind.STATIC_MAX)).run(seed)
        _, proposed = Simulator(uav_graph, tables, odroid, PolicyConfig(k=4)).run(seed)
        assert proposed.max_peak_core_power <= reference.max_peak_core_power + 1e-12
        assert proposed.executed_tasks == reference.executed_tasks


def test_switch_events_replay_consistently(uav_graph, odroid):
    tables = build_tables(uav_graph, odroid)
    policy = PolicyConfig(k=4)
    for seed in range(5):
        trace, _ = Simulator(uav_graph, tables, odroid, policy, execution=ExecutionModel(overrun_probability=0.3)).run(seed)
        level = {c.id: c.f_max for c in odroid.clusters}
        for event in trace.events_of('vf_switch'):
            cluster = event.payload['cluster']
            assert event.payload['from_hz'] == level[cluster]
            assert event.payload['to_hz'] != event.payload['from_hz']
            level[cluster] = event.payload['to_hz']


def _overrun_runs(n_tasks, seeds, periods=2):
    for run_seed, (graph, tables, platform) in enumerate(_random_cases(n_tasks, seeds)):
        for policy in (PolicyConfig(), PolicyConfig(kind=PolicyKind.IMMEDIATE_NEXT)):
            simulator = Simulator(graph, tables, platform, policy,
                                  execution=ExecutionModel(overrun_probability=0.3), check_invariants=True)
            yield graph, simulator.run(seed=run_seed, periods=periods)


def test_overruns_keep_every_hc_deadline():
    switched = 0
    for graph, (trace, metrics) in _overrun_runs(30, range(6)):
        assert metrics.deadline_miss_count == 0
        switched += metrics.mode_switch_count
    assert switched > 0


def test_mode_only_rises_within_a_period():
    for graph, (trace, _) in _overrun_runs(20, range(4), periods=3):
        switches = {}
        for event in trace.events_of('mode_switch'):
            assert event.payload['period'] not in switches
            switches[event.payload['period']] = event.time
        dropped = {p: set() for p in switches}
        for event in trace.events_of('mode_switch'):
            dropped[event.payload['period']] |= set(event.payload['dropped'])
        for event in trace.events_of('task_start'):
            period = event.payload['period']
            if event.payload['mode'] == 'HI':
                assert period in switches
                assert event.time >= switches[period] - 1e-9
                assert event.payload['task'] not in dropped[period]
            elif period in switches:
                assert event.time <= switches[period] + 1e-9


def test_forced_overrun_runs_hc_tasks_to_c_hi(uav_graph, odroid):
    tables = build_tables(uav_graph, odroid)
    overrides = {t.id: t.wcet_hi for t in uav_graph.hc_tasks}
    execution = ExecutionModel(overrides=overrides)
    trace, metrics = Simulator(uav_graph, tables, odroid, PolicyConfig(kind=PolicyKind.STATIC_MAX),
                               execution=execution, check_invariants=True).run(seed=0)
    assert metrics.mode_switch_count == 1
    assert metrics.deadline_miss_count == 0
    switch = trace.events_of('mode_switch')[0]
    assert switch.payload['task'] == 0
    starts = {e.payload['task']: e for e in trace.events_of('task_start')}
    ends = {e.payload['task']: e for e in trace.events_of('task_end')}
    for task in uav_graph.hc_tasks:
        assert ends[task.id].time - starts[task.id].time == pytest.approx(task.wcet_hi)
        if task.id != 0:
            assert starts[task.id].payload['mode'] == 'HI'
    for tid in switch.payload['dropped']:
        assert tid not in starts or ends[tid].payload['aborted']
