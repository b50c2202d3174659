import numpy as np
import pytest

from src.core.errors import ConfigError, GenerationError
from src.core.generator import GenParams, draw_actual_execution_time, generate, uunifast_discard
from src.core.taskgraph import Mode, build_graph, dumps_graph, validate


def test_default_parameters_give_a_valid_graph():
    params = GenParams(n_cores=8, utilization_range=(0.5, 0.75), edge_percent=0.10, n_tasks=50, seed=7)
    graph = generate(params)
    assert len(graph) == 50
    assert validate(graph) == []
    total = graph.utilization(Mode.HI)
    assert 0.5 * 8 * 0.98 <= total <= 0.75 * 8 * 1.02


def test_single_task_without_edges():
    params = GenParams(n_cores=1, utilization_range=(0.3, 0.6), edge_percent=0.0, n_tasks=1, seed=3)
    graph = generate(params)
    assert len(graph) == 1
    assert graph.edges() == []
    task = graph.tasks[0]
    assert graph.utilization(Mode.HI) == pytest.approx(task.wcet_hi / graph.period)


def test_same_seed_gives_identical_bytes():
    params = GenParams(seed=11)
    assert dumps_graph(generate(params)) == dumps_graph(generate(params))
    assert dumps_graph(generate(params)) != dumps_graph(generate(GenParams(seed=12)))


def test_edge_density_tracks_edge_percent():
    n = 50
    counts = [len(generate(GenParams(n_tasks=n, edge_percent=0.10, seed=s)).edges()) for s in range(8)]
    expected = 0.10 * n * (n - 1) / 2
    assert 0.6 * expected <= np.mean(counts) <= 1.4 * expected


def test_hc_closure_holds_after_generation():
    graph = generate(GenParams(edge_percent=0.2, seed=5))
    for task in graph.hc_tasks:
        assert all(graph.task(p).is_hc for p in task.predecessors)
    for task in graph.lc_tasks:
        assert task.wcet_lo == task.wcet_hi


def test_unreachable_utilization_is_a_generation_error():
    with pytest.raises(GenerationError):
        generate(GenParams(n_cores=8, n_tasks=3, utilization_range=(0.5, 0.75)))


def test_invalid_parameters_are_config_errors():
    with pytest.raises(ConfigError):
        generate(GenParams(n_tasks=0))
    with pytest.raises(ConfigError):
        GenParams.from_dict({'n_tasks': 5, 'colour': 'red'})


def test_params_round_trip_through_dict():
    params = GenParams(utilization_range=(0.25, 0.5), power_distribution='uniform', seed=2)
    assert GenParams.from_dict(params.to_dict()) == params


def test_uunifast_respects_total_and_cap():
    rng = np.random.default_rng(0)
    shares = uunifast_discard(10, 4.0, rng)
    assert shares.sum() == pytest.approx(4.0)
    assert shares.max() <= 1.0


def test_actual_execution_time_bounds():
    task = build_graph([{'id': 0, 'criticality': 'LC', 'wcet_lo': 30.0}], period=100).task(0)
    rng = np.random.default_rng(1)
    draws = np.array([draw_actual_execution_time(task, Mode.LO, rng) for _ in range(2000)])
    assert draws.min() >= 20.0
    assert draws.max() <= 30.0
    assert draws.min() < 22.0


def test_zero_wcet_draws_zero():
    task = build_graph([{'id': 0, 'criticality': 'LC', 'wcet_lo': 0.0}], period=100).task(0)
    assert draw_actual_execution_time(task, Mode.LO, np.random.default_rng(0)) == 0.0
