import json
import os

import pytest

from src.cli.main import main
from src.core.errors import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE
from src.core.statistics.metrics import Metrics
from src.core.taskgraph import load_graph, save_graph

QUIET = ['--no-log-file']


def test_zero_tasks_is_a_usage_error(tmp_path):
    out = tmp_path / 'g.json'
    assert main(QUIET + ['generate', '--tasks', '0', '--out', str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_unreachable_utilization_is_infeasible(tmp_path):
    argv = QUIET + ['generate', '--cores', '8', '--tasks', '2', '--util', '0.5:0.75', '--out', str(tmp_path / 'g.json')]
    assert main(argv) == EXIT_INFEASIBLE


def test_bad_flag_value_exits_with_usage(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(QUIET + ['generate', '--util', 'half', '--out', str(tmp_path / 'g.json')])
    assert exc.value.code == 2


def test_generate_is_reproducible(tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    for out in (first, second):
        argv = QUIET + ['generate', '--cores', '4', '--tasks', '12', '--util', '0.25:0.5', '--seed', '5',
                        '--out', str(out)]
        assert main(argv) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert len(load_graph(str(first))) == 12


@pytest.fixture
def graph_file(tmp_path, uav_graph):
    path = tmp_path / 'uav.json'
    save_graph(uav_graph, str(path))
    return str(path)


def test_tables_then_run(tmp_path, graph_file, capsys):
    tables = tmp_path / 'tables.json'
    assert main(QUIET + ['tables', '--graph', graph_file, '--platform', 'odroid-xu3', '--out', str(tables)]) == EXIT_OK
    assert json.loads(tables.read_text())['schema'] == 'mcpp-tables/1'

    out = tmp_path / 'run'
    argv = QUIET + ['run', '--graph', graph_file, '--tables', str(tables), '--platform', 'odroid-xu3',
                    '--k', '3', '--seed', '4', '--out', str(out)]
    assert main(argv) == EXIT_OK
    assert 'peak=' in capsys.readouterr().out
    for name in ('trace.csv', 'trace_events.json', 'metrics.json', 'tables.json', 'metrics.xlsx'):
        assert os.path.exists(out / name)
    metrics = Metrics.load(str(out / 'metrics.json'))
    assert metrics.pairing['seed'] == 4
    assert metrics.pairing['policy'].startswith('proposed-k3')


def test_run_static_baseline_with_config(tmp_path, graph_file):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'platform': {'name': 'odroid-xu3'}, 'policy': {'kind': 'static-max'},
                                  'execution': {'kind': 'wcet'}}))
    out = tmp_path / 'baseline'
    assert main(QUIET + ['--config', str(config), 'run', '--graph', graph_file, '--out', str(out)]) == EXIT_OK
    metrics = Metrics.load(str(out / 'metrics.json'))
    assert metrics.pairing['policy'] == 'static-max'
    assert metrics.vf_switches == 0


def test_invalid_graph_file(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'schema': 'mcpp-graph/1', 'period': 10, 'tasks': [
        {'id': 0, 'criticality': 'HC', 'wcet_lo': 8, 'wcet_hi': 5, 'deadline': 10}]}))
    assert main(QUIET + ['run', '--graph', str(bad), '--out', str(tmp_path / 'o')]) == EXIT_USAGE
    assert main(QUIET + ['run', '--graph', str(tmp_path / 'missing.json'), '--out', str(tmp_path / 'o')]) == EXIT_USAGE


def test_small_vf_latency_alone_is_accepted(tmp_path, graph_file):
    out = tmp_path / 'fast'
    argv = QUIET + ['run', '--graph', graph_file, '--platform', 'odroid-xu3', '--to-vf', '0', '--out', str(out)]
    assert main(argv) == EXIT_OK
