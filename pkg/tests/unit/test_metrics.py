import math

import pandas as pd
import pytest

from src.core.errors import ConfigError, PairingError
from src.core.statistics.comparison import (
    ComparisonCalculator, aggregate, compare, confidence_interval, impact_label, paired_reduction,
)
from src.core.statistics.metrics import Metrics, metrics_frame, peak_of_sum, summarize
from src.core.trace import PowerSegment, Trace, TraceEvent


def _trace(segments, events=(), meta=None):
    empty = Trace.empty([0, 1])
    return Trace(list(events), list(segments), [], empty.samples, [0, 1], {0: [0, 1]},
                 meta=dict(meta or {}))


def test_single_segment_energy():
    metrics = summarize(_trace([PowerSegment(0, 0.0, 10.0, 1.0, 3)]))
    assert metrics.total_energy == pytest.approx(0.01)
    assert metrics.peak_system_power == pytest.approx(1.0)
    assert metrics.peak_core_power == {0: 1.0, 1: 0.0}


def test_overlapping_segments_sum_exactly():
    segments = [PowerSegment(0, 0.0, 10.0, 1.0, 1), PowerSegment(1, 5.0, 15.0, 1.0, 2)]
    metrics = summarize(_trace(segments))
    assert metrics.peak_system_power == pytest.approx(2.0)
    assert metrics.max_peak_core_power == pytest.approx(1.0)
    assert metrics.peak_cluster_power[0] == pytest.approx(2.0)


def test_touching_segments_do_not_stack():
    assert peak_of_sum([(0.0, 5.0, 1.0), (5.0, 10.0, 1.5)]) == pytest.approx(1.5)
    assert peak_of_sum([]) == 0.0


def test_empty_trace_gives_zero_metrics():
    metrics = summarize(Trace.empty([0]))
    assert metrics.peak_system_power == 0.0
    assert metrics.total_energy == 0.0
    assert metrics.deadline_miss_count == 0


def test_events_are_counted():
    events = [
        TraceEvent(10.0, 'task_end', {'task': 0, 'missed': False}),
        TraceEvent(30.0, 'task_end', {'task': 1, 'missed': True}),
        TraceEvent(12.0, 'task_end', {'task': 2, 'aborted': True}),
        TraceEvent(15.0, 'mode_switch', {'dropped': [4, 5]}),
        TraceEvent(5.0, 'slack', {}),
        TraceEvent(6.0, 'vf_switch', {}),
        TraceEvent(6.0, 'remap', {}),
    ]
    metrics = summarize(_trace([PowerSegment(0, 0.0, 30.0, 0.5)], events))
    assert metrics.executed_tasks == 2
    assert metrics.deadline_miss_count == 1
    assert metrics.mode_switch_count == 1
    assert metrics.lc_dropped_count == 2
    assert (metrics.slack_events, metrics.vf_switches, metrics.remaps) == (1, 1, 1)
    assert metrics.makespan == pytest.approx(30.0)


def test_max_temperature_from_samples():
    samples = pd.DataFrame({'time_ms': [0.0, 1.0], 'core': [0, 0], 'task': [-1, -1], 'freq_hz': [0, 0],
                            'power_w': [0.0, 0.0], 'temp_c': [30.0, 31.5]})
    trace = Trace([], [PowerSegment(0, 0.0, 2.0, 0.1)], [], samples, [0], {0: [0]})
    assert summarize(trace).max_temperature == pytest.approx(31.5)


def test_metrics_file_round_trip(tmp_path):
    metrics = Metrics(peak_system_power=2.0, peak_core_power={0: 1.0, 3: 2.0}, total_energy=0.5,
                      pairing={'graph': 'abc', 'seed': 1})
    path = tmp_path / 'metrics.json'
    metrics.save(str(path))
    assert Metrics.load(str(path)) == metrics
    with pytest.raises(ConfigError):
        Metrics.from_dict({'schema': 'mcpp-metrics/1', 'colour': 1})


def _paired(peak, seed=1, policy='x'):
    return Metrics(peak_system_power=peak, peak_core_power={0: peak}, total_energy=peak / 10,
                   max_temperature=50.0,
                   pairing={'graph': 'g', 'platform': 'odroid-xu3', 'seed': seed, 'periods': 1, 'policy': policy})


def test_compare_identical_runs_gives_unit_ratios():
    report = compare(_paired(2.0), _paired(2.0))
    assert all(value == pytest.approx(1.0) for value in report.ratios.values())


def test_compare_ratio_and_zero_baseline():
    report = compare(_paired(4.0, policy='static-max'), _paired(3.0, policy='proposed'))
    assert report['peak_system_power'] == pytest.approx(0.75)
    assert report.baseline == 'static-max'
    zero = compare(_paired(0.0), _paired(0.0))
    assert zero['peak_system_power'] == 1.0
    assert math.isinf(compare(_paired(0.0), _paired(1.0))['peak_system_power'])


def test_unpaired_runs_are_rejected():
    with pytest.raises(PairingError):
        compare(_paired(2.0, seed=1), _paired(2.0, seed=2))


def test_confidence_interval():
    flat = confidence_interval([1.0, 1.0, 1.0])
    assert flat['ci_low'] == flat['ci_high'] == pytest.approx(1.0)
    spread = confidence_interval([1.0, 2.0, 3.0])
    assert spread['mean'] == pytest.approx(2.0)
    assert spread['ci_high'] - spread['mean'] == pytest.approx(4.302653 / math.sqrt(3), rel=1e-5)
    single = confidence_interval([0.8])
    assert (single['ci_low'], single['ci_high'], single['n']) == (0.8, 0.8, 1)
    assert confidence_interval([])['n'] == 0


def test_impact_labels():
    assert impact_label({'n': 3, 'ci_low': 0.7, 'ci_high': 0.9}) == 'Reduced'
    assert impact_label({'n': 3, 'ci_low': 0.9, 'ci_high': 1.1}) == 'No change'
    assert impact_label({'n': 3, 'ci_low': 1.1, 'ci_high': 1.2}) == 'Increased'
    assert impact_label({'n': 0, 'ci_low': 0.0, 'ci_high': 0.0}) == 'No data'


def test_calculator_aggregates_reports():
    reports = [compare(_paired(4.0), _paired(p)) for p in (3.0, 3.2, 2.8)]
    result = ComparisonCalculator().calculate(reports)
    assert result['status'] == 'success'
    row = result['table'].set_index('metric').loc['peak_system_power']
    assert row['mean'] == pytest.approx(0.75)
    assert row['impact'] == 'Reduced'
    assert 'peak_system_power' in result['interpretation']
    assert list(aggregate(reports)['metric'])[0] == 'peak_system_power'


def test_metrics_frame_flattens_pairing():
    rows = metrics_frame([_paired(2.0)])
    assert rows[0]['seed'] == 1
    assert rows[0]['max_peak_core_power'] == 2.0


def test_paired_reduction_against_immediate_next():
    immediate = [_paired(4.0, seed=s, policy='immediate-next') for s in (1, 2, 3)]
    proposed = [_paired(p, seed=s, policy='proposed') for s, p in zip((1, 2, 3), (3.0, 3.2, 2.8))]
    table = paired_reduction(proposed, immediate).set_index('metric')
    peak = table.loc['peak_system_power']
    assert peak['mean'] == pytest.approx(0.25)
    assert peak['ci_low'] < 0.25 < peak['ci_high']
    assert peak['n'] == 3
    assert peak['impact'] == 'Reduced'
    assert table.loc['max_temperature', 'mean'] == pytest.approx(0.0)
    assert table.loc['max_temperature', 'impact'] == 'No change'


def test_paired_reduction_needs_matching_runs():
    with pytest.raises(PairingError):
        paired_reduction([_paired(3.0)], [])
    with pytest.raises(PairingError):
        paired_reduction([_paired(3.0, seed=1)], [_paired(4.0, seed=2)])
