import json

import pandas as pd
import pytest

from src.core.config import ExecutionModel, PolicyConfig
from src.core.engine.simulator import Simulator
from src.core.errors import ConfigError
from src.core.platform import Platform
from src.core.static_scheduler import build_tables
from src.core.trace import Trace, TraceRecorder


@pytest.fixture
def uav_trace(uav_graph, odroid):
    tables = build_tables(uav_graph, odroid)
    execution = ExecutionModel(overrun_probability=0.5)
    trace, _ = Simulator(uav_graph, tables, odroid, PolicyConfig(k=4), execution=execution).run(seed=4, periods=2)
    return trace


def test_saved_trace_loads_back_unchanged(tmp_path, uav_trace):
    csv_path, json_path = uav_trace.save(str(tmp_path))
    assert csv_path.endswith('trace.csv')
    assert json_path.endswith('trace_events.json')

    loaded = Trace.load(str(tmp_path))
    assert loaded.events == uav_trace.events
    assert loaded.segments == uav_trace.segments
    assert loaded.freq_segments == uav_trace.freq_segments
    assert loaded.cores == uav_trace.cores
    assert loaded.clusters == uav_trace.clusters
    assert loaded.end_time == uav_trace.end_time
    assert loaded.meta == uav_trace.meta
    pd.testing.assert_frame_equal(loaded.samples, uav_trace.samples, check_dtype=False)
    pd.testing.assert_series_equal(loaded.system_power(), uav_trace.system_power(), check_dtype=False)


def test_custom_stem(tmp_path, uav_trace):
    uav_trace.save(str(tmp_path), stem='run-7')
    assert (tmp_path / 'run-7.csv').exists()
    assert Trace.load(str(tmp_path), stem='run-7').events == uav_trace.events


def test_unknown_schema_is_rejected(tmp_path, uav_trace):
    _, json_path = uav_trace.save(str(tmp_path))
    with open(json_path, encoding='utf-8') as fh:
        doc = json.load(fh)
    doc['schema'] = 'something-else/9'
    with open(json_path, 'w', encoding='utf-8') as fh:
        json.dump(doc, fh)
    with pytest.raises(ConfigError):
        Trace.load(str(tmp_path))


def test_recorder_rejects_unknown_event_kind():
    recorder = TraceRecorder(Platform.by_name('homogeneous', 1))
    with pytest.raises(ConfigError):
        recorder.event(0.0, 'teleport', task=1)


def test_recorder_merges_equal_power_and_splits_on_change():
    recorder = TraceRecorder(Platform.by_name('homogeneous', 1))
    recorder.core_power(0, 0.0, 0.5, task=3)
    recorder.core_power(0, 4.0, 0.5, task=3)
    recorder.core_power(0, 10.0, 0.8, task=3)
    recorder.core_power(0, 15.0, 0.0)
    assert [(s.t0, s.t1, s.power) for s in recorder.segments] == [(0.0, 10.0, 0.5), (10.0, 15.0, 0.8)]
    assert recorder.segments[0].energy == pytest.approx(0.005)
