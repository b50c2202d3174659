import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.core.config import OverheadModel, PolicyConfig
from src.core.engine.state import ClusterState, RuntimeEntry, SimState
from src.core.platform import Cluster, CoreKind, Platform
from src.core.schedule import ScheduleTable
from src.core.static_scheduler import build_tables
from src.core.taskgraph import Mode, build_graph
from src.core.thermal import EnergyLedger
from src.core.trace import TraceRecorder
from src.utils.logger import AppLogger


@pytest.fixture(autouse=True, scope='session')
def console_only_logging():
    AppLogger.configure(log_dir=None)
    yield


@pytest.fixture
def odroid():
    return Platform.by_name('odroid-xu3')


@pytest.fixture
def little_cluster(odroid):
    return odroid.cluster(0)


@pytest.fixture
def split_platform():
    """Three LITTLE siblings plus one BIG core in its own cluster."""
    return Platform('split', (Cluster.default(0, CoreKind.LITTLE, (0, 1, 2)),
                              Cluster.default(1, CoreKind.BIG, (3,))))


@pytest.fixture
def chain_graph():
    """Two LC tasks back to back on one core; the second ends exactly at the deadline."""
    return build_graph([
        {'id': 0, 'criticality': 'LC', 'wcet_lo': 30.0, 'successors': [1], 'deadline': 30.0,
         'peak_power': {'LITTLE': 0.9, 'BIG': 6.0}},
        {'id': 1, 'criticality': 'LC', 'wcet_lo': 30.0, 'deadline': 60.0,
         'peak_power': {'LITTLE': 0.9, 'BIG': 6.0}},
    ], period=60.0)


@pytest.fixture
def uav_graph():
    """Eight tasks, seven of them dependent, with a 200 ms deadline."""
    def rec(tid, crit, lo, hi=None, succ=()):
        return {'id': tid, 'criticality': crit, 'wcet_lo': lo, 'wcet_hi': hi if hi is not None else lo,
                'successors': list(succ), 'peak_power': {'LITTLE': 0.5 + 0.05 * tid, 'BIG': 4.0 + 0.4 * tid}}

    return build_graph([
        rec(0, 'HC', 10, 20, (1, 2)),
        rec(1, 'HC', 15, 25, (3,)),
        rec(2, 'HC', 10, 20, (3,)),
        rec(3, 'HC', 10, 20, (4,)),
        rec(4, 'HC', 10, 15, (5,)),
        rec(5, 'LC', 20, succ=(6,)),
        rec(6, 'LC', 15),
        rec(7, 'LC', 30),
    ], period=200.0)


def make_state(graph, platform, tables=None, policy=None, overheads=None, queues=None):
    """SimState at time 0 with queues taken from Sch_L, or given explicitly as {core: [RuntimeEntry]}."""
    if tables is None:
        tables = build_tables(graph, platform)
    sch_lo, sch_hi = tables
    clusters = {c.id: ClusterState(c, c.max_level) for c in platform.clusters}
    state = SimState(graph, platform, sch_lo, sch_hi, policy or PolicyConfig(), overheads or OverheadModel(),
                     EnergyLedger(platform.core_ids), TraceRecorder(platform), clusters)
    for core in platform.core_ids:
        if queues is not None:
            state.queues[core] = list(queues.get(core, []))
        else:
            state.queues[core] = [RuntimeEntry.from_schedule(e, 0.0, graph.task(e.task_id).wcet_lo)
                                  for e in sch_lo.core_entries(core)]
        for entry in state.queues[core]:
            state.est_finish[entry.task_id] = entry.bound
        state.busy_until[core] = 0.0
    return state


def empty_tables():
    return ScheduleTable(Mode.LO, {}), ScheduleTable(Mode.HI, {})


@pytest.fixture
def state_factory():
    return make_state


@pytest.fixture
def no_tables():
    return empty_tables()
