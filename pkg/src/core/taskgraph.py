# src/core/taskgraph.py
"""Dual-criticality task-graph model, invariant checks and JSON persistence."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from .errors import ConfigError, DomainError

GRAPH_SCHEMA = 'mcpp-graph/1'
EPS = 1e-9

# Maximum-frequency peak power envelope per core kind, watts
DEFAULT_POWER_ENVELOPE: Dict[str, Tuple[float, float]] = {
    'LITTLE': (0.484, 0.940),
    'BIG': (3.891, 7.622),
}

logger = logging.getLogger('MCPeakPower')


class Criticality(str, Enum):
    LC = 'LC'
    HC = 'HC'


class Mode(str, Enum):
    LO = 'LO'
    HI = 'HI'


def _kind_key(core_kind) -> str:
    return getattr(core_kind, 'value', core_kind)


@dataclass(frozen=True)
class Violation:
    """One broken rule found by a validator."""
    task_id: Optional[int]
    rule: str
    message: str

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class Task:
    id: int
    criticality: Criticality
    wcet_lo: float
    wcet_hi: float
    deadline: float
    successors: FrozenSet[int] = frozenset()
    predecessors: FrozenSet[int] = frozenset()
    peak_power: Mapping[str, float] = field(default_factory=dict)
    energy_max: Mapping[str, float] = field(default_factory=dict)

    @property
    def is_hc(self) -> bool:
        return self.criticality == Criticality.HC

    def wcet(self, mode: Mode) -> float:
        return self.wcet_hi if mode == Mode.HI else self.wcet_lo

    def power(self, core_kind) -> float:
        key = _kind_key(core_kind)
        if key not in self.peak_power:
            raise DomainError(f"Task {self.id} has no power profile for core kind {key}")
        return self.peak_power[key]

    def energy(self, core_kind, mode: Mode) -> float:
        """Maximum energy in joules; peak power times the mode's WCET unless measured."""
        key = _kind_key(core_kind)
        if key in self.energy_max:
            return self.energy_max[key]
        return self.power(key) * self.wcet(mode) / 1000.0


@dataclass(frozen=True)
class TaskGraph:
    tasks: Tuple[Task, ...]
    period: float
    deadline: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'tasks', tuple(sorted(self.tasks, key=lambda t: t.id)))
        if self.deadline is None:
            object.__setattr__(self, 'deadline', self.period)
        object.__setattr__(self, '_index', {t.id: t for t in self.tasks})

    def __len__(self):
        return len(self.tasks)

    def task(self, task_id: int) -> Task:
        try:
            return self._index[task_id]
        except KeyError:
            raise DomainError(f"Unknown task id {task_id}") from None

    def __contains__(self, task_id) -> bool:
        return task_id in self._index

    @property
    def ids(self) -> List[int]:
        return [t.id for t in self.tasks]

    @property
    def hc_tasks(self) -> List[Task]:
        return [t for t in self.tasks if t.is_hc]

    @property
    def lc_tasks(self) -> List[Task]:
        return [t for t in self.tasks if not t.is_hc]

    def edges(self) -> List[Tuple[int, int]]:
        return [(t.id, s) for t in self.tasks for s in sorted(t.successors)]

    def to_networkx(self) -> nx.DiGraph:
        dag = nx.DiGraph()
        dag.add_nodes_from(self.ids)
        dag.add_edges_from((u, v) for u, v in self.edges() if v in self._index)
        return dag

    def topological_order(self) -> List[int]:
        return list(nx.lexicographical_topological_sort(self.to_networkx()))

    def utilization(self, mode: Mode = Mode.HI) -> float:
        if self.period <= 0:
            return 0.0
        return sum(t.wcet(mode) for t in self.tasks) / self.period

    def digest(self) -> str:
        return hashlib.sha256(dumps_graph(self).encode('utf-8')).hexdigest()[:16]


def latest_finish_times(graph_or_successors, wcet: Mapping[int, float], deadline: float) -> Dict[int, float]:
    """Backward pass: latest finish of every task so the graph deadline still holds."""
    if isinstance(graph_or_successors, TaskGraph):
        successors = {t.id: t.successors for t in graph_or_successors.tasks}
    else:
        successors = graph_or_successors
    dag = nx.DiGraph()
    dag.add_nodes_from(successors)
    dag.add_edges_from((u, v) for u, succ in successors.items() for v in succ)
    latest: Dict[int, float] = {}
    for node in reversed(list(nx.lexicographical_topological_sort(dag))):
        bound = deadline
        for succ in successors[node]:
            bound = min(bound, latest[succ] - wcet[succ])
        latest[node] = bound
    return latest


def earliest_finish_times(graph_or_predecessors, wcet: Mapping[int, float]) -> Dict[int, float]:
    if isinstance(graph_or_predecessors, TaskGraph):
        predecessors = {t.id: t.predecessors for t in graph_or_predecessors.tasks}
    else:
        predecessors = graph_or_predecessors
    dag = nx.DiGraph()
    dag.add_nodes_from(predecessors)
    dag.add_edges_from((p, v) for v, preds in predecessors.items() for p in preds)
    earliest: Dict[int, float] = {}
    for node in nx.lexicographical_topological_sort(dag):
        ready = max((earliest[p] for p in predecessors[node]), default=0.0)
        earliest[node] = ready + wcet[node]
    return earliest


def apply_hc_closure(graph: TaskGraph) -> TaskGraph:
    """Promote every ancestor of an HC task to HC (LC budgets are kept: wcet_lo == wcet_hi)."""
    dag = graph.to_networkx()
    promote = set()
    for task in graph.hc_tasks:
        promote.update(nx.ancestors(dag, task.id))
    tasks = [
        replace(t, criticality=Criticality.HC) if t.id in promote and not t.is_hc else t
        for t in graph.tasks
    ]
    return TaskGraph(tuple(tasks), graph.period, graph.deadline)


def validate(graph: TaskGraph,
             power_envelope: Optional[Mapping[str, Tuple[float, float]]] = None) -> List[Violation]:
    """Check every Task/TaskGraph invariant; an empty list means the graph is valid."""
    envelope = DEFAULT_POWER_ENVELOPE if power_envelope is None else power_envelope
    violations: List[Violation] = []
    ids = set(graph.ids)

    if len(ids) != len(graph.tasks):
        violations.append(Violation(None, 'unique-ids', "Task ids are not unique"))
    if graph.deadline > graph.period + EPS:
        violations.append(Violation(None, 'graph-deadline',
                                    f"Graph deadline {graph.deadline} exceeds period {graph.period}"))

    for task in graph.tasks:
        tid = task.id
        if task.wcet_lo < 0 or task.wcet_hi < 0:
            violations.append(Violation(tid, 'wcet-sign', f"Task {tid}: negative WCET"))
        if task.criticality == Criticality.LC and abs(task.wcet_lo - task.wcet_hi) > EPS:
            violations.append(Violation(tid, 'lc-wcet', f"Task {tid}: LC task with wcet_lo != wcet_hi"))
        if task.criticality == Criticality.HC and task.wcet_lo > task.wcet_hi + EPS:
            violations.append(Violation(tid, 'hc-wcet', f"Task {tid}: wcet_lo > wcet_hi"))
        if task.wcet_hi > task.deadline + EPS:
            violations.append(Violation(tid, 'deadline-wcet', f"Task {tid}: wcet_hi exceeds deadline"))
        if task.deadline > graph.period + EPS:
            violations.append(Violation(tid, 'deadline-period', f"Task {tid}: deadline exceeds period"))

        for succ in task.successors:
            if succ not in ids:
                violations.append(Violation(tid, 'dangling-edge', f"Task {tid}: unknown successor {succ}"))
            elif tid not in graph.task(succ).predecessors:
                violations.append(Violation(tid, 'edge-consistency',
                                            f"Task {tid}: successor {succ} does not list it as predecessor"))
        for pred in task.predecessors:
            if pred not in ids:
                violations.append(Violation(tid, 'dangling-edge', f"Task {tid}: unknown predecessor {pred}"))
                continue
            pred_task = graph.task(pred)
            if tid not in pred_task.successors:
                violations.append(Violation(tid, 'edge-consistency',
                                            f"Task {tid}: predecessor {pred} does not list it as successor"))
            if task.is_hc and not pred_task.is_hc:
                violations.append(Violation(pred, 'hc-closure', f"HC-closure broken at {pred}"))

        for kind, value in task.peak_power.items():
            if kind in envelope:
                low, high = envelope[kind]
                if value < low - EPS or value > high + EPS:
                    violations.append(Violation(tid, 'power-envelope',
                                                f"Task {tid}: {kind} peak power {value} W outside [{low}, {high}]"))

    if not nx.is_directed_acyclic_graph(graph.to_networkx()):
        violations.append(Violation(None, 'acyclic', "Edge relation contains a cycle"))

    return violations


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

def task_to_dict(task: Task) -> Dict:
    return {
        'id': task.id,
        'criticality': task.criticality.value,
        'wcet_lo': task.wcet_lo,
        'wcet_hi': task.wcet_hi,
        'deadline': task.deadline,
        'successors': sorted(task.successors),
        'predecessors': sorted(task.predecessors),
        'peak_power': dict(sorted(task.peak_power.items())),
        'energy_max': dict(sorted(task.energy_max.items())),
    }


def task_from_dict(data: Mapping) -> Task:
    try:
        return Task(
            id=int(data['id']),
            criticality=Criticality(data['criticality']),
            wcet_lo=float(data['wcet_lo']),
            wcet_hi=float(data['wcet_hi']),
            deadline=float(data['deadline']),
            successors=frozenset(int(s) for s in data.get('successors', ())),
            predecessors=frozenset(int(p) for p in data.get('predecessors', ())),
            peak_power={str(k): float(v) for k, v in data.get('peak_power', {}).items()},
            energy_max={str(k): float(v) for k, v in (data.get('energy_max') or {}).items()},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed task record {data!r}: {e}") from e


def graph_to_dict(graph: TaskGraph) -> Dict:
    return {
        'schema': GRAPH_SCHEMA,
        'period': graph.period,
        'deadline': graph.deadline,
        'tasks': [task_to_dict(t) for t in graph.tasks],
    }


def graph_from_dict(data: Mapping) -> TaskGraph:
    schema = data.get('schema', GRAPH_SCHEMA)
    if schema != GRAPH_SCHEMA:
        raise ConfigError(f"Unsupported graph schema {schema!r}")
    try:
        tasks = tuple(task_from_dict(t) for t in data['tasks'])
        return TaskGraph(tasks, float(data['period']), float(data.get('deadline', data['period'])))
    except KeyError as e:
        raise ConfigError(f"Graph document misses field {e}") from e


def dumps_graph(graph: TaskGraph) -> str:
    return json.dumps(graph_to_dict(graph), sort_keys=True, indent=2)


def save_graph(graph: TaskGraph, path: str) -> str:
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dumps_graph(graph))
        fh.write('\n')
    logger.info(f"Graph with {len(graph)} tasks written to {path}")
    return path


def load_graph(path: str) -> TaskGraph:
    with open(path, 'r', encoding='utf-8') as fh:
        return graph_from_dict(json.load(fh))


def build_graph(records: Iterable[Mapping], period: float, deadline: Optional[float] = None) -> TaskGraph:
    """Assemble a graph from compact records, filling predecessor sets from successor lists."""
    records = list(records)
    preds: Dict[int, set] = {int(r['id']): set() for r in records}
    for r in records:
        for s in r.get('successors', ()):
            preds.setdefault(int(s), set()).add(int(r['id']))
    tasks = []
    for r in records:
        tid = int(r['id'])
        crit = Criticality(r.get('criticality', 'LC'))
        wcet_hi = float(r.get('wcet_hi', r.get('wcet_lo', 0.0)))
        wcet_lo = float(r.get('wcet_lo', wcet_hi))
        tasks.append(Task(
            id=tid,
            criticality=crit,
            wcet_lo=wcet_lo,
            wcet_hi=wcet_hi,
            deadline=float(r.get('deadline', deadline if deadline is not None else period)),
            successors=frozenset(int(s) for s in r.get('successors', ())),
            predecessors=frozenset(preds[tid]),
            peak_power=dict(r.get('peak_power', {})),
            energy_max=dict(r.get('energy_max', {})),
        ))
    return TaskGraph(tuple(tasks), period, deadline)
