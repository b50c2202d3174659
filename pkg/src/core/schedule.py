# src/core/schedule.py
"""Static schedule tables and their JSON persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

from .errors import ConfigError
from .taskgraph import Mode

TABLES_SCHEMA = 'mcpp-tables/1'


@dataclass(frozen=True)
class ScheduleEntry:
    task_id: int
    core_id: int
    start: float
    deadline: float
    mode: Mode

    def to_dict(self) -> Dict:
        return {'task_id': self.task_id, 'core_id': self.core_id, 'start': self.start,
                'deadline': self.deadline, 'mode': self.mode.value}

    @classmethod
    def from_dict(cls, data: Mapping) -> 'ScheduleEntry':
        return cls(int(data['task_id']), int(data['core_id']), float(data['start']),
                   float(data['deadline']), Mode(data['mode']))


@dataclass(frozen=True)
class ScheduleTable:
    mode: Mode
    entries: Mapping[int, Tuple[ScheduleEntry, ...]]
    dropped_lc: FrozenSet[int] = frozenset()
    _by_task: Dict[int, ScheduleEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ordered = {core: tuple(sorted(seq, key=lambda e: (e.start, e.task_id)))
                   for core, seq in sorted(self.entries.items())}
        object.__setattr__(self, 'entries', ordered)
        object.__setattr__(self, '_by_task', {e.task_id: e for seq in ordered.values() for e in seq})

    def __iter__(self) -> Iterator[ScheduleEntry]:
        return self.all_entries()

    def all_entries(self) -> Iterator[ScheduleEntry]:
        for core in sorted(self.entries):
            yield from self.entries[core]

    def __len__(self):
        return len(self._by_task)

    def __contains__(self, task_id) -> bool:
        return task_id in self._by_task

    def entry_for(self, task_id: int) -> Optional[ScheduleEntry]:
        return self._by_task.get(task_id)

    def task_ids(self) -> List[int]:
        return sorted(self._by_task)

    def core_of(self, task_id: int) -> Optional[int]:
        entry = self._by_task.get(task_id)
        return None if entry is None else entry.core_id

    def core_entries(self, core_id: int) -> Tuple[ScheduleEntry, ...]:
        return self.entries.get(core_id, ())

    def to_dict(self) -> Dict:
        return {
            'mode': self.mode.value,
            'dropped_lc': sorted(self.dropped_lc),
            'entries': {str(core): [e.to_dict() for e in seq] for core, seq in self.entries.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'ScheduleTable':
        try:
            entries = {int(core): tuple(ScheduleEntry.from_dict(e) for e in seq)
                       for core, seq in data['entries'].items()}
            return cls(Mode(data['mode']), entries, frozenset(int(t) for t in data.get('dropped_lc', ())))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed schedule table: {e}") from e


def tables_to_dict(sch_lo: ScheduleTable, sch_hi: ScheduleTable) -> Dict:
    return {'schema': TABLES_SCHEMA, 'lo': sch_lo.to_dict(), 'hi': sch_hi.to_dict()}


def tables_from_dict(data: Mapping) -> Tuple[ScheduleTable, ScheduleTable]:
    if data.get('schema', TABLES_SCHEMA) != TABLES_SCHEMA:
        raise ConfigError(f"Unsupported tables schema {data.get('schema')!r}")
    return ScheduleTable.from_dict(data['lo']), ScheduleTable.from_dict(data['hi'])


def save_tables(sch_lo: ScheduleTable, sch_hi: ScheduleTable, path: str) -> str:
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(tables_to_dict(sch_lo, sch_hi), fh, sort_keys=True, indent=2)
        fh.write('\n')
    return path


def load_tables(path: str) -> Tuple[ScheduleTable, ScheduleTable]:
    with open(path, 'r', encoding='utf-8') as fh:
        return tables_from_dict(json.load(fh))
