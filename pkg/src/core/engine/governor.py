# src/core/engine/governor.py
"""Per-cluster DVFS governor: the cluster runs at the highest level its tasks request."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from ..config import OverheadModel
from ..errors import DomainError
from ..platform import VfLevel
from .state import ClusterState, VfRequest

logger = logging.getLogger('MCPeakPower')


@dataclass(frozen=True)
class SwitchAction:
    time: float
    cluster_id: int
    from_level: VfLevel
    to_level: VfLevel
    latency: float

    def to_payload(self) -> dict:
        return {'cluster': self.cluster_id, 'from_hz': self.from_level.frequency,
                'to_hz': self.to_level.frequency, 'latency': self.latency}


def governor_tick(cluster_state: ClusterState, requests: Iterable[VfRequest],
                  overheads: OverheadModel, time: float = 0.0) -> Optional[SwitchAction]:
    """Set the cluster to the max requested level; ``None`` when nothing changes.

    A tick with no requests keeps the current level.
    """
    cluster = cluster_state.cluster
    target: Optional[VfLevel] = None
    for request in requests:
        if request.core_id not in cluster.core_ids:
            raise DomainError(f"Request for core {request.core_id} sent to cluster {cluster.id}")
        cluster.level_index(request.level)
        if target is None or request.level.frequency > target.frequency:
            target = request.level

    if target is None or target == cluster_state.current_level:
        return None

    current = cluster_state.current_level
    latency = overheads.vf_latency_ms(scaling_down=target.frequency < current.frequency)
    action = SwitchAction(time, cluster.id, current, target, latency)

    # Back-to-back transitions serialize; the window runs at the faster of all levels involved
    in_window = cluster_state.transition_level is not None and time < cluster_state.transition_end
    window_level = max(current, target, key=lambda lvl: lvl.frequency)
    if in_window:
        window_level = max(window_level, cluster_state.transition_level, key=lambda lvl: lvl.frequency)
    cluster_state.transition_level = window_level
    cluster_state.transition_end = (cluster_state.transition_end if in_window else time) + latency
    cluster_state.current_level = target
    cluster_state.token += 1
    logger.debug(f"t={time:.3f} cluster {cluster.id}: {current} -> {target}")
    return action


class DvfsGovernor:
    """Collects the requests of running and stalled tasks on a cluster and applies governor ticks."""

    def __init__(self, overheads: OverheadModel):
        self.overheads = overheads
        self.actions = []

    def tick(self, cluster_state: ClusterState, requests: Iterable[VfRequest], time: float) -> Optional[SwitchAction]:
        action = governor_tick(cluster_state, requests, self.overheads, time)
        if action is not None:
            self.actions.append(action)
        return action

    def force(self, cluster_state: ClusterState, level: VfLevel, time: float) -> Optional[SwitchAction]:
        """Unconditional switch used at mode switches and period boundaries."""
        return self.tick(cluster_state, [VfRequest(cluster_state.cluster.core_ids[0], -1, level, time)], time)
