"""Non-learned decision policies: random-feasible and first-come-first-served.

Both are callables with the signature ``policy(state, vehicle_id, mask) ->
Action`` so they plug directly into ``Simulator.run_episode``.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .domain import Action, EventKind, PortType, StatusKind
from .simulator import SimState


class RandomPolicy:
    """Uniform choice among feasible actions, deterministic given the seed."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def __call__(self, state: SimState, vehicle_id: int, mask: np.ndarray) -> Action:
        feasible = [i for i in range(len(mask)) if mask[i]]
        return Action(self.rng.choice(feasible))


@dataclass
class FcfsState:
    """Queue bookkeeping for the FCFS scheduler.

    recharge_queue: vehicles awaiting (or holding) the battery port, FIFO by
    arrival at a hover spot.  takeoff_queue: vehicles done charging, FIFO,
    released at their scheduled takeoff time.  A vehicle appears in at most
    one queue; battery-port occupancy never exceeds one.
    """

    recharge_queue: deque = field(default_factory=deque)
    takeoff_queue: deque = field(default_factory=deque)
    service_start: dict[int, int] = field(default_factory=dict)
    seen: set = field(default_factory=set)
    max_service_steps: int = 6


class FcfsPolicy:
    """First-come-first-served scheduler.

    Arriving vehicles queue for the battery port in arrival order; the queue
    head lands on the battery port, charges for up to six steps (less if full
    sooner), then waits in the takeoff queue and departs at its scheduled
    time.  Vehicles that are not at the head hold at their hover spot.  FCFS
    never takes evasive action.
    """

    def __init__(self):
        self.fcfs = FcfsState()

    def reset(self) -> None:
        self.fcfs = FcfsState()

    def __call__(self, state: SimState, vehicle_id: int, mask: np.ndarray) -> Action:
        self._sync(state)
        fc = self.fcfs
        v = state.vehicles.nodes[vehicle_id]
        ev = state.schedules[vehicle_id].next_event

        if v.status == StatusKind.HOVERING:
            head = fc.recharge_queue[0] if fc.recharge_queue else None
            if (head == vehicle_id and mask[Action.MOVE_OR_LAND_BATTERY]):
                return Action.MOVE_OR_LAND_BATTERY
            return Action.STAY_STILL

        if v.status == StatusKind.GROUNDED:
            if (vehicle_id in fc.takeoff_queue and fc.takeoff_queue[0] == vehicle_id
                    and mask[Action.TAKEOFF]
                    and ev is not None and state.clock >= ev.due_time - 5):
                fc.takeoff_queue.popleft()
                return Action.TAKEOFF
            return Action.STAY_STILL

        if v.status == StatusKind.CRUISING:
            return Action.CONTINUE_PREVIOUS
        return Action.STAY_STILL

    # ------------------------------------------------------------------

    def _sync(self, state: SimState) -> None:
        """Derive queue transitions from the observable simulator state."""
        fc = self.fcfs
        for v in state.vehicles.nodes:
            on_battery = (v.status == StatusKind.GROUNDED and
                          state.vertiport.node(v.node).port_type == PortType.BATTERY)
            grounded_normal = (v.status == StatusKind.GROUNDED and not on_battery)

            if v.status == StatusKind.HOVERING and v.id not in fc.seen:
                # newly arrived: queue for recharging in arrival order
                fc.seen.add(v.id)
                fc.recharge_queue.append(v.id)
            elif grounded_normal and v.id not in fc.seen:
                # initial placement on a landing port: ready to take off
                fc.seen.add(v.id)
                fc.takeoff_queue.append(v.id)
            elif on_battery and v.id not in fc.seen:
                fc.seen.add(v.id)
                fc.recharge_queue.append(v.id)
                fc.service_start[v.id] = state.clock

            if on_battery and v.id in fc.recharge_queue:
                fc.service_start.setdefault(v.id, state.clock)
                served = state.clock - fc.service_start[v.id]
                if v.battery >= 100.0 or served >= fc.max_service_steps:
                    fc.recharge_queue.remove(v.id)
                    fc.takeoff_queue.append(v.id)
                    del fc.service_start[v.id]

            if v.status in (StatusKind.CRUISING, StatusKind.AT_DESTINATION):
                # departed: forget it so the next arrival re-enqueues it
                if v.id in fc.seen and v.id not in fc.recharge_queue \
                        and v.id not in fc.takeoff_queue:
                    fc.seen.discard(v.id)
                # a vehicle force-landed elsewhere may still linger in a
                # queue after taking off again; drop it
                if v.status == StatusKind.AT_DESTINATION:
                    if v.id in fc.recharge_queue:
                        fc.recharge_queue.remove(v.id)
                        fc.service_start.pop(v.id, None)
                    if v.id in fc.takeoff_queue:
                        fc.takeoff_queue.remove(v.id)
                    fc.seen.discard(v.id)
