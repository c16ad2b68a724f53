"""Domain model: vertiport graph, vehicle graph, schedules, actions, masks."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .config import LayoutConfig

NUM_VEHICLES = 4
NUM_ACTIONS = 11

# Canonical node ids in a default layout.
NORMAL_PORT_IDS = (0, 1)
BATTERY_PORT_ID = 2
HOVER_SPOT_IDS = (3, 4, 5, 6)
DESTINATION_IDS = (7, 8, 9, 10, 11)


class PortType(IntEnum):
    NORMAL = 0
    BATTERY = 1
    HOVER = 2
    DESTINATION = 3


class Action(IntEnum):
    """The 11-way discrete action space."""

    STAY_STILL = 0
    TAKEOFF = 1
    MOVE_OR_LAND_NORMAL_1 = 2
    MOVE_OR_LAND_NORMAL_2 = 3
    MOVE_OR_LAND_BATTERY = 4
    MOVE_TO_HOVER_1 = 5
    MOVE_TO_HOVER_2 = 6
    MOVE_TO_HOVER_3 = 7
    MOVE_TO_HOVER_4 = 8
    CONTINUE_PREVIOUS = 9
    AVOID_COLLISION = 10


# Target node for each node-directed action.
ACTION_TARGET = {
    Action.MOVE_OR_LAND_NORMAL_1: NORMAL_PORT_IDS[0],
    Action.MOVE_OR_LAND_NORMAL_2: NORMAL_PORT_IDS[1],
    Action.MOVE_OR_LAND_BATTERY: BATTERY_PORT_ID,
    Action.MOVE_TO_HOVER_1: HOVER_SPOT_IDS[0],
    Action.MOVE_TO_HOVER_2: HOVER_SPOT_IDS[1],
    Action.MOVE_TO_HOVER_3: HOVER_SPOT_IDS[2],
    Action.MOVE_TO_HOVER_4: HOVER_SPOT_IDS[3],
}


class StatusKind(IntEnum):
    GROUNDED = 0        # parked on a port (or force-landed on any node)
    HOVERING = 1        # holding at a hover spot
    CRUISING = 2        # en route between two nodes
    AT_DESTINATION = 3  # away from the vertiport airspace


class EventKind(IntEnum):
    TAKEOFF = 0
    LANDING = 1


@dataclass
class ScheduledEvent:
    kind: EventKind
    due_time: int        # simulation minute
    destination: int     # target node id (trip destination / assigned hover spot)
    issued_at: int = 0


@dataclass
class Schedule:
    """Per-vehicle queue of pending takeoff/landing events."""

    events: deque = field(default_factory=deque)

    @property
    def next_event(self) -> ScheduledEvent | None:
        return self.events[0] if self.events else None

    def push(self, event: ScheduledEvent) -> None:
        self.events.append(event)

    def pop(self) -> ScheduledEvent:
        return self.events.popleft()


@dataclass
class PortNode:
    """One node of the vertiport graph."""

    id: int
    port_type: PortType
    x: float
    y: float
    available: bool = True   # False when occupied or reserved by an en-route vehicle


class VertiportGraph:
    """The vertiport graph: nodes, undirected edges and the feature matrix."""

    FEATURE_DIM = 7  # [availability, one-hot port type (4), x, y]

    def __init__(self, nodes: list[PortNode], edges: set[tuple[int, int]]):
        self.nodes = nodes
        self.edges = {(min(i, j), max(i, j)) for i, j in edges if i != j}
        n = len(nodes)
        adj = np.zeros((n, n), dtype=np.float64)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        self.adjacency = adj
        xs = [p.x for p in nodes]
        ys = [p.y for p in nodes]
        self.bounds = (min(xs), max(xs), min(ys), max(ys))

    def node(self, node_id: int) -> PortNode:
        return self.nodes[node_id]

    def ids_of(self, port_type: PortType) -> list[int]:
        return [p.id for p in self.nodes if p.port_type == port_type]

    def normalize_xy(self, x: float, y: float) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.bounds
        xn = (x - xmin) / (xmax - xmin)
        yn = (y - ymin) / (ymax - ymin)
        return min(max(xn, 0.0), 1.0), min(max(yn, 0.0), 1.0)

    def feature_matrix(self) -> np.ndarray:
        feats = np.zeros((len(self.nodes), self.FEATURE_DIM), dtype=np.float64)
        for i, p in enumerate(self.nodes):
            xn, yn = self.normalize_xy(p.x, p.y)
            feats[i, 0] = 1.0 if p.available else 0.0
            feats[i, 1 + int(p.port_type)] = 1.0
            feats[i, 5] = xn
            feats[i, 6] = yn
        return feats


@dataclass
class VehicleNode:
    """One managed vehicle (a node of the vehicle graph)."""

    id: int
    status: StatusKind
    node: int = -1            # node occupied or reserved (grounded/hover/destination/cruise target)
    origin: int = -1          # cruise origin node
    battery: float = 100.0
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    delay: float = 0.0        # accumulated delay minutes since last schedule
    held: bool = False        # velocity suppressed for the current step
    depart_time: int = -1     # planned departure minute while AT_DESTINATION
    last_decision: int = -10_000
    needs_decision: bool = True

    @property
    def airborne(self) -> bool:
        return self.status in (StatusKind.HOVERING, StatusKind.CRUISING)

    @property
    def grounded(self) -> bool:
        return self.status in (StatusKind.GROUNDED, StatusKind.AT_DESTINATION)


class VehicleGraph:
    """The vehicle graph: always four vehicles, complete connectivity."""

    FEATURE_DIM = 9  # [one-hot status (4), battery, delay, event offset, x, y]

    def __init__(self, vehicles: list[VehicleNode]):
        if len(vehicles) != NUM_VEHICLES:
            raise ValueError(f"exactly {NUM_VEHICLES} vehicles are managed")
        self.nodes = vehicles
        n = len(vehicles)
        self.adjacency = np.ones((n, n), dtype=np.float64) - np.eye(n)

    def feature_matrix(self, ports: VertiportGraph, clock: int,
                       schedules: dict[int, Schedule]) -> np.ndarray:
        feats = np.zeros((len(self.nodes), self.FEATURE_DIM), dtype=np.float64)
        for i, v in enumerate(self.nodes):
            feats[i, int(v.status)] = 1.0
            feats[i, 4] = v.battery / 100.0
            feats[i, 5] = min(v.delay, 1440.0) / 1440.0
            ev = schedules[v.id].next_event
            if ev is not None:
                feats[i, 6] = min(max(ev.due_time - clock, 0.0), 60.0) / 60.0
            xn, yn = ports.normalize_xy(v.x, v.y)
            feats[i, 7] = xn
            feats[i, 8] = yn
        return feats


def build_canonical_layout(config: LayoutConfig | None = None) -> VertiportGraph:
    """Build the 12-node layout: 2 normal ports, 1 battery port, 4 hover
    spots on the hover ring at 45/135/225/315 degrees, 5 destinations on the
    outer ring at evenly spaced bearings.

    Edges are the complete graph over the seven vertiport-airspace nodes plus
    a spoke from each destination to its nearest port.
    """
    config = config or LayoutConfig()
    config.validate()

    nodes: list[PortNode] = [
        PortNode(0, PortType.NORMAL, -config.port_spacing, 0.0),
        PortNode(1, PortType.NORMAL, config.port_spacing, 0.0),
        PortNode(2, PortType.BATTERY, 0.0, config.battery_offset),
    ]
    for k, bearing in enumerate((45.0, 135.0, 225.0, 315.0)):
        rad = math.radians(bearing)
        nodes.append(PortNode(3 + k, PortType.HOVER,
                              config.hover_radius * math.cos(rad),
                              config.hover_radius * math.sin(rad)))
    for k in range(5):
        rad = math.radians(72.0 * k)
        nodes.append(PortNode(7 + k, PortType.DESTINATION,
                              config.destination_radius * math.cos(rad),
                              config.destination_radius * math.sin(rad)))

    edges: set[tuple[int, int]] = set()
    airspace = list(range(7))
    for i in airspace:
        for j in airspace:
            if i < j:
                edges.add((i, j))
    for dest in range(7, 12):
        dn = nodes[dest]
        nearest = min(range(3), key=lambda p: (nodes[p].x - dn.x) ** 2 + (nodes[p].y - dn.y) ** 2)
        edges.add((nearest, dest))
    return VertiportGraph(nodes, edges)


def feasible_mask(vehicle: VehicleNode, ports: VertiportGraph,
                  schedule: Schedule) -> np.ndarray:
    """Boolean feasibility vector over the 11 actions for one vehicle.

    StayStill and ContinuePrevious are always feasible; Takeoff requires a
    grounded vehicle with a pending takeoff event; node-directed moves
    require a hovering vehicle and an available target; AvoidCollision
    requires a cruising vehicle.
    """
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[Action.STAY_STILL] = True
    mask[Action.CONTINUE_PREVIOUS] = True

    if vehicle.status == StatusKind.GROUNDED:
        ev = schedule.next_event
        if ev is not None and ev.kind == EventKind.TAKEOFF:
            mask[Action.TAKEOFF] = True
    elif vehicle.status == StatusKind.HOVERING:
        for action, target in ACTION_TARGET.items():
            mask[action] = ports.node(target).available
    elif vehicle.status == StatusKind.CRUISING:
        mask[Action.AVOID_COLLISION] = True
    return mask
