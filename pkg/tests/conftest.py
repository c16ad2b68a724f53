import random

import pytest

from vertisched.config import LayoutConfig
from vertisched.domain import (
    Schedule,
    StatusKind,
    VehicleGraph,
    VehicleNode,
    build_canonical_layout,
)
from vertisched.simulator import SimState, Simulator


@pytest.fixture
def layout():
    return build_canonical_layout(LayoutConfig())


@pytest.fixture
def simulator():
    return Simulator()


def make_state(vehicles: list[VehicleNode], clock: int = 0,
               seed: int = 0) -> SimState:
    """Hand-built SimState for policy/mask tests; port availability is synced
    to the vehicles' occupied nodes."""
    ports = build_canonical_layout(LayoutConfig())
    for v in vehicles:
        if v.node >= 0:
            ports.node(v.node).available = False
    return SimState(clock=clock, vertiport=ports,
                    vehicles=VehicleGraph(vehicles),
                    schedules={v.id: Schedule() for v in vehicles},
                    rng=random.Random(seed))


def idle_vehicle(vid: int, status=StatusKind.GROUNDED, node: int = -1,
                 **kwargs) -> VehicleNode:
    v = VehicleNode(vid, status, node=node, **kwargs)
    return v
