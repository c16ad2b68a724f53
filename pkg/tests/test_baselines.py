import math
from collections import Counter, deque

import numpy as np

from vertisched.baselines import FcfsPolicy, RandomPolicy
from vertisched.domain import (
    Action,
    EventKind,
    NUM_ACTIONS,
    ScheduledEvent,
    StatusKind,
    VehicleNode,
)
from vertisched.simulator import Simulator

from conftest import make_state


# ----------------------------------------------------------------------
# random policy
# ----------------------------------------------------------------------

def test_random_single_feasible_action_is_forced():
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[Action.TAKEOFF] = True
    policy = RandomPolicy(0)
    assert all(policy(None, 0, mask) == Action.TAKEOFF for _ in range(50))


def test_random_uniform_over_full_mask():
    mask = np.ones(NUM_ACTIONS, dtype=bool)
    policy = RandomPolicy(123)
    n = 11_000
    counts = Counter(policy(None, 0, mask) for _ in range(n))
    expected = n / NUM_ACTIONS
    sigma = math.sqrt(n * (1 / NUM_ACTIONS) * (1 - 1 / NUM_ACTIONS))
    for a in range(NUM_ACTIONS):
        assert abs(counts[a] - expected) <= 3 * sigma


def test_random_never_returns_masked_action():
    mask = np.ones(NUM_ACTIONS, dtype=bool)
    mask[Action.TAKEOFF] = False
    policy = RandomPolicy(7)
    assert all(policy(None, 0, mask) != Action.TAKEOFF for _ in range(10_000))


def test_random_is_deterministic_per_seed():
    mask = np.ones(NUM_ACTIONS, dtype=bool)
    a = [RandomPolicy(5)(None, 0, mask) for _ in range(100)]
    b = [RandomPolicy(5)(None, 0, mask) for _ in range(100)]
    assert a == b


# ----------------------------------------------------------------------
# FCFS queue mechanics on crafted states
# ----------------------------------------------------------------------

def _hover_mask():
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[Action.STAY_STILL] = True
    mask[Action.CONTINUE_PREVIOUS] = True
    mask[Action.MOVE_OR_LAND_BATTERY] = True
    return mask


def test_fcfs_serves_landers_in_arrival_order():
    # v1 arrives at t=100, v0 at t=105: service order must be (v1, v0)
    v0 = VehicleNode(0, StatusKind.AT_DESTINATION, node=8)
    v1 = VehicleNode(1, StatusKind.HOVERING, node=3)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i) for i in (2, 3)]
    state = make_state([v0, v1] + others, clock=100)
    policy = FcfsPolicy()
    assert policy(state, 1, _hover_mask()) == Action.MOVE_OR_LAND_BATTERY

    state.clock = 105
    v0.status = StatusKind.HOVERING
    v0.node = 4
    assert policy(state, 0, _hover_mask()) == Action.STAY_STILL
    assert policy.fcfs.recharge_queue == deque([1, 0])


def test_fcfs_head_waits_for_free_battery_port():
    v0 = VehicleNode(0, StatusKind.HOVERING, node=3)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i)
              for i in (1, 2, 3)]
    state = make_state([v0] + others, clock=50)
    mask = _hover_mask()
    mask[Action.MOVE_OR_LAND_BATTERY] = False  # port occupied
    assert FcfsPolicy()(state, 0, mask) == Action.STAY_STILL


def test_fcfs_full_charge_leaves_port_early():
    # charged to full after 3 steps of service: leaves at 3, not 6
    v0 = VehicleNode(0, StatusKind.GROUNDED, node=2, battery=70.0)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i)
              for i in (1, 2, 3)]
    state = make_state([v0] + others, clock=10)
    policy = FcfsPolicy()
    policy._sync(state)
    assert policy.fcfs.recharge_queue == deque([0])
    for k in range(1, 4):
        state.clock = 10 + k
        v0.battery = min(70.0 + 10.0 * k, 100.0)
        policy._sync(state)
    assert policy.fcfs.recharge_queue == deque()
    assert policy.fcfs.takeoff_queue == deque([0])


def test_fcfs_service_capped_at_six_steps():
    v0 = VehicleNode(0, StatusKind.GROUNDED, node=2, battery=10.0)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i)
              for i in (1, 2, 3)]
    state = make_state([v0] + others, clock=0)
    policy = FcfsPolicy()
    for k in range(7):
        state.clock = k
        v0.battery = 10.0 + 10.0 * k  # still below full at step 6
        policy._sync(state)
    assert policy.fcfs.takeoff_queue == deque([0])


def test_fcfs_grounded_without_schedule_stays_still():
    v0 = VehicleNode(0, StatusKind.GROUNDED, node=0)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i)
              for i in (1, 2, 3)]
    state = make_state([v0] + others, clock=0)
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[Action.STAY_STILL] = True
    mask[Action.CONTINUE_PREVIOUS] = True
    assert FcfsPolicy()(state, 0, mask) == Action.STAY_STILL


def test_fcfs_takeoff_head_departs_in_window():
    v0 = VehicleNode(0, StatusKind.GROUNDED, node=0)
    others = [VehicleNode(i, StatusKind.AT_DESTINATION, node=8 + i)
              for i in (1, 2, 3)]
    state = make_state([v0] + others, clock=9)
    state.schedules[0].push(ScheduledEvent(EventKind.TAKEOFF, 15, 9))
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[Action.STAY_STILL] = True
    mask[Action.CONTINUE_PREVIOUS] = True
    mask[Action.TAKEOFF] = True
    policy = FcfsPolicy()
    assert policy(state, 0, mask) == Action.STAY_STILL  # window not open
    state.clock = 10  # due - 5
    assert policy(state, 0, mask) == Action.TAKEOFF


# ----------------------------------------------------------------------
# FCFS over full episodes
# ----------------------------------------------------------------------

class _MaskAuditingPolicy:
    def __init__(self, inner):
        self.inner = inner
        self.violations = 0
        self.avoid_count = 0

    def __call__(self, state, vehicle_id, mask):
        action = self.inner(state, vehicle_id, mask)
        if not mask[action]:
            self.violations += 1
        if action == Action.AVOID_COLLISION:
            self.avoid_count += 1
        return action


def test_fcfs_respects_mask_and_never_avoids():
    sim = Simulator()
    for seed in range(3):
        audit = _MaskAuditingPolicy(FcfsPolicy())
        sim.run_episode(audit, seed)
        assert audit.violations == 0
        assert audit.avoid_count == 0


def test_fcfs_episode_is_deterministic():
    sim = Simulator()
    a = sim.run_episode(FcfsPolicy(), 11)
    b = sim.run_episode(FcfsPolicy(), 11)
    assert a == b


def test_fcfs_takeoffs_are_on_time():
    sim = Simulator()
    summary = sim.run_episode(FcfsPolicy(), 0)
    assert summary.good_takeoffs > 0
    assert summary.bad_takeoffs == 0
