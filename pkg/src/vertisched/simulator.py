"""Deterministic vertiport simulator: one-minute steps over a 1440-minute day.

The world holds exactly four vehicles.  Each step the caller acts on at most
one vehicle; every vehicle then advances one minute of constant-velocity
motion, batteries update, schedules are issued on arrivals, delays accrue
past due times and collisions are recorded whenever two airborne vehicles
come within the separation threshold at any instant of the step.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .config import LayoutConfig, RewardWeights, SimConfig
from .conflict import ConflictQuery, min_separation
from .domain import (
    ACTION_TARGET,
    Action,
    EventKind,
    PortType,
    Schedule,
    ScheduledEvent,
    StatusKind,
    VehicleGraph,
    VehicleNode,
    VertiportGraph,
    build_canonical_layout,
    feasible_mask,
)
from .rewards import EventOutcome, total_reward


class InfeasibleActionError(Exception):
    """Raised when a caller bypasses the feasibility mask."""


class EpisodeOverError(Exception):
    """Raised when stepping past the end of the simulated day."""


class SimEventKind(str, Enum):
    TOOK_OFF = "TookOff"
    LANDED = "Landed"
    STARTED_CHARGE = "StartedCharge"
    COLLISION_OCCURRED = "CollisionOccurred"
    SCHEDULE_ISSUED = "ScheduleIssued"
    AVOIDANCE_EXECUTED = "AvoidanceExecuted"


@dataclass
class SimEvent:
    time: int
    vehicle: int
    kind: SimEventKind
    payload: dict

    def format(self) -> str:
        payload = ";".join(f"{k}={v}" for k, v in self.payload.items())
        return f"{self.time},{self.vehicle},{self.kind.value},{payload}"


@dataclass
class SimState:
    clock: int
    vertiport: VertiportGraph
    vehicles: VehicleGraph
    schedules: dict[int, Schedule]
    rng: random.Random
    event_log: list = field(default_factory=list)
    colliding_pairs: set = field(default_factory=set)
    total_delay_minutes: float = 0.0


@dataclass
class StepOutcome:
    """Raw per-step facts consumed by the reward engine."""

    vehicle: int
    action: Action
    takeoff_event: EventOutcome | None
    landing_event: EventOutcome | None
    battery: float
    delay: float
    grounded: bool
    d_min: float | None
    collision: bool


@dataclass
class EpisodeSummary:
    seed: int
    steps: int
    decision_steps: int
    total_reward: float
    good_takeoffs: int
    bad_takeoffs: int
    good_landings: int
    bad_landings: int
    collisions: int
    delay_hours: float
    mean_battery: float

    FIELDS = ("seed", "steps", "decision_steps", "total_reward",
              "good_takeoffs", "bad_takeoffs", "good_landings", "bad_landings",
              "collisions", "delay_hours", "mean_battery")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


class Simulator:
    """Owns the world dynamics; one instance per logical rollout worker."""

    def __init__(self, layout: LayoutConfig | None = None,
                 sim: SimConfig | None = None,
                 weights: RewardWeights | None = None):
        self.layout = layout or LayoutConfig()
        self.sim = sim or SimConfig()
        self.weights = weights or RewardWeights()

    # ------------------------------------------------------------------
    # reset / selection
    # ------------------------------------------------------------------

    def reset(self, seed: int) -> SimState:
        """Fresh day: four fully charged vehicles in random non-conflicting
        placements, each with a randomly drawn schedule."""
        rng = random.Random(seed)
        ports = build_canonical_layout(self.layout)
        slots = rng.sample(range(len(ports.nodes)), 4)
        state = SimState(clock=0, vertiport=ports,
                         vehicles=VehicleGraph([VehicleNode(i, StatusKind.GROUNDED)
                                                for i in range(4)]),
                         schedules={i: Schedule() for i in range(4)}, rng=rng)
        for vid, node_id in enumerate(slots):
            node = ports.node(node_id)
            node.available = False
            v = state.vehicles.nodes[vid]
            v.node = node_id
            v.x, v.y = node.x, node.y
            v.battery = 100.0
            if node.port_type in (PortType.NORMAL, PortType.BATTERY):
                v.status = StatusKind.GROUNDED
                self._issue_takeoff_schedule(state, v)
            elif node.port_type == PortType.HOVER:
                v.status = StatusKind.HOVERING
                due = rng.randint(5, 15)
                ev = ScheduledEvent(EventKind.LANDING, due, node_id, issued_at=0)
                state.schedules[vid].push(ev)
                self._log(state, vid, SimEventKind.SCHEDULE_ISSUED,
                          {"kind": "Landing", "due": due, "dest": node_id})
            else:
                v.status = StatusKind.AT_DESTINATION
                v.depart_time = rng.randint(5, 15)
        return state

    def select_vehicle(self, state: SimState) -> int | None:
        """Awaiting vehicle that has waited longest since its last decision
        (ties broken by id), else None.  Longest-waiting-first keeps a busy
        subset of vehicles from starving the rest out of the one decision
        slot per minute."""
        waiting = [v for v in state.vehicles.nodes
                   if self._awaiting_decision(state, v)]
        if not waiting:
            return None
        return min(waiting, key=lambda v: (v.last_decision, v.id)).id

    def action_mask(self, state: SimState, vehicle_id: int):
        v = state.vehicles.nodes[vehicle_id]
        return feasible_mask(v, state.vertiport, state.schedules[vehicle_id])

    def _awaiting_decision(self, state: SimState, v: VehicleNode) -> bool:
        cooldown = self.sim.decision_cooldown
        if v.status == StatusKind.HOVERING:
            return v.needs_decision or state.clock - v.last_decision >= cooldown
        if v.status == StatusKind.GROUNDED:
            ev = state.schedules[v.id].next_event
            if ev is None or ev.kind != EventKind.TAKEOFF:
                return False
            if state.clock < ev.due_time - 5:
                return False  # takeoff window not open yet
            return v.needs_decision or state.clock - v.last_decision >= cooldown
        if v.status == StatusKind.CRUISING:
            d_min = self._threat_dmin(state, v.id)
            return d_min is not None and d_min <= self.sim.collision_threshold
        return False

    # ------------------------------------------------------------------
    # stepping
    # ------------------------------------------------------------------

    def step(self, state: SimState, vehicle_id: int, action: Action):
        """Apply `action` to one vehicle and advance the world one minute."""
        if state.clock >= self.sim.episode_steps:
            raise EpisodeOverError(f"episode ended at step {self.sim.episode_steps}")
        action = Action(action)
        v = state.vehicles.nodes[vehicle_id]
        mask = feasible_mask(v, state.vertiport, state.schedules[vehicle_id])
        if not mask[action]:
            raise InfeasibleActionError(
                f"action {action.name} infeasible for vehicle {vehicle_id}")

        d_min = self._threat_dmin(state, vehicle_id)
        grounded = v.grounded
        v.last_decision = state.clock
        v.needs_decision = False

        state.clock += 1
        takeoffs: list[EventOutcome] = []
        landings: list[EventOutcome] = []
        self._apply_action(state, v, action, takeoffs, landings, d_min)
        collided = self._world_tick(state, landings)

        takeoff_event = next((e for e in takeoffs if e.vehicle == vehicle_id),
                             takeoffs[0] if takeoffs else None)
        landing_event = next((e for e in landings if e.vehicle == vehicle_id),
                             landings[0] if landings else None)
        outcome = StepOutcome(vehicle=vehicle_id, action=action,
                              takeoff_event=takeoff_event,
                              landing_event=landing_event,
                              battery=v.battery, delay=v.delay,
                              grounded=grounded, d_min=d_min,
                              collision=collided)
        return state, outcome

    def noop_step(self, state: SimState) -> None:
        """Advance one minute with nobody acting (no vehicle awaits a decision)."""
        if state.clock >= self.sim.episode_steps:
            raise EpisodeOverError(f"episode ended at step {self.sim.episode_steps}")
        state.clock += 1
        self._world_tick(state, [])

    def run_episode(self, policy, seed: int) -> EpisodeSummary:
        """Run exactly one full day and aggregate the scorecard metrics."""
        state = self.reset(seed)
        cumulative = 0.0
        decision_steps = 0
        battery_sum = 0.0
        for _ in range(self.sim.episode_steps):
            vid = self.select_vehicle(state)
            if vid is None:
                self.noop_step(state)
            else:
                mask = self.action_mask(state, vid)
                action = policy(state, vid, mask)
                _, out = self.step(state, vid, action)
                cumulative += total_reward(out, self.weights).total
                decision_steps += 1
            battery_sum += sum(v.battery for v in state.vehicles.nodes) / 4.0
        counts = self._count_events(state)
        return EpisodeSummary(
            seed=seed, steps=state.clock, decision_steps=decision_steps,
            total_reward=cumulative,
            good_takeoffs=counts["good_takeoffs"],
            bad_takeoffs=counts["bad_takeoffs"],
            good_landings=counts["good_landings"],
            bad_landings=counts["bad_landings"],
            collisions=counts["collisions"],
            delay_hours=state.total_delay_minutes / 60.0,
            mean_battery=battery_sum / self.sim.episode_steps)

    # ------------------------------------------------------------------
    # action application
    # ------------------------------------------------------------------

    def _apply_action(self, state: SimState, v: VehicleNode, action: Action,
                      takeoffs: list[EventOutcome], landings: list[EventOutcome],
                      d_min: float | None) -> None:
        if action == Action.CONTINUE_PREVIOUS:
            return
        if action == Action.STAY_STILL:
            if v.status == StatusKind.CRUISING:
                v.held = True
            return
        if action == Action.AVOID_COLLISION:
            v.held = True
            self._log(state, v.id, SimEventKind.AVOIDANCE_EXECUTED,
                      {"d_min": _fmt(d_min if d_min is not None else -1.0)})
            return
        if action == Action.TAKEOFF:
            self._do_takeoff(state, v, takeoffs)
            return
        # node-directed move (hovering vehicle): free the spot, reserve target
        target = ACTION_TARGET[action]
        tnode = state.vertiport.node(target)
        state.vertiport.node(v.node).available = True
        tnode.available = False
        dist = math.hypot(tnode.x - v.x, tnode.y - v.y)
        if (dist <= self.sim.capture_radius
                and tnode.port_type in (PortType.NORMAL, PortType.BATTERY)):
            self._complete_landing(state, v, target, landings)
        else:
            v.status = StatusKind.CRUISING
            v.origin = v.node
            v.node = target

    def _do_takeoff(self, state: SimState, v: VehicleNode,
                    takeoffs: list[EventOutcome]) -> None:
        ev = state.schedules[v.id].pop()
        outcome = EventOutcome(vehicle=v.id, kind=EventKind.TAKEOFF,
                               due_time=ev.due_time, actual_time=state.clock,
                               battery=v.battery)
        takeoffs.append(outcome)
        state.vertiport.node(v.node).available = True
        v.status = StatusKind.CRUISING
        v.origin = v.node
        v.node = ev.destination  # destination was reserved at issuance
        self._log(state, v.id, SimEventKind.TOOK_OFF,
                  {"due": ev.due_time, "battery": _fmt(v.battery),
                   "good": int(outcome.good), "dest": ev.destination})

    # ------------------------------------------------------------------
    # world dynamics
    # ------------------------------------------------------------------

    def _world_tick(self, state: SimState, landings: list[EventOutcome]) -> bool:
        vehicles = state.vehicles.nodes
        # departures from destinations back toward the vertiport
        for v in vehicles:
            if v.status == StatusKind.AT_DESTINATION and 0 <= v.depart_time <= state.clock:
                self._launch_inbound(state, v)
        # kinematics
        moves: dict[int, tuple[float, float, float, float]] = {}
        for v in vehicles:
            sx, sy = v.x, v.y
            if v.status == StatusKind.CRUISING and not v.held:
                self._move_toward_target(state, v, landings)
            if v.held:
                v.held = False
                v.vx = v.vy = 0.0
            moves[v.id] = (sx, sy, v.x - sx, v.y - sy)
        # batteries (uses the distance actually flown this step)
        for v in vehicles:
            _, _, dx, dy = moves[v.id]
            self._update_battery(state, v, math.hypot(dx, dy), landings)
        # delay accrual past the due time of the pending event
        for v in vehicles:
            ev = state.schedules[v.id].next_event
            if ev is not None and state.clock > ev.due_time:
                v.delay += 1.0
                state.total_delay_minutes += 1.0
        return self._detect_collisions(state, moves)

    def _move_toward_target(self, state: SimState, v: VehicleNode,
                            landings: list[EventOutcome]) -> None:
        tnode = state.vertiport.node(v.node)
        dx, dy = tnode.x - v.x, tnode.y - v.y
        dist = math.hypot(dx, dy)
        if dist <= self.sim.cruise_speed:
            v.x, v.y = tnode.x, tnode.y
            v.vx = v.vy = 0.0
            self._arrive(state, v, landings)
        else:
            scale = self.sim.cruise_speed / dist
            v.vx, v.vy = dx * scale, dy * scale
            v.x += v.vx
            v.y += v.vy

    def _arrive(self, state: SimState, v: VehicleNode,
                landings: list[EventOutcome]) -> None:
        node = state.vertiport.node(v.node)
        if node.port_type == PortType.HOVER:
            v.status = StatusKind.HOVERING
            v.needs_decision = True
        elif node.port_type == PortType.DESTINATION:
            v.status = StatusKind.AT_DESTINATION
            v.depart_time = state.clock + state.rng.randint(5, 15)
        else:
            self._complete_landing(state, v, v.node, landings)

    def _complete_landing(self, state: SimState, v: VehicleNode, port_id: int,
                          landings: list[EventOutcome], forced: bool = False) -> None:
        v.status = StatusKind.GROUNDED
        v.node = port_id
        node = state.vertiport.node(port_id)
        v.x, v.y = node.x, node.y
        v.vx = v.vy = 0.0
        sched = state.schedules[v.id]
        ev = sched.next_event
        if ev is not None and ev.kind == EventKind.LANDING:
            sched.pop()
            outcome = EventOutcome(vehicle=v.id, kind=EventKind.LANDING,
                                   due_time=ev.due_time, actual_time=state.clock,
                                   battery=v.battery, forced=forced)
            landings.append(outcome)
            self._log(state, v.id, SimEventKind.LANDED,
                      {"due": ev.due_time, "battery": _fmt(v.battery),
                       "good": int(outcome.good), "port": port_id,
                       "forced": int(forced)})
        else:
            self._log(state, v.id, SimEventKind.LANDED,
                      {"due": -1, "battery": _fmt(v.battery), "good": 0,
                       "port": port_id, "forced": int(forced)})
        if state.vertiport.node(port_id).port_type == PortType.BATTERY:
            self._log(state, v.id, SimEventKind.STARTED_CHARGE, {"port": port_id})
        self._issue_takeoff_schedule(state, v)
        v.needs_decision = True

    def _launch_inbound(self, state: SimState, v: VehicleNode) -> None:
        spots = [s for s in state.vertiport.ids_of(PortType.HOVER)
                 if state.vertiport.node(s).available]
        spot = spots[0]  # four spots and four vehicles: one is always free
        state.vertiport.node(spot).available = False
        state.vertiport.node(v.node).available = True
        v.status = StatusKind.CRUISING
        v.origin = v.node
        v.node = spot
        v.depart_time = -1
        v.delay = 0.0
        due = state.clock + state.rng.randint(5, 15)
        state.schedules[v.id].push(
            ScheduledEvent(EventKind.LANDING, due, spot, issued_at=state.clock))
        self._log(state, v.id, SimEventKind.SCHEDULE_ISSUED,
                  {"kind": "Landing", "due": due, "dest": spot})

    def _issue_takeoff_schedule(self, state: SimState, v: VehicleNode) -> None:
        free = [d for d in state.vertiport.ids_of(PortType.DESTINATION)
                if state.vertiport.node(d).available]
        dest = state.rng.choice(free)
        state.vertiport.node(dest).available = False
        due = state.clock + state.rng.randint(10, 20)
        state.schedules[v.id].push(
            ScheduledEvent(EventKind.TAKEOFF, due, dest, issued_at=state.clock))
        v.delay = 0.0
        self._log(state, v.id, SimEventKind.SCHEDULE_ISSUED,
                  {"kind": "Takeoff", "due": due, "dest": dest})

    def _update_battery(self, state: SimState, v: VehicleNode, moved: float,
                        landings: list[EventOutcome]) -> None:
        if moved > 0.0:
            delta = -moved * self.sim.battery_per_meter
        elif v.status == StatusKind.GROUNDED and \
                state.vertiport.node(v.node).port_type == PortType.BATTERY:
            delta = self.sim.charge_rate  # charging overrides the idle drain
        elif v.grounded:
            delta = -self.sim.idle_drain
        else:
            delta = -self.sim.hover_drain
        v.battery = min(max(v.battery + delta, 0.0), 100.0)
        if v.battery <= 0.0 and v.status == StatusKind.CRUISING:
            self._force_land(state, v, landings)

    def _force_land(self, state: SimState, v: VehicleNode,
                    landings: list[EventOutcome]) -> None:
        """Empty battery mid-flight: ground the vehicle at the nearest free node."""
        state.vertiport.node(v.node).available = True  # drop the cruise target
        # prefer ports, then hover spots; landing on a destination would hold
        # two destination reservations at once (the pad plus the next takeoff
        # target) and could exhaust the five destinations
        candidates = []
        for types in ((PortType.NORMAL, PortType.BATTERY), (PortType.HOVER,),
                      (PortType.DESTINATION,)):
            candidates = [p for p in state.vertiport.nodes
                          if p.available and p.port_type in types]
            if candidates:
                break
        nearest = min(candidates,
                      key=lambda p: ((p.x - v.x) ** 2 + (p.y - v.y) ** 2, p.id))
        nearest.available = False
        v.x, v.y = nearest.x, nearest.y
        v.vx = v.vy = 0.0
        self._complete_landing(state, v, nearest.id, landings, forced=True)

    # ------------------------------------------------------------------
    # conflicts & collisions
    # ------------------------------------------------------------------

    def _nominal_velocity(self, state: SimState, v: VehicleNode) -> tuple[float, float]:
        if v.status != StatusKind.CRUISING:
            return 0.0, 0.0
        tnode = state.vertiport.node(v.node)
        dx, dy = tnode.x - v.x, tnode.y - v.y
        dist = math.hypot(dx, dy)
        if dist == 0.0:
            return 0.0, 0.0
        scale = min(self.sim.cruise_speed, dist) / dist
        return dx * scale, dy * scale

    def _threat_dmin(self, state: SimState, vehicle_id: int) -> float | None:
        """CPA distance of the selected vehicle against every other en-route
        vehicle, None unless the vehicle itself is en route."""
        v = state.vehicles.nodes[vehicle_id]
        if v.status != StatusKind.CRUISING:
            return None
        vv = self._nominal_velocity(state, v)
        best = None
        for u in state.vehicles.nodes:
            if u.id == vehicle_id or u.status != StatusKind.CRUISING:
                continue
            uv = self._nominal_velocity(state, u)
            res = min_separation(
                ConflictQuery(p1=(v.x, v.y), v1=vv, p2=(u.x, u.y), v2=uv),
                horizon=self.sim.conflict_horizon,
                threshold=self.sim.collision_threshold)
            if best is None or res.d_min < best:
                best = res.d_min
        return best

    def _detect_collisions(self, state: SimState, moves: dict) -> bool:
        """Separation check over the motion segments of this step.

        Uses the CPA of the actual per-step displacements over t in [0, 1],
        i.e. the true instantaneous minimum distance within the minute.
        """
        vehicles = state.vehicles.nodes
        airborne = [v for v in vehicles
                    if v.airborne or moves[v.id][2:] != (0.0, 0.0)]
        now_colliding = set()
        for i in range(len(airborne)):
            for j in range(i + 1, len(airborne)):
                a, b = airborne[i], airborne[j]
                ax, ay, adx, ady = moves[a.id]
                bx, by, bdx, bdy = moves[b.id]
                res = min_separation(
                    ConflictQuery(p1=(ax, ay), v1=(adx, ady),
                                  p2=(bx, by), v2=(bdx, bdy)),
                    horizon=1.0, threshold=self.sim.collision_threshold)
                if res.d_min < self.sim.collision_threshold:
                    pair = (min(a.id, b.id), max(a.id, b.id))
                    now_colliding.add(pair)
                    if pair not in state.colliding_pairs:
                        self._log(state, pair[0], SimEventKind.COLLISION_OCCURRED,
                                  {"other": pair[1], "distance": _fmt(res.d_min)})
        new_any = bool(now_colliding - state.colliding_pairs)
        state.colliding_pairs = now_colliding
        return new_any

    # ------------------------------------------------------------------
    # logging / summaries
    # ------------------------------------------------------------------

    def _log(self, state: SimState, vehicle: int, kind: SimEventKind,
             payload: dict) -> None:
        state.event_log.append(SimEvent(state.clock, vehicle, kind, payload))

    @staticmethod
    def _count_events(state: SimState) -> dict:
        counts = {"good_takeoffs": 0, "bad_takeoffs": 0,
                  "good_landings": 0, "bad_landings": 0, "collisions": 0}
        for e in state.event_log:
            if e.kind == SimEventKind.TOOK_OFF:
                counts["good_takeoffs" if e.payload["good"] else "bad_takeoffs"] += 1
            elif e.kind == SimEventKind.LANDED:
                counts["good_landings" if e.payload["good"] else "bad_landings"] += 1
            elif e.kind == SimEventKind.COLLISION_OCCURRED:
                counts["collisions"] += 1
        return counts


def write_event_log(state: SimState, path) -> None:
    with open(path, "w") as fh:
        for event in state.event_log:
            fh.write(event.format() + "\n")


def _fmt(x: float) -> str:
    return f"{x:.4f}"
