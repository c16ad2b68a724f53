"""Per-step reward: five coefficients combined as R = w1*tau + w2*gamma +
w3*lambda + w4*beta + w5*S.

Coefficient conventions:
  tau / gamma  takeoff / landing: +5 for a good event, -5 for a bad one,
               0 when no event happened this step.
  lambda       battery: 5*b/100 for b >= 30, otherwise -5.
  beta         delay: -5 + 10*exp(-delay_minutes).
  S            safety: 0 on the ground; +/-5 when the projected minimum
               separation is within the threshold, sign decided by whether
               the evasive action was taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import RewardWeights
from .domain import Action, EventKind

GOOD_EVENT_WINDOW = 5.0      # minutes around the scheduled time
GOOD_EVENT_BATTERY = 30.0    # percent required at the event
SEPARATION_THRESHOLD = 3.0   # meters


@dataclass(frozen=True)
class EventOutcome:
    """Raw facts about one completed takeoff or landing."""

    vehicle: int
    kind: EventKind
    due_time: float
    actual_time: float
    battery: float
    forced: bool = False

    @property
    def good(self) -> bool:
        if self.battery <= GOOD_EVENT_BATTERY:
            return False
        if self.kind == EventKind.TAKEOFF:
            return abs(self.actual_time - self.due_time) <= GOOD_EVENT_WINDOW
        # A landing may be arbitrarily early but at most 5 minutes late.
        return self.actual_time <= self.due_time + GOOD_EVENT_WINDOW


@dataclass(frozen=True)
class RewardBreakdown:
    tau: float
    gamma: float
    lam: float
    beta: float
    safety: float
    total: float


def takeoff_landing_coeff(event: EventOutcome | None) -> float:
    """+5 for a good takeoff/landing, -5 for a bad one, 0 with no event."""
    if event is None:
        return 0.0
    return 5.0 if event.good else -5.0


def battery_coeff(b: float) -> float:
    """5*b/100 above the 30% floor; a flat -5 penalty below it."""
    if not 0.0 <= b <= 100.0:
        raise ValueError("battery percent must lie in [0, 100]")
    return 5.0 * b / 100.0 if b >= 30.0 else -5.0


def delay_coeff(delay_minutes: float) -> float:
    """-5 + 10*exp(-delay); strictly decreasing from 5 toward -5."""
    if delay_minutes < 0:
        raise ValueError("delay must be non-negative")
    return -5.0 + 10.0 * math.exp(-delay_minutes)


def safety_coeff(grounded: bool, d_min: float | None, action: Action) -> float:
    """Piecewise safety coefficient from the CPA distance of the acted vehicle."""
    if grounded:
        return 0.0
    if d_min is None or d_min > SEPARATION_THRESHOLD:
        return 0.0
    return 5.0 if action == Action.AVOID_COLLISION else -5.0


def total_reward(outcome, weights: RewardWeights) -> RewardBreakdown:
    """Compose the five coefficients from a StepOutcome-shaped record.

    `outcome` must expose: takeoff_event, landing_event, battery, delay,
    grounded, d_min, action.
    """
    tau = takeoff_landing_coeff(outcome.takeoff_event)
    gamma = takeoff_landing_coeff(outcome.landing_event)
    lam = battery_coeff(outcome.battery)
    beta = delay_coeff(outcome.delay)
    safety = safety_coeff(outcome.grounded, outcome.d_min, outcome.action)
    total = (weights.w1 * tau + weights.w2 * gamma + weights.w3 * lam
             + weights.w4 * beta + weights.w5 * safety)
    return RewardBreakdown(tau=tau, gamma=gamma, lam=lam, beta=beta,
                           safety=safety, total=total)
