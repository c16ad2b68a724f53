"""Closed-form closest-point-of-approach (CPA) separation geometry.

Pairwise separation between two constant-velocity vehicles is

    D(t) = sqrt((dx + dvx*t)^2 + (dy + dvy*t)^2)

whose unconstrained minimizer is t* = -(dp . dv) / |dv|^2.  The minimizer is
clamped to [0, horizon] because only future, in-flight proximity matters; a
zero relative velocity degenerates to constant separation, handled as t=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import StatusKind, VehicleGraph

DEFAULT_THRESHOLD = 3.0   # meters
DEFAULT_HORIZON = 10.0    # minutes of lookahead


@dataclass(frozen=True)
class ConflictQuery:
    """Positions (meters) and velocities (meters/minute) of two vehicles."""

    p1: tuple[float, float]
    v1: tuple[float, float]
    p2: tuple[float, float]
    v2: tuple[float, float]

    def __post_init__(self) -> None:
        for pair in (self.p1, self.v1, self.p2, self.v2):
            if not all(math.isfinite(c) for c in pair):
                raise ValueError("conflict query components must be finite")


@dataclass(frozen=True)
class ConflictResult:
    t_min: float      # minutes, clamped to [0, horizon]
    d_min: float      # meters, D(t_min)
    conflict: bool    # d_min below the separation threshold


def separation_at(q: ConflictQuery, t: float) -> float:
    """Distance between the two vehicles after t minutes of constant motion."""
    if t < 0:
        raise ValueError("t must be non-negative")
    dx = q.p1[0] - q.p2[0] + (q.v1[0] - q.v2[0]) * t
    dy = q.p1[1] - q.p2[1] + (q.v1[1] - q.v2[1]) * t
    return math.hypot(dx, dy)


def min_separation(q: ConflictQuery, horizon: float = DEFAULT_HORIZON,
                   threshold: float = DEFAULT_THRESHOLD) -> ConflictResult:
    """Minimum separation over the next `horizon` minutes."""
    dx = q.p1[0] - q.p2[0]
    dy = q.p1[1] - q.p2[1]
    dvx = q.v1[0] - q.v2[0]
    dvy = q.v1[1] - q.v2[1]
    denom = dvx * dvx + dvy * dvy
    if denom == 0.0:
        t_min = 0.0
    else:
        t_min = -(dvx * dx + dvy * dy) / denom
        t_min = min(max(t_min, 0.0), horizon)
    d_min = separation_at(q, t_min)
    return ConflictResult(t_min=t_min, d_min=d_min, conflict=d_min < threshold)


def pairwise_conflicts(vehicles: VehicleGraph,
                       threshold: float = DEFAULT_THRESHOLD,
                       horizon: float = DEFAULT_HORIZON,
                       ) -> list[tuple[tuple[int, int], ConflictResult]]:
    """CPA results for every unordered en-route pair below the threshold.

    Only cruising vehicles are en route; grounded (and hovering) vehicles are
    never reported as conflicts.
    """
    cruising = [v for v in vehicles.nodes if v.status == StatusKind.CRUISING]
    out = []
    for a_idx in range(len(cruising)):
        for b_idx in range(a_idx + 1, len(cruising)):
            a, b = cruising[a_idx], cruising[b_idx]
            q = ConflictQuery(p1=(a.x, a.y), v1=(a.vx, a.vy),
                              p2=(b.x, b.y), v2=(b.vx, b.vy))
            res = min_separation(q, horizon=horizon, threshold=threshold)
            if res.d_min < threshold:
                out.append(((a.id, b.id), res))
    return out
