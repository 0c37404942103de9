"""Congestion-control strategies.

A strategy sees an hourly snapshot (fleet state plus the demand estimate) and
returns a decision: compartment moves between trains and the shared pool.
The baseline never moves anything. The greedy strategy tops up trains whose
per-departure demand estimate exceeds their capacity, drawing first on the
pool and then on trains whose demand is falling and that have seats to spare.

Alternative routing is a separate human-side behavior: when a full train
leaves someone on the platform, an enabled strategy returns a directive
telling the world to offer that human a fresh route from where they stand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .engine import SimTime
from .transit import SEATS_PER_COMPARTMENT, RidershipEstimate, TransportManager


@dataclass(frozen=True)
class CompartmentPool:
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("pool cannot go negative")


@dataclass(frozen=True)
class StrategyDecision:
    moves: tuple[tuple[object, object, int], ...]
    effective_time: SimTime

    @property
    def empty(self) -> bool:
        return not self.moves


@dataclass(frozen=True)
class TrainView:
    id: int
    line: str
    direction: int
    compartments: int
    onboard: int

    @property
    def capacity(self) -> int:
        return self.compartments * SEATS_PER_COMPARTMENT


@dataclass(frozen=True)
class ManagerView:
    """Read-only hourly snapshot handed to strategies."""

    hour: int
    now: SimTime
    trains: tuple[TrainView, ...]
    pool: CompartmentPool
    estimate: RidershipEstimate


@dataclass(frozen=True)
class RerouteDirective:
    human: int
    station: int
    exclude_train: Optional[int]


def snapshot(manager: TransportManager, estimate: RidershipEstimate,
             hour: int, now: SimTime) -> ManagerView:
    trains = tuple(
        TrainView(tr.id, tr.line, tr.direction, tr.compartments, len(tr.onboard))
        for tr in manager.trains.values())
    return ManagerView(hour, now, trains, CompartmentPool(manager.unattached), estimate)


def greedy_reallocate(view: ManagerView) -> StrategyDecision:
    """One compartment to each over-demand train, busiest first.

    Per-train demand is the route estimate spread over that hour's
    departures. Pool compartments go first; after that, donors are trains
    whose demand fell since the previous hour and still leaves a compartment
    of slack, largest fall first. Requests with no source stay unmet.
    """
    est = view.estimate
    hour = view.hour

    def per_train(tv: TrainView, h: int) -> float:
        return est.per_departure(tv.line, tv.direction, h)

    requests = [tv for tv in view.trains if per_train(tv, hour) > tv.capacity]
    requests.sort(key=lambda tv: (-per_train(tv, hour), tv.id))
    overloaded = {tv.id for tv in requests}
    moves: list[tuple[object, object, int]] = []
    pool_left = view.pool.count
    donated: dict[int, int] = {}
    for tv in requests:
        if pool_left > 0:
            pool_left -= 1
            moves.append(("pool", tv.id, 1))
            continue
        donor = None
        donor_drop = 0.0
        for cand in view.trains:
            if cand.id in overloaded or cand.id == tv.id:
                continue
            given = donated.get(cand.id, 0)
            if cand.compartments - given <= 1:
                continue
            if hour == 0:
                continue
            cur = per_train(cand, hour)
            prev = per_train(cand, hour - 1)
            slack_cap = (cand.compartments - given) * SEATS_PER_COMPARTMENT
            if cur < prev and cur < slack_cap - SEATS_PER_COMPARTMENT:
                drop = prev - cur
                if donor is None or drop > donor_drop or (drop == donor_drop and cand.id < donor):
                    donor, donor_drop = cand.id, drop
        if donor is None:
            continue
        donated[donor] = donated.get(donor, 0) + 1
        moves.append((donor, tv.id, 1))
    return StrategyDecision(tuple(moves), view.now)


def apply_decision(decision: StrategyDecision, manager: TransportManager) -> None:
    """Hand the moves to the manager; physical changes land at terminals."""
    if decision.moves:
        manager.queue_moves(decision.moves)


class Strategy:
    """Hourly hook plus the full-train hook; base class does nothing."""

    name = "none"

    def __init__(self, alt_routing: bool = False):
        self.alt_routing = alt_routing

    def on_hour(self, view: ManagerView) -> StrategyDecision:
        return StrategyDecision((), view.now)

    def on_human_wait(self, human: int, station: int,
                      full_train: Optional[int]) -> Optional[RerouteDirective]:
        """Called when a train leaves a would-be rider behind."""
        if self.alt_routing and full_train is not None:
            return RerouteDirective(human, station, full_train)
        return None


class BaselineStrategy(Strategy):
    name = "none"


class GreedyReallocation(Strategy):
    name = "greedy"

    def on_hour(self, view: ManagerView) -> StrategyDecision:
        return greedy_reallocate(view)


def make_strategy(name: str, alt_routing: bool = False) -> Strategy:
    if name == "none":
        return BaselineStrategy(alt_routing)
    if name == "greedy":
        return GreedyReallocation(alt_routing)
    raise ValueError(f"unknown strategy {name!r}")
