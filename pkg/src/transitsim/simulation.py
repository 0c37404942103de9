"""The world: wires humans, the social layer, events, and rail operations
into one dispatch loop.

Daily activity plans become timed trips; event broadcasts spread over the
social graph, gated by each human's attendance decision, and attendees travel
to the venue and back. Trains follow their slots, station masters arbitrate
platforms and hold the boarding queues, and the transport manager re-estimates
demand every hour for whichever strategy is plugged in. Conservation checks
run at every hourly checkpoint and raise immediately on violation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .city import GeoPoint, RoadRouter, TransitNetwork
from .engine import (
    SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
    EventLog,
    RngStreams,
    Scheduler,
    SimTime,
    TimedAction,
)
from .events import BroadcastFeed, EventEndedError, SocialEvent, decide_attendance, wants_to_seed
from .metrics import MetricsLedger, TripRecord
from .population import Human, Trip, daily_trips
from .routing import Route, RoutePlanner, TrainLeg
from .social import ActivationState, SocialGraph
from .strategies import Strategy, apply_decision, snapshot
from .transit import Train, TransportManager

RETRY_SECONDS = 300  # busy humans put a pending trip off by this much


class ConservationError(RuntimeError):
    pass


@dataclass
class ActiveTrip:
    human: int
    dest: GeoPoint
    purpose: str                       # regular | event | event-return
    event_id: Optional[int]
    legs: list[TrainLeg]
    egress_seconds: int
    started: SimTime
    leg_index: int = 0
    token_id: Optional[int] = None
    token_station: Optional[int] = None
    riding: Optional[int] = None
    board_time: SimTime = 0
    wait_s: int = 0
    ride_s: int = 0
    road_s: int = 0
    used_alt: bool = False

    @property
    def waiting_at(self) -> Optional[int]:
        return self.token_station if self.token_id is not None else None

    def current_leg(self) -> Optional[TrainLeg]:
        if self.leg_index < len(self.legs):
            return self.legs[self.leg_index]
        return None


@dataclass
class HumanState:
    point: GeoPoint
    trip: Optional[ActiveTrip] = None
    at_event: Optional[int] = None

    @property
    def busy(self) -> bool:
        return self.trip is not None or self.at_event is not None


class World:
    def __init__(self, network: TransitNetwork, humans: list[Human],
                 graph: SocialGraph, events: list[SocialEvent],
                 streams: RngStreams, horizon_hours: int,
                 compartments_per_train: int, pool_compartments: int,
                 strategy: Strategy, poll_interval: int = 3600,
                 poll_probability: float = 0.25, road_speed_kmh: float = 35.0,
                 alt_margin_seconds: int = 300,
                 log_path: Optional[str] = None):
        self.network = network
        self.humans = humans
        self.graph = graph
        self.events = sorted(events, key=lambda e: e.id)
        self.streams = streams
        self.horizon = horizon_hours * SECONDS_PER_HOUR
        self.strategy = strategy
        self.alt_margin = alt_margin_seconds
        self.log = EventLog(log_path, keep_records=False) if log_path else None
        self.scheduler = Scheduler(log=self.log)
        self.manager = TransportManager(network, compartments_per_train, pool_compartments)
        self.planner = RoutePlanner(network, RoadRouter(road_speed_kmh))
        self.feed = BroadcastFeed(self.events, poll_interval, poll_probability)
        self.metrics = MetricsLedger()
        self.state = [HumanState(h.home) for h in humans]
        self.activation = {ev.id: ActivationState(event_key=ev.id) for ev in self.events}
        self.attempted: dict[int, set[tuple[int, int]]] = {ev.id: set() for ev in self.events}
        self.attendees: dict[int, set[int]] = {ev.id: set() for ev in self.events}
        self.spread_frontier: dict[int, list[int]] = {ev.id: [] for ev in self.events}
        self.pending_slots: dict[tuple[str, int], deque[tuple[SimTime, int]]] = {
            key: deque() for key in self.manager.pools}
        self._initial_compartments = self.manager.total_compartments()
        self.sweeps = 0
        self.deferrals = 0
        self.trips_started = 0
        self.boardings = 0
        self.full_train_denials = 0
        self._bootstrap()

    # setup

    def _bootstrap(self) -> None:
        sched = self.scheduler
        days = self.horizon // SECONDS_PER_DAY + 1
        for day in range(days):
            sched.schedule(day * SECONDS_PER_DAY, "world", "new-day", day)
        for h in range(0, self.horizon + 1, SECONDS_PER_HOUR):
            sched.schedule(h, "world", "hour", h // SECONDS_PER_HOUR)
        t = 0
        while t <= self.horizon:
            sched.schedule(t, "feed", "poll", None)
            t += self.feed.poll_interval
        for ev in self.events:
            if ev.end <= self.horizon:
                sched.schedule(ev.end, "world", "event-return", ev.id)
        for line in self.network.lines.values():
            dwell = line.service.dwell_seconds
            for day in range(days):
                for slot in self.manager.scheduled_slots(line.name, day):
                    at = slot - dwell
                    if at > self.horizon:
                        continue
                    for d in (+1, -1):
                        sched.schedule(max(at, 0), "manager", "slot",
                                       (line.name, d, slot))

    # main loop

    def run(self):
        summary = self.scheduler.run_until(self.horizon, self._handle)
        self._finalize()
        return summary

    def _finalize(self) -> None:
        now = self.horizon
        for sid, master in self.manager.masters.items():
            for tok in master.waiting_tokens():
                self.metrics.record_wait(tok.human, sid, tok.issued_at, now)
        self.metrics.close(now)
        self._sweep(now)
        if self.log is not None:
            self.log.close()

    def _handle(self, action: TimedAction) -> None:
        kind = action.kind
        now = self.scheduler.now
        if kind == "trip-start":
            self._on_trip_start(action.payload, now)
        elif kind == "walk-arrive":
            self._on_walk_arrive(action.payload, now)
        elif kind == "trip-arrive":
            self._on_trip_arrive(action.payload, now)
        elif kind == "train-arrive":
            self._on_train_arrive(*action.payload, now=now)
        elif kind == "train-depart":
            self._on_train_depart(action.payload, now)
        elif kind == "slot":
            self._on_slot(*action.payload, now=now)
        elif kind == "poll":
            self._on_poll(now)
        elif kind == "diffuse":
            self._on_diffuse(action.payload, now)
        elif kind == "attend-depart":
            self._on_attend_depart(*action.payload, now=now)
        elif kind == "event-return":
            self._on_event_return(action.payload, now)
        elif kind == "new-day":
            self._on_new_day(action.payload)
        elif kind == "hour":
            self._on_hour(now)
        else:
            raise ValueError(f"unknown action kind {kind!r}")

    # humans

    def _on_new_day(self, day: int) -> None:
        base = day * SECONDS_PER_DAY
        for h in self.humans:
            for trip in daily_trips(h, day, self.streams):
                if trip.chosen_start <= self.horizon:
                    self.scheduler.schedule(max(trip.chosen_start, base), "human",
                                            "trip-start", trip)

    def _on_trip_start(self, trip: Trip, now: SimTime) -> None:
        state = self.state[trip.human_id]
        if state.busy:
            self.deferrals += 1
            if now + RETRY_SECONDS <= self.horizon:
                self.scheduler.schedule(now + RETRY_SECONDS, "human", "trip-start", trip)
            return
        origin = state.point
        if origin == trip.dest:
            return
        route = self.planner.plan(origin, trip.dest, inquiry=self.manager, t=now)
        self._begin_trip(trip.human_id, trip.dest, "regular", None, route, now)

    def _begin_trip(self, human: int, dest: GeoPoint, purpose: str,
                    event_id: Optional[int], route: Route, now: SimTime) -> None:
        state = self.state[human]
        trip = ActiveTrip(human, dest, purpose, event_id, list(route.legs),
                          route.egress_seconds, now)
        state.trip = trip
        self.trips_started += 1
        if route.road_only:
            trip.road_s = route.total_seconds
            self.scheduler.schedule(now + route.total_seconds, "human", "trip-arrive", human)
        else:
            trip.road_s += route.access_seconds
            self.scheduler.schedule(now + route.access_seconds, "human", "walk-arrive", human)

    def _on_walk_arrive(self, human: int, now: SimTime) -> None:
        trip = self.state[human].trip
        leg = trip.current_leg()
        tok = self.manager.issue_token(leg.board, human, leg.alight, now)
        trip.token_id, trip.token_station = tok.id, leg.board

    def _on_trip_arrive(self, human: int, now: SimTime) -> None:
        state = self.state[human]
        trip = state.trip
        state.trip = None
        state.point = trip.dest
        self.metrics.record_trip(TripRecord(
            human, trip.started, now, trip.road_s, trip.wait_s, trip.ride_s,
            trip.used_alt))
        if trip.purpose == "event":
            ev = self.events[trip.event_id]
            if now < ev.end:
                state.at_event = ev.id
                return
            # arrived after it wrapped up; turn straight back
            home = self.humans[human].home
            if state.point != home:
                route = self.planner.plan(state.point, home, inquiry=self.manager, t=now)
                self._begin_trip(human, home, "event-return", ev.id, route, now)

    # events and diffusion

    def _on_poll(self, now: SimTime) -> None:
        fresh: dict[int, list[int]] = {}
        for h in self.humans:
            for ev in self.feed.poll(h, now, self.streams):
                if wants_to_seed(h, ev, self.planner, self.manager, now,
                                 origin=self.state[h.id].point):
                    fresh.setdefault(ev.id, []).append(h.id)
        live = fresh or any(self.spread_frontier.values())
        if live and now + 1 <= self.horizon:
            self.scheduler.schedule(now + 1, "social", "diffuse", fresh)

    def _on_diffuse(self, fresh: dict[int, list[int]], now: SimTime) -> None:
        """One cascade round per feed cycle: last round's affirmers post,
        their followers flip coins now, and anyone who affirms (plus today's
        new broadcast seeds) posts in the next round. A declined influence
        attempt still spends its edge."""
        for ev in self.events:
            st = self.activation[ev.id]
            if now >= ev.end:
                self.spread_frontier[ev.id] = []
                continue
            attempted = self.attempted[ev.id]
            nxt: list[int] = []
            for poster in self.spread_frontier[ev.id]:
                for follower in self.graph.followers[poster]:
                    if follower in st.active or (poster, follower) in attempted:
                        continue
                    attempted.add((poster, follower))
                    p = self.graph.edge_probability(follower, poster)
                    coin = self.streams.keyed_uniform("cascade", st.event_key,
                                                      poster, follower)
                    if coin < p and self._affirm(follower, ev, now):
                        st.active.add(follower)
                        nxt.append(follower)
            for h in sorted(fresh.get(ev.id, [])):
                if h not in st.active and self._affirm(h, ev, now):
                    st.active.add(h)
                    nxt.append(h)
            self.spread_frontier[ev.id] = nxt

    def _affirm(self, human: int, ev: SocialEvent, now: SimTime) -> bool:
        state = self.state[human]
        if state.at_event is not None:
            return False
        try:
            route = decide_attendance(self.humans[human], ev, self.planner,
                                      self.manager, now, origin=state.point)
        except EventEndedError:
            return False
        if route is None:
            return False
        self.attendees[ev.id].add(human)
        depart = max(now, ev.start - route.total_seconds)
        if depart <= self.horizon:
            self.scheduler.schedule(depart, "human", "attend-depart", (human, ev.id))
        return True

    def _on_attend_depart(self, human: int, ev_id: int, now: SimTime) -> None:
        state = self.state[human]
        ev = self.events[ev_id]
        if state.at_event is not None:
            return
        if state.trip is not None:
            if now + RETRY_SECONDS <= self.horizon and now + RETRY_SECONDS < ev.end:
                self.scheduler.schedule(now + RETRY_SECONDS, "human",
                                        "attend-depart", (human, ev_id))
            return
        if now >= ev.end or state.point == ev.location:
            return
        route = self.planner.plan(state.point, ev.location, inquiry=self.manager, t=now)
        self._begin_trip(human, ev.location, "event", ev_id, route, now)

    def _on_event_return(self, ev_id: int, now: SimTime) -> None:
        ev = self.events[ev_id]
        for human in sorted(self.attendees[ev_id]):
            state = self.state[human]
            if state.at_event != ev_id:
                continue
            state.at_event = None
            home = self.humans[human].home
            if state.point == home:
                continue
            route = self.planner.plan(state.point, home, inquiry=self.manager, t=now)
            self._begin_trip(human, home, "event-return", ev_id, route, now)

    # trains

    def _on_slot(self, line_name: str, direction: int, slot: SimTime, *,
                 now: SimTime) -> None:
        line = self.network.lines[line_name]
        key = (line_name, line.terminal(direction))
        pool = self.manager.pools[key]
        if pool:
            self._start_run(pool.popleft(), line_name, direction, slot, now)
        else:
            self.pending_slots[key].append((slot, direction))

    def _start_run(self, tid: int, line_name: str, direction: int,
                   slot: SimTime, now: SimTime) -> None:
        line = self.network.lines[line_name]
        train = self.manager.trains[tid]
        train.direction = direction
        train.slot_time = slot
        train.delay = 0
        train.path_pos = 0
        train.loops = 0
        train.at_station = line.terminal(direction)
        train.in_service = True
        self.manager.active[(line_name, direction)].add(tid)
        key = (line_name, direction)
        self.manager.dispatched_upto[key] = max(self.manager.dispatched_upto[key], slot)
        master = self.manager.masters[train.at_station]
        train.halt_start = now
        if master.request_arrival(tid, now):
            self._train_docked(tid, now)

    def _on_train_arrive(self, tid: int, station: int, *, now: SimTime) -> None:
        train = self.manager.trains[tid]
        line = self.network.lines[train.line]
        if line.circular and station == line.terminal(train.direction) and train.path_pos > 0:
            train.loops += 1
        train.at_station = station
        train.path_pos = line.path(train.direction).index(station)
        train.halt_start = now
        master = self.manager.masters[station]
        if master.request_arrival(tid, now):
            self._train_docked(tid, now)

    def _train_docked(self, tid: int, now: SimTime) -> None:
        """On a platform: let riders off, then either turn around or set a
        departure after the dwell."""
        train = self.manager.trains[tid]
        line = self.network.lines[train.line]
        s = train.at_station
        self._alight(train, s, now)
        self.metrics.record_visit(now, tid, train.line, s)
        self.metrics.record_occupancy(now, tid, len(train.onboard), train.capacity)
        svc = line.service
        if line.circular:
            day_base = (train.slot_time // SECONDS_PER_DAY) * SECONDS_PER_DAY
            retiring = (train.loops > 0 and s == line.terminal(train.direction)
                        and now > day_base + svc.last_departure)
        else:
            retiring = line.next_station(s, train.direction) is None
        if retiring:
            self._turnaround(tid, now)
            return
        fresh = train.path_pos == 0 and train.loops == 0
        depart_at = max(now + svc.dwell_seconds, train.slot_time if fresh else 0)
        self.scheduler.schedule(depart_at, "train", "train-depart", tid)

    def _on_train_depart(self, tid: int, now: SimTime) -> None:
        train = self.manager.trains[tid]
        line = self.network.lines[train.line]
        s = train.at_station
        svc = line.service
        self._board(train, s, now)
        step = svc.run_seconds + svc.dwell_seconds
        expected = train.slot_time + (train.loops * line.n + train.path_pos) * step
        train.delay = max(0, now - expected)
        self.metrics.record_occupancy(now, tid, len(train.onboard), train.capacity)
        ns = line.next_station(s, train.direction)
        self.scheduler.schedule(now + svc.run_seconds, "train", "train-arrive", (tid, ns))
        admitted = self.manager.masters[s].release_platform(tid)
        if admitted is not None:
            self._train_docked(admitted[0], now)

    def _turnaround(self, tid: int, now: SimTime) -> None:
        train = self.manager.trains[tid]
        s = train.at_station
        if train.onboard:
            # end of service can strand riders; put them back on the platform
            for human, _ in sorted(train.onboard.items()):
                self._resume_from_platform(human, s, now)
            train.onboard.clear()
        self.manager.active[(train.line, train.direction)].discard(tid)
        train.in_service = False
        before = train.capacity
        self.manager.terminal_service(train)
        if train.capacity != before:
            self.metrics.record_occupancy(now, tid, len(train.onboard), train.capacity)
        follow = self.manager.masters[s].release_platform(tid)
        if follow is not None:
            self._train_docked(follow[0], now)
        key = (train.line, s)
        pending = self.pending_slots.get(key)
        if pending:
            slot, direction = pending.popleft()
            self._start_run(tid, train.line, direction, slot, now)
        else:
            self.manager.pools[key].append(tid)

    def _alight(self, train: Train, station: int, now: SimTime) -> None:
        leaving = [h for h, alight in train.onboard.items() if alight == station]
        for human in leaving:
            del train.onboard[human]
            trip = self.state[human].trip
            trip.ride_s += now - trip.board_time
            trip.riding = None
            trip.leg_index += 1
            leg = trip.current_leg()
            if leg is None:
                trip.road_s += trip.egress_seconds
                self.scheduler.schedule(now + trip.egress_seconds, "human",
                                        "trip-arrive", human)
            else:
                tok = self.manager.issue_token(leg.board, human, leg.alight, now)
                trip.token_id, trip.token_station = tok.id, leg.board

    def _board(self, train: Train, station: int, now: SimTime) -> None:
        master = self.manager.masters[station]
        denied = []
        for tok in master.waiting_tokens():
            trip = self.state[tok.human].trip
            leg = trip.current_leg() if trip else None
            if (leg is None or leg.line != train.line
                    or leg.direction != train.direction or leg.board != station):
                continue
            if train.free_seats() > 0:
                wait = self.manager.return_token(station, tok.id, now)
                self.metrics.record_wait(tok.human, station, tok.issued_at, now)
                trip.wait_s += wait
                trip.token_id = trip.token_station = None
                trip.riding = train.id
                trip.board_time = now
                train.onboard[tok.human] = leg.alight
                self.boardings += 1
            else:
                denied.append(tok.human)
        for human in denied:
            self.full_train_denials += 1
            self._handle_full(human, station, train, now)

    def _handle_full(self, human: int, station: int, train: Train,
                     now: SimTime) -> None:
        directive = self.strategy.on_human_wait(human, station, train.id)
        if directive is None:
            return
        self.metrics.alt_considered += 1
        trip = self.state[human].trip
        leg = trip.current_leg()
        alt = self.planner.alternative(station, trip.dest, (leg.line, leg.direction),
                                       self.manager, now, exclude_train=train.id)
        stay = self._stay_cost(trip, station, now, exclude_train=train.id)
        # switching has friction: the detour must beat staying by a margin
        if alt.total_seconds + self.alt_margin >= stay:
            return
        self.metrics.alt_adopted += 1
        trip.used_alt = True
        if alt.road_only:
            waited = self.manager.return_token(station, trip.token_id, now)
            self.metrics.record_wait(human, station, now - waited, now)
            trip.wait_s += waited
            trip.token_id = trip.token_station = None
            trip.legs = trip.legs[:trip.leg_index]
            trip.road_s += alt.total_seconds
            self.scheduler.schedule(now + alt.total_seconds, "human",
                                    "trip-arrive", human)
        else:
            trip.legs = trip.legs[:trip.leg_index] + list(alt.legs)
            trip.egress_seconds = alt.egress_seconds

    def _stay_cost(self, trip: ActiveTrip, station: int, now: SimTime,
                   exclude_train: Optional[int]) -> float:
        """Seconds to destination if the human keeps waiting here."""
        leg = trip.current_leg()
        nd = self.manager.next_departure(leg.line, station, leg.direction, now,
                                         exclude_train=exclude_train)
        if nd is None:
            return float("inf")
        total = float(nd - now)
        for i in range(trip.leg_index, len(trip.legs)):
            lg = trip.legs[i]
            line = self.network.lines[lg.line]
            hops = line.hops(lg.board, lg.alight, lg.direction)
            total += hops * line.service.run_seconds
            total += max(0, hops - 1) * line.service.dwell_seconds
            if i > trip.leg_index:
                total += line.service.headway_seconds / 2.0
        return total + trip.egress_seconds

    def _resume_from_platform(self, human: int, station: int, now: SimTime) -> None:
        """A ride ended early because the train retired; the rider rejoins
        the queue here with the leg rebased so the next train can take it."""
        trip = self.state[human].trip
        trip.ride_s += now - trip.board_time
        trip.riding = None
        leg = trip.current_leg()
        trip.legs[trip.leg_index] = TrainLeg(leg.line, leg.direction, station, leg.alight)
        tok = self.manager.issue_token(station, human, leg.alight, now)
        trip.token_id, trip.token_station = tok.id, station

    # hourly work

    def _on_hour(self, now: SimTime) -> None:
        self._sweep(now)
        day = now // SECONDS_PER_DAY
        hour_of_day = (now % SECONDS_PER_DAY) // SECONDS_PER_HOUR
        sets = [(ev, self.attendees[ev.id]) for ev in self.events]
        estimate = self.manager.estimate_ridership(day, sets, self.humans)
        view = snapshot(self.manager, estimate, hour_of_day, now)
        decision = self.strategy.on_hour(view)
        apply_decision(decision, self.manager)
        if self.log is not None and decision.moves:
            self.log.append(now, "strategy", "decision", moves=len(decision.moves))
        self._rescue_stranded(now)

    def _rescue_stranded(self, now: SimTime) -> None:
        for sid, master in self.manager.masters.items():
            for tok in list(master.waiting_tokens()):
                trip = self.state[tok.human].trip
                leg = trip.current_leg() if trip else None
                if leg is None:
                    continue
                nd = self.manager.next_departure(leg.line, sid, leg.direction, now)
                if nd is not None:
                    continue
                self.manager.return_token(sid, tok.id, now)
                self.metrics.record_wait(tok.human, sid, tok.issued_at, now)
                trip.wait_s += now - tok.issued_at
                trip.token_id = trip.token_station = None
                trip.legs = trip.legs[:trip.leg_index]
                here = self.network.station(sid).point
                road = self.planner.road.travel_seconds(here, trip.dest)
                trip.road_s += road
                self.scheduler.schedule(now + road, "human", "trip-arrive", tok.human)

    def _sweep(self, now: SimTime) -> None:
        place: dict[int, str] = {}
        for sid, master in self.manager.masters.items():
            if len(master.platforms) > master.station.platform_count:
                raise ConservationError(f"platform bound broken at station {sid}")
            if master.issue_count - master.return_count != len(master.outstanding):
                raise ConservationError(f"token ledger unbalanced at station {sid}")
            for human in master.by_human:
                if human in place:
                    raise ConservationError(f"human {human} present twice")
                place[human] = f"station:{sid}"
        for tid, train in self.manager.trains.items():
            if len(train.onboard) > train.capacity:
                raise ConservationError(f"train {tid} over capacity")
            for human in train.onboard:
                if human in place:
                    raise ConservationError(f"human {human} present twice")
                place[human] = f"train:{tid}"
        if self.manager.total_compartments() != self._initial_compartments:
            raise ConservationError("compartments not conserved")
        self.sweeps += 1
