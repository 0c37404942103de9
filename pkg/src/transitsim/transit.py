"""Rail operations: station masters with token-based occupancy tracking and
platform arbitration, trains and terminal pools, schedule arithmetic, the
train inquiry, and hourly ridership estimation.

A route here means one direction of one line. Scheduled terminal departures
("slots") repeat daily per the line's service block; the fleet per line is
sized so the schedule is coverable, and a slot whose terminal pool is empty
waits for the next returning train (logged as a delayed slot).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .city import GeoPoint, Station, TransitLine, TransitNetwork, UnknownStationError
from .engine import SECONDS_PER_DAY, SECONDS_PER_HOUR, SimTime
from .population import (
    HOME_MAKER,
    SENIOR_CITIZEN,
    STUDENT,
    WORKING_PROFESSIONAL,
    Human,
)

SEATS_PER_COMPARTMENT = 31


class DuplicatePresenceError(RuntimeError):
    pass


class UnknownTokenError(KeyError):
    pass


class InvalidMoveError(ValueError):
    pass


def initial_capacity(sim_daily_ridership: float, real_daily_ridership: float,
                     real_capacity: float) -> int:
    """Scale a real train capacity down to the simulated ridership, rounded
    up to whole compartments."""
    if sim_daily_ridership <= 0 or real_daily_ridership <= 0 or real_capacity <= 0:
        raise ValueError("ridership and capacity inputs must be positive")
    raw = sim_daily_ridership * real_capacity / real_daily_ridership
    compartments = max(1, math.ceil(raw / SEATS_PER_COMPARTMENT))
    return compartments * SEATS_PER_COMPARTMENT


@dataclass
class Token:
    id: int
    human: int
    station: int
    destination: int
    issued_at: SimTime


class StationMaster:
    """Tracks who is at the station via tokens and who may use a platform."""

    def __init__(self, station: Station):
        self.station = station
        self.outstanding: dict[int, Token] = {}  # insertion order = issue order
        self.by_human: dict[int, int] = {}
        self.platforms: set[int] = set()
        self.hold_queue: list[tuple[SimTime, int]] = []  # (halt_start, train)
        self.issue_count = 0
        self.return_count = 0

    def occupancy(self) -> int:
        return len(self.outstanding)

    def issue(self, token: Token) -> None:
        if token.human in self.by_human:
            raise DuplicatePresenceError(
                f"human {token.human} already holds a token at station {self.station.id}")
        self.outstanding[token.id] = token
        self.by_human[token.human] = token.id
        self.issue_count += 1

    def retire(self, token_id: int) -> Token:
        tok = self.outstanding.pop(token_id, None)
        if tok is None:
            raise UnknownTokenError(f"token {token_id} not outstanding at station {self.station.id}")
        del self.by_human[tok.human]
        self.return_count += 1
        return tok

    def waiting_tokens(self) -> list[Token]:
        """Outstanding tokens in issue order (the boarding queue)."""
        return list(self.outstanding.values())

    def request_arrival(self, train_id: int, now: SimTime) -> bool:
        """True = admitted to a platform; False = holds on the approach."""
        if len(self.platforms) < self.station.platform_count:
            self.platforms.add(train_id)
            return True
        self.hold_queue.append((now, train_id))
        return False

    def release_platform(self, train_id: int) -> Optional[tuple[int, SimTime]]:
        """Free the departing train's platform; admit the longest-halted
        holder (ties to the lower train id). Returns (train, halt_start)."""
        self.platforms.discard(train_id)
        if not self.hold_queue:
            return None
        winner = min(range(len(self.hold_queue)),
                     key=lambda i: (self.hold_queue[i][0], self.hold_queue[i][1]))
        halt_start, tid = self.hold_queue.pop(winner)
        self.platforms.add(tid)
        return tid, halt_start


@dataclass
class Train:
    id: int
    line: str
    compartments: int
    direction: int = +1
    slot_time: SimTime = 0      # scheduled terminal departure of current run
    delay: int = 0              # seconds behind that schedule
    path_pos: int = 0           # index along path(direction) of current/next station
    at_station: Optional[int] = None
    onboard: dict[int, int] = field(default_factory=dict)  # human -> alight station
    in_service: bool = False
    halt_start: Optional[SimTime] = None
    pending_detach: int = 0
    loops: int = 0              # completed circuits of a circular line this run

    @property
    def capacity(self) -> int:
        return self.compartments * SEATS_PER_COMPARTMENT

    def free_seats(self) -> int:
        return self.capacity - len(self.onboard)


@dataclass
class RidershipEstimate:
    """Per-route hourly demand for one day: station-history baseline plus the
    event-attendee delta from the route-traversal count."""

    day: int
    baseline: dict[tuple[str, int, int], float] = field(default_factory=dict)
    delta: dict[tuple[str, int, int], int] = field(default_factory=dict)
    departures: dict[tuple[str, int, int], int] = field(default_factory=dict)

    def total(self, line: str, direction: int, hour: int) -> float:
        key = (line, direction, hour)
        return self.baseline.get(key, 0.0) + self.delta.get(key, 0)

    def per_departure(self, line: str, direction: int, hour: int) -> float:
        deps = self.departures.get((line, direction, hour), 0)
        if deps <= 0:
            return 0.0
        return self.total(line, direction, hour) / deps


def attendee_source_point(h: Human, hour_of_day: int) -> GeoPoint:
    """Where an attendee sets out from, judged by category and clock hour."""
    if h.category == WORKING_PROFESSIONAL and 9 <= hour_of_day < 18 and h.office is not None:
        return h.office
    if h.category == STUDENT and 8 <= hour_of_day < 14 and h.school is not None:
        return h.school
    return h.home


class TransportManager:
    """System-wide agent owning trains, schedules, the compartment pool, the
    token ledger and ridership history."""

    def __init__(self, network: TransitNetwork, compartments_per_train: int,
                 pool_compartments: int = 0):
        if compartments_per_train < 1:
            raise ValueError("trains need at least one compartment")
        self.network = network
        self.masters = {sid: StationMaster(st) for sid, st in network.stations.items()}
        self.trains: dict[int, Train] = {}
        self.pools: dict[tuple[str, int], deque[int]] = {}   # (line, terminal) -> idle trains
        self.active: dict[tuple[str, int], set[int]] = {}    # (line, direction) -> running trains
        self.dispatched_upto: dict[tuple[str, int], SimTime] = {}
        self.unattached = pool_compartments
        self.attach_claims: dict[int, int] = {}
        self._token_seq = 0
        self.issue_history: dict[tuple[int, int], int] = {}  # (station, abs hour) -> count
        self.wait_records: list[tuple[int, int, SimTime, SimTime]] = []  # human, station, start, end
        self._nearest_cache: dict[GeoPoint, int] = {}
        for line in network.lines.values():
            fleet = self.fleet_size(line)
            ends = [line.terminal(+1)] if line.circular else [line.terminal(+1), line.terminal(-1)]
            for end in ends:
                self.pools.setdefault((line.name, end), deque())
            for d in (+1, -1):
                self.active[(line.name, d)] = set()
                self.dispatched_upto[(line.name, d)] = -1
            for k in range(fleet):
                tid = len(self.trains)
                self.trains[tid] = Train(tid, line.name, compartments_per_train)
                # alternate ends so both directions can start on time
                end = ends[k % len(ends)]
                self.pools[(line.name, end)].append(tid)

    # fleet and schedule arithmetic

    def fleet_size(self, line: TransitLine) -> int:
        svc = line.service
        if line.circular:
            # one fleet per direction, each covering the loop at the headway
            per_dir = math.ceil(line.one_way_seconds() / svc.headway_seconds)
            return 2 * per_dir
        round_trip = 2 * (line.one_way_seconds() + svc.dwell_seconds)
        return math.ceil(round_trip / svc.headway_seconds)

    def scheduled_slots(self, line_name: str, day: int) -> list[SimTime]:
        svc = self.network.lines[line_name].service
        base = day * SECONDS_PER_DAY
        out = []
        t = svc.first_departure
        while t <= svc.last_departure:
            out.append(base + t)
            t += svc.headway_seconds
        return out

    def slots_in_hour(self, line_name: str, day: int, hour: int) -> int:
        lo = day * SECONDS_PER_DAY + hour * SECONDS_PER_HOUR
        hi = lo + SECONDS_PER_HOUR
        return sum(1 for s in self.scheduled_slots(line_name, day) if lo <= s < hi)

    def station_offset(self, line: TransitLine, direction: int, station_id: int) -> int:
        """Scheduled seconds from terminal departure to departing this station."""
        p = line.path(direction).index(station_id)
        return p * (line.service.run_seconds + line.service.dwell_seconds)

    def next_departure(self, line_name: str, station_id: int, direction: int,
                       t: SimTime, exclude_train: Optional[int] = None) -> Optional[SimTime]:
        """Earliest predicted departure of the route from a station at or
        after t: live trains shifted by their known delays, then still
        undispatched schedule slots."""
        if station_id not in self.network.stations:
            raise UnknownStationError(f"unknown station {station_id}")
        line = self.network.lines[line_name]
        if line.next_station(station_id, direction) is None:
            return None
        p = line.path(direction).index(station_id)
        offset = p * (line.service.run_seconds + line.service.dwell_seconds)
        period = line.n * (line.service.run_seconds + line.service.dwell_seconds)
        best: Optional[SimTime] = None
        for tid in sorted(self.active[(line_name, direction)]):
            if tid == exclude_train:
                continue
            train = self.trains[tid]
            pred = train.slot_time + offset + train.delay
            if line.circular:
                if pred < t:
                    pred += period * math.ceil((t - pred) / period)
            else:
                if train.path_pos > p:
                    continue
                pred = max(pred, t)
            if pred >= t and (best is None or pred < best):
                best = pred
        day = t // SECONDS_PER_DAY
        for d in (day, day + 1):
            for slot in self.scheduled_slots(line_name, d):
                if slot <= self.dispatched_upto[(line_name, direction)]:
                    continue
                pred = slot + offset
                if pred >= t:
                    if best is None or pred < best:
                        best = pred
                    break
            if best is not None:
                break
        return best

    def expected_wait(self, line_name: str) -> float:
        return self.network.lines[line_name].service.headway_seconds / 2.0

    # tokens

    def issue_token(self, station_id: int, human: int, destination: int,
                    now: SimTime) -> Token:
        tok = Token(self._token_seq, human, station_id, destination, now)
        self._token_seq += 1
        self.masters[station_id].issue(tok)
        hour = now // SECONDS_PER_HOUR
        self.issue_history[(station_id, hour)] = self.issue_history.get((station_id, hour), 0) + 1
        return tok

    def return_token(self, station_id: int, token_id: int, now: SimTime) -> int:
        """Retire a token; records and returns the wait duration."""
        tok = self.masters[station_id].retire(token_id)
        wait = now - tok.issued_at
        self.wait_records.append((tok.human, station_id, tok.issued_at, now))
        return wait

    # compartments

    def total_compartments(self) -> int:
        return self.unattached + sum(tr.compartments for tr in self.trains.values())

    def queue_moves(self, moves: Iterable[tuple[object, object, int]]) -> None:
        """Validate and enqueue compartment moves; "pool" is a valid endpoint.

        Physical changes happen at terminal visits: detaches free compartments
        into the pool, attach claims draw from the pool when available.
        """
        pending = {tid: tr.pending_detach for tid, tr in self.trains.items()}
        for src, dst, count in moves:
            if count <= 0:
                raise InvalidMoveError(f"move count must be positive: {count}")
            for endpoint in (src, dst):
                if endpoint != "pool" and endpoint not in self.trains:
                    raise InvalidMoveError(f"unknown train {endpoint!r}")
            if src == dst:
                raise InvalidMoveError("move endpoints must differ")
            if src != "pool":
                pending[src] += count
                if self.trains[src].compartments - pending[src] < 1:
                    raise InvalidMoveError(
                        f"train {src} would drop below one compartment")
        for src, dst, count in moves:
            if src != "pool":
                self.trains[src].pending_detach += count
            if dst != "pool":
                self.attach_claims[dst] = self.attach_claims.get(dst, 0) + count
        # pool -> pool is rejected above via src == dst

    def terminal_service(self, train: Train) -> tuple[int, int]:
        """Apply pending compartment work while the train sits at a terminal.

        Detach only while nobody would lose a seat; grant attach claims from
        whatever the pool holds. Returns (detached, attached).
        """
        detached = attached = 0
        while (train.pending_detach > 0 and train.compartments > 1
               and len(train.onboard) <= (train.compartments - 1) * SEATS_PER_COMPARTMENT):
            train.compartments -= 1
            train.pending_detach -= 1
            self.unattached += 1
            detached += 1
        claim = self.attach_claims.get(train.id, 0)
        while claim > 0 and self.unattached > 0:
            train.compartments += 1
            self.unattached -= 1
            claim -= 1
            attached += 1
        if claim:
            self.attach_claims[train.id] = claim
        else:
            self.attach_claims.pop(train.id, None)
        return detached, attached

    # ridership

    def _nearest_id(self, point: GeoPoint) -> int:
        sid = self._nearest_cache.get(point)
        if sid is None:
            sid = self.network.nearest_station(point).id
            self._nearest_cache[point] = sid
        return sid

    def routes_serving(self, station_id: int) -> list[tuple[str, int]]:
        out = []
        for line_name, _ in self.network.memberships[station_id]:
            line = self.network.lines[line_name]
            for d in (+1, -1):
                if line.next_station(station_id, d) is not None:
                    out.append((line_name, d))
        return out

    def estimate_ridership(self, day: int, attendee_sets, humans: list[Human]) -> RidershipEstimate:
        """Hourly per-route demand for one day.

        ``attendee_sets`` pairs each event with the ids of humans planning to
        attend. Per hour the event runs, each attendee contributes one rider
        from the station nearest its estimated source location to the station
        nearest the event, counted on every route that passes the source
        strictly before the destination. The baseline is the same hour of the
        previous day's token issues, split evenly over the routes serving
        each issuing station.
        """
        est = RidershipEstimate(day)
        base_day = day * SECONDS_PER_DAY
        for line_name, line in self.network.lines.items():
            for d in (+1, -1):
                for hour in range(24):
                    est.departures[(line_name, d, hour)] = self.slots_in_hour(line_name, day, hour)
        # baseline from yesterday's issues
        if day > 0:
            for (sid, abs_hour), count in self.issue_history.items():
                if abs_hour // 24 != day - 1:
                    continue
                hour = abs_hour % 24
                routes = self.routes_serving(sid)
                if not routes:
                    continue
                share = count / len(routes)
                for line_name, d in routes:
                    key = (line_name, d, hour)
                    est.baseline[key] = est.baseline.get(key, 0.0) + share
        # event deltas from route traversal
        for hour in range(24):
            lo = base_day + hour * SECONDS_PER_HOUR
            hi = lo + SECONDS_PER_HOUR
            for event, attendees in attendee_sets:
                if not (event.start < hi and event.end > lo):
                    continue
                dest = self._nearest_id(event.location)
                sources = []
                for hid in sorted(attendees):
                    src_point = attendee_source_point(humans[hid], hour)
                    sources.append(self._nearest_id(src_point))
                for line_name, line in self.network.lines.items():
                    for d in (+1, -1):
                        path = line.path(d)
                        if dest not in path:
                            continue
                        dest_idx = path.index(dest)
                        pos = {sid: i for i, sid in enumerate(path)}
                        count = sum(1 for s in sources if s in pos and pos[s] < dest_idx)
                        if count:
                            key = (line_name, d, hour)
                            est.delta[key] = est.delta.get(key, 0) + count
        return est
