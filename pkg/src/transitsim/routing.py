"""Trip routing: minimum-time rail paths with transfers, the pure-road
fallback, and the re-route decision taken when a full train shows up.

Planning rides on estimates: expected boarding wait is half the line headway
(random incidence), rides use scheduled run and dwell times. The re-route
path swaps in live waits from the train inquiry for the first boarding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Optional

from .city import GeoPoint, RoadRouter, TransitNetwork
from .engine import SimTime


class UnreachableError(Exception):
    """No feasible route; cannot happen when road travel is allowed."""


@dataclass(frozen=True)
class TrainLeg:
    line: str
    direction: int
    board: int   # station id
    alight: int


@dataclass(frozen=True)
class Route:
    origin: GeoPoint
    dest: GeoPoint
    board_station: Optional[int]
    alight_station: Optional[int]
    legs: tuple[TrainLeg, ...]
    access_seconds: int   # road: origin -> boarding station (or full trip if road-only)
    wait_seconds: int     # estimated platform waits, first boarding + transfers
    ride_seconds: int
    egress_seconds: int
    total_seconds: int

    @property
    def road_only(self) -> bool:
        return not self.legs


def _road_route(origin: GeoPoint, dest: GeoPoint, seconds: int) -> Route:
    return Route(origin, dest, None, None, (), seconds, 0, 0, 0, seconds)


class RoutePlanner:
    def __init__(self, network: TransitNetwork, road: RoadRouter):
        self.network = network
        self.road = road

    def plan(self, origin: GeoPoint, dest: GeoPoint, inquiry=None, t: SimTime = 0) -> Route:
        """Fastest route from origin to dest, rail if it beats the road.

        Boarding happens at the station nearest the origin and alighting at
        the station nearest the destination; the search is over train legs
        between those two. A strictly faster pure-road trip wins.
        """
        road_total = self.road.travel_seconds(origin, dest)
        b = self.network.nearest_station(origin)
        a = self.network.nearest_station(dest)
        if b.id == a.id:
            return _road_route(origin, dest, road_total)
        rail = self._rail_path(b.id, a.id, inquiry=inquiry, t=t)
        if rail is None:
            return _road_route(origin, dest, road_total)
        legs, wait_s, ride_s = rail
        access = self.road.travel_seconds(origin, b.point)
        egress = self.road.travel_seconds(a.point, dest)
        total = access + wait_s + ride_s + egress
        if road_total < total:
            return _road_route(origin, dest, road_total)
        return Route(origin, dest, b.id, a.id, tuple(legs), access, wait_s, ride_s, egress, total)

    def alternative(self, station_id: int, dest: GeoPoint, current_first: tuple[str, int],
                    inquiry, t: SimTime, exclude_train: Optional[int] = None) -> Route:
        """Best onward route for a human stuck at a station.

        The train serving ``current_first`` arrived full; waiting for the one
        after it is a valid option and is priced with its real departure
        time, as is the first boarding on every other line here. Road travel
        straight from the station is the fallback, so something feasible
        always comes back.
        """
        here = self.network.station(station_id).point
        road_total = self.road.travel_seconds(here, dest)
        alight = self.network.nearest_station(dest)
        first_waits: dict[tuple[str, int], int] = {}
        for line_name, _ in self.network.memberships[station_id]:
            line = self.network.lines[line_name]
            for d in (+1, -1):
                if line.next_station(station_id, d) is None:
                    continue
                skip = exclude_train if (line_name, d) == current_first else None
                dep = inquiry.next_departure(line_name, station_id, d, t, exclude_train=skip)
                if dep is not None:
                    first_waits[(line_name, d)] = dep - t
        rail = None
        if alight.id != station_id and first_waits:
            rail = self._rail_path(station_id, alight.id, first_waits=first_waits)
        if rail is None:
            return _road_route(here, dest, road_total)
        legs, wait_s, ride_s = rail
        egress = self.road.travel_seconds(alight.point, dest)
        total = wait_s + ride_s + egress
        if road_total < total:
            return _road_route(here, dest, road_total)
        return Route(here, dest, station_id, alight.id, tuple(legs), 0, wait_s, ride_s, egress, total)

    def _rail_path(self, src: int, dst: int, inquiry=None, t: SimTime = 0,
                   first_waits: Optional[dict[tuple[str, int], int]] = None):
        """Dijkstra from station src to dst over (station, line, direction)
        states. Returns (legs, wait_seconds, ride_seconds) or None.

        States: ("hub", s) = standing at station s; ("on", s, line, d) =
        onboard, doors just opened at s. Boarding jumps straight to the next
        station (wait + run); continuing costs dwell + run; alighting is free.
        """
        net = self.network
        start = ("hub", src)
        goal = ("hub", dst)
        dist: dict = {start: 0.0}
        parent: dict = {}
        heap = [(0.0, 0, start)]
        tiebreak = itertools.count(1)
        done = set()
        while heap:
            cost, _, state = heappop(heap)
            if state in done:
                continue
            done.add(state)
            if state == goal:
                break

            def relax(nstate, ncost, edge):
                if ncost < dist.get(nstate, math.inf):
                    dist[nstate] = ncost
                    parent[nstate] = (state, edge)
                    heappush(heap, (ncost, next(tiebreak), nstate))

            if state[0] == "hub":
                s = state[1]
                for line_name, _ in net.memberships[s]:
                    line = net.lines[line_name]
                    for d in (+1, -1):
                        s2 = line.next_station(s, d)
                        if s2 is None:
                            continue
                        if s == src and first_waits is not None:
                            if (line_name, d) not in first_waits:
                                continue
                            w = first_waits[(line_name, d)]
                        else:
                            w = line.service.headway_seconds / 2.0
                            if s == src and inquiry is not None and \
                                    inquiry.next_departure(line_name, s, d, t) is None:
                                continue
                        relax(("on", s2, line_name, d), cost + w + line.service.run_seconds,
                              ("board", line_name, d, s, w))
            else:
                _, s, line_name, d = state
                line = net.lines[line_name]
                relax(("hub", s), cost, ("alight", s))
                s2 = line.next_station(s, d)
                if s2 is not None:
                    relax(("on", s2, line_name, d), cost + line.service.dwell_seconds + line.service.run_seconds,
                          ("ride",))
        if goal not in parent and goal != start:
            return None
        # walk back and stitch board..alight pairs into legs
        legs: list[TrainLeg] = []
        wait_s = 0.0
        state = goal
        alight_at = None
        while state != start:
            prev, edge = parent[state]
            if edge[0] == "alight":
                alight_at = edge[1]
            elif edge[0] == "board":
                _, line_name, d, board_at, w = edge
                legs.append(TrainLeg(line_name, d, board_at, alight_at))
                wait_s += w
            state = prev
        legs.reverse()
        ride_s = 0
        for leg in legs:
            line = self.network.lines[leg.line]
            k = line.hops(leg.board, leg.alight, leg.direction)
            ride_s += k * line.service.run_seconds + (k - 1) * line.service.dwell_seconds
        return legs, int(round(wait_s)), int(ride_s)
