"""City geography: places, great-circle distances, road travel and the rail
network layout (stations, lines, per-line service parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

EARTH_RADIUS_KM = 6371.0
ROAD_SPEED_KMH = 35.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometres."""
    la1, lo1 = math.radians(a.lat), math.radians(a.lon)
    la2, lo2 = math.radians(b.lat), math.radians(b.lon)
    dla = la2 - la1
    dlo = lo2 - lo1
    h = math.sin(dla / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin(dlo / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def contains(self, p: GeoPoint) -> bool:
        return self.min_lat <= p.lat <= self.max_lat and self.min_lon <= p.lon <= self.max_lon

    def sample(self, rng) -> GeoPoint:
        return GeoPoint(
            float(rng.uniform(self.min_lat, self.max_lat)),
            float(rng.uniform(self.min_lon, self.max_lon)),
        )


def bounding_box_around(points: list[GeoPoint], margin_km: float = 2.0) -> BoundingBox:
    lat_deg = margin_km / (EARTH_RADIUS_KM * math.pi / 180.0)
    mid_lat = sum(p.lat for p in points) / len(points)
    lon_deg = lat_deg / max(0.1, math.cos(math.radians(mid_lat)))
    return BoundingBox(
        min(p.lat for p in points) - lat_deg,
        min(p.lon for p in points) - lon_deg,
        max(p.lat for p in points) + lat_deg,
        max(p.lon for p in points) + lon_deg,
    )


def random_point_within(rng, center: GeoPoint, radius_km: float) -> GeoPoint:
    """Uniform point in the great-circle disc around ``center``.

    Rejection sampling in the enclosing lat/lon box; exact under haversine.
    """
    lat_deg = radius_km / (EARTH_RADIUS_KM * math.pi / 180.0)
    lon_deg = lat_deg / max(0.1, math.cos(math.radians(center.lat)))
    while True:
        p = GeoPoint(
            center.lat + float(rng.uniform(-lat_deg, lat_deg)),
            center.lon + float(rng.uniform(-lon_deg, lon_deg)),
        )
        if haversine_km(center, p) <= radius_km:
            return p


class RoadRouter:
    """Point-to-point road travel at a flat speed over the crow-flies path."""

    def __init__(self, speed_kmh: float = ROAD_SPEED_KMH):
        if speed_kmh <= 0:
            raise ValueError(f"road speed must be positive: {speed_kmh}")
        self.speed_kmh = speed_kmh

    def travel_seconds(self, a: GeoPoint, b: GeoPoint) -> int:
        return int(round(haversine_km(a, b) / self.speed_kmh * 3600.0))


class ParseError(ValueError):
    """Scenario config does not parse or misses required fields."""


class DanglingReferenceError(ParseError):
    """Config references an entity that does not exist."""


class InvariantViolationError(ValueError):
    """A structural network invariant fails; message names the element."""


@dataclass
class Station:
    id: int
    name: str
    point: GeoPoint
    platform_count: int = 2
    lines: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.platform_count < 1:
            raise InvariantViolationError(f"station {self.id}: platform_count must be >= 1")


@dataclass
class LineService:
    """Per-line service parameters, all in seconds."""

    run_seconds: int          # station-to-station travel
    dwell_seconds: int        # halt at each intermediate station
    headway_seconds: int      # departure interval from each terminal
    first_departure: int      # seconds-of-day of the first terminal departure
    last_departure: int       # seconds-of-day of the last terminal departure


@dataclass
class TransitLine:
    """An ordered run of stations served in both directions.

    Direction ``+1`` walks ``stations`` forward (index 0 is the up terminal),
    ``-1`` walks it backward. Circular lines close the loop from the last
    station back to the first; the station at index 0 acts as the loop anchor
    where trains are dispatched and retired.
    """

    name: str
    station_ids: list[int]
    service: LineService
    circular: bool = False

    def __post_init__(self):
        if len(self.station_ids) < 2:
            raise InvariantViolationError(f"line {self.name!r} needs at least 2 stations")
        if len(set(self.station_ids)) != len(self.station_ids):
            raise InvariantViolationError(f"line {self.name!r} visits a station twice")

    @property
    def n(self) -> int:
        return len(self.station_ids)

    def index_of(self, station_id: int) -> int:
        return self.station_ids.index(station_id)

    def terminal(self, direction: int) -> int:
        if self.circular:
            return self.station_ids[0]
        return self.station_ids[0] if direction == +1 else self.station_ids[-1]

    def next_station(self, station_id: int, direction: int) -> Optional[int]:
        """Following stop in the given direction, None past the end of the line."""
        i = self.index_of(station_id) + direction
        if self.circular:
            return self.station_ids[i % self.n]
        if 0 <= i < self.n:
            return self.station_ids[i]
        return None

    def hops(self, a: int, b: int, direction: int) -> Optional[int]:
        """Stop count riding from a to b in the given direction, None if unreachable."""
        ia, ib = self.index_of(a), self.index_of(b)
        if a == b:
            return 0
        if self.circular:
            return (ib - ia) % self.n if direction == +1 else (ia - ib) % self.n
        k = (ib - ia) * direction
        return k if k > 0 else None

    def path(self, direction: int) -> list[int]:
        return list(self.station_ids) if direction == +1 else list(reversed(self.station_ids))

    def one_way_seconds(self) -> int:
        """Terminal-to-terminal time (full loop time for circular lines)."""
        if self.circular:
            return self.n * (self.service.run_seconds + self.service.dwell_seconds)
        hops = self.n - 1
        return hops * self.service.run_seconds + (self.n - 2) * self.service.dwell_seconds


class UnknownStationError(KeyError):
    pass


class TransitNetwork:
    def __init__(self, stations: list[Station], lines: list[TransitLine]):
        self.stations: dict[int, Station] = {}
        for st in stations:
            if st.id in self.stations:
                raise InvariantViolationError(f"duplicate station id {st.id}")
            self.stations[st.id] = st
        self.lines: dict[str, TransitLine] = {}
        for line in lines:
            if line.name in self.lines:
                raise InvariantViolationError(f"duplicate line {line.name!r}")
            for sid in line.station_ids:
                if sid not in self.stations:
                    raise DanglingReferenceError(f"line {line.name!r} references unknown station {sid}")
                if line.name not in self.stations[sid].lines:
                    self.stations[sid].lines.append(line.name)
            self.lines[line.name] = line
        # station -> [(line, index)] for routing
        self.memberships: dict[int, list[tuple[str, int]]] = {sid: [] for sid in self.stations}
        for line in self.lines.values():
            for idx, sid in enumerate(line.station_ids):
                self.memberships[sid].append((line.name, idx))
        self._ordered_ids = sorted(self.stations)

    def station(self, station_id: int) -> Station:
        try:
            return self.stations[station_id]
        except KeyError:
            raise UnknownStationError(f"unknown station {station_id}") from None

    def nearest_station(self, point: GeoPoint) -> Station:
        """Closest station by great-circle distance; ties go to the lower id."""
        best_id = None
        best_d = math.inf
        for sid in self._ordered_ids:
            d = haversine_km(point, self.stations[sid].point)
            if d < best_d:
                best_d, best_id = d, sid
        return self.stations[best_id]

    def lines_between(self, a: int, b: int) -> list[tuple[str, int]]:
        """Lines serving both stations, with a direction that goes a -> b."""
        out = []
        for name, _ in self.memberships[a]:
            line = self.lines[name]
            if b in line.station_ids and b != a:
                for direction in (+1, -1):
                    if line.hops(a, b, direction):
                        out.append((name, direction))
        return out


def network_from_dict(doc: dict) -> TransitNetwork:
    """Build a network from the parsed scenario mapping."""
    try:
        station_docs = doc["stations"]
        line_docs = doc["lines"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"network config needs 'stations' and 'lines' sections: {e}") from None
    try:
        stations = [
            Station(
                id=int(s["id"]),
                name=str(s.get("name", f"S{s['id']}")),
                point=GeoPoint(float(s["lat"]), float(s["lon"])),
                platform_count=int(s.get("platforms", 2)),
            )
            for s in station_docs
        ]
        lines = []
        for l in line_docs:
            svc = l.get("service", {})
            lines.append(
                TransitLine(
                    name=str(l["name"]),
                    station_ids=[int(x) for x in l["stations"]],
                    circular=bool(l.get("circular", False)),
                    service=LineService(
                        run_seconds=int(svc.get("run_seconds", 120)),
                        dwell_seconds=int(svc.get("dwell_seconds", 30)),
                        headway_seconds=int(svc.get("headway_seconds", 300)),
                        first_departure=int(svc.get("first_departure", 5 * 3600)),
                        last_departure=int(svc.get("last_departure", 23 * 3600)),
                    ),
                )
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, (InvariantViolationError, DanglingReferenceError)):
            raise
        raise ParseError(f"bad network config entry: {e}") from None
    return TransitNetwork(stations, lines)
