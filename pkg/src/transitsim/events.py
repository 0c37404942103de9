"""Social events and the broadcast feed humans poll to learn about them.

The feed stands in for every channel an announcement could arrive through.
Humans poll it at a fixed interval and notice broadcasts with a configured
probability; a noticed event seeds the cascade only if the human's age group
is targeted and the event is reachable before it starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .city import BoundingBox, GeoPoint
from .engine import RngStreams, SimTime
from .population import Human

DEFAULT_POLL_INTERVAL = 3600  # seconds
DEFAULT_POLL_PROBABILITY = 0.25

AGE_GROUPS = (1, 2, 3, 4, 5, 6)


class BadConfigError(ValueError):
    pass


class EventEndedError(RuntimeError):
    """Raised when an attendance decision arrives after the event is over."""


@dataclass(frozen=True)
class SocialEvent:
    id: int
    location: GeoPoint
    start: SimTime
    end: SimTime
    age_range: frozenset[int]
    broadcast_from: SimTime

    def __post_init__(self):
        if not (self.start < self.end):
            raise BadConfigError(f"event {self.id}: start must precede end")
        if self.broadcast_from > self.start:
            raise BadConfigError(f"event {self.id}: broadcast must not start after the event")
        if not self.age_range or not set(self.age_range) <= set(AGE_GROUPS):
            raise BadConfigError(f"event {self.id}: bad age range {set(self.age_range)}")

    @property
    def tau(self) -> int:
        """Lateness tolerance for attendance: a tenth of the duration."""
        return (self.end - self.start) // 10


def generate_events(config: dict, streams: RngStreams) -> list[SocialEvent]:
    """Events straight from config, or drawn from a generator block.

    ``config["events"]`` lists fixed events (lat, lon, start, end,
    age_groups, lead_seconds). ``config["generator"]`` draws `count` events
    with uniform locations in `bounds`, uniform starts in [start_min,
    start_max], durations and leads in their ranges, and a contiguous random
    age-group block.
    """
    fixed = config.get("events") or []
    gen_cfg = config.get("generator")
    events: list[SocialEvent] = []
    try:
        for i, e in enumerate(fixed):
            age = frozenset(int(g) for g in e.get("age_groups", AGE_GROUPS))
            start = int(e["start"])
            events.append(SocialEvent(
                id=i,
                location=GeoPoint(float(e["lat"]), float(e["lon"])),
                start=start,
                end=int(e["end"]),
                age_range=age,
                broadcast_from=start - int(e.get("lead_seconds", 2 * 3600)),
            ))
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, BadConfigError):
            raise
        raise BadConfigError(f"bad event entry: {err}") from None
    if gen_cfg:
        try:
            count = int(gen_cfg["count"])
            b = gen_cfg["bounds"]
            bounds = BoundingBox(float(b[0]), float(b[1]), float(b[2]), float(b[3]))
            dur_lo, dur_hi = int(gen_cfg["duration_min"]), int(gen_cfg["duration_max"])
            lead_lo, lead_hi = int(gen_cfg["lead_min"]), int(gen_cfg["lead_max"])
            start_lo = int(gen_cfg.get("start_min", 8 * 3600))
            start_hi = int(gen_cfg.get("start_max", 20 * 3600))
        except (KeyError, TypeError, ValueError) as err:
            raise BadConfigError(f"bad event generator block: {err}") from None
        if count < 0 or dur_lo <= 0 or dur_lo > dur_hi or lead_lo < 0 or lead_lo > lead_hi:
            raise BadConfigError("event generator ranges out of order")
        rng = streams.generator("events")
        for k in range(count):
            loc = bounds.sample(rng)
            start = int(rng.integers(start_lo, start_hi + 1))
            dur = int(rng.integers(dur_lo, dur_hi + 1))
            lead = min(int(rng.integers(lead_lo, lead_hi + 1)), start)
            width = int(rng.integers(1, len(AGE_GROUPS) + 1))
            lo = int(rng.integers(1, len(AGE_GROUPS) - width + 2))
            events.append(SocialEvent(
                id=len(fixed) + k,
                location=loc,
                start=start,
                end=start + dur,
                age_range=frozenset(range(lo, lo + width)),
                broadcast_from=start - lead,
            ))
    return events


class BroadcastFeed:
    """Schedule of events plus per-human poll bookkeeping.

    A poll succeeds with ``poll_probability``; on success the human sees
    every event currently broadcast that it has not seen before. The poll
    coin is keyed by (human, tick) so runs differing elsewhere still flip
    the same coins.
    """

    def __init__(self, events: list[SocialEvent],
                 poll_interval: int = DEFAULT_POLL_INTERVAL,
                 poll_probability: float = DEFAULT_POLL_PROBABILITY):
        if poll_interval <= 0:
            raise BadConfigError("poll interval must be positive")
        if not (0.0 <= poll_probability <= 1.0):
            raise BadConfigError("poll probability must be in [0, 1]")
        self.events = list(events)
        self.poll_interval = poll_interval
        self.poll_probability = poll_probability
        self._seen: dict[int, set[int]] = {}

    def poll(self, h: Human, t: SimTime, streams: RngStreams) -> list[SocialEvent]:
        tick = t // self.poll_interval
        if streams.keyed_uniform("polls", h.id, tick) >= self.poll_probability:
            return []
        seen = self._seen.setdefault(h.id, set())
        out = []
        for ev in self.events:
            if ev.broadcast_from <= t < ev.end and ev.id not in seen:
                seen.add(ev.id)
                out.append(ev)
        return out


def wants_to_seed(h: Human, ev: SocialEvent, planner, inquiry, t: SimTime,
                  origin: Optional[GeoPoint] = None) -> bool:
    """Does a freshly informed human adopt the event and start posting?

    Requires a targeted age group and the ability to arrive by the start;
    note this is stricter than the post-cascade attendance rule, which
    tolerates arriving up to tau late.
    """
    if h.age_group not in ev.age_range:
        return False
    route = planner.plan(origin or h.home, ev.location, inquiry=inquiry, t=t)
    return t + route.total_seconds <= ev.start


def decide_attendance(h: Human, ev: SocialEvent, planner, inquiry, t: SimTime,
                      origin: Optional[GeoPoint] = None):
    """Attendance choice for an activated human.

    Returns the planned route when the earliest arrival (decision time plus
    travel) lands within tau of the start, else None. Raises EventEndedError
    when the decision happens after the event finished.
    """
    if t >= ev.end:
        raise EventEndedError(f"event {ev.id} already over at t={t}")
    route = planner.plan(origin or h.home, ev.location, inquiry=inquiry, t=t)
    if t + route.total_seconds <= ev.start + ev.tau:
        return route
    return None
