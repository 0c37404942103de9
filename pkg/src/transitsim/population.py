"""Synthetic population: category and age mix, per-human contact points, and
the category-specific daily trip plans.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .city import BoundingBox, GeoPoint, random_point_within
from .engine import SECONDS_PER_DAY, RngStreams, SimTime, hms, time_of_day

WORKING_PROFESSIONAL = "working-professional"
STUDENT = "student"
HOME_MAKER = "home-maker"
SENIOR_CITIZEN = "senior-citizen"

CATEGORIES = (WORKING_PROFESSIONAL, STUDENT, HOME_MAKER, SENIOR_CITIZEN)

CATEGORY_WEIGHTS = {
    WORKING_PROFESSIONAL: 0.40,
    STUDENT: 0.30,
    HOME_MAKER: 0.15,
    SENIOR_CITIZEN: 0.15,
}

# population share of each age group (percent)
AGE_GROUP_SHARES = {1: 13.6, 2: 18.2, 3: 25.1, 4: 25.0, 5: 9.9, 6: 8.1}

# age groups a category can fall in; shares above are renormalized over these
CATEGORY_AGE_GROUPS = {
    STUDENT: (1, 2),
    WORKING_PROFESSIONAL: (2, 3, 4, 5),
    HOME_MAKER: (3, 4, 5),
    SENIOR_CITIZEN: (6,),
}

OTHER_RADIUS_KM = 5.0       # "other" and home-maker shop: within this of home
RESTAURANT_RADIUS_KM = 1.0  # lunch restaurant: within this of office


@dataclass
class Human:
    id: int
    category: str
    age_group: int
    home: GeoPoint
    office: Optional[GeoPoint] = None
    school: Optional[GeoPoint] = None
    shop: Optional[GeoPoint] = None


@dataclass
class Trip:
    human_id: int
    origin_kind: str
    dest_kind: str
    window_start: SimTime  # seconds-of-day
    window_end: SimTime
    chosen_start: SimTime  # absolute sim time
    origin: GeoPoint
    dest: GeoPoint


def generate_population(
    n: int,
    bbox: BoundingBox,
    streams: RngStreams,
    category_weights: Optional[dict[str, float]] = None,
) -> list[Human]:
    """Draw ``n`` humans with seeded category, age and contact points."""
    if n < 0:
        raise ValueError(f"population size must be non-negative: {n}")
    weights = dict(CATEGORY_WEIGHTS)
    if category_weights:
        weights.update(category_weights)
    w = [weights[c] for c in CATEGORIES]
    rng = streams.generator("population")
    humans = []
    for i in range(n):
        cat = CATEGORIES[_weighted_index(rng, w)]
        allowed = CATEGORY_AGE_GROUPS[cat]
        age_w = [AGE_GROUP_SHARES[g] for g in allowed]
        age = allowed[_weighted_index(rng, age_w)]
        home = bbox.sample(rng)
        office = bbox.sample(rng) if cat == WORKING_PROFESSIONAL else None
        school = bbox.sample(rng) if cat == STUDENT else None
        shop = random_point_within(rng, home, OTHER_RADIUS_KM) if cat == HOME_MAKER else None
        humans.append(Human(i, cat, age, home, office, school, shop))
    return humans


def _weighted_index(rng, weights) -> int:
    u = rng.random() * sum(weights)
    acc = 0.0
    for i, x in enumerate(weights):
        acc += x
        if u < acc:
            return i
    return len(weights) - 1


@dataclass(frozen=True)
class TripPair:
    """An outbound leg and its return; the return never starts first."""

    out_kinds: tuple[str, str]
    out_window: tuple[SimTime, SimTime]
    ret_kinds: tuple[str, str]
    ret_window: tuple[SimTime, SimTime]
    optional: bool  # pair happens with probability 0.5, else neither leg runs


TRIP_TABLE: dict[str, list[TripPair]] = {
    WORKING_PROFESSIONAL: [
        TripPair(("home", "office"), (hms(7, 30), hms(9, 30)),
                 ("office", "home"), (hms(17, 30), hms(20, 0)), False),
        TripPair(("office", "restaurant"), (hms(12, 0), hms(13, 0)),
                 ("restaurant", "office"), (hms(12, 30), hms(13, 30)), False),
    ],
    STUDENT: [
        TripPair(("home", "school"), (hms(7, 0), hms(8, 0)),
                 ("school", "home"), (hms(13, 30), hms(14, 30)), False),
        TripPair(("home", "other"), (hms(18, 30), hms(20, 30)),
                 ("other", "home"), (hms(18, 30), hms(20, 30)), False),
    ],
    HOME_MAKER: [
        TripPair(("home", "shop"), (hms(9, 0), hms(11, 0)),
                 ("shop", "home"), (hms(9, 30), hms(11, 30)), False),
        TripPair(("home", "shop"), (hms(18, 0), hms(20, 0)),
                 ("shop", "home"), (hms(18, 30), hms(21, 0)), True),
    ],
    SENIOR_CITIZEN: [
        TripPair(("home", "other"), (hms(7, 0), hms(9, 0)),
                 ("other", "home"), (hms(8, 30), hms(10, 0)), True),
        TripPair(("home", "other"), (hms(17, 0), hms(18, 30)),
                 ("other", "home"), (hms(17, 30), hms(19, 30)), True),
    ],
}


def daily_trips(h: Human, day: int, streams: RngStreams) -> list[Trip]:
    """Trips for one human on one day, resolved down to concrete points.

    All randomness comes from a generator keyed by (human, day), so the plan
    is independent of anything else that happened in the run.
    """
    rng = streams.keyed_generator("trips", h.id, day)
    base = day * SECONDS_PER_DAY
    trips: list[Trip] = []
    for pair in TRIP_TABLE[h.category]:
        if pair.optional and rng.random() >= 0.5:
            continue
        points = _pair_points(h, pair, rng)
        out_lo, out_hi = pair.out_window
        t_out = int(rng.integers(out_lo, out_hi + 1))
        ret_lo, ret_hi = pair.ret_window
        lo = max(ret_lo, t_out + 1)
        t_ret = int(rng.integers(lo, max(ret_hi, lo) + 1))
        trips.append(Trip(h.id, pair.out_kinds[0], pair.out_kinds[1],
                          out_lo, out_hi, base + t_out, points[0], points[1]))
        trips.append(Trip(h.id, pair.ret_kinds[0], pair.ret_kinds[1],
                          ret_lo, ret_hi, base + t_ret, points[1], points[0]))
    trips.sort(key=lambda t: t.chosen_start)
    return trips


def _pair_points(h: Human, pair: TripPair, rng) -> tuple[GeoPoint, GeoPoint]:
    """(origin, destination) of the outbound leg; the return swaps them."""
    def resolve(kind: str) -> GeoPoint:
        if kind == "home":
            return h.home
        if kind == "office":
            return h.office
        if kind == "school":
            return h.school
        if kind == "shop":
            # home-makers keep one fixed shop; anyone else improvises nearby
            return h.shop if h.shop is not None else random_point_within(rng, h.home, OTHER_RADIUS_KM)
        if kind == "restaurant":
            return random_point_within(rng, h.office, RESTAURANT_RADIUS_KM)
        if kind == "other":
            return random_point_within(rng, h.home, OTHER_RADIUS_KM)
        raise ValueError(f"unknown place kind {kind!r}")

    return resolve(pair.out_kinds[0]), resolve(pair.out_kinds[1])
