#!/usr/bin/env python3
"""Generate scenarios/singapore-like.yaml: four lines, 87 stations.

Two straight trunk lines (NS, EW) cross at the city center, a circle line
(CC) orbits the center reusing the four trunk stations it passes through,
and a diagonal line (NE) runs southwest-northeast through the center and one
circle station. All coordinates are arithmetic, so regenerating the file is
byte-stable.
"""

import math
import os

import yaml

CENTER_LAT, CENTER_LON = 1.340, 103.800


def r6(x: float) -> float:
    return round(x, 6)


def build() -> dict:
    stations = []
    by_coord = {}

    def add(lat: float, lon: float, name: str) -> int:
        key = (r6(lat), r6(lon))
        if key in by_coord:
            return by_coord[key]
        sid = len(stations)
        stations.append({"id": sid, "name": name, "lat": key[0], "lon": key[1]})
        by_coord[key] = sid
        return sid

    ns = [add(1.244 + 0.008 * k, CENTER_LON, f"NS{k}") for k in range(26)]
    ew = [add(CENTER_LAT, 103.670 + 0.010 * k, f"EW{k}") for k in range(26)]

    # circle line: 24 points on an ellipse, passing through EW17, NS16,
    # EW9 and NS8 at the cardinal angles
    cc = []
    for k in range(24):
        theta = 2 * math.pi * k / 24
        lat = CENTER_LAT + 0.032 * math.sin(theta)
        lon = CENTER_LON + 0.040 * math.cos(theta)
        if k == 0:
            cc.append(ew[17])
        elif k == 6:
            cc.append(ns[16])
        elif k == 12:
            cc.append(ew[9])
        elif k == 18:
            cc.append(ns[8])
        else:
            cc.append(add(lat, lon, f"CC{k}"))

    # diagonal line through the center, snapping one stop onto the circle
    ne = []
    for k in range(18):
        if k == 9:
            ne.append(ns[12])  # the center interchange
        elif k == 12:
            ne.append(cc[3])   # 45-degree circle station
        else:
            ne.append(add(1.268 + 0.008 * k, 103.728 + 0.008 * k, f"NE{k}"))

    trunk_service = {"run_seconds": 110, "dwell_seconds": 25,
                     "headway_seconds": 300, "first_departure": 19800,
                     "last_departure": 82800}
    feeder_service = {"run_seconds": 100, "dwell_seconds": 25,
                      "headway_seconds": 360, "first_departure": 19800,
                      "last_departure": 82800}
    circle_service = {"run_seconds": 100, "dwell_seconds": 20,
                      "headway_seconds": 360, "first_departure": 19800,
                      "last_departure": 82800}
    lines = [
        {"name": "NS", "stations": ns, "service": dict(trunk_service)},
        {"name": "EW", "stations": ew, "service": dict(trunk_service)},
        {"name": "CC", "stations": cc, "circular": True,
         "service": dict(circle_service)},
        {"name": "NE", "stations": ne, "service": dict(feeder_service)},
    ]

    return {
        "seed": 7,
        "horizon_hours": 24,
        "network": {"stations": stations, "lines": lines},
        "population": {"size": 2000, "margin_km": 2.0},
        "social": {"degree_min": 1, "degree_max": 40, "degree_mean": 4.0},
        "events": {
            "poll_interval": 3600,
            "poll_probability": 0.1,
            "events": [{"lat": 1.329, "lon": 103.849, "start": 30600,
                        "end": 41400, "age_groups": [1, 2, 3],
                        "lead_seconds": 7200}],
        },
        "transit": {"compartments": 2, "road_speed_kmh": 22.0},
        "strategy": {"name": "none", "alt_routing": False, "pool": 10,
                     "alt_margin_seconds": 300},
    }


def main() -> None:
    doc = build()
    n = len(doc["network"]["stations"])
    out = os.path.join(os.path.dirname(__file__), "..", "scenarios",
                       "singapore-like.yaml")
    out = os.path.normpath(out)
    with open(out, "w", encoding="utf-8") as f:
        f.write(f"# generated by scripts/make_city.py: 4 lines, {n} stations\n")
        yaml.safe_dump(doc, f, sort_keys=False, default_flow_style=None, width=100)
    print(f"wrote {out}: {n} stations, {len(doc['network']['lines'])} lines")


if __name__ == "__main__":
    main()
