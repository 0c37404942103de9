#!/usr/bin/env python3
"""Paired event-day vs quiet-day run on the desk scenario.

Runs the same seed twice, once with the 08:30-11:30 event and once with the
event stripped, then shows where the extra riders landed: section usage and
waits around the venue during the arrival and going-home hours.
"""

import os
import tempfile

from transitsim.cli import _read_series, compare
from transitsim.config import load_scenario

ROOT = os.path.join(os.path.dirname(__file__), "..")
VENUE_SECTIONS = (("H", "r2"), ("H", "r3"), ("V", "r2"))


def main() -> None:
    cfg = load_scenario(os.path.join(ROOT, "scenarios", "desk.yaml"))
    out = tempfile.mkdtemp(prefix="transitsim-event-")
    print(f"running paired compare (seed {cfg.seed}) into {out} ...")
    event, quiet = compare(cfg, "event", out)

    ev = event["world"]
    attendees = ev.attendees.get(0, set())
    print(f"\nevent reached {len(attendees)} attendees "
          f"({ev.boardings} boardings all day, "
          f"{ev.full_train_denials} full-train denials)")

    usage_e = _read_series(event["dir"], "usage.csv")
    usage_q = _read_series(quiet["dir"], "usage.csv")
    wait_e = _read_series(event["dir"], "wait.csv")
    wait_q = _read_series(quiet["dir"], "wait.csv")

    print("\nsections near the venue (event run vs quiet run):")
    print(f"  {'hour':>4} {'sec':>6} {'usage':>15} {'avg wait s':>19}")
    for hour in ("7", "8", "9", "10", "11", "12"):
        for ln, sec in VENUE_SECTIONS:
            k = (hour, ln, sec)
            print(f"  {hour:>4} {ln + ' ' + sec:>6} "
                  f"{usage_e[k]:7.3f} vs {usage_q[k]:5.3f} "
                  f"{wait_e[k]:9.1f} vs {wait_q[k]:7.1f}")

    print(f"\nwhole day: avg wait {event['avg_wait']:.1f} s vs "
          f"{quiet['avg_wait']:.1f} s, avg travel {event['avg_travel']:.1f} s vs "
          f"{quiet['avg_travel']:.1f} s")
    print(f"full per-cell differences: {os.path.join(event['dir'], 'delta.csv')}")


if __name__ == "__main__":
    main()
