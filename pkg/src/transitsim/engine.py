"""Deterministic discrete-event core: simulated clock, action scheduler and
seeded named random streams.

Simulated time is an integer count of seconds since day-0 midnight. Pending
actions are dispatched strictly in ``(fire_at, seq)`` order, where ``seq`` is
the insertion counter, so reruns with the same scenario and seed replay the
exact same trace.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Any, Callable, Iterable, Optional

import numpy as np

SECONDS_PER_MINUTE = 60
SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400

SimTime = int


def hms(hours: int, minutes: int = 0, seconds: int = 0) -> SimTime:
    """Seconds since midnight for a clock reading."""
    return hours * SECONDS_PER_HOUR + minutes * SECONDS_PER_MINUTE + seconds


def parse_clock(text: str) -> SimTime:
    """Parse ``"H:MM"`` or ``"H:MM:SS"`` into seconds-of-day."""
    parts = text.strip().split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise ValueError(f"bad clock string: {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if m >= 60 or s >= 60:
        raise ValueError(f"bad clock string: {text!r}")
    return hms(h, m, s)


def time_of_day(t: SimTime) -> SimTime:
    return t % SECONDS_PER_DAY


def format_clock(t: SimTime) -> str:
    d = time_of_day(t)
    return f"{d // 3600:02d}:{d % 3600 // 60:02d}:{d % 60:02d}"


class PastTimeError(ValueError):
    """Raised when an action is scheduled before the current clock."""


class BadParameterError(ValueError):
    """Raised for invalid random-draw parameters."""


@dataclass(frozen=True)
class TimedAction:
    fire_at: SimTime
    actor: str
    kind: str
    payload: Any
    seq: int


@dataclass
class RunSummary:
    dispatched: int
    t_end: SimTime


class EventLog:
    """Line-delimited structured log of everything the scheduler dispatched.

    One JSON record per dispatched action plus any domain records the model
    appends, in chronological order. Bytes are stable for a given run, which
    is what the replay oracle and the determinism checks compare.
    """

    def __init__(self, path: Optional[str] = None, keep_records: bool = True):
        self.path = path
        self.keep_records = keep_records
        self.records: list[dict] = []
        self._fh = open(path, "w") if path else None

    def append(self, t: SimTime, actor: str, kind: str, **data: Any) -> None:
        rec = {"t": t, "actor": actor, "kind": kind}
        if data:
            rec.update(data)
        if self.keep_records:
            self.records.append(rec)
        if self._fh is not None:
            self._fh.write(json.dumps(rec, separators=(",", ":"), sort_keys=False))
            self._fh.write("\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class Scheduler:
    """Priority-queue action dispatcher with a monotone integer clock."""

    def __init__(self, log: Optional[EventLog] = None, start: SimTime = 0):
        self.now: SimTime = start
        self.log = log
        self._seq = 0
        self._heap: list[tuple[SimTime, int, TimedAction]] = []
        self.dispatched = 0

    def schedule(self, fire_at: SimTime, actor: str, kind: str, payload: Any = None) -> int:
        if fire_at < self.now:
            raise PastTimeError(f"cannot schedule {kind!r} at t={fire_at} (now t={self.now})")
        action = TimedAction(fire_at, actor, kind, payload, self._seq)
        heappush(self._heap, (fire_at, action.seq, action))
        self._seq += 1
        return action.seq

    def pending(self) -> int:
        return len(self._heap)

    def run_until(self, t_end: SimTime, handler: Callable[[TimedAction], None]) -> RunSummary:
        """Dispatch every action with ``fire_at <= t_end`` and land on ``t_end``."""
        if t_end < self.now:
            raise PastTimeError(f"cannot run backwards to t={t_end} (now t={self.now})")
        count = 0
        while self._heap and self._heap[0][0] <= t_end:
            _, _, action = heappop(self._heap)
            self.now = action.fire_at
            if self.log is not None:
                self.log.append(action.fire_at, action.actor, action.kind)
            handler(action)
            count += 1
        self.now = t_end
        self.dispatched += count
        return RunSummary(dispatched=count, t_end=t_end)


# 64-bit mixing (splitmix64) used for order-independent keyed draws. The
# numpy variant in social.py must produce bit-identical output, so any change
# here has to be mirrored there.
_U64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _U64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


def mix64(*values: int) -> int:
    """Hash a tuple of integers into a well-mixed 64-bit value."""
    h = 0x8445D61A4E774912
    for v in values:
        h = splitmix64(h ^ (v & _U64))
    return h


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")


class RngStreams:
    """Named, independently seeded random streams.

    Each stream is derived from ``(global seed, stream name)`` only, so adding
    draws to one stream never perturbs another. ``keyed_uniform`` gives a
    stateless draw addressed by integers (human id, tick, ...), which makes
    the value independent of dispatch order as well.
    """

    def __init__(self, seed: int, overrides: Optional[dict[str, int]] = None):
        self.seed = int(seed)
        self._overrides = dict(overrides or {})
        self._cache: dict[str, np.random.Generator] = {}

    def _base(self, name: str) -> int:
        if name in self._overrides:
            return int(self._overrides[name])
        return self.seed

    def generator(self, name: str) -> np.random.Generator:
        gen = self._cache.get(name)
        if gen is None:
            ss = np.random.SeedSequence(entropy=(self._base(name), _name_key(name)))
            gen = np.random.default_rng(ss)
            self._cache[name] = gen
        return gen

    def keyed_generator(self, name: str, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=(self._base(name), _name_key(name), *key))
        return np.random.default_rng(ss)

    def keyed_uniform(self, name: str, *key: int) -> float:
        h = mix64(self._base(name), _name_key(name), *key)
        return h / 2.0**64

    # Draw helpers. These are the only sampling primitives the model uses,
    # so parameter validation lives here.
    def uniform(self, name: str, low: float = 0.0, high: float = 1.0) -> float:
        if not (low <= high):
            raise BadParameterError(f"uniform bounds out of order: [{low}, {high}]")
        return float(self.generator(name).uniform(low, high))

    def bernoulli(self, name: str, p: float) -> bool:
        if not (0.0 <= p <= 1.0):
            raise BadParameterError(f"bernoulli p out of range: {p}")
        return bool(self.generator(name).random() < p)

    def choice(self, name: str, weights: Iterable[float]) -> int:
        w = [float(x) for x in weights]
        if not w or any(x < 0 or not np.isfinite(x) for x in w):
            raise BadParameterError(f"weights must be non-negative and finite: {w}")
        total = sum(w)
        if total <= 0:
            raise BadParameterError("weights must sum to a positive value")
        u = self.generator(name).random() * total
        acc = 0.0
        for i, x in enumerate(w):
            acc += x
            if u < acc:
                return i
        return len(w) - 1
