"""Discrete-event kernel: integer microsecond clock, ordered queue, seeded RNG."""

from __future__ import annotations

import heapq
import itertools
import random
from collections import deque

from .errors import MisuseError

TICKS_PER_SECOND = 1_000_000
TICKS_PER_MS = 1_000

_PENDING, _FIRED, _CANCELLED = 0, 1, 2


def seconds(value: float) -> int:
    """Convert seconds to ticks, rounding to the nearest microsecond."""
    return int(round(value * TICKS_PER_SECOND))


def millis(value: float) -> int:
    return int(round(value * TICKS_PER_MS))


def to_seconds(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


class Event:
    """A schedulable occurrence.

    ``target`` is called with ``payload`` when the event fires. Events are
    ordered by ``(fire_at, seq)`` and nothing else.
    """

    __slots__ = ("fire_at", "seq", "target", "payload", "_status")

    def __init__(self, fire_at: int, target, payload=None, seq: int = -1):
        self.fire_at = fire_at
        self.seq = seq
        self.target = target
        self.payload = payload
        self._status = _PENDING

    @property
    def pending(self) -> bool:
        return self._status == _PENDING

    @property
    def fired(self) -> bool:
        return self._status == _FIRED

    def __lt__(self, other: "Event") -> bool:
        if self.fire_at != other.fire_at:
            return self.fire_at < other.fire_at
        return self.seq < other.seq

    def __repr__(self):
        name = getattr(self.target, "__qualname__", repr(self.target))
        return f"Event(t={self.fire_at}, seq={self.seq}, target={name})"


class Rng:
    """Seeded pseudo-random source.

    Backed by the stdlib Mersenne Twister (MT19937). ``random.Random`` seeded
    with an integer produces the same stream on every platform, and
    ``randint``/``random`` are stable across CPython releases.
    """

    def __init__(self, seed: int = 0):
        if seed < 0 or seed >= 2**64:
            raise MisuseError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = random.Random(seed)

    def uniform_int(self, lo: int, hi: int) -> int:
        if lo > hi:
            raise MisuseError(f"uniform_int: empty interval [{lo}, {hi}]")
        return self._gen.randint(lo, hi)

    def random(self) -> float:
        return self._gen.random()


def uniform_int(rng: Rng, lo: int, hi: int) -> int:
    return rng.uniform_int(lo, hi)


class Kernel:
    """Single-threaded event loop.

    ``recent`` keeps the tail of the fired-event trace so a fatal error can be
    reported with context.
    """

    def __init__(self, seed: int = 0, trace_tail: int = 64):
        self.now = 0
        self.rng = Rng(seed)
        # Heap entries are (fire_at, seq, event) so ordering is done on ints.
        self._queue: list[tuple] = []
        self._seq = itertools.count()
        self.fired_total = 0
        self.recent: deque = deque(maxlen=trace_tail)

    def schedule_event(self, ev: Event) -> Event:
        if ev.fire_at < self.now:
            raise MisuseError(
                f"cannot schedule at t={ev.fire_at}, clock is already at t={self.now}"
            )
        if ev._status != _PENDING or ev.seq >= 0:
            raise MisuseError("event already scheduled")
        ev.seq = seq = next(self._seq)
        heapq.heappush(self._queue, (ev.fire_at, seq, ev))
        return ev

    def schedule(self, fire_at: int, target, payload=None) -> Event:
        return self.schedule_event(Event(fire_at, target, payload))

    def after(self, delay: int, target, payload=None) -> Event:
        if delay < 0:
            raise MisuseError(f"cannot schedule {delay} ticks in the past")
        ev = Event(self.now + delay, target, payload)
        ev.seq = seq = next(self._seq)
        heapq.heappush(self._queue, (ev.fire_at, seq, ev))
        return ev

    def cancel(self, handle: Event | None) -> bool:
        if handle is None or handle._status != _PENDING:
            return False
        handle._status = _CANCELLED
        return True

    def run_until(self, t_end: int) -> int:
        """Fire every pending event with ``fire_at <= t_end``; leave clock at ``t_end``."""
        if t_end < self.now:
            raise MisuseError(f"run_until({t_end}) is before the clock ({self.now})")
        queue = self._queue
        recent = self.recent
        fired = 0
        pop = heapq.heappop
        while queue and queue[0][0] <= t_end:
            at, _, ev = pop(queue)
            if ev._status != _PENDING:
                continue
            ev._status = _FIRED
            self.now = at
            recent.append(ev)
            ev.target(ev.payload)
            fired += 1
        self.now = t_end
        self.fired_total += fired
        return fired

    @property
    def pending_count(self) -> int:
        return sum(1 for _, _, ev in self._queue if ev._status == _PENDING)

    def trace_tail(self) -> list[str]:
        return [repr(ev) for ev in self.recent]
