"""Waypoint mobility: piecewise-linear paths with slow/fast speed classes."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .errors import ConfigError
from .kernel import TICKS_PER_SECOND

DEFAULT_SPEEDS = {"slow": 1.0, "fast": 5.0}  # m/s


@dataclass(frozen=True)
class WaypointPath:
    """Positions ``points[i]`` reached at ``times[i]`` (ticks); ``speeds[i]`` labels leg i -> i+1."""

    points: tuple
    times: tuple
    speeds: tuple = ()

    def __post_init__(self):
        if not self.points or len(self.points) != len(self.times):
            raise ConfigError("waypoint path needs one arrival time per point")
        if len(self.speeds) not in (0, len(self.points) - 1):
            raise ConfigError("waypoint path needs one speed class per leg")
        for a, b in zip(self.times, self.times[1:]):
            if b <= a:
                raise ConfigError("waypoint arrival times must be strictly increasing")

    @classmethod
    def static(cls, position) -> "WaypointPath":
        return cls((tuple(position),), (0,))

    @classmethod
    def from_legs(cls, origin, start: int, legs, speeds: dict | None = None) -> "WaypointPath":
        """Build from ``legs = [(target_xy, speed_class), ...]`` leaving ``origin`` at ``start``."""
        table = DEFAULT_SPEEDS if speeds is None else speeds
        points = [tuple(float(v) for v in origin)]
        times = [start]
        classes = []
        for target, cls_name in legs:
            if cls_name not in table:
                raise ConfigError(f"unknown speed class {cls_name!r}")
            target = tuple(float(v) for v in target)
            dist = math.dist(points[-1], target)
            if dist == 0:
                raise ConfigError("consecutive waypoints must differ")
            dt = int(round(dist / table[cls_name] * TICKS_PER_SECOND))
            points.append(target)
            times.append(times[-1] + max(dt, 1))
            classes.append(cls_name)
        return cls(tuple(points), tuple(times), tuple(classes))

    @property
    def is_static(self) -> bool:
        return len(self.points) == 1


def position_at(path: WaypointPath, t: int) -> tuple:
    pts, times = path.points, path.times
    if len(pts) == 1 or t <= times[0]:
        return pts[0]
    if t >= times[-1]:
        return pts[-1]
    i = bisect.bisect_right(times, t) - 1
    t0, t1 = times[i], times[i + 1]
    f = (t - t0) / (t1 - t0)
    (x0, y0), (x1, y1) = pts[i], pts[i + 1]
    return (x0 + (x1 - x0) * f, y0 + (y1 - y0) * f)
