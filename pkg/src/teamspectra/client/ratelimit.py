"""Sliding-window request pacing."""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

DEFAULT_RATES = ((20, 1.0), (100, 120.0))


class SlidingWindowLimiter:
    """Grants request times so that no window of ``w`` seconds holds more than ``c`` grants.

    Windows are half-open: a grant at exactly ``t + w`` does not share a
    window with a grant at ``t``.
    """

    def __init__(self, rates: Iterable[Sequence[float]] = DEFAULT_RATES):
        self.rates = tuple((int(c), float(w)) for c, w in rates)
        if not self.rates:
            raise ValueError("at least one (count, window) pair is required")
        for c, w in self.rates:
            if c < 1 or w <= 0:
                raise ValueError(f"invalid rate ({c}, {w})")
        self._grants: deque[float] = deque(maxlen=max(c for c, _ in self.rates))

    def earliest(self, now: float) -> float:
        """Earliest time >= now at which one more request fits every window."""
        t = float(now)
        if self._grants:
            # grants are issued in non-decreasing order
            t = max(t, self._grants[-1])
        for c, w in self.rates:
            if len(self._grants) >= c:
                t = max(t, self._grants[-c] + w)
        return t

    def record(self, t: float) -> None:
        """Register a request issued at ``t`` (no earlier than the last one)."""
        if self._grants and t < self._grants[-1]:
            raise ValueError("request times must be non-decreasing")
        self._grants.append(float(t))

    def acquire_permit(self, now: float) -> float:
        """Reserve and return the earliest admissible grant time."""
        t = self.earliest(now)
        self.record(t)
        return t

    @property
    def grants(self) -> tuple[float, ...]:
        return tuple(self._grants)
