"""Alarm traffic: per-sensor renewal arrivals and threshold-crossing events.

Time is measured in subsymbol durations (tau = 1).  Discrete time n covers
[n, n + 1); an event function flag theta_E[n] = 1 collapses every arrival of
sensor E inside that interval.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MODES = ("renewal", "poisson")


@dataclass(frozen=True)
class TrafficParams:
    """lam is the mean number of alarms per subsymbol summed over all N sensors.

    Flags are only raised for n <= horizon - k so every k-subsymbol
    transmission fits in the horizon.  ``mode="poisson"`` draws C_n ~ Poisson(lam)
    directly and assigns distinct sensors (the idealised analysis model).
    """

    lam: float
    horizon: int
    N: int
    k: int = 1
    mode: str = "renewal"

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be non-negative and finite, got {self.lam}")
        if self.N < 1 or self.k < 1:
            raise ValueError("N and k must be positive")
        if self.horizon < self.k:
            raise ValueError(f"horizon={self.horizon} shorter than one radio symbol (k={self.k})")
        if self.mode not in MODES:
            raise ValueError(f"unknown traffic mode {self.mode!r}; choose from {MODES}")
        if self.lam > 0 and self.N / self.lam < 10:
            warnings.warn(
                f"N/lambda = {self.N / self.lam:.3g} < 10: same-sensor re-arrivals are frequent and "
                "C_n departs from Poisson(lambda)",
                stacklevel=2,
            )

    @property
    def last_start(self) -> int:
        return self.horizon - self.k


class EventLog:
    """Sparse event flags: parallel arrays sorted by (n, sensor).

    ``time`` keeps the first arrival inside each flagged interval (continuous,
    in subsymbols); slotted ALOHA needs it to place packets in sub-subsymbol
    slots.
    """

    def __init__(self, n, sensor, N: int, horizon: int, time=None):
        n = np.asarray(n, dtype=np.int64)
        sensor = np.asarray(sensor, dtype=np.int64)
        time = n.astype(float) if time is None else np.asarray(time, dtype=float)
        if not (n.shape == sensor.shape == time.shape) or n.ndim != 1:
            raise ValueError("n, sensor and time must be 1-d arrays of equal length")
        if n.size:
            if n.min() < 0 or n.max() >= horizon:
                raise ValueError("event time index outside [0, horizon)")
            if sensor.min() < 0 or sensor.max() >= N:
                raise ValueError(f"sensor id outside [0, {N})")
        order = np.lexsort((sensor, n))
        n, sensor, time = n[order], sensor[order], time[order]
        if n.size > 1:
            dup = (np.diff(n) == 0) & (np.diff(sensor) == 0)
            if dup.any():
                raise ValueError("a sensor can be flagged at most once per time index")
        self.n, self.sensor, self.time = n, sensor, time
        self.N, self.horizon = N, horizon

    def __len__(self):
        return int(self.n.size)

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return (self.N == other.N and self.horizon == other.horizon
                and np.array_equal(self.n, other.n) and np.array_equal(self.sensor, other.sensor))

    def counts(self) -> np.ndarray:
        """C_n, the number of flagged sensors per discrete time."""
        return np.bincount(self.n, minlength=self.horizon)

    def flagged(self, n: int) -> set[int]:
        lo, hi = np.searchsorted(self.n, [n, n + 1])
        return set(self.sensor[lo:hi].tolist())

    def dense(self) -> np.ndarray:
        out = np.zeros((self.horizon, self.N), dtype=bool)
        out[self.n, self.sensor] = True
        return out

    @classmethod
    def from_dense(cls, flags) -> "EventLog":
        flags = np.asarray(flags, dtype=bool)
        n, s = np.nonzero(flags)
        return cls(n, s, N=flags.shape[1], horizon=flags.shape[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "sensor_id"])
        w.writerows(zip(self.n.tolist(), self.sensor.tolist()))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, N: int, horizon: int) -> "EventLog":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["n", "sensor_id"]:
            raise ValueError("event CSV must start with the header n,sensor_id")
        data = np.array([[int(a), int(b)] for a, b in rows[1:]], dtype=np.int64).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], N=N, horizon=horizon)


def generate_events(p: TrafficParams, seed) -> EventLog:
    rng = np.random.default_rng(seed)
    if p.mode == "poisson":
        return _poisson_events(p, rng)
    if p.lam == 0:
        return EventLog([], [], N=p.N, horizon=p.horizon)
    limit = float(p.last_start + 1)  # arrivals at t >= limit would overrun the horizon
    mean_gap = p.N / p.lam
    expected = limit / mean_gap
    width = int(expected + 6 * math.sqrt(expected) + 10)
    times = np.cumsum(rng.exponential(mean_gap, size=(p.N, width)), axis=1)
    while (short := times[:, -1] < limit).any():
        more = rng.exponential(mean_gap, size=(p.N, width))
        more[~short] = np.inf
        times = np.hstack([times, times[:, -1:] + np.cumsum(more, axis=1)])
    sensor = np.broadcast_to(np.arange(p.N)[:, None], times.shape)
    keep = times < limit
    t, s = times[keep], sensor[keep]
    n = np.floor(t).astype(np.int64)
    # rows are per-sensor sorted, so the first (s, n) occurrence is the earliest arrival
    key = s * (p.last_start + 1) + n
    _, first = np.unique(key, return_index=True)
    return EventLog(n[first], s[first], N=p.N, horizon=p.horizon, time=t[first])


def _poisson_events(p: TrafficParams, rng: np.random.Generator) -> EventLog:
    starts = p.last_start + 1
    c = np.minimum(rng.poisson(p.lam, size=starts), p.N)
    n = np.repeat(np.arange(starts), c)
    s = rng.integers(0, p.N, size=n.size)
    while True:
        key = n * p.N + s
        order = np.argsort(key, kind="stable")
        dup = np.zeros(n.size, dtype=bool)
        dup[order[1:]] = np.diff(key[order]) == 0
        if not dup.any():
            break
        s[dup] = rng.integers(0, p.N, size=int(dup.sum()))
    t = n + rng.random(n.size)
    return EventLog(n, s, N=p.N, horizon=p.horizon, time=t)


@dataclass(frozen=True)
class SampledSignal:
    samples: Sequence[tuple[float, float]]
    threshold: float
    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        t = np.asarray([x for x, _ in self.samples], dtype=float)
        if t.size < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if t[0] < 0:
            raise ValueError("sample times must be non-negative")


def events_from_signal(s: SampledSignal) -> np.ndarray:
    """theta[n] for T_n = [(n-1) tau, n tau): 1 iff a below-threshold sample is
    followed, inside the same interval, by an at-or-above-threshold sample."""
    t = np.asarray([x for x, _ in s.samples], dtype=float)
    v = np.asarray([y for _, y in s.samples], dtype=float)
    trig = v >= s.threshold
    idx = np.floor(t / s.tau).astype(np.int64) + 1
    theta = np.zeros(idx.max() + 1, dtype=np.uint8)
    # within an interval, flag iff some 0 precedes some later 1
    seen_low = {}
    for n, high in zip(idx.tolist(), trig.tolist()):
        if not high:
            seen_low[n] = True
        elif seen_low.get(n):
            theta[n] = 1
    return theta
