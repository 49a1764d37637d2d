"""SFC end to end: event-triggered transmission, sliding-window decoding, scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EnergyGrid
from .codebook import Codebook
from .stats import wilson_interval
from .traffic import EventLog


class EstimatedEventLog(EventLog):
    """theta_hat flags; same layout as :class:`EventLog`."""


def sfc_transmit(events: EventLog, book: Codebook) -> EnergyGrid:
    """Every flagged sensor sends its whole map starting at its flag time."""
    p = book.params
    if events.N != p.N:
        raise ValueError(f"event log has N={events.N}, codebook has N={p.N}")
    if len(events) and events.sensor.max() >= p.N:
        raise ValueError("unknown sensor id in event log")
    grid = EnergyGrid(events.horizon, p.R, p.N)
    grid.inject_many(book.table, events.sensor, events.n)
    return grid


def sfc_decode(grid: EnergyGrid, book: Codebook) -> EstimatedEventLog:
    """theta_hat_E[n] = 1 iff map E fully matches the window starting at n."""
    p = book.params
    k = p.k
    if grid.horizon < k:
        raise ValueError("grid shorter than one radio symbol")
    starts = grid.horizon - k + 1
    lit = np.ascontiguousarray(grid.binary().T)  # (R, horizon)
    ns, ss = [], []
    for e, rows in enumerate(book.table):
        hit = lit[rows[0], :starts].copy()
        for i in range(1, k):
            hit &= lit[rows[i], i : i + starts]
        idx = np.flatnonzero(hit)
        ns.append(idx)
        ss.append(np.full(idx.size, e, dtype=np.int64))
    n = np.concatenate(ns) if ns else np.empty(0, np.int64)
    s = np.concatenate(ss) if ss else np.empty(0, np.int64)
    return EstimatedEventLog(n, s, N=p.N, horizon=grid.horizon)


@dataclass(frozen=True)
class Score:
    """Counts over the scored offsets n in [warmup, horizon - k]."""

    symbols: int
    sensors: int
    events: int
    detections: int
    false_positives: int
    symbol_errors: int

    @property
    def negatives(self) -> int:
        return self.symbols * self.sensors - self.events

    @property
    def overall_error(self) -> float:
        return self.symbol_errors / self.symbols if self.symbols else 0.0

    @property
    def p_detect(self) -> float:
        # no alarms at all means none were missed
        return self.detections / self.events if self.events else 1.0

    @property
    def p_quiet(self) -> float:
        neg = self.negatives
        return 1.0 - self.false_positives / neg if neg else 1.0

    @property
    def efficiency(self) -> float:
        return self.p_detect * self.p_quiet

    @property
    def false_alarm_rate(self) -> float:
        """Joint rate P[theta_hat = 1, theta = 0] over sensor-offset pairs."""
        return self.false_positives / (self.symbols * self.sensors) if self.symbols else 0.0

    def overall_error_ci(self):
        return wilson_interval(self.symbol_errors, self.symbols)

    def p_detect_ci(self):
        return wilson_interval(self.detections, self.events)

    def p_quiet_ci(self):
        return wilson_interval(self.negatives - self.false_positives, self.negatives)

    def efficiency_ci(self):
        (a, b), (c, d) = self.p_detect_ci(), self.p_quiet_ci()
        return a * c, b * d

    def __add__(self, other: "Score") -> "Score":
        if self.sensors != other.sensors:
            raise ValueError("cannot merge scores over different sensor counts")
        return Score(self.symbols + other.symbols, self.sensors, self.events + other.events,
                     self.detections + other.detections,
                     self.false_positives + other.false_positives,
                     self.symbol_errors + other.symbol_errors)


def score(truth: EventLog, estimate: EventLog, k: int, warmup: int | None = None) -> Score:
    if truth.N != estimate.N or truth.horizon != estimate.horizon:
        raise ValueError("truth and estimate differ in N or horizon")
    warmup = k - 1 if warmup is None else warmup
    lo, hi = warmup, truth.horizon - k  # inclusive
    if hi < lo:
        raise ValueError("no radio symbols left to score after warm-up")
    N = truth.N

    def keys(log):
        m = (log.n >= lo) & (log.n <= hi)
        return log.n[m] * N + log.sensor[m]

    t, e = keys(truth), keys(estimate)
    hits = np.intersect1d(t, e, assume_unique=True)
    missed = np.setdiff1d(t, e, assume_unique=True)
    false = np.setdiff1d(e, t, assume_unique=True)
    bad = np.union1d(missed // N, false // N)
    return Score(hi - lo + 1, N, int(t.size), int(hits.size), int(false.size), int(bad.size))
