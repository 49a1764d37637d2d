"""TDMA and slotted ALOHA on the same frame resources, collisions drop packets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import FrameParams
from .protocol import EstimatedEventLog
from .traffic import EventLog


def round_robin_partition(N: int, R: int) -> np.ndarray:
    """Sensor E uses energy slot E mod R; subset sizes differ by at most one."""
    return np.arange(N) % R


@dataclass(frozen=True)
class TdmaConfig:
    params: FrameParams
    partition: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        N, R = self.params.N, self.params.R
        part = round_robin_partition(N, R) if self.partition is None else np.asarray(self.partition)
        if part.shape != (N,) or part.min() < 0 or part.max() >= R:
            raise ValueError(f"partition must assign each of the {N} sensors a slot in [0, {R})")
        sizes = np.bincount(part, minlength=R)
        if sizes.max() - sizes.min() > 1:
            raise ValueError(f"subset sizes {sizes.tolist()} are not within one of N/R")
        object.__setattr__(self, "partition", part.astype(np.int64))


@dataclass(frozen=True)
class AlohaConfig:
    """ALOHA slots last k*tau/R, i.e. R slots per k subsymbols."""

    params: FrameParams


def simulate_tdma(events: EventLog, cfg: TdmaConfig) -> EstimatedEventLog:
    """A packet occupies its subset's slot for k subsymbols from its flag time.

    Two packets in the same slot collide iff their starts differ by fewer than
    k subsymbols (their airtimes overlap); colliding packets are all lost.
    A tagged packet is therefore vulnerable over 2k - 1 start offsets.
    """
    if events.N != cfg.params.N:
        raise ValueError("event log and TDMA partition disagree on N")
    k = cfg.params.k
    slot = cfg.partition[events.sensor]
    order = np.lexsort((events.n, slot))
    s, n = slot[order], events.n[order]
    close = (np.diff(s) == 0) & (np.diff(n) < k)
    lost = np.zeros(n.size, dtype=bool)
    lost[:-1] |= close
    lost[1:] |= close
    keep = order[~lost]
    return EstimatedEventLog(events.n[keep], events.sensor[keep], N=events.N, horizon=events.horizon)


def aloha_slot(time, params: FrameParams) -> np.ndarray:
    return np.floor(np.asarray(time, dtype=float) * params.R / params.k).astype(np.int64)


def simulate_saloha(events: EventLog, cfg: AlohaConfig) -> EstimatedEventLog:
    """Each flag becomes one packet in the ALOHA slot holding its arrival time;
    a slot with exactly one packet delivers it."""
    if events.N != cfg.params.N:
        raise ValueError("event log and ALOHA config disagree on N")
    slots = aloha_slot(events.time, cfg.params)
    _, inverse, counts = np.unique(slots, return_inverse=True, return_counts=True)
    keep = counts[inverse] == 1
    return EstimatedEventLog(events.n[keep], events.sensor[keep], N=events.N, horizon=events.horizon)


def aloha_slot_stats(events: EventLog, params: FrameParams, lo: int, hi: int) -> tuple[int, int]:
    """(collided slots, total slots) for ALOHA slots lying inside subsymbols [lo, hi]."""
    first = int(np.ceil(lo * params.R / params.k))
    last = int(np.floor((hi + 1) * params.R / params.k)) - 1
    if last < first:
        return 0, 0
    slots = aloha_slot(events.time, params)
    slots = slots[(slots >= first) & (slots <= last)]
    _, counts = np.unique(slots, return_counts=True)
    return int(np.count_nonzero(counts >= 2)), last - first + 1
