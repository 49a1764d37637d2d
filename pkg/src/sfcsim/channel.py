"""Shared medium: per-subsymbol occupancy counts over R energy slots."""

from __future__ import annotations

import io

import numpy as np

from .codebook import TransmissionMap


class EnergyGrid:
    """occupancy[n, j] = number of transmissions energising slot j of subsymbol n.

    The sink never sees the counts, only :meth:`observe`'s binarised window
    (ideal, noiseless energy detection).
    """

    def __init__(self, horizon: int, R: int, N: int | None = None):
        if horizon < 1 or R < 1:
            raise ValueError("horizon and R must be positive")
        self.horizon, self.R, self.N = horizon, R, N
        self.occupancy = np.zeros((horizon, R), dtype=np.int32)

    def inject(self, m: TransmissionMap, start: int) -> None:
        rows = np.asarray(m.rows if isinstance(m, TransmissionMap) else m, dtype=np.int64)
        k = rows.size
        if not 0 <= start <= self.horizon - k:
            raise ValueError(f"transmission at {start} with k={k} does not fit horizon {self.horizon}")
        if rows.min() < 0 or rows.max() >= self.R:
            raise ValueError("map slot outside [0, R)")
        self.occupancy[start + np.arange(k), rows] += 1

    def inject_many(self, table: np.ndarray, sensors, starts) -> None:
        """Vectorised inject of table[sensors[j]] at starts[j] for every j."""
        sensors = np.asarray(sensors, dtype=np.int64)
        starts = np.asarray(starts, dtype=np.int64)
        k = table.shape[1]
        if starts.size == 0:
            return
        if starts.min() < 0 or starts.max() > self.horizon - k:
            raise ValueError("transmission start out of range")
        t = (starts[:, None] + np.arange(k)[None, :]).ravel()
        j = table[sensors].ravel()
        np.add.at(self.occupancy, (t, j), 1)

    def observe(self, start: int, k: int) -> np.ndarray:
        """Binary k x R window H whose first row is subsymbol ``start``."""
        if not 0 <= start <= self.horizon - k:
            raise ValueError(f"window [{start}, {start + k}) outside horizon {self.horizon}")
        return (self.occupancy[start : start + k] > 0).astype(np.uint8)

    def binary(self) -> np.ndarray:
        return self.occupancy > 0

    def occupancy_count(self, n: int) -> int:
        if not 0 <= n < self.horizon:
            raise ValueError(f"time {n} outside horizon {self.horizon}")
        return int(np.count_nonzero(self.occupancy[n]))

    def to_csv(self) -> str:
        """Diagnostic dump of the non-zero entries as n,slot,count."""
        buf = io.StringIO()
        buf.write("n,slot,count\n")
        n, j = np.nonzero(self.occupancy)
        for a, b, c in zip(n.tolist(), j.tolist(), self.occupancy[n, j].tolist()):
            buf.write(f"{a},{b},{c}\n")
        return buf.getvalue()
