"""Random transmission maps (SFC code words) and the sink's match rule."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class FrameParams:
    N: int
    k: int
    R: int

    def __post_init__(self):
        for name in ("N", "k", "R"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.R < 2:
            raise ValueError(f"R must be at least 2, got {self.R}")
        if self.N > self.R**self.k:
            raise ValueError(f"infeasible codebook: N={self.N} > R^k={self.R ** self.k}")

    @classmethod
    def for_sensors(cls, N: int, R: int) -> "FrameParams":
        """Frame with the most compact code word length k = ceil(log2 N)."""
        return cls(N, max(1, math.ceil(math.log2(N))), R)


@dataclass(frozen=True)
class TransmissionMap:
    """One energised slot index per subsymbol row."""

    rows: tuple[int, ...]

    def dense(self, R: int) -> np.ndarray:
        out = np.zeros((len(self.rows), R), dtype=np.uint8)
        out[np.arange(len(self.rows)), self.rows] = 1
        return out


class Codebook:
    """N pairwise-distinct transmission maps, indexed by sensor id.

    ``table[E, i]`` is the energised slot of row i in sensor E's map.
    """

    def __init__(self, params: FrameParams, table, seed: int | None = None):
        table = np.array(table, dtype=np.int64)
        if table.shape != (params.N, params.k):
            raise ValueError(f"table shape {table.shape} does not match (N, k)=({params.N}, {params.k})")
        if table.size and (table.min() < 0 or table.max() >= params.R):
            raise ValueError("slot indices must lie in [0, R)")
        if len({tuple(r) for r in table.tolist()}) != params.N:
            raise ValueError("transmission maps must be pairwise distinct")
        table.setflags(write=False)
        self.params = params
        self.table = table
        self.seed = seed

    @property
    def maps(self) -> list[TransmissionMap]:
        return [TransmissionMap(tuple(r)) for r in self.table.tolist()]

    def __len__(self):
        return self.params.N

    def __getitem__(self, sensor: int) -> TransmissionMap:
        return TransmissionMap(tuple(self.table[sensor].tolist()))

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (self.params == other.params and self.seed == other.seed
                and np.array_equal(self.table, other.table))

    def __repr__(self):
        p = self.params
        return f"Codebook(N={p.N}, k={p.k}, R={p.R}, seed={self.seed})"


def generate_codebook(params: FrameParams, seed: int) -> Codebook:
    """Draw each row's slot uniformly; redraw whole maps until all are distinct."""
    N, k, R = params.N, params.k, params.R
    rng = np.random.default_rng(seed)
    table = rng.integers(0, R, size=(N, k))
    weights = R ** np.arange(k, dtype=object)
    while True:
        codes = [sum(int(s) * w for s, w in zip(row, weights)) for row in table]
        seen: set[int] = set()
        dup = []
        for e, c in enumerate(codes):
            if c in seen:
                dup.append(e)
            else:
                seen.add(c)
        if not dup:
            break
        table[dup] = rng.integers(0, R, size=(len(dup), k))
    return Codebook(params, table, seed)


def map_matches(m: TransmissionMap | Sequence[int], window) -> bool:
    """True iff every row of the map lands on an energised slot of the window."""
    rows = m.rows if isinstance(m, TransmissionMap) else tuple(m)
    w = np.asarray(window)
    if w.ndim != 2 or w.shape[0] != len(rows):
        raise ValueError(f"window shape {w.shape} does not fit a {len(rows)}-row map")
    if any(not 0 <= s < w.shape[1] for s in rows):
        raise ValueError("map slot outside the window's R columns")
    return bool(np.all(w[np.arange(len(rows)), rows] != 0))


# serialization: header "N,k,R,seed" then "id,slot_0,...,slot_{k-1}"


def dumps(book: Codebook) -> str:
    p = book.params
    buf = io.StringIO()
    buf.write(f"{p.N},{p.k},{p.R},{'' if book.seed is None else book.seed}\n")
    for e, row in enumerate(book.table.tolist()):
        buf.write(",".join(map(str, [e, *row])) + "\n")
    return buf.getvalue()


def loads(text: str) -> Codebook:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty codebook text")
    head = lines[0].split(",")
    if len(head) != 4:
        raise ValueError(f"bad codebook header {lines[0]!r}; expected N,k,R,seed")
    N, k, R = (int(x) for x in head[:3])
    seed = int(head[3]) if head[3] else None
    params = FrameParams(N, k, R)
    rows = _parse_rows(lines[1:], N, k)
    return Codebook(params, rows, seed)


def _parse_rows(lines: Iterable[str], N: int, k: int) -> list[list[int]]:
    rows: list[list[int] | None] = [None] * N
    for ln in lines:
        fields = [int(x) for x in ln.split(",")]
        if len(fields) != k + 1:
            raise ValueError(f"codebook line {ln!r} should have {k + 1} fields")
        e = fields[0]
        if not 0 <= e < N or rows[e] is not None:
            raise ValueError(f"bad or repeated map id {e}")
        rows[e] = fields[1:]
    if any(r is None for r in rows):
        raise ValueError("codebook text is missing map ids")
    return rows  # type: ignore[return-value]
