"""Chunked bit vectors: a plain full-universe vector and the ranged variant.

Bit arrays are stored as Python ints; chunk geometry (word width, aligned
lower bounds, chunk counts) is tracked explicitly because the union of two
ranged vectors proceeds chunk-by-chunk and because modeled memory accounting
depends on the number of allocated chunks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .errors import ConfigMismatchError, InvalidParamsError
from .hierarchy import Interval

_VALID_CHUNK_BITS = (8, 16, 32, 64)


@dataclass(frozen=True)
class ChunkConfig:
    chunk_bits: int = 64

    def __post_init__(self):
        if self.chunk_bits not in _VALID_CHUNK_BITS:
            raise InvalidParamsError(
                f"chunk_bits must be one of {_VALID_CHUNK_BITS}, got {self.chunk_bits}"
            )

    @property
    def chunk_bytes(self) -> int:
        return self.chunk_bits // 8


def chunk_index_of(abs_index: int, cfg: ChunkConfig) -> int:
    """Index of the chunk holding an absolute bit position."""
    return abs_index // cfg.chunk_bits


def _iter_bits(value: int, base: int) -> Iterator[int]:
    while value:
        low = value & -value
        yield base + low.bit_length() - 1
        value ^= low


class PlainBitVector:
    """Full-universe bit vector covering absolute indices 1..total."""

    __slots__ = ("cfg", "total", "num_chunks", "value")

    def __init__(self, total: int, cfg: ChunkConfig):
        self.cfg = cfg
        self.total = total
        self.num_chunks = 0 if total == 0 else chunk_index_of(total, cfg) + 1
        self.value = 0

    def set(self, abs_index: int) -> bool:
        bit = 1 << abs_index
        if self.value & bit:
            return False
        self.value |= bit
        return True

    def get(self, abs_index: int) -> bool:
        return bool(self.value >> abs_index & 1)

    def or_with(self, other: "PlainBitVector") -> bool:
        if other.cfg != self.cfg:
            raise ConfigMismatchError("chunk widths differ")
        new = self.value | other.value
        if new == self.value:
            return False
        self.value = new
        return True

    def count(self) -> int:
        return self.value.bit_count()

    def iterate(self) -> Iterator[int]:
        return _iter_bits(self.value, 0)


class RangedBitVector:
    """Bit vector over one interval, stored relative to a chunk-aligned base.

    Positions within the allocated chunks but outside the interval (slack)
    can only become set through chunk-wise union, never through set().
    """

    __slots__ = ("cfg", "interval", "aligned_lower", "num_chunks", "interval_mask", "value")

    def __init__(self, interval: Interval, cfg: ChunkConfig):
        self.cfg = cfg
        self.interval = interval
        if interval.empty:
            self.aligned_lower = 0
            self.num_chunks = 0
            self.interval_mask = 0
        else:
            cb = cfg.chunk_bits
            self.aligned_lower = (interval.lower // cb) * cb
            self.num_chunks = (
                chunk_index_of(interval.upper, cfg)
                - chunk_index_of(interval.lower, cfg)
                + 1
            )
            self.interval_mask = ((1 << (interval.upper - interval.lower + 1)) - 1) << (
                interval.lower - self.aligned_lower
            )
        self.value = 0  # bit p holds absolute index aligned_lower + p

    @property
    def span_end(self) -> int:
        """Last absolute index covered by the allocated chunks."""
        return self.aligned_lower + self.num_chunks * self.cfg.chunk_bits - 1

    def set(self, abs_index: int) -> bool:
        """Insert with strict interval filtering; no-op outside the interval."""
        if not self.interval.contains(abs_index):
            return False
        bit = 1 << (abs_index - self.aligned_lower)
        if self.value & bit:
            return False
        self.value |= bit
        return True

    def get(self, abs_index: int) -> bool:
        if self.num_chunks == 0 or not (self.aligned_lower <= abs_index <= self.span_end):
            return False
        return bool(self.value >> (abs_index - self.aligned_lower) & 1)

    def or_with(self, other: "RangedBitVector") -> bool:
        """Chunk-wise union of the nested portion of other into self.

        The source contributes only its in-interval bits (trimming costs one
        mask of the two partial end chunks), so slack admitted into other is
        never re-exported; new slack in self comes only from self's own chunk
        misalignment.  Returns True iff self changed.  When neither interval
        nests inside the other, nothing happens and False is returned;
        callers that need full coverage must try every vector pair.
        """
        if other.cfg != self.cfg:
            raise ConfigMismatchError("chunk widths differ")
        if self.num_chunks == 0 or other.num_chunks == 0:
            return False
        src = other.value & other.interval_mask
        x, y = self.interval, other.interval
        if y.lower >= x.lower and y.upper <= x.upper:
            # other nests inside self: all of other's chunks land in self
            incoming = src << (other.aligned_lower - self.aligned_lower)
        elif x.lower >= y.lower and x.upper <= y.upper:
            # self nests inside other: take other's chunks overlapping self
            window = (1 << (self.num_chunks * self.cfg.chunk_bits)) - 1
            incoming = (src >> (self.aligned_lower - other.aligned_lower)) & window
        else:
            return False
        new = self.value | incoming
        if new == self.value:
            return False
        self.value = new
        return True

    def or_overlapping(self, other: "RangedBitVector") -> bool:
        """Chunk-wise union over the intersection of the two aligned spans.

        Coincides with or_with when one interval nests inside the other,
        but also transfers the common chunks of partially overlapping
        intervals (which arise for merged interface intervals).  As with
        or_with, the source is trimmed to its interval first."""
        if other.cfg != self.cfg:
            raise ConfigMismatchError("chunk widths differ")
        if self.num_chunks == 0 or other.num_chunks == 0:
            return False
        lo = max(self.aligned_lower, other.aligned_lower)
        hi = min(self.span_end, other.span_end)
        if lo > hi:
            return False
        window = (1 << (hi - lo + 1)) - 1
        src = other.value & other.interval_mask
        incoming = ((src >> (lo - other.aligned_lower)) & window) << (
            lo - self.aligned_lower
        )
        new = self.value | incoming
        if new == self.value:
            return False
        self.value = new
        return True

    def set_raw(self, abs_index: int) -> bool:
        """Set a bit anywhere in the allocated chunks, slack included.

        Used when migrating members that were already admitted through
        chunk-wise unions; ordinary insertion goes through set()."""
        if self.num_chunks == 0 or not (self.aligned_lower <= abs_index <= self.span_end):
            return False
        bit = 1 << (abs_index - self.aligned_lower)
        if self.value & bit:
            return False
        self.value |= bit
        return True

    def count(self) -> int:
        return self.value.bit_count()

    def iterate(self) -> Iterator[int]:
        """All set bits (slack included) as ascending absolute indices."""
        return _iter_bits(self.value, self.aligned_lower)
