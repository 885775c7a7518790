"""Points-to set representations behind one mutation/query contract.

Seven kinds share the contract: a naive hash-set oracle, a pure masked
bit-vector, Spark-style hybrid (16 inline slots, then pure), Heintze-style
shared base + overflow list, GCC/LLVM-style sparse bitmaps, the ranged set
(one ranged vector per interval of the owner type) and its hybrid variant.

Memory accounting is a deterministic model, not process measurement:
16 bytes per object header, 16 per array header, 8 per reference slot,
chunk_bits/8 bytes per chunk.  Shared bases are counted once per distinct
interned base across a whole solution.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Iterable, Iterator, Optional

from .bitsets import ChunkConfig, PlainBitVector, RangedBitVector, _iter_bits
from .errors import (
    ConfigMismatchError,
    IndexOutOfRangeError,
    UnsupportedKindError,
)
from .hierarchy import (
    ClassHierarchy,
    Interval,
    NumberingResult,
    TypeRef,
    build_type_mask,
    intervals_of,
)

OBJECT_HEADER = 16
ARRAY_HEADER = 16
REF_BYTES = 8

HYBRID_INLINE_CAP = 16
SHARED_OVERFLOW_CAP = 20
SPARSE_ELEMENT_WORDS = 8

SET_KINDS = ("naive", "pure", "hybrid", "shared", "sparse", "ranged", "ranged-hybrid")
RANGED_KINDS = ("ranged", "ranged-hybrid")


class SetFactory:
    """Builds sets over one numbering/chunk configuration and caches the
    per-type masks, merged intervals and interned shared bases."""

    def __init__(self, nr: NumberingResult, cfg: ChunkConfig = ChunkConfig()):
        self.nr = nr
        self.h: ClassHierarchy = nr.hierarchy
        self.cfg = cfg
        self.total = nr.total_allocs
        self._masks: dict[str, int] = {}
        self._intervals: dict[str, tuple[Interval, ...]] = {}
        self._interned_bases: dict[int, int] = {}

    def mask_bits(self, type_name: str) -> int:
        m = self._masks.get(type_name)
        if m is None:
            m = build_type_mask(self.nr, self.h, type_name).bits
            self._masks[type_name] = m
        return m

    def intervals(self, type_name: str) -> tuple[Interval, ...]:
        ivs = self._intervals.get(type_name)
        if ivs is None:
            ivs = tuple(
                iv for iv in intervals_of(self.nr, self.h, type_name) if not iv.empty
            )
            self._intervals[type_name] = ivs
        return ivs

    def intern_base(self, value: int) -> int:
        return self._interned_bases.setdefault(value, value)

    def make_set(self, kind: str, owner) -> "PointsToSet":
        owner_t = self.h.lookup(owner.name if isinstance(owner, TypeRef) else owner)
        if kind == "naive":
            return NaiveSet(self, owner_t)
        if kind == "pure":
            return PureBitVectorSet(self, owner_t)
        if kind == "hybrid":
            return HybridSet(self, owner_t)
        if kind == "shared":
            return SharedBitVectorSet(self, owner_t)
        if kind == "sparse":
            return SparseBitmapSet(self, owner_t)
        if kind == "ranged":
            return RangedPointsToSet(self, owner_t)
        if kind == "ranged-hybrid":
            return HybridRangedPointsToSet(self, owner_t)
        raise UnsupportedKindError(f"unknown set kind: {kind}")

    def total_footprint(self, sets: Iterable["PointsToSet"]) -> int:
        """Sum of modeled set sizes plus each distinct shared base once."""
        total = 0
        bases: set[int] = set()
        universe_chunks = 0 if self.total == 0 else self.total // self.cfg.chunk_bits + 1
        base_cost = ARRAY_HEADER + universe_chunks * self.cfg.chunk_bytes
        for s in sets:
            total += s.footprint_bytes()
            if isinstance(s, SharedBitVectorSet):
                bases.add(s.base)
        total += len(bases) * base_cost
        return total


class PointsToSet:
    kind = "abstract"

    def __init__(self, factory: SetFactory, owner: TypeRef):
        self.factory = factory
        self.owner = owner

    def _check_index(self, idx: int):
        if not 1 <= idx <= self.factory.total:
            raise IndexOutOfRangeError(
                f"alloc index {idx} outside [1, {self.factory.total}]"
            )

    def _check_universe(self, src: "PointsToSet"):
        if src.factory.nr is not self.factory.nr:
            raise ConfigMismatchError("sets built over different numberings")
        if src.factory.cfg != self.factory.cfg:
            raise ConfigMismatchError("chunk widths differ")

    def add(self, idx: int) -> bool:
        raise NotImplementedError

    def add_all(self, src: "PointsToSet") -> bool:
        """Generic element-wise path; subclasses add same-kind bulk paths."""
        self._check_universe(src)
        changed = False
        for i in src.iterate():
            if self.add(i):
                changed = True
        return changed

    def __contains__(self, idx: int) -> bool:
        raise NotImplementedError

    def __len__(self) -> int:
        raise NotImplementedError

    def iterate(self) -> Iterator[int]:
        raise NotImplementedError

    def iterate_objects(self) -> Iterator[int]:
        """Members interpreted as real objects of the owner's type.

        For exactly filtered kinds this is iterate(); ranged kinds skip
        slack bits so a falsely included index is never dereferenced."""
        return self.iterate()

    def contains_object(self, idx: int) -> bool:
        """Membership under the iterate_objects interpretation."""
        return idx in self

    def footprint_bytes(self) -> int:
        raise NotImplementedError


class NaiveSet(PointsToSet):
    """Exactly filtered hash-set; the oracle the other kinds are checked
    against."""

    kind = "naive"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.members: set[int] = set()
        self._mask = factory.mask_bits(owner.name)

    def add(self, idx):
        self._check_index(idx)
        if not self._mask >> idx & 1 or idx in self.members:
            return False
        self.members.add(idx)
        return True

    def add_all(self, src):
        self._check_universe(src)
        if isinstance(src, NaiveSet):
            new = {i for i in src.members if self._mask >> i & 1} - self.members
            if not new:
                return False
            self.members |= new
            return True
        return super().add_all(src)

    def __contains__(self, idx):
        return idx in self.members

    def __len__(self):
        return len(self.members)

    def iterate(self):
        return iter(sorted(self.members))

    def footprint_bytes(self):
        return OBJECT_HEADER + len(self.members) * REF_BYTES


class PureBitVectorSet(PointsToSet):
    """Full-universe bit vector, filtered by ANDing with the owner's type
    mask on every union."""

    kind = "pure"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.bits = PlainBitVector(factory.total, factory.cfg)
        self.mask = factory.mask_bits(owner.name)

    def add(self, idx):
        self._check_index(idx)
        if not self.mask >> idx & 1:
            return False
        return self.bits.set(idx)

    def add_all(self, src):
        self._check_universe(src)
        incoming = _raw_bits_of(src)
        if incoming is None:
            return super().add_all(src)
        new = self.bits.value | (incoming & self.mask)
        if new == self.bits.value:
            return False
        self.bits.value = new
        return True

    def __contains__(self, idx):
        return self.bits.get(idx)

    def __len__(self):
        return self.bits.count()

    def iterate(self):
        return self.bits.iterate()

    def footprint_bytes(self):
        return (
            OBJECT_HEADER
            + ARRAY_HEADER
            + self.bits.num_chunks * self.factory.cfg.chunk_bytes
        )


def _raw_bits_of(s: PointsToSet) -> Optional[int]:
    """Members of s as a full-universe int, for masked bulk unions.

    Returns None when s has no cheap bit-level view."""
    if isinstance(s, PureBitVectorSet):
        return s.bits.value
    if isinstance(s, SharedBitVectorSet):
        v = s.base
        for i in s.overflow:
            v |= 1 << i
        return v
    if isinstance(s, SparseBitmapSet):
        eb = s.element_bits
        v = 0
        for e, block in s.blocks.items():
            v |= block << (e * eb)
        return v
    if isinstance(s, NaiveSet):
        v = 0
        for i in s.members:
            v |= 1 << i
        return v
    if isinstance(s, (HybridSet, HybridRangedPointsToSet)):
        if s.overflow is not None:
            return _raw_bits_of(s.overflow)
        v = 0
        for i in s.inline:
            v |= 1 << i
        return v
    if isinstance(s, RangedPointsToSet):
        v = 0
        for vec in s.vectors:
            v |= vec.value << vec.aligned_lower
        return v
    return None


class HybridSet(PointsToSet):
    """Up to 16 members inline; becomes a pure bit-vector set on the 17th."""

    kind = "hybrid"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.inline: list[int] = []
        self.overflow: Optional[PureBitVectorSet] = None
        self._mask = factory.mask_bits(owner.name)

    def _overflow_to(self) -> PureBitVectorSet:
        return PureBitVectorSet(self.factory, self.owner)

    def add(self, idx):
        self._check_index(idx)
        if not self._mask >> idx & 1:
            return False
        if self.overflow is not None:
            return self.overflow.add(idx)
        if idx in self.inline:
            return False
        if len(self.inline) < HYBRID_INLINE_CAP:
            self.inline.append(idx)
            return True
        self._spill()
        return self.overflow.add(idx)

    def _spill(self):
        self.overflow = self._overflow_to()
        for i in self.inline:
            self.overflow.add(i)
        self.inline = []

    def add_all(self, src):
        self._check_universe(src)
        if self.overflow is not None and type(src) is type(self) and src.overflow is not None:
            return self.overflow.add_all(src.overflow)
        return super().add_all(src)

    def __contains__(self, idx):
        if self.overflow is not None:
            return idx in self.overflow
        return idx in self.inline

    def __len__(self):
        if self.overflow is not None:
            return len(self.overflow)
        return len(self.inline)

    def iterate(self):
        if self.overflow is not None:
            return self.overflow.iterate()
        return iter(sorted(self.inline))

    def footprint_bytes(self):
        base = OBJECT_HEADER + HYBRID_INLINE_CAP * REF_BYTES
        if self.overflow is not None:
            base += REF_BYTES + self.overflow.footprint_bytes()
        return base


class SharedBitVectorSet(PointsToSet):
    """Immutable interned base vector plus a small overflow list.

    When the overflow would exceed 20 members, base and overflow are folded
    into a new canonical base and interned in a content-keyed table."""

    kind = "shared"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.base: int = factory.intern_base(0)
        self.overflow: list[int] = []
        self._mask = factory.mask_bits(owner.name)

    def add(self, idx):
        self._check_index(idx)
        if not self._mask >> idx & 1:
            return False
        if self.base >> idx & 1 or idx in self.overflow:
            return False
        self.overflow.append(idx)
        if len(self.overflow) > SHARED_OVERFLOW_CAP:
            folded = self.base
            for i in self.overflow:
                folded |= 1 << i
            self.base = self.factory.intern_base(folded)
            self.overflow = []
        return True

    def __contains__(self, idx):
        return bool(self.base >> idx & 1) or idx in self.overflow

    def __len__(self):
        return self.base.bit_count() + len(self.overflow)

    def iterate(self):
        v = self.base
        for i in self.overflow:
            v |= 1 << i
        return _iter_bits(v, 0)

    def footprint_bytes(self):
        # base is shared; SetFactory.total_footprint charges it once
        return OBJECT_HEADER + REF_BYTES + len(self.overflow) * REF_BYTES


class SparseBitmapSet(PointsToSet):
    """Ordered sequence of eight-word bit blocks, allocated only where at
    least one bit is set."""

    kind = "sparse"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.element_bits = SPARSE_ELEMENT_WORDS * factory.cfg.chunk_bits
        self.blocks: dict[int, int] = {}
        self._mask = factory.mask_bits(owner.name)

    def add(self, idx):
        self._check_index(idx)
        if not self._mask >> idx & 1:
            return False
        e, off = divmod(idx, self.element_bits)
        bit = 1 << off
        cur = self.blocks.get(e, 0)
        if cur & bit:
            return False
        self.blocks[e] = cur | bit
        return True

    def add_all(self, src):
        self._check_universe(src)
        if isinstance(src, SparseBitmapSet) and src.element_bits == self.element_bits:
            changed = False
            eb = self.element_bits
            for e, block in src.blocks.items():
                allowed = block & (self._mask >> (e * eb)) & ((1 << eb) - 1)
                if not allowed:
                    continue
                cur = self.blocks.get(e, 0)
                new = cur | allowed
                if new != cur:
                    self.blocks[e] = new
                    changed = True
            return changed
        return super().add_all(src)

    def __contains__(self, idx):
        e, off = divmod(idx, self.element_bits)
        return bool(self.blocks.get(e, 0) >> off & 1)

    def __len__(self):
        return sum(b.bit_count() for b in self.blocks.values())

    def iterate(self):
        for e in sorted(self.blocks):
            yield from _iter_bits(self.blocks[e], e * self.element_bits)

    def footprint_bytes(self):
        per_element = (
            OBJECT_HEADER
            + SPARSE_ELEMENT_WORDS * self.factory.cfg.chunk_bytes
            + REF_BYTES  # next link
        )
        return OBJECT_HEADER + len(self.blocks) * per_element


class RangedPointsToSet(PointsToSet):
    """One ranged bit vector per (non-empty, merged) interval of the owner
    type; single insertions filter at the interval, bulk unions at chunk
    granularity."""

    kind = "ranged"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.vectors = [
            RangedBitVector(iv, factory.cfg) for iv in factory.intervals(owner.name)
        ]
        self._lowers = [v.interval.lower for v in self.vectors]

    def _route(self, idx) -> Optional[RangedBitVector]:
        pos = bisect_right(self._lowers, idx) - 1
        if pos >= 0 and self.vectors[pos].interval.contains(idx):
            return self.vectors[pos]
        return None

    def add(self, idx):
        self._check_index(idx)
        v = self._route(idx)
        if v is None:
            return False
        return v.set(idx)

    def _set_raw(self, idx) -> bool:
        """Place an already-admitted member (possibly slack) by span.

        An in-interval home takes priority: a member stored as slack of a
        neighboring vector would not survive re-export, since unions trim
        the source to its interval."""
        v = self._route(idx)
        if v is not None:
            return v.set(idx)
        for v in self.vectors:
            if v.set_raw(idx):
                return True
        return False

    def add_all(self, src):
        self._check_universe(src)
        if isinstance(src, HybridRangedPointsToSet):
            if src.overflow is not None:
                src = src.overflow
            else:
                src = src._as_ranged()
        if isinstance(src, RangedPointsToSet):
            # merged interface intervals may partially overlap other
            # intervals, so the union windows on span intersections
            changed = False
            for bv in self.vectors:
                for bw in src.vectors:
                    if bv.or_overlapping(bw):
                        changed = True
            return changed
        return super().add_all(src)

    def _combined(self) -> int:
        v = 0
        for vec in self.vectors:
            v |= vec.value << vec.aligned_lower
        return v

    def __contains__(self, idx):
        return any(v.get(idx) for v in self.vectors)

    def contains_object(self, idx):
        v = self._route(idx)
        return v is not None and v.get(idx)

    def __len__(self):
        # aligned spans of distinct vectors may share a chunk; dedupe
        return self._combined().bit_count()

    def iterate(self):
        return _iter_bits(self._combined(), 0)

    def iterate_objects(self):
        v = 0
        for vec in self.vectors:
            v |= (vec.value & vec.interval_mask) << vec.aligned_lower
        return _iter_bits(v, 0)

    def footprint_bytes(self):
        cb = self.factory.cfg.chunk_bytes
        return OBJECT_HEADER + sum(
            ARRAY_HEADER + v.num_chunks * cb for v in self.vectors
        )


class HybridRangedPointsToSet(PointsToSet):
    """Up to 16 members inline; becomes a ranged set on the 17th.  Inline
    insertions use the same strict interval filter as the ranged vectors."""

    kind = "ranged-hybrid"

    def __init__(self, factory, owner):
        super().__init__(factory, owner)
        self.inline: list[int] = []
        self.overflow: Optional[RangedPointsToSet] = None
        self._intervals = factory.intervals(owner.name)
        self._lowers = [iv.lower for iv in self._intervals]

    def _in_intervals(self, idx) -> bool:
        pos = bisect_right(self._lowers, idx) - 1
        return pos >= 0 and self._intervals[pos].contains(idx)

    def add(self, idx):
        self._check_index(idx)
        if self.overflow is not None:
            return self.overflow.add(idx)
        if not self._in_intervals(idx):
            return False
        if idx in self.inline:
            return False
        if len(self.inline) < HYBRID_INLINE_CAP:
            self.inline.append(idx)
            return True
        self._spill()
        return self.overflow.add(idx)

    def _as_ranged(self) -> "RangedPointsToSet":
        """Inline members rehoused in ranged vectors, slack bits included."""
        r = RangedPointsToSet(self.factory, self.owner)
        for i in self.inline:
            r._set_raw(i)
        return r

    def _spill(self):
        self.overflow = self._as_ranged()
        self.inline = []

    def add_all(self, src):
        self._check_universe(src)
        if self.overflow is not None:
            if isinstance(src, (RangedPointsToSet, HybridRangedPointsToSet)):
                return self.overflow.add_all(src)
            return super().add_all(src)
        if isinstance(src, (RangedPointsToSet, HybridRangedPointsToSet)):
            # emulate the chunk-wise union the overflowed form would do, so
            # membership never depends on whether the set has spilled yet
            tmp = self._as_ranged()
            tmp.add_all(src)
            members = list(tmp.iterate())
            # the changed flag can trip on a duplicate bit landing in a
            # second overlapping vector; only membership growth counts here
            if set(members) == set(self.inline):
                return False
            if len(members) <= HYBRID_INLINE_CAP:
                self.inline = members
            else:
                self.overflow = tmp
                self.inline = []
            return True
        return super().add_all(src)

    def __contains__(self, idx):
        if self.overflow is not None:
            return idx in self.overflow
        return idx in self.inline

    def __len__(self):
        if self.overflow is not None:
            return len(self.overflow)
        return len(self.inline)

    def iterate(self):
        if self.overflow is not None:
            return self.overflow.iterate()
        return iter(sorted(self.inline))

    def iterate_objects(self):
        if self.overflow is not None:
            return self.overflow.iterate_objects()
        return iter(sorted(i for i in self.inline if self._in_intervals(i)))

    def contains_object(self, idx):
        if self.overflow is not None:
            return self.overflow.contains_object(idx)
        return idx in self.inline and self._in_intervals(idx)

    def footprint_bytes(self):
        base = OBJECT_HEADER + HYBRID_INLINE_CAP * REF_BYTES
        if self.overflow is not None:
            base += REF_BYTES + self.overflow.footprint_bytes()
        return base


def sparse_savings(s: PointsToSet, cfg: ChunkConfig) -> int:
    """Bytes a sparse eight-word-element decomposition of s's bit arrays
    would not allocate (all-zero windows), post-propagation."""
    arrays: list[tuple[int, int]] = []  # (num_chunks, value)
    if isinstance(s, PureBitVectorSet):
        arrays.append((s.bits.num_chunks, s.bits.value))
    elif isinstance(s, RangedPointsToSet):
        arrays.extend((v.num_chunks, v.value) for v in s.vectors)
    elif isinstance(s, (HybridSet, HybridRangedPointsToSet)):
        if s.overflow is not None:
            return sparse_savings(s.overflow, cfg)
        return 0
    else:
        raise UnsupportedKindError(
            f"sparse savings undefined for set kind {s.kind!r}"
        )
    element_bits = SPARSE_ELEMENT_WORDS * cfg.chunk_bits
    payload_bytes = SPARSE_ELEMENT_WORDS * cfg.chunk_bytes
    saved = 0
    for num_chunks, value in arrays:
        windows = -(-num_chunks // SPARSE_ELEMENT_WORDS)
        for w in range(windows):
            if not value >> (w * element_bits) & ((1 << element_bits) - 1):
                saved += payload_bytes
    return saved
