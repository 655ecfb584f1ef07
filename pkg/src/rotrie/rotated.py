"""Rotated radix trie.

An ``f``-ary radix trie over fixed-width keys.  Node ``s`` logically owns an
``f``-slot child array; instead of storing it, each child slot ``c`` (a *ball*)
is written into bin ``(c + r_s) mod n`` of one shared array of ``n`` bins,
where ``r_s`` is a uniformly random rotation drawn when node ``s`` is
allocated.  A bin is a :class:`~rotrie.smallmaps.BoundedDict` mapping source
node id to the ball's payload (a child node id, or a leaf record index on the
last level).  Within a node, distinct child slots land in distinct bins, so
the source id alone identifies a ball inside its bin.
"""

from __future__ import annotations

import enum
import math
from functools import partial
from typing import Iterator, Optional, Tuple

from .randomness import RandomTape
from .smallmaps import BinOverflow, BoundedDict, LazyArray, default_ell


class FailureKind(str, enum.Enum):
    NONE = "none"
    BIN_OVERFLOW = "bin-overflow"
    SPACE = "space"
    COLLISION = "collision"
    ALLOCATOR = "allocator"


def phi(r_s: int, c: int, n: int) -> int:
    """Bin of child slot ``c`` of a node with rotation ``r_s``."""
    return (c + r_s) % n


def is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


def default_key_bits(n: int, digit_bits: int) -> int:
    """Smallest multiple of ``digit_bits`` that is at least ``2 log2 n``."""
    want = 2 * max(1, (n - 1).bit_length())
    return digit_bits * math.ceil(want / digit_bits)


class RecordStore:
    """Append-only key/value records with tombstones."""

    __slots__ = ("keys", "values", "live", "live_count")

    def __init__(self):
        self.keys: list = []
        self.values: list = []
        self.live: list = []
        self.live_count = 0

    def append(self, key, value) -> int:
        self.keys.append(key)
        self.values.append(value)
        self.live.append(True)
        self.live_count += 1
        return len(self.keys) - 1

    def revive(self, idx: int, value) -> None:
        self.values[idx] = value
        if not self.live[idx]:
            self.live[idx] = True
            self.live_count += 1

    def kill(self, idx: int) -> bool:
        if self.live[idx]:
            self.live[idx] = False
            self.live_count -= 1
            return True
        return False

    def __len__(self) -> int:
        return len(self.keys)


class RotatedTrie:
    """Dictionary on ``key_bits``-bit keys with capacity ``n``.

    ``f`` defaults to ``n``.  Deletion is by tombstone.  A bin overflow sets
    :attr:`failure` and the affected key is kept in a side log that is
    consulted only after a failure, so answers stay correct.
    """

    # node ids beyond node_budget_factor * n * depth count as allocator failure
    node_budget_factor = 4

    def __init__(
        self,
        n: int,
        f: Optional[int] = None,
        tape: Optional[RandomTape] = None,
        *,
        ell: Optional[int] = None,
        key_bits: Optional[int] = None,
    ):
        if not is_power_of_two(n) or n < 2:
            raise ValueError("capacity n must be a power of two >= 2")
        f = n if f is None else f
        if not is_power_of_two(f) or f < 2 or f > n:
            raise ValueError("fanout f must be a power of two in [2, n]")
        self.n = n
        self.f = f
        self.digit_bits = f.bit_length() - 1
        self.key_bits = default_key_bits(n, self.digit_bits) if key_bits is None else key_bits
        if self.key_bits % self.digit_bits:
            raise ValueError("key_bits must be a multiple of log2(f)")
        self.depth = self.key_bits // self.digit_bits
        self.ell = default_ell(n) if ell is None else ell
        self.tape = RandomTape() if tape is None else tape
        self._rot_bits = n.bit_length() - 1
        self._bins = LazyArray(n)
        self._new_bin = partial(BoundedDict, self.ell)
        self._rot: list = []
        self._root = -1
        self.records = RecordStore()
        self._side: dict = {}
        self.failure: Optional[FailureKind] = None
        self.failure_count = 0
        self.probes = 0
        self.balls = 0
        self._max_load = 0
        self._key_limit = 1 << self.key_bits
        self._node_limit = self.node_budget_factor * n * self.depth

    # -- node allocation ---------------------------------------------------

    def _new_node(self) -> int:
        s = len(self._rot)
        if s >= self._node_limit:
            self._fail(FailureKind.ALLOCATOR)
        self._rot.append(self.tape.draw_bits(self._rot_bits))
        return s

    def rotation(self, s: int) -> int:
        return self._rot[s]

    @property
    def node_count(self) -> int:
        return len(self._rot)

    def _fail(self, kind: FailureKind) -> None:
        self.failure_count += 1
        if self.failure is None:
            self.failure = kind

    def _check_key(self, key: int) -> None:
        if not 0 <= key < self._key_limit:
            raise ValueError(f"key {key!r} outside [0, 2**{self.key_bits})")

    # -- hooks overridden by the amplified variant ---------------------------

    def _place_overflow(self, bin_index: int, s: int, c: int, payload: int) -> bool:
        """A ball did not fit in its bin.  Return True if it was stored elsewhere."""
        return False

    def _find_overflow(self, bin_: BoundedDict, s: int, c: int):
        return None

    # -- operations --------------------------------------------------------

    def insert(self, key: int, value) -> bool:
        """Store ``key -> value``.  Returns False if the operation failed (slow path)."""
        self._check_key(key)
        records = self.records
        if self.failure is not None:
            idx = self._side.get(key)
            if idx is not None:
                records.revive(idx, value)
                return False
        s = self._root
        if s < 0:
            s = self._root = self._new_node()
        rot = self._rot
        bins = self._bins
        fmask = self.f - 1
        nmask = self.n - 1
        w = self.digit_bits
        shift = self.key_bits - w
        last = self.depth - 1
        where, stack, vals = bins._where, bins._stack, bins._values
        # the walk returns as soon as it creates a bin, so the stack top is fixed
        top = len(stack)
        extra = 0
        for level in range(self.depth):
            c = (key >> shift) & fmask
            shift -= w
            j = (c + rot[s]) & nmask
            p = where[j]
            if 0 <= p < top and stack[p] == j:
                bin_ = vals[p]
            else:
                bin_ = bins.get_or_create(j, self._new_bin)
            nxt = bin_.get(s)
            if nxt is None:
                nxt = self._find_overflow(bin_, s, c) if len(bin_._entries) >= self.ell else None
                if nxt is None:
                    self.probes += level + 1 + extra
                    return self._add_ball(bin_, j, s, c, level == last, key, value, shift)
                extra += 1
            if level == last:
                records.revive(nxt, value)
                self.probes += level + 1 + extra
                return True
            s = nxt
        raise AssertionError("unreachable")

    def _add_ball(self, bin_, j, s, c, is_leaf, key, value, shift) -> bool:
        """Attach a new ball (s, c) in bin j, then build the rest of the key's path."""
        w = self.digit_bits
        fmask = self.f - 1
        nmask = self.n - 1
        ell = self.ell
        rot = self._rot
        bins = self._bins
        where, stack, vals = bins._where, bins._stack, bins._values
        draw, rot_bits, node_limit = self.tape.draw_bits, self._rot_bits, self._node_limit
        records = self.records
        probes = 0
        try:
            while True:
                if is_leaf:
                    payload = records.append(key, value)
                else:
                    # _new_node, inlined
                    payload = len(rot)
                    if payload >= node_limit:
                        self._fail(FailureKind.ALLOCATOR)
                    rot.append(draw(rot_bits))
                entries = bin_._entries
                load = len(entries)
                if load < ell:
                    entries[s] = payload
                    self.balls += 1
                    if load >= self._max_load:
                        self._max_load = load + 1
                elif not self._place_overflow(j, s, c, payload):
                    self._fail(FailureKind.BIN_OVERFLOW)
                    if is_leaf:
                        self._side[key] = payload
                    else:
                        self._side[key] = records.append(key, value)
                    return False
                if is_leaf:
                    return True
                s = payload
                c = (key >> shift) & fmask
                is_leaf = shift == 0
                shift -= w
                j = (c + rot[s]) & nmask
                p = where[j]
                if 0 <= p < len(stack) and stack[p] == j:
                    bin_ = vals[p]
                else:
                    bin_ = bins.get_or_create(j, self._new_bin)
                probes += 1
        finally:
            self.probes += probes

    def _locate(self, key: int) -> int:
        """Record index holding ``key`` (live or not), or -1."""
        s = self._root
        if s < 0:
            return self._side.get(key, -1) if self.failure is not None else -1
        rot = self._rot
        bins = self._bins
        fmask = self.f - 1
        nmask = self.n - 1
        w = self.digit_bits
        shift = self.key_bits - w
        # bins.get inlined: this loop dominates query cost
        where, stack, vals = bins._where, bins._stack, bins._values
        top = len(stack)
        probes = 0
        for _ in range(self.depth):
            c = (key >> shift) & fmask
            shift -= w
            j = (c + rot[s]) & nmask
            p = where[j]
            probes += 1
            if not (0 <= p < top and stack[p] == j):
                break
            bin_ = vals[p]
            nxt = bin_.get(s)
            if nxt is None:
                if len(bin_._entries) < self.ell:
                    break
                nxt = self._find_overflow(bin_, s, c)
                probes += 1
                if nxt is None:
                    break
            s = nxt
        else:
            self.probes += probes
            return s
        self.probes += probes
        if self.failure is not None:
            self.probes += 1
            return self._side.get(key, -1)
        return -1

    def query(self, key: int, default=None):
        self._check_key(key)
        idx = self._locate(key)
        if idx >= 0 and self.records.live[idx]:
            return self.records.values[idx]
        return default

    def __contains__(self, key: int) -> bool:
        return self.query(key, _ABSENT) is not _ABSENT

    def delete(self, key: int) -> bool:
        """Tombstone ``key``.  Returns False if it was absent."""
        self._check_key(key)
        idx = self._locate(key)
        if idx < 0:
            return False
        return self.records.kill(idx)

    # -- inspection --------------------------------------------------------

    def max_load(self) -> int:
        return self._max_load

    def bin_loads(self) -> Iterator[Tuple[int, int]]:
        """(bin index, occupancy) for every materialized bin."""
        for j, b in self._bins.touched():
            yield j, len(b)

    def __len__(self) -> int:
        return self.records.live_count

    def items(self) -> Iterator[Tuple[int, object]]:
        r = self.records
        for i in range(len(r)):
            if r.live[i]:
                yield r.keys[i], r.values[i]

    @property
    def bits_used(self) -> int:
        return self.tape.counter

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(n={self.n}, f={self.f}, depth={self.depth}, "
            f"size={len(self)}, failure={self.failure})"
        )


_ABSENT = object()


def rt_new(n: int, f: int, tape: RandomTape) -> RotatedTrie:
    return RotatedTrie(n, f, tape)
