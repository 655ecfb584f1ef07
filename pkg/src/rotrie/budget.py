"""Budget rotated trie: a rotated trie on ``O(log n log log n)`` random bits.

Differences from :class:`~rotrie.rotated.RotatedTrie`:

* fanout ``f = 2**ceil(log2(n) / 4)``;
* a subtree is kept in a capacity-``ell`` proxy map until it reaches ``ell``
  keys, and only then gets a real node, so there are at most ``n / ell``
  nodes;
* a ball ``(s, c)`` goes to bin ``((c + a_s) mod f) * (n/f) + b_s`` with
  ``a_s = g(s)`` from a ``k``-wise independent family and ``b_s = h(s)`` from a
  load-balancing family.  Both are drawn once, at construction.

A *slot* (the root pointer or a ball above the last level) is either a proxy
or a proxy plus a node (the dual state).  Keys that entered the proxy before
the node existed stay there, so lookups check the proxy first.
"""

from __future__ import annotations

import math
from functools import partial
from typing import Dict, Iterator, List, Optional, Tuple

from .hashkit import KWiseHash, LoadBalancingHash, PrimeProductHash, pph_new
from .randomness import RandomTape
from .rotated import FailureKind, RecordStore, is_power_of_two
from .smallmaps import BinOverflow, BoundedDict, LazyArray, default_ell

# bt_bits_used(n) <= BUDGET_BIT_CONSTANT * log2(n) * log2(log2(n)) with k = 8
BUDGET_BIT_CONSTANT = 12
DEFAULT_K = 8


def psi(a_s: int, b_s: int, c: int, n: int, f: int) -> int:
    """Bin of child ``c`` of a node with group offset ``a_s`` and in-group slot ``b_s``."""
    return ((c + a_s) % f) * (n // f) + b_s


def budget_fanout(n: int) -> int:
    return 1 << math.ceil((n.bit_length() - 1) / 4)


class Slot:
    """Proxy map, plus the materialized node id once the proxy filled up."""

    __slots__ = ("proxy", "node")

    def __init__(self, proxy: BoundedDict, node: int = -1):
        self.proxy = proxy
        self.node = node

    @property
    def state(self) -> str:
        return "proxy" if self.node < 0 else "dual"


class BudgetTrie:
    """Dictionary on ``key_bits``-bit keys, capacity ``n`` (a power of two >= 16).

    ``g`` and ``h`` may be passed in to share randomness between instances;
    otherwise they are drawn from forks of ``tape``.  :attr:`bits_used` is
    the structure's whole random-bit consumption.
    """

    def __init__(
        self,
        n: int,
        tape: Optional[RandomTape] = None,
        *,
        ell: Optional[int] = None,
        key_bits: Optional[int] = None,
        value_bits: Optional[int] = None,
        k: int = DEFAULT_K,
        g: Optional[KWiseHash] = None,
        h: Optional[LoadBalancingHash] = None,
    ):
        if not is_power_of_two(n) or n < 16:
            raise ValueError("capacity n must be a power of two >= 16")
        self.n = n
        self.f = budget_fanout(n)
        self.group_size = n // self.f
        self.digit_bits = self.f.bit_length() - 1
        log_n = n.bit_length() - 1
        want = 2 * log_n if key_bits is None else key_bits
        self.key_bits = self.digit_bits * math.ceil(want / self.digit_bits)
        self.depth = self.key_bits // self.digit_bits
        self.value_bits = 2 * log_n if value_bits is None else value_bits
        self.ell = default_ell(n) if ell is None else ell
        tape = RandomTape() if tape is None else tape
        self.tape = tape
        self.g = g if g is not None else KWiseHash.draw(tape.fork("g"), k, n, self.f)
        self.h = h if h is not None else LoadBalancingHash.draw(tape.fork("h"), self.group_size, domain=n)
        self._bins = LazyArray(n)
        self._new_bin = partial(BoundedDict, self.ell)
        self._a: list = []
        self._b: list = []
        self._root: Optional[Slot] = None
        self.records = RecordStore()
        self._side: dict = {}
        self.failure: Optional[FailureKind] = None
        self.failure_count = 0
        self.probes = 0
        self.balls = 0
        self.proxy_entries = 0
        self._max_load = 0
        self._groups: Dict[int, int] = {}
        self.materializations: List[Tuple[int, int, int]] = []
        self._key_limit = 1 << self.key_bits

    # -- helpers -----------------------------------------------------------

    @property
    def bits_used(self) -> int:
        return self.g.bits_used + self.h.bits_used

    @property
    def node_count(self) -> int:
        return len(self._a)

    def node_params(self, x: int) -> Tuple[int, int]:
        return self._a[x], self._b[x]

    def _fail(self, kind: FailureKind) -> None:
        self.failure_count += 1
        if self.failure is None:
            self.failure = kind

    def _check_key(self, key: int) -> None:
        if not 0 <= key < self._key_limit:
            raise ValueError(f"key {key!r} outside [0, 2**{self.key_bits})")

    def _new_proxy(self) -> BoundedDict:
        return BoundedDict(self.ell)

    def _materialize(self, level: int, proxy_size: int) -> int:
        x = len(self._a)
        if x >= self.n:
            self._fail(FailureKind.ALLOCATOR)
        # evaluating h costs O(sum of level independences); done once per node
        self._a.append(self.g(x % self.n))
        self._b.append(self.h(x % self.n))
        self.materializations.append((x, level, proxy_size))
        return x

    # -- operations --------------------------------------------------------

    def insert(self, key: int, value, *, strict: bool = False) -> bool:
        """Store ``key -> value``.

        Returns False if a bin overflowed; the key is then kept in the side
        log.  With ``strict=True`` the overflow raises
        :class:`~rotrie.smallmaps.BinOverflow` and nothing is stored.
        """
        self._check_key(key)
        records = self.records
        if self.failure is not None:
            idx = self._side.get(key)
            if idx is not None:
                records.revive(idx, value)
                return False
        slot = self._root
        if slot is None:
            slot = self._root = Slot(self._new_proxy())
        ell = self.ell
        fmask = self.f - 1
        gsize = self.group_size
        w = self.digit_bits
        shift = self.key_bits - w
        last = self.depth - 1
        level = 0
        probes = 0
        bins = self._bins
        where, stack, vals = bins._where, bins._stack, bins._values
        # a walk that creates a bin ends there, so the stack top is fixed
        top = len(stack)
        a, b = self._a, self._b
        while True:
            proxy = slot.proxy
            probes += 1
            idx = proxy.get(key)
            if idx is not None:
                records.revive(idx, value)
                break
            x = slot.node
            if x < 0:
                proxy.insert(key, records.append(key, value))
                self.proxy_entries += 1
                if len(proxy._entries) >= ell:
                    slot.node = self._materialize(level, len(proxy._entries))
                break
            c = (key >> shift) & fmask
            shift -= w
            group = (c + a[x]) & fmask
            j = group * gsize + b[x]
            p = where[j]
            if 0 <= p < top and stack[p] == j:
                bin_ = vals[p]
            else:
                bin_ = bins.get_or_create(j, self._new_bin)
            probes += 1
            ball = bin_.get(x)
            if ball is None:
                if len(bin_._entries) >= ell:
                    self.probes += probes
                    if strict:
                        self.failure_count += 1
                        raise BinOverflow(key)
                    self._fail(FailureKind.BIN_OVERFLOW)
                    self._side[key] = records.append(key, value)
                    return False
                if level == last:
                    ball = records.append(key, value)
                else:
                    ball = Slot(self._new_proxy())
                    ball.proxy.insert(key, records.append(key, value))
                    self.proxy_entries += 1
                bin_.insert(x, ball)
                self.balls += 1
                self._groups[group] = self._groups.get(group, 0) + 1
                if len(bin_._entries) > self._max_load:
                    self._max_load = len(bin_._entries)
                if level != last and ell <= 1:
                    ball.node = self._materialize(level + 1, 1)
                break
            if level == last:
                records.revive(ball, value)
                break
            slot = ball
            level += 1
        self.probes += probes
        return True

    def _locate(self, key: int) -> int:
        slot = self._root
        fmask = self.f - 1
        gsize = self.group_size
        w = self.digit_bits
        shift = self.key_bits - w
        last = self.depth - 1
        level = 0
        probes = 0
        # bins.get inlined: this loop dominates query cost
        bins = self._bins
        where, stack, vals = bins._where, bins._stack, bins._values
        top = len(stack)
        a, b = self._a, self._b
        found = -1
        while slot is not None:
            probes += 1
            idx = slot.proxy.get(key)
            if idx is not None:
                found = idx
                break
            x = slot.node
            if x < 0:
                break
            c = (key >> shift) & fmask
            shift -= w
            j = ((c + a[x]) & fmask) * gsize + b[x]
            p = where[j]
            probes += 1
            if not (0 <= p < top and stack[p] == j):
                break
            ball = vals[p].get(x)
            if ball is None:
                break
            if level == last:
                found = ball
                break
            slot = ball
            level += 1
        self.probes += probes
        if found < 0 and self.failure is not None:
            self.probes += 1
            return self._side.get(key, -1)
        return found

    def query(self, key: int, default=None):
        self._check_key(key)
        idx = self._locate(key)
        if idx >= 0 and self.records.live[idx]:
            return self.records.values[idx]
        return default

    def delete(self, key: int) -> bool:
        self._check_key(key)
        idx = self._locate(key)
        if idx < 0:
            return False
        return self.records.kill(idx)

    def __len__(self) -> int:
        return self.records.live_count

    def items(self) -> Iterator[Tuple[int, object]]:
        r = self.records
        for i in range(len(r)):
            if r.live[i]:
                yield r.keys[i], r.values[i]

    # -- inspection --------------------------------------------------------

    def max_load(self) -> int:
        return self._max_load

    def group_census(self) -> List[int]:
        """Number of balls in each of the ``f`` bin groups."""
        return [self._groups.get(i, 0) for i in range(self.f)]

    def bin_loads(self) -> Iterator[Tuple[int, int]]:
        for j, b in self._bins.touched():
            yield j, len(b)

    def balls_by_group(self) -> Iterator[Tuple[int, int]]:
        """(group, source node) for every ball; used by audits."""
        for j, b in self._bins.touched():
            for s in b:
                yield j // self.group_size, s

    def space_bits(self) -> int:
        """Bits used by the structure, counting every word at its logical width.

        The bin array is charged in full (one ``log2 n``-bit back-reference per
        bin) even though most of it is never initialized.
        """
        word = self.n.bit_length()
        rec = len(self.records)
        ptr = max(1, rec.bit_length())
        touched = len(self._bins._stack)
        return (
            self.n * word  # sparse back-references
            + touched * 2 * word  # dense stack + bin handle
            + self.balls * (word + ptr)  # source id + payload pointer
            + self.proxy_entries * (self.key_bits + ptr)
            + rec * (self.key_bits + self.value_bits + 1)
            + len(self._a) * 2 * word  # cached (a_s, b_s)
            + len(self._side) * (self.key_bits + ptr)
        )

    def __repr__(self) -> str:
        return f"BudgetTrie(n={self.n}, f={self.f}, depth={self.depth}, size={len(self)}, nodes={self.node_count})"


def bt_new(n: int, tape: RandomTape) -> BudgetTrie:
    return BudgetTrie(n, tape)


def budget_bit_bound(n: int) -> float:
    ln = math.log2(n)
    return BUDGET_BIT_CONSTANT * ln * math.log2(ln)


class LargeUniverseBudgetTrie:
    """Budget trie for ``u``-bit keys behind a prime-product universe reduction.

    Keys are reduced with ``x mod p_1 ... p_{c*c}`` and the reduced key indexes
    a :class:`BudgetTrie` whose values point at full ``(key, value)``
    records, so every answer is checked against the full key.  A second live
    key with the same image is a collision failure; it is kept in a side log.
    """

    def __init__(self, n: int, u: int, c: int = 2, tape: Optional[RandomTape] = None,
                 *, reducer: Optional[PrimeProductHash] = None, **trie_kwargs):
        tape = RandomTape() if tape is None else tape
        self.n = n
        self.u = u
        self.c = c
        self.tape = tape
        self.reducer = reducer if reducer is not None else pph_new(tape.fork("universe"), n, u, c)
        self.inner = BudgetTrie(n, tape.fork("trie"), key_bits=self.reducer.output_bits, **trie_kwargs)
        self.records = RecordStore()
        self._side: dict = {}
        self.failure: Optional[FailureKind] = None
        self.failure_count = 0
        self._side_probes = 0
        self._key_limit = 1 << u

    @property
    def bits_used(self) -> int:
        return self.reducer.bits_used + self.inner.bits_used

    @property
    def probes(self) -> int:
        return self.inner.probes + self._side_probes

    def _check_key(self, key: int) -> None:
        if not 0 <= key < self._key_limit:
            raise ValueError(f"key {key!r} outside [0, 2**{self.u})")

    def _find(self, key: int) -> Tuple[int, int]:
        """(record index or -1, inner-trie record holding the reduced key or -1)."""
        hk = self.reducer(key)
        idx = self.inner.query(hk)
        if idx is not None and self.records.keys[idx] == key:
            return idx, idx
        if self.failure is not None:
            self._side_probes += 1
            return self._side.get(key, -1), -1 if idx is None else idx
        return -1, -1 if idx is None else idx

    def insert(self, key: int, value) -> bool:
        self._check_key(key)
        idx, occupant = self._find(key)
        records = self.records
        if idx >= 0:
            records.revive(idx, value)
            return True
        if occupant >= 0 and records.live[occupant]:
            if self.failure is None:
                self.failure = FailureKind.COLLISION
            self.failure_count += 1
            self._side[key] = records.append(key, value)
            return False
        ok = self.inner.insert(self.reducer(key), records.append(key, value))
        if not ok and self.failure is None:
            self.failure = self.inner.failure
        return ok

    def query(self, key: int, default=None):
        self._check_key(key)
        idx, _ = self._find(key)
        if idx >= 0 and self.records.live[idx]:
            return self.records.values[idx]
        return default

    def delete(self, key: int) -> bool:
        self._check_key(key)
        idx, _ = self._find(key)
        if idx < 0 or not self.records.kill(idx):
            return False
        if self._side.get(key) == idx:
            del self._side[key]
        else:
            self.inner.delete(self.reducer(key))
        return True

    def __len__(self) -> int:
        return self.records.live_count

    def items(self) -> Iterator[Tuple[int, object]]:
        r = self.records
        for i in range(len(r)):
            if r.live[i]:
                yield r.keys[i], r.values[i]

    def max_load(self) -> int:
        return self.inner.max_load()


def bt_large_universe_new(n: int, u: int, c: int, tape: RandomTape) -> LargeUniverseBudgetTrie:
    return LargeUniverseBudgetTrie(n, u, c, tape)
