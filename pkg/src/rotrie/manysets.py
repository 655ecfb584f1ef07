"""Many small sets in near-optimal space.

Each set ``S_i`` keeps its records contiguously in a storage array ``B_i``
and a *skeleton* ``A_i``: a :class:`~rotrie.budget.BudgetTrie` mapping a short
hash of each key to its index in ``B_i``.  Sets are classified by their
skeletal size ``a_i`` (``|S_i|`` at the last rebuild) into categories
``j = floor(log2 a_i)``; within a category, sets are spread over ``t_j``
groups that each own one stream of random bits, shared by every set in the
group.  Records that collide under the hash or overflow a skeleton bin, and
all records of sets with ``a_i <= log2(n)**c``, live in a backyard
dictionary instead (and are mirrored in ``B_i``).

Skeleton rebuilds are incremental: a rebuild switches the set to a fresh
skeleton and then moves ``migration_rate`` records per operation on that
set.  Every record carries a locator: the skeleton generation it is indexed
in, or ``YARD``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from .budget import BudgetTrie, budget_fanout
from .hashkit import KWiseHash, LoadBalancingHash, PrimeProductHash
from .lifecycle import PhasedDict
from .randomness import RandomTape
from .rotated import FailureKind
from .smallmaps import BinOverflow

YARD = -1
_UNKNOWN = object()

# group-sum bound: sum of a_i over one group <= GROUP_SUM_CONSTANT * n / t_j
GROUP_SUM_CONSTANT = 4
# random bits of one category <= CATEGORY_BIT_CONSTANT * (log log n)^3 * log(1/p)
CATEGORY_BIT_CONSTANT = 24
# backyard size bounds: |T| <= C_T * n / log log n, per category C_T * n / (log log n)^2
BACKYARD_CONSTANT = 1
# space: sum |S_i| (gamma_i + C_s log|S_i|) + C_s n log n / log log n
SPACE_CONSTANT = 32


def log_inverse_failure(preset: str, n: int) -> float:
    """``log2(1 / p(n))`` for a failure-probability preset.

    ``poly:k`` is ``p(n) = n**-k``; ``subexp:e`` is ``p(n) = exp(-n**(1-e))``.
    """
    kind, _, arg = preset.partition(":")
    try:
        x = float(arg)
    except ValueError:
        raise ValueError(f"bad failure preset {preset!r}") from None
    if kind == "poly":
        if x <= 0:
            raise ValueError("poly exponent must be positive")
        return x * math.log2(n)
    if kind == "subexp":
        if not 0 < x < 1:
            raise ValueError("subexp exponent must lie in (0, 1)")
        return n ** (1 - x) * math.log2(math.e)
    raise ValueError(f"unknown failure preset {preset!r}")


@dataclass(frozen=True)
class ManySetsConfig:
    delta: float = 0.75
    failure: str = "poly:2"
    small_exponent: int = 2
    key_bits: int = 32
    value_bits: int = 32
    migration_rate: int = 4
    enforce_limits: bool = True

    @property
    def eps(self) -> float:
        return self.delta / 2

    def validate(self, n: int) -> None:
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        lp = log_inverse_failure(self.failure, n)
        # exp(-n^(1-eps)) <= p(n) <= 1/polylog(n)
        if lp > n ** (1 - self.eps) * math.log2(math.e) * (1 + 1e-9):
            raise ValueError(f"failure schedule {self.failure!r} is below exp(-n^(1-eps))")
        if lp < math.log2(math.log2(n)):
            raise ValueError(f"failure schedule {self.failure!r} is above 1/polylog(n)")


def group_count(j: int, n: int, failure: str) -> int:
    """``t_j = ceil((log log n)^2 * log(1/p(n)) / j)``."""
    ll = math.log2(math.log2(n))
    return max(1, math.ceil(ll * ll * log_inverse_failure(failure, n) / j - 1e-9))


def skeleton_capacity(j: int) -> int:
    """Budget-trie capacity for category ``j``: room for ``2 * a_i < 2**(j+2)`` keys."""
    return max(16, 1 << (j + 2))


def skeleton_key_bits(j: int) -> int:
    """Hash width for category ``j``: four primes below ``2**(j+1)``."""
    return 4 * (j + 1)


def backyard_bound(n: int, c: float = BACKYARD_CONSTANT) -> float:
    """``C_T * n / log log n``."""
    return c * n / math.log2(math.log2(n))


def category_backyard_bound(n: int, c: float = BACKYARD_CONSTANT) -> float:
    """``C_T * n / (log log n)^2``."""
    return c * n / math.log2(math.log2(n)) ** 2


def category_bit_bound(n: int, failure: str, c: float = CATEGORY_BIT_CONSTANT) -> float:
    """``C * (log log n)^3 * log(1/p(n))``."""
    return c * math.log2(math.log2(n)) ** 3 * log_inverse_failure(failure, n)


class GroupRandomness:
    """The shared hash functions of one group ``(j, k)``."""

    __slots__ = ("j", "k", "label", "reducer", "g", "h", "bits_used")

    def __init__(self, j: int, k: int, tape: RandomTape):
        self.j = j
        self.k = k
        self.label = tape.label
        cap = skeleton_capacity(j)
        self.reducer = PrimeProductHash.draw(tape.fork("key-hash"), 1 << (j + 1), 4)
        f = budget_fanout(cap)
        self.g = KWiseHash.draw(tape.fork("g"), 8, cap, f)
        self.h = LoadBalancingHash.draw(tape.fork("h"), cap // f, domain=cap)
        self.bits_used = self.reducer.bits_used + self.g.bits_used + self.h.bits_used


class Category:
    """Groups of one category and their running sums of skeletal sizes."""

    def __init__(self, j: int, t: int):
        self.j = j
        self.t = t
        self.loads: Dict[int, int] = {}
        self.members: Dict[int, int] = {}
        self._heap: List[Tuple[int, int]] = []
        self._next_fresh = 0

    def assign(self, a: int) -> int:
        # untouched groups have load 0 and beat every loaded group
        if self._next_fresh < self.t:
            k = self._next_fresh
            self._next_fresh += 1
        else:
            while True:
                load, k = heapq.heappop(self._heap)
                if self.loads.get(k, 0) == load:
                    break
        self.loads[k] = self.loads.get(k, 0) + a
        self.members[k] = self.members.get(k, 0) + 1
        heapq.heappush(self._heap, (self.loads[k], k))
        return k

    def release(self, k: int, a: int) -> None:
        self.loads[k] -= a
        self.members[k] -= 1
        heapq.heappush(self._heap, (self.loads[k], k))

    def max_load(self) -> int:
        return max(self.loads.values(), default=0)


class SetState:
    __slots__ = (
        "index", "records", "a", "j", "k", "gen", "skel", "reducer",
        "old_skel", "old_reducer", "cursor", "ops", "yard_count", "rebuilds",
    )

    def __init__(self, index: int):
        self.index = index
        self.records: List[list] = []
        self.a = 0
        self.j: Optional[int] = None
        self.k: Optional[int] = None
        self.gen = 0
        self.skel: Optional[BudgetTrie] = None
        self.reducer: Optional[PrimeProductHash] = None
        self.old_skel: Optional[BudgetTrie] = None
        self.old_reducer: Optional[PrimeProductHash] = None
        self.cursor = -1
        self.ops = 0
        self.yard_count = 0
        self.rebuilds = 0

    @property
    def migrating(self) -> bool:
        return self.cursor >= 0

    def __len__(self) -> int:
        return len(self.records)


class ManySets:
    """Insert/Delete/Query on many sets ``S_i`` with aggregate capacity ``n``."""

    def __init__(self, n: int, cfg: Optional[ManySetsConfig] = None, tape: Optional[RandomTape] = None):
        cfg = ManySetsConfig() if cfg is None else cfg
        cfg.validate(n)
        self.n = n
        self.cfg = cfg
        self.tape = RandomTape() if tape is None else tape
        self.log_n = math.log2(n)
        self.loglog_n = math.log2(self.log_n)
        self.small_cutoff = self.log_n ** cfg.small_exponent
        self.max_set_size = n ** cfg.delta
        self.max_sets = max(1, int(n / self.log_n))
        self.set_bits = max(1, (self.max_sets - 1).bit_length())
        self.yard_key_bits = self.set_bits + cfg.key_bits
        self._key_limit = 1 << cfg.key_bits
        yard_nominal = 1 << max(4, math.ceil(math.log2(n / self.loglog_n)))
        yard_value_bits = max(1, math.ceil(self.log_n))
        self.backyard = PhasedDict(
            lambda cap, t: BudgetTrie(cap, t, key_bits=self.yard_key_bits, value_bits=yard_value_bits),
            yard_nominal,
            self.tape.fork("backyard"),
            dynamic=True,
            min_capacity=yard_nominal,
        )
        self.sets: Dict[int, SetState] = {}
        self.categories: Dict[int, Category] = {}
        self.groups: Dict[Tuple[int, int], GroupRandomness] = {}
        self.size = 0
        self.probes = 0
        self.failure: Optional[FailureKind] = None
        self.infeasible = 0
        self.collisions = 0
        self.skeleton_overflows = 0
        self.rebuild_events: List[Tuple[int, int, Optional[int]]] = []
        self.max_migration_work = 0
        self._occupant = None

    # -- bookkeeping ---------------------------------------------------------

    def _set(self, i: int) -> SetState:
        st = self.sets.get(i)
        if st is None:
            if not 0 <= i < self.max_sets:
                raise ValueError(f"set index {i} outside [0, {self.max_sets})")
            st = self.sets[i] = SetState(i)
        return st

    def category(self, j: int) -> Category:
        cat = self.categories.get(j)
        if cat is None:
            cat = self.categories[j] = Category(j, group_count(j, self.n, self.cfg.failure))
        return cat

    def group_randomness(self, j: int, k: int) -> GroupRandomness:
        """Hashes of group ``(j, k)``.  Categories share streams: the tape label is ``("group", k)``."""
        gr = self.groups.get((j, k))
        if gr is None:
            gr = self.groups[(j, k)] = GroupRandomness(j, k, self.tape.fork("group", k))
        return gr

    def assign_group(self, j: int, i: int, a: int) -> int:
        cat = self.category(j)
        bound = GROUP_SUM_CONSTANT * self.n / cat.t
        k = cat.assign(a)
        if a > bound or cat.loads[k] > bound:
            self.infeasible += 1
            self._fail(FailureKind.SPACE)
        return k

    def _fail(self, kind: FailureKind) -> None:
        if self.failure is None:
            self.failure = kind

    def _yard_key(self, i: int, x: int) -> int:
        return (i << self.cfg.key_bits) | x

    # -- probe-counted access to sub-structures -------------------------------

    def _skel_get(self, skel: BudgetTrie, hk: int):
        # reducer outputs always fit the skeleton's key width, so skip the range check
        p = skel.probes
        idx = skel._locate(hk)
        self.probes += skel.probes - p
        records = skel.records
        return records.values[idx] if idx >= 0 and records.live[idx] else None

    def _skel_put(self, skel: BudgetTrie, hk: int, z: int) -> None:
        p = skel.probes
        try:
            skel.insert(hk, z, strict=True)
        finally:
            self.probes += skel.probes - p

    def _skel_del(self, skel: BudgetTrie, hk: int) -> None:
        p = skel.probes
        skel.delete(hk)
        self.probes += skel.probes - p

    def _yard(self, op: str, key: int, *args):
        yard = self.backyard
        p = yard.probes
        out = getattr(yard, op)(key, *args)
        self.probes += yard.probes - p
        if yard.failure is not None:
            self._fail(yard.failure)
        return out

    # -- record placement ----------------------------------------------------

    def _place(self, st: SetState, z: int, occupant=_UNKNOWN) -> None:
        """Index record ``z`` in the current skeleton, or in the backyard if it cannot be.

        ``occupant`` is the skeleton's current answer for the record's hash,
        when the caller already looked it up.
        """
        rec = st.records[z]
        if st.skel is not None:
            hk = st.reducer(rec[0])
            if occupant is _UNKNOWN:
                occupant = self._skel_get(st.skel, hk)
            if occupant is not None:
                self.collisions += 1
            else:
                try:
                    self._skel_put(st.skel, hk, z)
                    rec[2] = st.gen
                    return
                except BinOverflow:
                    self.skeleton_overflows += 1
        self._yard("insert", self._yard_key(st.index, rec[0]), z)
        rec[2] = YARD
        st.yard_count += 1

    def _unplace(self, st: SetState, z: int) -> None:
        rec = st.records[z]
        where = rec[2]
        if where == YARD:
            self._yard("delete", self._yard_key(st.index, rec[0]))
            st.yard_count -= 1
        elif where == st.gen:
            self._skel_del(st.skel, st.reducer(rec[0]))
        else:
            self._skel_del(st.old_skel, st.old_reducer(rec[0]))

    def _relocate(self, st: SetState, z: int) -> None:
        """Point the locator of the record now at ``z`` to its new index."""
        rec = st.records[z]
        where = rec[2]
        if where == YARD:
            self._yard("insert", self._yard_key(st.index, rec[0]), z)
        elif where == st.gen:
            self._skel_put(st.skel, st.reducer(rec[0]), z)
        else:
            self._skel_put(st.old_skel, st.old_reducer(rec[0]), z)

    def _find(self, st: SetState, x: int) -> int:
        records = st.records
        self.probes += 1
        self._occupant = None
        if st.skel is not None:
            z = self._occupant = self._skel_get(st.skel, st.reducer(x))
            if z is not None and records[z][0] == x:
                return z
        if st.old_skel is not None:
            z = self._skel_get(st.old_skel, st.old_reducer(x))
            if z is not None and z < len(records) and records[z][0] == x:
                return z
        if st.yard_count:
            z = self._yard("query", self._yard_key(st.index, x))
            if z is not None and records[z][0] == x:
                return z
        return -1

    # -- rebuilds ------------------------------------------------------------

    def _start_rebuild(self, st: SetState) -> None:
        if st.migrating:
            self._migrate(st, len(st.records) + 1)
        if st.j is not None:
            self.category(st.j).release(st.k, st.a)
        old_j = st.j
        st.old_skel, st.old_reducer = st.skel, st.reducer
        st.a = len(st.records)
        st.gen += 1
        if st.a <= self.small_cutoff:
            st.j = st.k = None
            st.skel = st.reducer = None
        else:
            j = int(math.floor(math.log2(st.a)))
            k = self.assign_group(j, st.index, st.a)
            gr = self.group_randomness(j, k)
            st.j, st.k = j, k
            st.skel = BudgetTrie(
                skeleton_capacity(j),
                key_bits=skeleton_key_bits(j),
                value_bits=j + 3,
                g=gr.g,
                h=gr.h,
            )
            st.reducer = gr.reducer
        st.cursor = 0
        st.ops = 0
        st.rebuilds += 1
        self.rebuild_events.append((st.index, st.a, st.j))
        if old_j is None and st.j is None:
            # every record already sits in the backyard
            self._end_migration(st)

    def _migrate(self, st: SetState, budget: int) -> int:
        done = 0
        records = st.records
        while done < budget and st.cursor < len(records):
            self._move_to_current(st, st.cursor)
            st.cursor += 1
            done += 1
        if st.cursor >= len(records):
            self._end_migration(st)
        return done

    def _move_to_current(self, st: SetState, z: int) -> None:
        rec = st.records[z]
        if rec[2] == st.gen:
            return
        if rec[2] == YARD and st.skel is None:
            return
        self._unplace(st, z)
        self._place(st, z)

    def _end_migration(self, st: SetState) -> None:
        st.cursor = -1
        st.old_skel = st.old_reducer = None

    def rebuild_set(self, i: int) -> None:
        """Force a skeleton rebuild of set ``i`` and finish its migration."""
        st = self._set(i)
        self._start_rebuild(st)
        if st.migrating:
            self._migrate(st, len(st.records) + 1)

    def _after_set_op(self, st: SetState) -> None:
        st.ops += 1
        if st.migrating:
            work = self._migrate(st, self.cfg.migration_rate)
            if work > self.max_migration_work:
                self.max_migration_work = work
        size = len(st.records)
        if size > 2 * st.a or 2 * size < st.a or st.ops > 2 * st.a + 16:
            self._start_rebuild(st)

    # -- public operations ---------------------------------------------------

    def insert(self, i: int, x: int, y) -> None:
        if not 0 <= x < self._key_limit:
            raise ValueError(f"key {x!r} outside [0, 2**{self.cfg.key_bits})")
        st = self._set(i)
        z = self._find(st, x)
        if z >= 0:
            st.records[z][1] = y
        else:
            if self.cfg.enforce_limits:
                if len(st.records) + 1 > self.max_set_size:
                    raise ValueError(f"set {i} would exceed n**delta = {self.max_set_size:.0f}")
                if self.size + 1 > self.n:
                    raise ValueError("aggregate size would exceed n")
            z = len(st.records)
            st.records.append([x, y, YARD])
            self._place(st, z, self._occupant)
            self.size += 1
        self._after_set_op(st)

    def query(self, i: int, x: int, default=None):
        st = self.sets.get(i)
        if st is None:
            return default
        z = self._find(st, x)
        self._after_set_op(st)
        return default if z < 0 else st.records[z][1]

    def delete(self, i: int, x: int) -> bool:
        st = self.sets.get(i)
        if st is None:
            return False
        z = self._find(st, x)
        if z < 0:
            self._after_set_op(st)
            return False
        self._unplace(st, z)
        records = st.records
        last = len(records) - 1
        if z != last:
            moved = records[last]
            records[z] = moved
            self._relocate(st, z)
            if st.migrating and z < st.cursor:
                self._move_to_current(st, z)
        records.pop()
        self.size -= 1
        self._after_set_op(st)
        return True

    # -- inspection ----------------------------------------------------------

    def set_items(self, i: int) -> Iterator[Tuple[int, object]]:
        st = self.sets.get(i)
        if st is None:
            return iter(())
        return ((r[0], r[1]) for r in st.records)

    def set_size(self, i: int) -> int:
        st = self.sets.get(i)
        return 0 if st is None else len(st.records)

    def backyard_size(self) -> int:
        return len(self.backyard)

    def backyard_by_category(self) -> Dict[Optional[int], int]:
        """Backyard residents per current category (``None``: small sets)."""
        out: Dict[Optional[int], int] = {}
        for st in self.sets.values():
            if st.yard_count:
                out[st.j] = out.get(st.j, 0) + st.yard_count
        return out

    def category_bits(self, j: int) -> int:
        return sum(gr.bits_used for (jj, _), gr in self.groups.items() if jj == j)

    @property
    def bits_used(self) -> int:
        """Distinct random bits drawn: categories share group streams, so
        stream ``k`` costs the most any category read from it."""
        per_stream: Dict[int, int] = {}
        for (_, k), gr in self.groups.items():
            per_stream[k] = max(per_stream.get(k, 0), gr.bits_used)
        return sum(per_stream.values()) + self.backyard.bits_used

    def space_bits(self) -> int:
        word = math.ceil(self.log_n) + 1
        gamma = self.cfg.key_bits + self.cfg.value_bits
        bits = 0
        for st in self.sets.values():
            bits += len(st.records) * (gamma + 2)
            bits += 6 * word
            for skel in (st.skel, st.old_skel):
                if skel is not None:
                    bits += skel.space_bits()
        bits += self._backyard_bits()
        for gr in self.groups.values():
            bits += gr.bits_used + 2 * word
        for cat in self.categories.values():
            bits += 2 * len(cat.loads) * word
        return bits

    def space_bound(self, c: float = SPACE_CONSTANT) -> float:
        """``sum |S_i| (gamma_i + C_s log|S_i|) + C_s n log n / log log n``."""
        gamma = self.cfg.key_bits + self.cfg.value_bits
        total = c * self.n * self.log_n / self.loglog_n
        for st in self.sets.values():
            size = len(st.records)
            if size:
                total += size * (gamma + c * math.log2(size))
        return total

    def _backyard_bits(self) -> int:
        bits = self.backyard.active.space_bits()
        if self.backyard.shadow is not None:
            bits += self.backyard.shadow.space_bits()
        return bits

    def audit(self) -> None:
        """Check locators: each live record resolves through exactly one of
        its skeleton or the backyard, and ``B_i`` is gap-free."""
        for st in self.sets.values():
            yard = 0
            for z, rec in enumerate(st.records):
                if rec is None:
                    raise AssertionError(f"gap in B_{st.index} at {z}")
                x, _, where = rec
                in_yard = self.backyard.active.query(self._yard_key(st.index, x)) == z
                if self.backyard.shadow is not None:
                    in_yard = in_yard or self.backyard.shadow.query(self._yard_key(st.index, x)) == z
                in_skel = False
                for skel, red in ((st.skel, st.reducer), (st.old_skel, st.old_reducer)):
                    if skel is not None and skel.query(red(x)) == z:
                        in_skel = True
                if in_yard == in_skel:
                    raise AssertionError(f"record {x} of set {st.index} resolves {'twice' if in_yard else 'nowhere'}")
                if in_yard != (where == YARD):
                    raise AssertionError(f"stale locator for {x} in set {st.index}")
                yard += in_yard
            if yard != st.yard_count:
                raise AssertionError(f"yard count drift in set {st.index}")
