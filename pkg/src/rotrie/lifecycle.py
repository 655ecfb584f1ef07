"""Phased rebuilding around a fixed-capacity dictionary.

:class:`PhasedDict` runs an inner dictionary for a phase of ``2n`` operations
and then migrates its live records into a fresh instance, ``migration_rate``
records per operation.  Tombstoned records are simply not copied.  Phase
rebuilds replay the same random bits; only a capacity change in dynamic mode
may draw new ones.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterator, Optional, Tuple

from .randomness import RandomTape
from .rotated import FailureKind

log = logging.getLogger(__name__)

Factory = Callable[[int, RandomTape], object]

PHASE_FACTOR = 2
MIGRATION_RATE = 4


class PhasedDict:
    """Dictionary with deletions, bounded per-operation rebuild work, and
    optional resizing.

    In static mode the inner capacity is ``capacity``.  With ``dynamic=True``
    the nominal size starts at ``capacity`` and the inner instances are built
    at ``headroom * nominal``; a rebuild at double (half) the nominal size
    starts when the live size exceeds ``2 * nominal`` (drops below
    ``nominal / 4``).
    """

    def __init__(
        self,
        factory: Factory,
        capacity: int,
        tape: Optional[RandomTape] = None,
        *,
        dynamic: bool = False,
        redraw_on_resize: bool = True,
        phase_factor: int = PHASE_FACTOR,
        migration_rate: int = MIGRATION_RATE,
        headroom: int = 4,
        min_capacity: int = 16,
    ):
        self.factory = factory
        self.tape = RandomTape() if tape is None else tape
        self.dynamic = dynamic
        self.redraw_on_resize = redraw_on_resize
        self.phase_factor = phase_factor
        self.migration_rate = migration_rate
        self.headroom = headroom if dynamic else 1
        self.min_capacity = min_capacity
        self.nominal = capacity
        self.generation = 0
        self._tape_label: tuple = ()
        self.active = factory(self._inner_capacity(capacity), self._instance_tape())
        self.shadow = None
        self._shadow_redrawn = False
        self._cursor = 0
        self._cursor_end = 0
        self.ops_in_phase = 0
        self.op_count = 0
        self.rebuilds = 0
        self.resizes = 0
        self.last_migration_work = 0
        self.max_migration_work = 0
        self.retired_probes = 0

    # -- construction helpers ----------------------------------------------

    def _inner_capacity(self, nominal: int) -> int:
        cap = max(self.min_capacity, nominal * self.headroom)
        return 1 << (cap - 1).bit_length()

    def _instance_tape(self) -> RandomTape:
        base = self.tape.fork(*self._tape_label) if self._tape_label else self.tape
        return base.fresh_copy()

    @property
    def phase_length(self) -> int:
        return self.phase_factor * self.nominal

    @property
    def migrating(self) -> bool:
        return self.shadow is not None

    @property
    def failure(self) -> Optional[FailureKind]:
        for inst in (self.active, self.shadow):
            if inst is not None and inst.failure is not None:
                return inst.failure
        return None

    @property
    def probes(self) -> int:
        total = self.retired_probes + self.active.probes
        if self.shadow is not None:
            total += self.shadow.probes
        return total

    @property
    def bits_used(self) -> int:
        """Random bits held by live instances; a shadow that replays the
        active instance's tape adds nothing."""
        total = self.active.bits_used
        if self.shadow is not None and self._shadow_redrawn:
            total += self.shadow.bits_used
        return total

    # -- rebuilds ----------------------------------------------------------

    def start_rebuild(self, nominal: Optional[int] = None) -> None:
        """Begin migrating into a fresh instance of nominal size ``nominal``."""
        if self.shadow is not None:
            self._finish_migration()
        resized = nominal is not None and nominal != self.nominal
        if resized:
            self.nominal = nominal
            self.resizes += 1
            if self.redraw_on_resize:
                self.generation += 1
                self._tape_label = ("resize", self.generation)
        self._shadow_redrawn = resized and self.redraw_on_resize
        self.shadow = self.factory(self._inner_capacity(self.nominal), self._instance_tape())
        self._cursor = 0
        self._cursor_end = len(self.active.records)
        self.ops_in_phase = 0
        self.rebuilds += 1
        log.debug("rebuild %d started (nominal=%d, resized=%s)", self.rebuilds, self.nominal, resized)

    def _migrate(self, budget: int) -> int:
        old = self.active
        new = self.shadow
        records = old.records
        done = 0
        while done < budget and self._cursor < self._cursor_end:
            i = self._cursor
            self._cursor += 1
            done += 1
            if records.live[i]:
                new.insert(records.keys[i], records.values[i])
                # the cursor already knows the record; tombstone it without a walk
                records.kill(i)
        if self._cursor >= self._cursor_end:
            self.retired_probes += old.probes
            self.active = new
            self.shadow = None
        return done

    def _finish_migration(self) -> None:
        while self.shadow is not None:
            self._migrate(self._cursor_end)

    def resize_check(self) -> Optional[str]:
        """Start a resize rebuild if the live size left ``(nominal/4, 2*nominal]``."""
        if not self.dynamic or self.shadow is not None:
            return None
        live = len(self)
        if live > 2 * self.nominal:
            self.start_rebuild(2 * self.nominal)
            return "rebuild-started"
        if live < self.nominal / 4 and self.nominal // 2 >= self.min_capacity:
            self.start_rebuild(self.nominal // 2)
            return "rebuild-started"
        return None

    def _after_op(self) -> None:
        self.op_count += 1
        self.ops_in_phase += 1
        work = 0
        if self.shadow is not None:
            work = self._migrate(self.migration_rate)
        self.last_migration_work = work
        if work > self.max_migration_work:
            self.max_migration_work = work
        if self.shadow is None:
            if self.resize_check() is None and self.ops_in_phase >= self.phase_length:
                self.start_rebuild()

    # -- dictionary operations ----------------------------------------------

    def insert(self, key: int, value) -> bool:
        if self.shadow is not None:
            self.active.delete(key)
            ok = self.shadow.insert(key, value)
        else:
            ok = self.active.insert(key, value)
        self._after_op()
        return ok

    def query(self, key: int, default=None):
        out = _ABSENT
        if self.shadow is not None:
            out = self.shadow.query(key, _ABSENT)
        if out is _ABSENT:
            out = self.active.query(key, _ABSENT)
        self._after_op()
        return default if out is _ABSENT else out

    def delete(self, key: int) -> bool:
        hit = self.active.delete(key)
        if self.shadow is not None:
            hit = self.shadow.delete(key) or hit
        self._after_op()
        return hit

    def __len__(self) -> int:
        n = len(self.active)
        if self.shadow is not None:
            n += len(self.shadow)
        return n

    def items(self) -> Iterator[Tuple[int, object]]:
        yield from self.active.items()
        if self.shadow is not None:
            yield from self.shadow.items()

    def audit(self) -> None:
        """Every live key lives in exactly one instance."""
        if self.shadow is None:
            return
        old = dict(self.active.items())
        for key, _ in self.shadow.items():
            if key in old:
                raise AssertionError(f"key {key} live in both instances")


_ABSENT = object()
