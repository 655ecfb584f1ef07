"""Constant-time building blocks: a capacity-bounded small map and a lazily
zero-initialized array.

``BoundedDict`` stands in for a dynamic fusion node.  It is a plain bounded
map; the constant-time claim for fusion nodes is taken as given and is not
something this module tries to reproduce at the bit level.
"""

from __future__ import annotations

import math
from typing import Any, Callable, Iterator, Optional

import numpy as np


class BinOverflow(Exception):
    """Raised when an insert would push a :class:`BoundedDict` past capacity."""


def default_ell(n: int, exponent: int = 2) -> int:
    """Bin capacity ``ceil(log2(n) ** exponent)``."""
    return max(1, math.ceil(math.log2(max(n, 2)) ** exponent))


class BoundedDict:
    """Map holding at most ``capacity`` entries.

    Inserting a new key into a full map raises :class:`BinOverflow` and leaves
    the map unchanged.  Overwriting an existing key always succeeds.
    """

    __slots__ = ("capacity", "_entries", "get")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: dict = {}
        self.get = self._entries.get

    def insert(self, key, value) -> None:
        entries = self._entries
        if key not in entries and len(entries) >= self.capacity:
            raise BinOverflow(key)
        entries[key] = value

    def query(self, key, default=None):
        return self._entries.get(key, default)

    def delete(self, key) -> bool:
        """Remove ``key``; returns False if it was absent."""
        return self._entries.pop(key, _MISSING) is not _MISSING

    def is_full(self) -> bool:
        return len(self._entries) >= self.capacity

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __iter__(self) -> Iterator:
        return iter(self._entries)

    def items(self):
        return self._entries.items()

    def __repr__(self) -> str:
        return f"BoundedDict(capacity={self.capacity}, size={len(self._entries)})"


_MISSING = object()


class LazyArray:
    """Array of ``capacity`` slots that reads as ``default`` until written.

    Uses the sparse/dense back-reference trick: ``_where[i]`` is an index into
    the dense stack of written positions and is trusted only if the stack
    points back at ``i``.  ``_where`` comes from ``np.empty`` and is never
    cleared, so construction cost does not depend on capacity.
    """

    __slots__ = ("capacity", "default", "_where", "_stack", "_values", "writes")

    def __init__(self, capacity: int, default: Any = None, *, _backing: Optional[np.ndarray] = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.default = default
        if _backing is None:
            _backing = np.empty(capacity, dtype=np.int64)
        elif len(_backing) != capacity:
            raise ValueError("backing storage must match capacity")
        # memoryview indexing yields plain ints, much cheaper than numpy scalars
        self._where = memoryview(_backing)
        self._stack: list = []
        self._values: list = []
        # header words: capacity, default, where-pointer, stack top, values-pointer
        self.writes = 5

    def _slot(self, i: int) -> int:
        if not 0 <= i < self.capacity:
            raise IndexError(i)
        p = self._where[i]
        if 0 <= p < len(self._stack) and self._stack[p] == i:
            return p
        return -1

    def get(self, i: int):
        if not 0 <= i < self.capacity:
            raise IndexError(i)
        p = self._where[i]
        stack = self._stack
        if 0 <= p < len(stack) and stack[p] == i:
            return self._values[p]
        return self.default

    def set(self, i: int, value) -> None:
        p = self._slot(i)
        if p < 0:
            self._where[i] = len(self._stack)
            self._stack.append(i)
            self._values.append(value)
            self.writes += 3
        else:
            self._values[p] = value
            self.writes += 1

    def get_or_create(self, i: int, factory: Callable[[], Any]):
        """Value at ``i``, materializing ``factory()`` there on first touch."""
        if not 0 <= i < self.capacity:
            raise IndexError(i)
        p = self._where[i]
        stack = self._stack
        if 0 <= p < len(stack) and stack[p] == i:
            return self._values[p]
        value = factory()
        self._where[i] = len(self._stack)
        self._stack.append(i)
        self._values.append(value)
        self.writes += 3
        return value

    def touched(self) -> Iterator[tuple]:
        """(index, value) for every slot ever written, in first-write order."""
        return zip(self._stack, self._values)

    def __len__(self) -> int:
        return self.capacity

    def __getitem__(self, i: int):
        return self.get(i)

    def __setitem__(self, i: int, value) -> None:
        self.set(i, value)


def la_new(capacity: int, default: Any = None) -> LazyArray:
    return LazyArray(capacity, default)


def construction_writes(obj: Any, _seen: Optional[set] = None) -> int:
    """Initialized words reachable from ``obj``.

    Scalars count one word each, containers count one word per element (plus
    their contents), and a :class:`LazyArray` reports its own write counter;
    its ``np.empty`` backing is uninitialized memory and costs nothing.
    Callables without instance state (hash functions included) count as one
    handle: hash descriptions are charged to ``bits_used``, not to the data
    plane.
    """
    if _seen is None:
        _seen = set()
    if isinstance(obj, _SCALARS):
        return 1
    if id(obj) in _seen:
        return 0
    _seen.add(id(obj))
    if isinstance(obj, LazyArray):
        return obj.writes + sum(construction_writes(v, _seen) for v in obj._values)
    if isinstance(obj, (list, tuple, set, frozenset)):
        return len(obj) + sum(construction_writes(v, _seen) for v in obj)
    if isinstance(obj, dict):
        return 2 * len(obj) + sum(construction_writes(v, _seen) for v in obj.values())
    if isinstance(obj, BoundedDict):
        return 1 + construction_writes(obj._entries, _seen)
    if isinstance(obj, np.ndarray):
        return int(obj.size)
    fields = _instance_fields(obj)
    if fields is None:
        return 1
    return sum(1 + construction_writes(v, _seen) for v in fields)


_SCALARS = (int, float, str, bytes, bool, type(None))


def _instance_fields(obj: Any) -> Optional[list]:
    if isinstance(obj, (int, float, str, bytes, bool, type(None), memoryview)) or callable(obj) and not hasattr(obj, "__dict__"):
        return None
    values = []
    if hasattr(obj, "__dict__"):
        values.extend(vars(obj).values())
    for cls in type(obj).__mro__:
        for name in getattr(cls, "__slots__", ()):
            if hasattr(obj, name):
                values.append(getattr(obj, name))
    if not values and not hasattr(obj, "__dict__") and not hasattr(type(obj), "__slots__"):
        return None
    return values
