"""Rotated radix tries and a many-small-sets dictionary, with a measurement lab."""

from .amplified import AmplifiedTrie, OverflowTrie, at_new
from .budget import BudgetTrie, LargeUniverseBudgetTrie, bt_large_universe_new, bt_new
from .hashkit import KWiseHash, LoadBalancingHash, PrimeProductHash
from .lifecycle import PhasedDict
from .manysets import ManySets, ManySetsConfig
from .randomness import RandomTape
from .rotated import FailureKind, RotatedTrie, rt_new
from .smallmaps import BinOverflow, BoundedDict, LazyArray

__all__ = [
    "AmplifiedTrie", "BinOverflow", "BoundedDict", "BudgetTrie", "FailureKind",
    "KWiseHash", "LargeUniverseBudgetTrie", "LazyArray", "LoadBalancingHash",
    "ManySets", "ManySetsConfig", "OverflowTrie", "PhasedDict", "PrimeProductHash",
    "RandomTape", "RotatedTrie", "at_new", "bt_large_universe_new", "bt_new", "rt_new",
]
