"""Builders that put every structure behind one integer-key interface."""

from __future__ import annotations

from typing import Dict, Optional

from ..amplified import AmplifiedTrie
from ..budget import BudgetTrie, LargeUniverseBudgetTrie
from ..lifecycle import PhasedDict
from ..manysets import ManySets, ManySetsConfig
from ..randomness import RandomTape
from ..rotated import RotatedTrie

STRUCTURES = ("rotated", "amplified", "budget", "budget-large-u", "manysets")

DEFAULT_EPS = 0.5
DEFAULT_U = 40
DEFAULT_C = 2
DEFAULT_SETS = 32
MANYSETS_KEY_BITS = 32


class Params(dict):
    """``k=v`` experiment parameters with typed lookups."""

    @classmethod
    def parse(cls, text: Optional[str]) -> "Params":
        out = cls()
        for item in (text or "").split(","):
            item = item.strip()
            if not item:
                continue
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"parameter {item!r} is not k=v")
            out[key.strip()] = value.strip()
        return out

    def num(self, key: str, default: float) -> float:
        return float(self[key]) if key in self else default

    def int_(self, key: str, default: int) -> int:
        return int(self[key]) if key in self else default

    def text(self, key: str, default: str) -> str:
        return self.get(key, default)

    def render(self) -> str:
        return ",".join(f"{k}={self[k]}" for k in sorted(self))


class Subject:
    """A structure under test: ``insert``/``query``/``delete`` on integer keys."""

    __slots__ = ("name", "n", "impl", "key_bits", "insert", "query", "delete")

    def __init__(self, name: str, n: int, impl, key_bits: int):
        self.name = name
        self.n = n
        self.impl = impl
        self.key_bits = key_bits
        self.insert = impl.insert
        self.query = impl.query
        self.delete = impl.delete

    @property
    def probes(self) -> int:
        return self.impl.probes

    @property
    def failure(self):
        return self.impl.failure

    def inner(self):
        """The trie doing the work (the active instance behind a phased wrapper)."""
        impl = self.impl
        return impl.active if isinstance(impl, PhasedDict) else impl

    def stats(self) -> Dict[str, object]:
        impl = self.impl
        inner = self.inner()
        failure = impl.failure
        out = {
            "max_load": 0,
            "overflow_q": 0,
            "backyard_size": 0,
            "bits_used": impl.bits_used,
            "failure_kind": "none" if failure is None else failure.value,
        }
        if isinstance(impl, ManySetsSubject):
            ms = impl.ms
            out["max_load"] = max(
                (st.skel.max_load() for st in ms.sets.values() if st.skel is not None), default=0
            )
            out["backyard_size"] = ms.backyard_size()
        else:
            out["max_load"] = inner.max_load()
            if isinstance(inner, AmplifiedTrie):
                out["overflow_q"] = inner.q
        return out


class ManySetsSubject:
    """Many-sets behind packed keys ``(i << key_bits) | x``."""

    __slots__ = ("ms", "shift", "mask")

    def __init__(self, ms: ManySets):
        self.ms = ms
        self.shift = ms.cfg.key_bits
        self.mask = (1 << ms.cfg.key_bits) - 1

    def insert(self, key: int, value) -> None:
        self.ms.insert(key >> self.shift, key & self.mask, value)

    def query(self, key: int, default=None):
        return self.ms.query(key >> self.shift, key & self.mask, default)

    def delete(self, key: int) -> bool:
        return self.ms.delete(key >> self.shift, key & self.mask)

    @property
    def probes(self) -> int:
        return self.ms.probes

    @property
    def failure(self):
        return self.ms.failure

    @property
    def bits_used(self) -> int:
        return self.ms.bits_used


def universe_bits(n: int, params: Params) -> int:
    """Key width for ``budget-large-u``: ``u`` if given, else 40 capped so that ``u**c < n``."""
    c = params.int_("c", DEFAULT_C)
    if "u" in params:
        return params.int_("u", DEFAULT_U)
    u = DEFAULT_U
    while u > 1 and u ** c >= n:
        u -= 1
    return u


def _trie_factory(structure: str, params: Params, n: int):
    ell = params.int_("ell", 0) or None
    if structure == "rotated":
        return lambda cap, tape: RotatedTrie(cap, None, tape, ell=ell)
    if structure == "amplified":
        eps = params.num("eps", DEFAULT_EPS)
        return lambda cap, tape: AmplifiedTrie(cap, eps, tape, ell=ell)
    if structure == "budget":
        k = params.int_("k", 8)
        return lambda cap, tape: BudgetTrie(cap, tape, ell=ell, k=k)
    if structure == "budget-large-u":
        u = universe_bits(n, params)
        c = params.int_("c", DEFAULT_C)
        return lambda cap, tape: LargeUniverseBudgetTrie(cap, u, c, tape, ell=ell)
    raise ValueError(f"unknown structure {structure!r}; expected one of {', '.join(STRUCTURES)}")


def key_bits(structure: str, n: int, params: Params) -> int:
    """Width of the keys a workload should draw for ``structure``."""
    if structure == "budget-large-u":
        return universe_bits(n, params)
    if structure == "manysets":
        sets = params.int_("sets", DEFAULT_SETS)
        return MANYSETS_KEY_BITS + max(1, (sets - 1).bit_length())
    probe = _trie_factory(structure, params, n)(n, RandomTape())
    return probe.key_bits


def manysets_config(params: Params) -> ManySetsConfig:
    return ManySetsConfig(
        delta=params.num("delta", 0.75),
        failure=params.text("p", "poly:2"),
        key_bits=MANYSETS_KEY_BITS,
    )


def build(structure: str, n: int, tape: RandomTape, params: Optional[Params] = None) -> Subject:
    """A fresh structure of capacity ``n``.

    Tries are wrapped in :class:`~rotrie.lifecycle.PhasedDict` unless
    ``phased=0``, so deletions are reclaimed by phase rebuilds.
    """
    params = Params() if params is None else params
    if structure == "manysets":
        impl = ManySetsSubject(ManySets(n, manysets_config(params), tape))
        return Subject(structure, n, impl, key_bits(structure, n, params))
    factory = _trie_factory(structure, params, n)
    if params.int_("phased", 1):
        impl = PhasedDict(factory, n, tape)
        width = impl.active.u if structure == "budget-large-u" else impl.active.key_bits
    else:
        impl = factory(n, tape)
        width = impl.u if structure == "budget-large-u" else impl.key_bits
    return Subject(structure, n, impl, width)

