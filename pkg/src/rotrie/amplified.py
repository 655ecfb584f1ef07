"""Amplified rotated trie: low fanout plus an overflow trie.

Fanout is ``n**delta`` with ``delta = eps / 5`` (rounded so the fanout is a
power of two).  A ball that arrives at a bin already holding ``ell`` balls is
an *overflow ball*; it is stored in :class:`OverflowTrie` ``Q``, a plain
(non-rotated) ``f``-ary trie keyed by the ball id ``s * f + c``.  Since bins
only fill up within a phase, a lookup that misses in a full bin is the only
case that needs to consult ``Q``.
"""

from __future__ import annotations

import math
from typing import Optional

from .randomness import RandomTape
from .rotated import FailureKind, RotatedTrie


class OverflowTrie:
    """``f``-ary trie of full child arrays mapping integer ids to payloads."""

    __slots__ = ("f", "digit_bits", "depth", "_root", "nodes", "size")

    def __init__(self, f: int, id_bits: int):
        self.f = f
        self.digit_bits = f.bit_length() - 1
        self.depth = max(1, math.ceil(id_bits / self.digit_bits))
        self._root: Optional[list] = None
        self.nodes = 0
        self.size = 0

    def _digits(self, x: int):
        w = self.digit_bits
        mask = self.f - 1
        for level in range(self.depth - 1, -1, -1):
            yield (x >> (level * w)) & mask

    def insert(self, x: int, payload) -> None:
        if self._root is None:
            self._root = [None] * self.f
            self.nodes += 1
        node = self._root
        digits = list(self._digits(x))
        for d in digits[:-1]:
            nxt = node[d]
            if nxt is None:
                nxt = node[d] = [None] * self.f
                self.nodes += 1
            node = nxt
        if node[digits[-1]] is None:
            self.size += 1
        node[digits[-1]] = payload

    def get(self, x: int):
        node = self._root
        if node is None:
            return None
        for d in self._digits(x):
            node = node[d]
            if node is None:
                return None
        return node

    def __len__(self) -> int:
        return self.size


def amplified_fanout(n: int, eps: float) -> int:
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    log_n = n.bit_length() - 1
    width = max(1, math.ceil((eps / 5) * log_n - 1e-9))
    return 1 << width


class AmplifiedTrie(RotatedTrie):
    """Rotated trie with fanout ``2**ceil(eps/5 * log2 n)`` and overflow trie ``Q``.

    :attr:`overflow_count` is ``q``.  Once ``q`` reaches ``n**(1 - delta)`` the
    linear-space guarantee is considered lost and :attr:`failure` becomes
    ``SPACE``; answers remain correct.
    """

    def __init__(
        self,
        n: int,
        eps: float = 0.5,
        tape: Optional[RandomTape] = None,
        *,
        ell: Optional[int] = None,
        key_bits: Optional[int] = None,
    ):
        super().__init__(n, amplified_fanout(n, eps), tape, ell=ell, key_bits=key_bits)
        self.eps = eps
        self.delta = eps / 5
        self.space_threshold = n ** (1 - self.delta)
        max_nodes = self.node_budget_factor * n * self.depth
        self.Q = OverflowTrie(self.f, (max_nodes * self.f - 1).bit_length())
        self.overflow_count = 0
        self.q_probes = 0

    def _place_overflow(self, bin_index: int, s: int, c: int, payload: int) -> bool:
        self.Q.insert(s * self.f + c, payload)
        self.overflow_count += 1
        self.q_probes += self.Q.depth
        self.probes += self.Q.depth
        if self.overflow_count >= self.space_threshold:
            self._fail(FailureKind.SPACE)
        return True

    def _find_overflow(self, bin_, s: int, c: int):
        self.q_probes += self.Q.depth
        self.probes += self.Q.depth
        return self.Q.get(s * self.f + c)

    @property
    def q(self) -> int:
        return self.overflow_count

    def overflow_resident(self, s: int, c: int) -> bool:
        return self.Q.get(s * self.f + c) is not None


def at_new(n: int, eps: float, tape: RandomTape) -> AmplifiedTrie:
    return AmplifiedTrie(n, eps, tape)
