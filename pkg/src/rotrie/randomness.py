"""Deterministic random-bit tapes with exact consumption accounting.

A :class:`RandomTape` is a keyed counter-mode stream: block ``i`` of the tape
with label path ``L`` is ``blake2b(key=seed, data=L || i)``.  Bits are handed
out lazily, most significant first, and every draw is charged to ``counter``.
"""

from __future__ import annotations

import hashlib
import os
import struct
from typing import Optional, Sequence, Union

Label = Union[int, str]

_BLOCK_BYTES = 64
_BLOCK_BITS = _BLOCK_BYTES * 8

ENV_SEED = "ROTRIE_SEED"


def _encode_label(label: Label) -> bytes:
    if isinstance(label, bool) or not isinstance(label, (int, str)):
        raise TypeError(f"tape labels must be int or str, not {type(label).__name__}")
    if isinstance(label, int):
        body = str(label).encode()
        return b"i" + struct.pack("<I", len(body)) + body
    body = label.encode()
    return b"s" + struct.pack("<I", len(body)) + body


def seed_material(seed: Union[int, bytes]) -> bytes:
    """Expand a u64 (or arbitrary bytes) into a 256-bit seed."""
    if isinstance(seed, int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        raw = seed.to_bytes(max(8, (seed.bit_length() + 7) // 8), "little")
    else:
        raw = bytes(seed)
    return hashlib.blake2b(raw, digest_size=32, person=b"rotrie-seed").digest()


class RandomTape:
    """A reproducible stream of random bits.

    Two tapes built from the same ``(seed, label)`` produce identical bit
    sequences.  ``counter`` is the exact number of bits consumed so far.
    """

    __slots__ = ("_seed", "_label", "_prefix", "counter", "_block", "_buf", "_avail")

    def __init__(self, seed: Union[int, bytes] = 0, label: Sequence[Label] = ()):
        self._seed = seed if isinstance(seed, bytes) and len(seed) == 32 else seed_material(seed)
        self._label = tuple(label)
        self._prefix = b"".join(_encode_label(x) for x in self._label)
        self.counter = 0
        self._block = 0
        self._buf = 0
        self._avail = 0

    @property
    def seed(self) -> bytes:
        return self._seed

    @property
    def label(self) -> tuple:
        return self._label

    def _refill(self) -> None:
        digest = hashlib.blake2b(
            self._prefix + b"#" + self._block.to_bytes(8, "little"),
            key=self._seed,
            digest_size=_BLOCK_BYTES,
        ).digest()
        self._block += 1
        self._buf = (self._buf << _BLOCK_BITS) | int.from_bytes(digest, "big")
        self._avail += _BLOCK_BITS

    def draw_bits(self, k: int) -> int:
        """Return the next ``k`` bits (1 <= k <= 64) as an unsigned integer."""
        if not 1 <= k <= 64:
            raise ValueError(f"draw width must be in [1, 64], got {k}")
        if self._avail < k:
            self._refill()
        self._avail -= k
        out = self._buf >> self._avail
        self._buf &= (1 << self._avail) - 1
        self.counter += k
        return out

    def draw_below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection; charges every bit drawn."""
        if bound < 1:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        width = (bound - 1).bit_length()
        while True:
            x = self._draw_wide(width)
            if x < bound:
                return x

    def _draw_wide(self, width: int) -> int:
        out = 0
        while width > 64:
            out = (out << 64) | self.draw_bits(64)
            width -= 64
        return (out << width) | self.draw_bits(width)

    def fork(self, *labels: Label) -> "RandomTape":
        """Child tape on the keyed substream ``label + labels``; parent is untouched."""
        return RandomTape(self._seed, self._label + labels)

    def fresh_copy(self) -> "RandomTape":
        """A tape replaying this one's stream from the beginning."""
        return RandomTape(self._seed, self._label)

    def bits_consumed(self) -> int:
        return self.counter

    def __repr__(self) -> str:
        return f"RandomTape(label={self._label!r}, counter={self.counter})"


# Functional aliases matching the operation names used in the docs.
def draw_bits(tape: RandomTape, k: int) -> int:
    return tape.draw_bits(k)


def fork_labeled(tape: RandomTape, label: Label) -> RandomTape:
    return tape.fork(label)


def bits_consumed(tape: RandomTape) -> int:
    return tape.counter


def resolve_seed(flag: Optional[int] = None) -> int:
    """The master seed: explicit flag, else ``$ROTRIE_SEED``, else 0."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(ENV_SEED)
    if env:
        return int(env, 0)
    return 0
