"""Hash families drawn from a :class:`~rotrie.randomness.RandomTape`.

* :class:`KWiseHash` -- degree ``k-1`` polynomials over a prime field.
* :class:`LoadBalancingHash` -- a gradually-increasing-independence
  composition of polynomial hashes, each level fixing a shrinking slice of
  the output bits with growing independence.
* :class:`PrimeProductHash` -- ``x mod p_1 ... p_r`` for random small primes,
  used for universe reduction.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .randomness import RandomTape

# Documented constant in the load-balancing construction budget
# bits <= GII_BIT_CONSTANT * log2(t) * log2(log2(t)) for the desk-scale range.
GII_BIT_CONSTANT = 10


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    i = 3
    while i * i <= m:
        if m % i == 0:
            return False
        i += 2
    return True


@lru_cache(maxsize=64)
def field_prime(domain: int) -> int:
    """Largest prime below ``2**b`` where ``b`` is the least width with ``2**(b-1) >= domain``.

    The prime exceeds ``domain`` (Bertrand) and sits just under a power of two,
    so reducing ``b`` raw tape bits mod ``p`` is almost exactly uniform.
    """
    b = max(2, (max(domain, 2) - 1).bit_length() + 1)
    p = (1 << b) - 1
    while not is_prime(p):
        p -= 2
    return p


@lru_cache(maxsize=16)
def _sieve(limit: int) -> Tuple[int, ...]:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return tuple(int(x) for x in np.flatnonzero(flags))


def enumerate_primes(limit: int) -> List[int]:
    """All primes ``<= limit`` in increasing order."""
    if limit < 2:
        raise ValueError("limit must be at least 2")
    return list(_sieve(limit))


class KWiseHash:
    """``x -> (c0 + c1 x + ... + c_{k-1} x^{k-1} mod p) mod range``."""

    __slots__ = ("k", "p", "coefficients", "range", "bits_used")

    def __init__(self, coefficients: Sequence[int], p: int, range_: int, bits_used: int = 0):
        if range_ < 1:
            raise ValueError("range must be positive")
        self.coefficients = tuple(int(c) % p for c in coefficients)
        self.k = len(self.coefficients)
        self.p = p
        self.range = range_
        self.bits_used = bits_used

    @classmethod
    def draw(cls, tape: RandomTape, k: int, domain: int, range_: int) -> "KWiseHash":
        if k < 2 or k % 2:
            raise ValueError("independence k must be even and >= 2")
        p = field_prime(domain)
        width = p.bit_length()
        coefficients = [tape.draw_bits(width) % p for _ in range(k)]
        return cls(coefficients, p, range_, bits_used=k * width)

    def __call__(self, x: int) -> int:
        p = self.p
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * x + c) % p
        return acc % self.range

    eval = __call__

    def __repr__(self) -> str:
        return f"KWiseHash(k={self.k}, p={self.p}, range={self.range})"


def kwise_new(tape: RandomTape, k: int, domain: int, range_: int) -> KWiseHash:
    return KWiseHash.draw(tape, k, domain, range_)


def kwise_eval(h: KWiseHash, x: int) -> int:
    return h(x)


def gii_schedule(t: int) -> List[Tuple[int, int]]:
    """Per-level ``(output_bits, independence)`` for range ``t``.

    Level ``i`` leaves ``ceil((3/4)**i * T)`` of the ``T = ceil(log2 t)`` output
    bits undetermined, so it fixes a ``Theta((3/4)**i T)`` slice; the last of
    the ``ceil(log2 log2 t) + 1`` levels fixes whatever remains.  Independence
    at level ``i`` is ``2 * ceil((4/3)**i)``.
    """
    if t < 4:
        raise ValueError("range must be at least 4")
    total = (t - 1).bit_length()
    levels = math.ceil(math.log2(total)) + 1
    schedule = []
    remaining = total
    for i in range(1, levels + 1):
        if remaining == 0:
            break
        if i == levels:
            width = remaining
        else:
            left = math.ceil((3 / 4) ** i * total - 1e-9)
            width = max(1, remaining - left)
        width = min(width, remaining)
        schedule.append((width, 2 * math.ceil((4 / 3) ** i - 1e-9)))
        remaining -= width
    return schedule


class LoadBalancingHash:
    """Composition of polynomial hashes with gradually increasing independence.

    Level 1 supplies the high-order output bits.  Evaluation costs
    ``O(sum k_i)`` field operations, which is super-constant; callers evaluate
    it once per node and cache the result.
    """

    __slots__ = ("t", "domain", "levels", "bits_used", "_width")

    def __init__(self, t: int, domain: int, levels: Sequence[Tuple[int, KWiseHash]]):
        self.t = t
        self.domain = domain
        self.levels = tuple(levels)
        self._width = sum(w for w, _ in self.levels)
        self.bits_used = sum(h.bits_used for _, h in self.levels)

    @classmethod
    def draw(cls, tape: RandomTape, t: int, domain: Optional[int] = None) -> "LoadBalancingHash":
        domain = t if domain is None else domain
        levels = [(w, KWiseHash.draw(tape, k, domain, 1 << w)) for w, k in gii_schedule(t)]
        return cls(t, domain, levels)

    def __call__(self, x: int) -> int:
        out = 0
        for width, h in self.levels:
            out = (out << width) | h(x)
        return out if out < self.t else out % self.t

    eval = __call__

    @property
    def output_bits(self) -> int:
        return self._width

    def __repr__(self) -> str:
        return f"LoadBalancingHash(t={self.t}, levels={[(w, h.k) for w, h in self.levels]})"


def gii_new(tape: RandomTape, t: int, domain: Optional[int] = None) -> LoadBalancingHash:
    return LoadBalancingHash.draw(tape, t, domain)


def gii_eval(h: LoadBalancingHash, x: int) -> int:
    return h(x)


def gii_bit_bound(t: int) -> float:
    lt = math.log2(t)
    return GII_BIT_CONSTANT * lt * math.log2(lt)


class ConfigurationError(ValueError):
    """Parameters violate a construction's precondition."""


class PrimeProductHash:
    """``x -> x mod (p_1 * ... * p_r)``."""

    __slots__ = ("primes", "modulus", "bits_used")

    def __init__(self, primes: Sequence[int], bits_used: int = 0):
        if not primes:
            raise ValueError("need at least one prime")
        self.primes = tuple(primes)
        self.modulus = math.prod(self.primes)
        self.bits_used = bits_used

    @classmethod
    def draw(cls, tape: RandomTape, prime_limit: int, count: int) -> "PrimeProductHash":
        """``count`` primes drawn independently and uniformly from primes <= ``prime_limit``."""
        pool = _sieve(prime_limit)
        before = tape.counter
        primes = [pool[tape.draw_below(len(pool))] for _ in range(count)]
        return cls(primes, bits_used=tape.counter - before)

    def __call__(self, x: int) -> int:
        return x % self.modulus

    eval = __call__

    @property
    def output_bits(self) -> int:
        return (self.modulus - 1).bit_length()

    def is_injective_on(self, keys) -> bool:
        images = set()
        m = self.modulus
        for x in keys:
            r = x % m
            if r in images:
                return False
            images.add(r)
        return True

    def __repr__(self) -> str:
        return f"PrimeProductHash(primes={self.primes})"


def pph_prime_limit(n: int, c: int) -> int:
    """``floor(n ** (2/c))`` computed in exact integer arithmetic."""
    # largest m with m**c <= n**2
    target = n * n
    m = int(round(target ** (1.0 / c)))
    while m ** c > target:
        m -= 1
    while (m + 1) ** c <= target:
        m += 1
    return m


def pph_new(tape: RandomTape, n: int, u: int, c: int) -> PrimeProductHash:
    """Universe reduction ``[2**u] -> [n**(2c)]`` with ``c*c`` primes from ``[n**(2/c)]``."""
    if c < 2:
        raise ConfigurationError("c must be at least 2")
    if not n > u ** c:
        raise ConfigurationError(f"need n > u**c, got n={n}, u={u}, c={c}")
    return PrimeProductHash.draw(tape, pph_prime_limit(n, c), c * c)


def pph_eval(h: PrimeProductHash, x: int) -> int:
    return h(x)


def prime_count_below(limit: int) -> int:
    return bisect_right(_sieve(max(limit, 2)), limit)
