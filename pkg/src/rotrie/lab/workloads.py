"""Operation sequences for experiments and fuzzing.

An operation is a pair ``(kind, key)`` with kind ``INSERT``, ``DELETE`` or
``QUERY``.  Values are not part of the sequence: the driver stores the
operation's position, which keeps values stable under minimization.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

INSERT, DELETE, QUERY = 0, 1, 2
KIND_NAMES = ("insert", "delete", "query")
WORKLOADS = ("random-fill", "adversarial-prefix", "mixed-ops")

Op = Tuple[int, int]


def distinct_keys(rng: np.random.Generator, count: int, bits: int) -> List[int]:
    """``count`` distinct uniform keys below ``2**bits``."""
    if count > (1 << bits):
        raise ValueError(f"cannot draw {count} distinct {bits}-bit keys")
    out: List[int] = []
    seen = set()
    while len(out) < count:
        want = (count - len(out)) * 2 + 16
        if bits <= 62:
            batch = rng.integers(0, 1 << bits, size=want, dtype=np.int64).tolist()
        else:
            hi = rng.integers(0, 1 << (bits - 32), size=want, dtype=np.int64).tolist()
            lo = rng.integers(0, 1 << 32, size=want, dtype=np.int64).tolist()
            batch = [(a << 32) | b for a, b in zip(hi, lo)]
        for k in batch:
            if k not in seen:
                seen.add(k)
                out.append(k)
                if len(out) == count:
                    break
    return out


def packed_set_keys(rng: np.random.Generator, count: int, sets: int, key_bits: int) -> List[int]:
    """``count`` distinct packed many-sets keys ``(i << key_bits) | x`` over ``sets`` sets."""
    xs = distinct_keys(rng, count, key_bits)
    owners = rng.integers(0, sets, size=count).tolist()
    return [(i << key_bits) | x for i, x in zip(owners, xs)]


def key_pool(rng: np.random.Generator, count: int, bits: int, sets: int = 0, set_key_bits: int = 0) -> List[int]:
    if sets:
        return packed_set_keys(rng, count, sets, set_key_bits)
    return distinct_keys(rng, count, bits)


def random_fill(pool: List[int]) -> List[Op]:
    """Insert every pool key once, then query each."""
    return [(INSERT, k) for k in pool] + [(QUERY, k) for k in pool]


def adversarial_prefix(rng: np.random.Generator, count: int, bits: int, sets: int = 0, set_key_bits: int = 0) -> List[Op]:
    """Insert a run of consecutive keys (one long shared prefix), delete a
    random half, and query the run plus its neighbours."""
    width = set_key_bits if sets else bits
    base = int(rng.integers(0, (1 << width) - count))
    keys = list(range(base, base + count))
    if sets:
        keys = [(int(i) << set_key_bits) | k for i, k in zip(rng.integers(0, sets, size=count), keys)]
    ops: List[Op] = [(INSERT, k) for k in keys]
    for idx in rng.permutation(count)[: count // 2].tolist():
        ops.append((DELETE, keys[idx]))
    ops.extend((QUERY, k) for k in keys)
    return ops


def mixed_ops(rng: np.random.Generator, pool: List[int], count: int,
              mix: Tuple[float, float, float] = (0.5, 0.2, 0.3)) -> List[Op]:
    """``count`` operations on keys drawn uniformly from ``pool``."""
    kinds = rng.choice(3, size=count, p=mix).tolist()
    picks = rng.integers(0, len(pool), size=count).tolist()
    return [(kind, pool[j]) for kind, j in zip(kinds, picks)]


def make_ops(workload: str, rng: np.random.Generator, n: int, bits: int, *,
             op_count: int = 0, sets: int = 0, set_key_bits: int = 0, load: int = 0) -> List[Op]:
    """Operations for ``workload``; ``load`` keys (default ``n``) for the fill workloads."""
    load = load or n
    if workload == "random-fill":
        return random_fill(key_pool(rng, load, bits, sets, set_key_bits))
    if workload == "adversarial-prefix":
        return adversarial_prefix(rng, load, bits, sets, set_key_bits)
    if workload == "mixed-ops":
        pool = key_pool(rng, n, bits, sets, set_key_bits)
        return mixed_ops(rng, pool, op_count or 10 * n)
    raise ValueError(f"unknown workload {workload!r}; expected one of {', '.join(WORKLOADS)}")
