import numpy as np
import pytest

from helpers import oracle_run
from rotrie.randomness import RandomTape
from rotrie.rotated import FailureKind, RotatedTrie, default_key_bits, phi, rt_new
from rotrie.smallmaps import construction_writes


def test_phi_examples():
    assert phi(3, 5, 8) == 0
    assert phi(7, 1, 8) == 0
    assert all(phi(0, c, 16) == c for c in range(16))


def test_default_key_bits():
    assert default_key_bits(1 << 14, 14) == 28
    assert default_key_bits(1 << 14, 2) == 28
    assert default_key_bits(1 << 14, 3) == 30


def test_construction_is_constant_work_and_draws_nothing():
    t = RandomTape(1)
    big, small = rt_new(1 << 16, 1 << 16, t), rt_new(1 << 10, 1 << 10, RandomTape(1))
    assert construction_writes(big) == construction_writes(small)
    assert t.counter == 0
    assert big.query(12345) is None


def test_round_trip_overwrite_delete():
    trie = RotatedTrie(1 << 10, tape=RandomTape(2))
    trie.insert(5, 9)
    assert trie.query(5) == 9
    trie.insert(5, 10)
    assert trie.query(5) == 10
    assert trie.delete(5) is True
    assert trie.query(5) is None
    assert trie.delete(5) is False
    assert trie.delete(77) is False
    trie.insert(5, 11)
    assert trie.query(5) == 11 and len(trie) == 1


def test_lazy_rotations_cost_log_n_each():
    t = RandomTape(3)
    trie = RotatedTrie(1 << 8, 1 << 4, t)  # depth 4
    trie.insert(0xABCD, 1)
    assert trie.node_count == 4
    assert t.counter == 4 * 8 == trie.bits_used


def test_sibling_last_digit_is_absent():
    trie = RotatedTrie(1 << 8, 1 << 4, RandomTape(4))
    trie.insert(0x1234, "x")
    assert trie.query(0x1235) is None
    assert trie.query(0x1234) == "x"


def test_max_load_basics():
    trie = RotatedTrie(1 << 8, tape=RandomTape(5))
    assert trie.max_load() == 0
    trie.insert(3, 3)
    assert trie.max_load() >= 1


def test_two_sources_share_a_bin():
    # search seeds at n=16 until the children for first digits 1 and 2 get
    # equal rotations, so their digit-0 balls land in the same bin
    for seed in range(2000):
        trie = RotatedTrie(16, tape=RandomTape(seed))
        trie.insert(0x10, "a")
        trie.insert(0x20, "b")
        s1, s2 = 1, 2
        if trie.rotation(s1) == trie.rotation(s2):
            break
    else:
        pytest.fail("no seed found")
    shared = [b for _, b in trie._bins.touched() if s1 in b and s2 in b]
    assert len(shared) == 1
    assert trie.query(0x10) == "a" and trie.query(0x20) == "b"


def test_oracle_10k_inserts():
    rng = np.random.default_rng(0)
    trie = RotatedTrie(1 << 14, tape=RandomTape(6))
    keys = rng.integers(0, 1 << 28, size=10_000).tolist()
    ref = {}
    for i, k in enumerate(keys):
        trie.insert(k, i)
        ref[k] = i
    assert dict(trie.items()) == ref
    assert all(trie.query(k) == v for k, v in ref.items())


def test_overflow_sets_failure_but_answers_stay_correct():
    trie = RotatedTrie(16, tape=RandomTape(7), ell=1)
    ops = [(0, k) for k in range(256)] + [(2, k) for k in range(256)] + [(1, k) for k in range(0, 256, 3)]
    ops += [(2, k) for k in range(256)] + [(0, k) for k in range(0, 256, 3)] + [(2, k) for k in range(256)]
    oracle_run(trie, ops)
    assert trie.failure is FailureKind.BIN_OVERFLOW
    assert trie.failure_count > 0


def test_allocator_budget_is_a_failure():
    class Tight(RotatedTrie):
        node_budget_factor = 0

    trie = Tight(16, tape=RandomTape(8))
    trie.insert(1, 1)
    assert trie.failure is FailureKind.ALLOCATOR
    assert trie.query(1) == 1


def test_key_range_checked():
    trie = RotatedTrie(16, tape=RandomTape(0))
    with pytest.raises(ValueError):
        trie.insert(1 << 8, 0)
    with pytest.raises(ValueError):
        trie.query(-1)


@pytest.mark.parametrize("n,f", [(12, None), (16, 3), (16, 32)])
def test_bad_shapes(n, f):
    with pytest.raises(ValueError):
        RotatedTrie(n, f)


def test_insert_order_does_not_change_answers():
    rng = np.random.default_rng(1)
    keys = rng.integers(0, 1 << 20, size=2000).tolist()
    a = RotatedTrie(1 << 10, tape=RandomTape(9))
    b = RotatedTrie(1 << 10, tape=RandomTape(9))
    for k in keys:
        a.insert(k, k * 3)
    for k in reversed(keys):
        b.insert(k, k * 3)
    probe = keys + rng.integers(0, 1 << 20, size=500).tolist()
    assert [a.query(k) for k in probe] == [b.query(k) for k in probe]
