import numpy as np
import pytest

from rotrie.randomness import (
    ENV_SEED, RandomTape, bits_consumed, draw_bits, fork_labeled, resolve_seed, seed_material,
)


def test_same_seed_and_label_replay():
    a, b = RandomTape(7, ("x", 3)), RandomTape(7, ("x", 3))
    assert [a.draw_bits(1) for _ in range(2)] == [b.draw_bits(1) for _ in range(2)]
    assert [a.draw_bits(64) for _ in range(20)] == [b.draw_bits(64) for _ in range(20)]


def test_counter_is_sum_of_widths():
    t = RandomTape(1)
    draw_bits(t, 13)
    draw_bits(t, 5)
    assert bits_consumed(t) == 18


def test_fresh_tape_has_consumed_nothing():
    assert bits_consumed(RandomTape(99)) == 0


def test_counter_after_wide_and_single_bit_draws():
    t = RandomTape(2)
    t.draw_bits(32)
    assert t.counter == 32
    t = RandomTape(2)
    for _ in range(1 << 10):
        t.draw_bits(1)
    assert t.counter == 1024


def test_single_bit_mean_is_fair():
    t = RandomTape(5)
    mean = np.mean([t.draw_bits(1) for _ in range(100_000)])
    assert abs(mean - 0.5) <= 0.01


@pytest.mark.parametrize("k", [0, 65, -1])
def test_draw_width_contract(k):
    with pytest.raises(ValueError):
        RandomTape(0).draw_bits(k)


def test_draw_width_bounds():
    t = RandomTape(0)
    assert 0 <= t.draw_bits(64) < 1 << 64
    assert t.draw_bits(1) in (0, 1)


def test_forks_with_distinct_labels_differ():
    t = RandomTape(3)
    g, h = fork_labeled(t, "g"), fork_labeled(t, "h")
    assert g.draw_bits(64) != h.draw_bits(64)


def test_fork_is_deterministic_and_leaves_parent_alone():
    t = RandomTape(3)
    t.draw_bits(10)
    c1, c2 = fork_labeled(t, 7), fork_labeled(t, 7)
    assert t.counter == 10
    assert c1.counter == 0
    assert [c1.draw_bits(64) for _ in range(4)] == [c2.draw_bits(64) for _ in range(4)]
    assert c1.label == (7,) and t.fork("a", 1).label == ("a", 1)


def test_int_and_str_labels_do_not_alias():
    t = RandomTape(3)
    assert t.fork(7).draw_bits(64) != t.fork("7").draw_bits(64)


def test_fresh_copy_replays_from_start():
    t = RandomTape(4, ("q",))
    first = [t.draw_bits(17) for _ in range(5)]
    c = t.fresh_copy()
    assert c.counter == 0
    assert [c.draw_bits(17) for _ in range(5)] == first


def test_bits_are_msb_first_across_block_boundaries():
    # 512-bit blocks: 9 draws of 60 bits straddle the first boundary
    a = RandomTape(8)
    wide = [a.draw_bits(60) for _ in range(9)]
    b = RandomTape(8)
    narrow = [b.draw_bits(30) for _ in range(18)]
    assert wide == [(narrow[2 * i] << 30) | narrow[2 * i + 1] for i in range(9)]


def test_draw_below_is_in_range_and_charged():
    t = RandomTape(6)
    xs = [t.draw_below(5) for _ in range(200)]
    assert set(xs) == {0, 1, 2, 3, 4}
    assert t.counter >= 200 * 3 and t.counter % 3 == 0


def test_seed_material_is_256_bits():
    assert len(seed_material(0)) == 32
    assert seed_material(1) != seed_material(2)
    assert RandomTape(b"\x01" * 32).seed == b"\x01" * 32


def test_resolve_seed_prefers_flag(monkeypatch):
    monkeypatch.setenv(ENV_SEED, "77")
    assert resolve_seed(5) == 5
    assert resolve_seed(None) == 77
    monkeypatch.delenv(ENV_SEED)
    assert resolve_seed(None) == 0
