"""Model-based property tests: every structure agrees with a dict."""

from hypothesis import given, settings
from hypothesis import strategies as st

from rotrie.amplified import AmplifiedTrie
from rotrie.budget import BudgetTrie, LargeUniverseBudgetTrie
from rotrie.lifecycle import MIGRATION_RATE, PhasedDict
from rotrie.manysets import ManySets
from rotrie.randomness import RandomTape
from rotrie.rotated import RotatedTrie
from rotrie.smallmaps import BinOverflow, BoundedDict, LazyArray

KEY_BITS = 12
keys = st.integers(0, (1 << KEY_BITS) - 1)
ops = st.lists(st.tuples(st.sampled_from((0, 1, 2)), keys), max_size=300)
seeds = st.integers(0, (1 << 64) - 1)


def check_against_dict(d, ops):
    ref = {}
    for pos, (kind, key) in enumerate(ops):
        if kind == 0:
            d.insert(key, pos)
            ref[key] = pos
        elif kind == 1:
            assert bool(d.delete(key)) == (key in ref)
            ref.pop(key, None)
        else:
            assert d.query(key) == ref.get(key)
    return ref


@given(st.lists(st.tuples(st.sampled_from((0, 1, 2)), st.integers(0, 20)), max_size=200), st.integers(1, 8))
def test_bounded_dict_matches_dict(ops, cap):
    b = BoundedDict(cap)
    ref = {}
    for kind, key in ops:
        if kind == 0:
            if key in ref or len(ref) < cap:
                b.insert(key, key)
                ref[key] = key
            else:
                try:
                    b.insert(key, key)
                except BinOverflow:
                    pass
                else:
                    raise AssertionError("insert into a full BoundedDict succeeded")
        elif kind == 1:
            assert b.delete(key) == (ref.pop(key, None) is not None)
        else:
            assert b.query(key) == ref.get(key)
        assert len(b) == len(ref) <= cap


@given(st.lists(st.tuples(st.integers(0, 99), st.integers()), max_size=100), st.integers(0, 99))
def test_lazy_array_reads_default_until_set(writes, probe):
    a = LazyArray(100, default="d")
    ref = {}
    for i, v in writes:
        a.set(i, v)
        ref[i] = v
    assert a.get(probe) == ref.get(probe, "d")
    assert dict(a.touched()) == ref


@settings(max_examples=60, deadline=None)
@given(ops, seeds)
def test_rotated_matches_dict(ops, seed):
    check_against_dict(RotatedTrie(1 << 6, 1 << 3, RandomTape(seed), key_bits=KEY_BITS), ops)


@settings(max_examples=60, deadline=None)
@given(ops, seeds)
def test_rotated_small_bins_still_correct(ops, seed):
    # ell = 2 forces bin overflow; answers must stay correct
    check_against_dict(RotatedTrie(16, 4, RandomTape(seed), ell=2, key_bits=KEY_BITS), ops)


@settings(max_examples=60, deadline=None)
@given(ops, seeds)
def test_amplified_matches_dict(ops, seed):
    check_against_dict(AmplifiedTrie(1 << 6, 0.5, RandomTape(seed), ell=3, key_bits=KEY_BITS), ops)


@settings(max_examples=60, deadline=None)
@given(ops, seeds, st.integers(1, 6))
def test_budget_matches_dict(ops, seed, ell):
    check_against_dict(BudgetTrie(1 << 6, RandomTape(seed), ell=ell, key_bits=KEY_BITS), ops)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from((0, 1, 2)), st.integers(0, (1 << 24) - 1)), max_size=200), seeds)
def test_large_universe_matches_dict(ops, seed):
    check_against_dict(LargeUniverseBudgetTrie(1 << 12, 24, 2, RandomTape(seed)), ops)


@settings(max_examples=40, deadline=None)
@given(ops, seeds, st.booleans())
def test_phased_matches_dict_and_bounds_work(ops, seed, dynamic):
    d = PhasedDict(lambda cap, t: RotatedTrie(cap, 4, t, key_bits=KEY_BITS), 16, RandomTape(seed), dynamic=dynamic)
    ref = {}
    for pos, (kind, key) in enumerate(ops):
        if kind == 0:
            d.insert(key, pos)
            ref[key] = pos
        elif kind == 1:
            assert d.delete(key) == (ref.pop(key, None) is not None)
        else:
            assert d.query(key) == ref.get(key)
        assert d.last_migration_work <= MIGRATION_RATE
        assert d.shadow is None or d.active is not d.shadow
        d.audit()
    assert dict(d.items()) == ref


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from((0, 1, 2)), st.integers(0, 3), st.integers(0, 300)), max_size=400), seeds)
def test_manysets_matches_dicts(ops, seed):
    ms = ManySets(1 << 12, tape=RandomTape(seed))
    ref = {}
    for pos, (kind, i, x) in enumerate(ops):
        if kind == 0:
            ms.insert(i, x, pos)
            ref[(i, x)] = pos
        elif kind == 1:
            assert ms.delete(i, x) == (ref.pop((i, x), None) is not None)
        else:
            assert ms.query(i, x) == ref.get((i, x))
    ms.audit()
    for i in range(4):
        assert dict(ms.set_items(i)) == {x: v for (j, x), v in ref.items() if j == i}
    assert ms.backyard_size() == sum(st_.yard_count for st_ in ms.sets.values())


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(4, 10))
def test_rotation_draws_are_log_n_bits_each(seed, log_n):
    t = RandomTape(seed)
    trie = RotatedTrie(1 << log_n, 2, t, key_bits=2 * log_n)
    for k in range(5):
        trie.insert(k * 37 % (1 << (2 * log_n)), k)
    assert t.counter == trie.node_count * log_n
    assert all(0 <= trie.rotation(s) < 1 << log_n for s in range(trie.node_count))
