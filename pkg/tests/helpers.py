"""Shared test helpers."""

from rotrie.randomness import RandomTape


class ZeroTape(RandomTape):
    """A pinned tape: every draw returns 0 (still charged to the counter)."""

    __slots__ = ()

    def draw_bits(self, k):
        if not 1 <= k <= 64:
            raise ValueError(k)
        self.counter += k
        return 0

    def fork(self, *labels):
        return ZeroTape(self.seed, self.label + labels)

    def fresh_copy(self):
        return ZeroTape(self.seed, self.label)


def oracle_run(d, ops, seed=0):
    """Apply ``ops`` ((kind, key) pairs: 0 insert, 1 delete, 2 query) to ``d``
    and to a dict, asserting agreement.  Returns the dict."""
    ref = {}
    for pos, (kind, key) in enumerate(ops):
        if kind == 0:
            d.insert(key, pos)
            ref[key] = pos
        elif kind == 1:
            assert bool(d.delete(key)) == (key in ref), (pos, kind, key)
            ref.pop(key, None)
        else:
            assert d.query(key) == ref.get(key), (pos, kind, key)
    return ref
