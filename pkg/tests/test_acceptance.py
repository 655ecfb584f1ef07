"""Acceptance criteria 1-10.

Every Monte Carlo criterion runs through the same code path as the
``rotrie-lab`` CLI and is judged by the pure checks in
:mod:`rotrie.lab.criteria` over the CSV it produced.  Each test prints one
pass/fail line.  The full module takes roughly 15 minutes on one core.
"""

import math
import time

import pytest

from rotrie.amplified import at_new
from rotrie.budget import BUDGET_BIT_CONSTANT, bt_new
from rotrie.lab import cli, criteria
from rotrie.lab.experiments import read_csv
from rotrie.manysets import BACKYARD_CONSTANT, SPACE_CONSTANT
from rotrie.randomness import RandomTape, resolve_seed
from rotrie.rotated import rt_new
from rotrie.smallmaps import construction_writes

pytestmark = pytest.mark.acceptance

SEED = resolve_seed(None)
FUZZ_N = 1 << 14
FUZZ_SEEDS = 50
FUZZ_OPS = 100_000
RUNTIME_LIMIT = 300.0  # seconds, criterion 1

_cache = {}


@pytest.fixture
def report(capsys):
    def emit(number, ok, message):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {message}")
        return ok
    return emit


def lab(*argv):
    code, text, checks = cli.run([*argv, "--seed", str(SEED)])
    return code, read_csv(text), checks


def fuzz_rows(n):
    """Criterion-1 workload (50 seeds x 1e5 mixed ops, all structures) at ``n``."""
    if n not in _cache:
        start = time.perf_counter()
        _, rows, checks = lab("fuzz", "--n", str(n), "--trials", str(FUZZ_SEEDS), "--params", f"ops={FUZZ_OPS}")
        _cache[n] = rows, checks, time.perf_counter() - start
    return _cache[n]


def summary(checks):
    return "; ".join(f"{name}: {msg}" for name, (_, msg) in checks)


def test_criterion_01_oracle_equivalence(report):
    rows, checks, elapsed = fuzz_rows(FUZZ_N)
    by_structure = {}
    for r in rows:
        by_structure[r["structure"]] = by_structure.get(r["structure"], 0) + 1
    ops_ok = all(int(r["op_count"]) == FUZZ_OPS for r in rows)
    many_sets = {r["structure"] for r in rows} >= {"manysets"}
    ok = (
        all(ok for _, (ok, _) in checks)
        and by_structure == dict.fromkeys(by_structure, FUZZ_SEEDS)
        and len(by_structure) == 5
        and ops_ok
        and many_sets
        and elapsed < RUNTIME_LIMIT
    )
    assert report(1, ok, f"{summary(checks)}; runs per structure {by_structure}; "
                         f"runtime {elapsed:.1f}s (limit {RUNTIME_LIMIT:.0f}s)")


def test_criterion_02_rotated_load(report):
    n = 1 << 14
    code, rows, checks = lab("load-dist", "--n", str(n), "--trials", "200", "--params", "structure=rotated")
    ell_ok = {r["ell"] for r in rows} == {str(math.ceil(math.log2(n) ** 2))} == {"196"}
    ok = code == 0 and ell_ok and len(rows) == 200
    assert report(2, ok, summary(checks))


def test_criterion_03_amplified_overflow(report):
    n = 1 << 12
    code, rows, checks = lab("overflow", "--n", str(n), "--trials", "500", "--params", "eps=0.5")
    threshold_ok = all(float(r["q_threshold"]) == pytest.approx(n ** 0.9) for r in rows)
    ok = code == 0 and threshold_ok and len(rows) == 500 and criteria.check_failures(rows)[0]
    assert report(3, ok, summary(checks) + f"; failures: {criteria.check_failures(rows)[1]}")


def test_criterion_04_budget_bits(report):
    code, rows, checks = lab("bits", "--trials", "10", "--params", "sizes=1024/16384/262144")
    sizes = {int(r["n"]) for r in rows}
    ok = code == 0 and sizes == {1 << 10, 1 << 14, 1 << 18} and len(rows) == 30
    assert report(4, ok, f"C = {BUDGET_BIT_CONSTANT}; {summary(checks)}")


def test_criterion_05_budget_groups_and_load(report):
    code, rows, checks = lab("load-dist", "--n", str(1 << 12), "--trials", "200", "--params", "structure=budget")
    names = {name for name, _ in checks}
    ok = code == 0 and {"max load", "group balance"} <= names and len(rows) == 200
    assert report(5, ok, summary(checks))


def test_criterion_06_injectivity(report):
    code, rows, checks = lab("injectivity", "--n", str(1 << 16), "--trials", "1000",
                             "--params", "u=40,c=2,keys=1024")
    ok = code == 0 and len(rows) == 1000 and {r["key_count"] for r in rows} == {"1024"}
    assert report(6, ok, summary(checks))


def test_criterion_07_constant_time_init(report):
    counts = {}
    for name, make in (
        ("rotated", lambda n: rt_new(n, n, RandomTape(SEED))),
        ("amplified", lambda n: at_new(n, 0.5, RandomTape(SEED))),
        ("budget", lambda n: bt_new(n, RandomTape(SEED))),
    ):
        counts[name] = (construction_writes(make(1 << 10)), construction_writes(make(1 << 20)))
    ok = all(a == b for a, b in counts.values())
    assert report(7, ok, ", ".join(f"{k}: 2^10 -> {a}, 2^20 -> {b} writes" for k, (a, b) in counts.items()))


@pytest.fixture(scope="module")
def manysets_rows():
    return lab("manysets", "--n", str(1 << 14), "--trials", "100",
               "--params", "p=poly:2,sets=32,workload=random-fill")


def test_criterion_08_backyard(report, manysets_rows):
    code, rows, checks = manysets_rows
    backyard = dict(checks)["backyard"]
    ok = backyard[0] and criteria.check_failures(rows)[0] and len(rows) == 100
    assert report(8, ok, f"C_T = {BACKYARD_CONSTANT}; {backyard[1]}")


def test_criterion_09_space(report, manysets_rows):
    code, rows, checks = manysets_rows
    space = dict(checks)["space"]
    full = all(int(r["op_count"]) == 2 * (1 << 14) for r in rows)
    ok = space[0] and full
    assert report(9, ok, f"C_s = {SPACE_CONSTANT}; {space[1]}")


def test_criterion_10_probe_proxy(report):
    rows = []
    for n in (1 << 10, 1 << 12, 1 << 14):
        rows.extend(fuzz_rows(n)[0])
    ok, message = criteria.check_probes(rows)
    sizes = {int(r["n"]) for r in rows}
    ok = ok and sizes == {1 << 10, 1 << 12, 1 << 14}
    assert report(10, ok, f"bounds {criteria.PROBE_BOUNDS}; {message}")
