"""Pass/fail checks over CSV rows.

Every check takes rows as parsed by :func:`~rotrie.lab.experiments.read_csv`
(strings) and returns ``(ok, message)``.  Nothing here touches a live
structure, so any check can be rerun on a saved CSV.
"""

from __future__ import annotations

import math
import statistics
from typing import Dict, Iterable, List, Sequence, Tuple

from .experiments import histogram_quantile, merge_histograms, parse_histogram

Rows = Sequence[Dict[str, str]]
Verdict = Tuple[bool, str]

# 99.9th-percentile probes per operation on the mixed-ops fuzz workload, one
# constant per structure for every n.  The worst operation is a handful of
# root-to-leaf walks (the operation itself, the tombstone in the old instance
# during a phase migration, and up to four migrated records), so each bound is
# about 6 walks times the structure's depth in digits, which is constant:
#   rotated         2 levels                              measured <= 12
#   amplified       ceil(2 / delta) = 20 levels at eps=0.5   measured <= 120
#   budget          8 levels, 2 probes each (proxy + bin)     measured <= 30
#   budget-large-u  reduced keys of <= 16 digits, 2 probes   measured <= 136
#   manysets        skeleton + backyard + set migration       measured <= 127
# (measured: 5 seeds each at n = 2^10, 2^12, 2^14)
PROBE_BOUNDS = {
    "rotated": 16,
    "amplified": 128,
    "budget": 48,
    "budget-large-u": 192,
    "manysets": 192,
}

INJECTIVITY_MAX_FAILURE = 0.01


def _ints(rows: Rows, col: str) -> List[int]:
    return [int(r[col]) for r in rows]


def check_failures(rows: Rows, allowed: Iterable[str] = ("none",)) -> Verdict:
    allowed = set(allowed)
    bad = [r["seed"] for r in rows if r["failure_kind"] not in allowed]
    return not bad, f"{len(bad)} trial(s) with failure_kind outside {sorted(allowed)}"


def check_max_load(rows: Rows) -> Verdict:
    """Every trial's maximum bin load is at most its ``ell``."""
    worst = max((int(r["max_load"]) - int(r["ell"]) for r in rows), default=0)
    top = max(_ints(rows, "max_load"), default=0)
    return worst <= 0, f"max load {top} vs ell {rows[0]['ell'] if rows else '?'}"


def check_mean_load(rows: Rows, sigmas: float = 3.0) -> Verdict:
    """Mean sampled-bin load across trials lies within ``sigmas`` standard
    errors of ``balls / n``."""
    samples = [float(r["sample_mean_load"]) for r in rows]
    expected = statistics.fmean(int(r["balls"]) / int(r["n"]) for r in rows)
    mean = statistics.fmean(samples)
    se = statistics.stdev(samples) / math.sqrt(len(samples)) if len(samples) > 1 else 0.0
    ok = abs(mean - expected) <= sigmas * se if se > 0 else mean == expected
    return ok, f"sampled mean {mean:.5f}, expected {expected:.5f}, {sigmas} se = {sigmas * se:.5f}"


def check_group_balance(rows: Rows, factor: float = 4.0) -> Verdict:
    """Largest bin group holds at most ``factor * balls / f`` balls."""
    worst = max((int(r["max_group"]) / (factor * int(r["balls"]) / int(r["f"])) for r in rows), default=0.0)
    return worst <= 1.0, f"worst max_group / ({factor} balls/f) = {worst:.3f}"


def check_overflow(rows: Rows) -> Verdict:
    """``q`` stays below ``n**(1 - delta)`` in every trial and its median is 0."""
    qs = _ints(rows, "overflow_q")
    limit = min(float(r["q_threshold"]) for r in rows)
    med = statistics.median(qs) if qs else 0
    ok = all(q < limit for q in qs) and med == 0
    return ok, f"max q {max(qs, default=0)} (limit {limit:.1f}), median q {med}"


def check_bits(rows: Rows) -> Verdict:
    """Bits within the bound at each n, and identical across seeds at each n."""
    by_n: Dict[str, set] = {}
    over = []
    for r in rows:
        by_n.setdefault(r["n"], set()).add(int(r["bits_used"]))
        if int(r["bits_used"]) > float(r["bit_bound"]):
            over.append(r["n"])
    varying = sorted((n for n, v in by_n.items() if len(v) > 1), key=int)
    detail = ", ".join(f"n={n}: {sorted(v)}" for n, v in sorted(by_n.items(), key=lambda kv: int(kv[0])))
    return not over and not varying, f"{detail}; over bound at {over or 'none'}; varying at {varying or 'none'}"


def check_injectivity(rows: Rows, max_fraction: float = INJECTIVITY_MAX_FAILURE) -> Verdict:
    fails = sum(1 for r in rows if r["injective"] != "1")
    frac = fails / len(rows) if rows else 0.0
    return frac <= max_fraction, f"{fails}/{len(rows)} non-injective ({frac:.2%}, limit {max_fraction:.0%})"


def check_backyard(rows: Rows) -> Verdict:
    over_total = [r["seed"] for r in rows if int(r["backyard_size"]) > float(r["backyard_bound"])]
    over_cat = [r["seed"] for r in rows if int(r["backyard_max_category"]) > float(r["category_bound"])]
    top = max(_ints(rows, "backyard_size"), default=0)
    top_cat = max(_ints(rows, "backyard_max_category"), default=0)
    ok = not over_total and not over_cat
    return ok, (f"max |T| {top} (bound {rows[0]['backyard_bound'] if rows else '?'}), "
                f"max per category {top_cat} (bound {rows[0]['category_bound'] if rows else '?'})")


def check_space(rows: Rows) -> Verdict:
    worst = max((int(r["space_bits"]) / float(r["space_bound"]) for r in rows), default=0.0)
    return worst <= 1.0, f"worst space_bits / bound = {worst:.3f}"


def check_fuzz(rows: Rows) -> Verdict:
    bad = [f"{r['structure']}@{r['seed']}" for r in rows if r["mismatch"] != "0"]
    return not bad, f"{len(rows)} runs, {len(bad)} mismatch(es) {bad[:5]}"


def probe_quantiles(rows: Rows, q: float = 0.999) -> Dict[Tuple[str, int], int]:
    """Per (structure, n): the ``q`` quantile of the pooled per-op probe histogram."""
    pooled: Dict[Tuple[str, int], list] = {}
    for r in rows:
        pooled.setdefault((r["structure"], int(r["n"])), []).append(parse_histogram(r["probe_count_histogram"]))
    return {key: histogram_quantile(merge_histograms(hs), q) for key, hs in pooled.items()}


def check_probes(rows: Rows, bounds: Dict[str, int] = PROBE_BOUNDS, q: float = 0.999) -> Verdict:
    quant = probe_quantiles(rows, q)
    over = {k: v for k, v in quant.items() if v > bounds[k[0]]}
    detail = ", ".join(f"{s}@{n}={v}" for (s, n), v in sorted(quant.items()))
    return not over, f"p{q * 100:g} probes: {detail}; over bound: {over or 'none'}"
