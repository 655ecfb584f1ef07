"""``rotrie-lab``: Monte Carlo suites and oracle fuzzing with CSV output.

Exit status is 0 when every check passes, 2 when a check breaches its
threshold, and 1 on errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..budget import BudgetTrie, budget_bit_bound
from ..hashkit import ConfigurationError, pph_new
from ..manysets import backyard_bound, category_backyard_bound
from ..randomness import ENV_SEED, resolve_seed
from . import criteria
from .experiments import (
    RECORD_COLUMNS, ExperimentSpec, TrialRecord, histogram, read_csv, run_experiment, trial_tapes, write_csv,
)
from .fuzz import fuzz_oracle
from .structures import STRUCTURES, Params, Subject
from .workloads import distinct_keys

log = logging.getLogger("rotrie.lab")

LOAD_SAMPLE_BINS = 64

HEADERS = {
    "load-dist": RECORD_COLUMNS + ("balls", "ell", "f", "max_group", "sample_mean_load"),
    "overflow": RECORD_COLUMNS + ("eps", "q_threshold"),
    "bits": RECORD_COLUMNS + ("bit_bound",),
    "injectivity": ("seed", "n", "u", "c", "key_count", "injective", "bits_used", "output_bits"),
    "manysets": RECORD_COLUMNS + (
        "backyard_bound", "backyard_max_category", "category_bound", "space_bits", "space_bound",
    ),
    "fuzz": RECORD_COLUMNS + ("mismatch",),
}

DEFAULTS = {
    "load-dist": (1 << 14, 200),
    "overflow": (1 << 12, 500),
    "bits": (None, 10),
    "injectivity": (1 << 16, 1000),
    "manysets": (1 << 14, 100),
    "fuzz": (1 << 14, 50),
}

Checks = List[Tuple[str, criteria.Verdict]]


def _with_defaults(params: Params, **defaults) -> str:
    merged = Params(defaults)
    merged.update(params)
    return merged.render()


# -- extras ------------------------------------------------------------------

def load_extras(subject: Subject) -> Dict[str, object]:
    trie = subject.inner()
    loads = dict(trie.bin_loads())
    step = max(1, trie.n // LOAD_SAMPLE_BINS)
    sample = [loads.get(j, 0) for j in range(0, trie.n, step)]
    census = trie.group_census() if isinstance(trie, BudgetTrie) else [0]
    return {
        "balls": trie.balls,
        "ell": trie.ell,
        "f": trie.f,
        "max_group": max(census),
        "sample_mean_load": sum(sample) / len(sample),
    }


def overflow_extras(subject: Subject) -> Dict[str, object]:
    trie = subject.inner()
    return {"eps": trie.eps, "q_threshold": trie.space_threshold}


def manysets_extras(subject: Subject) -> Dict[str, object]:
    ms = subject.impl.ms
    n = ms.n
    return {
        "backyard_bound": backyard_bound(n),
        "backyard_max_category": max(ms.backyard_by_category().values(), default=0),
        "category_bound": category_backyard_bound(n),
        "space_bits": ms.space_bits(),
        "space_bound": ms.space_bound(),
    }


# -- subcommands -------------------------------------------------------------

def cmd_load_dist(args, params: Params) -> List[TrialRecord]:
    structure = params.text("structure", "rotated")
    spec = ExperimentSpec(
        structure, args.n, args.trials, args.seed,
        workload=params.text("workload", "random-fill"),
        params=_with_defaults(params, phased=0),
    )
    return list(run_experiment(spec, load_extras))


def _load_checks(rows) -> Checks:
    checks = [("failures", criteria.check_failures(rows)), ("max load", criteria.check_max_load(rows))]
    if rows and rows[0]["structure"] == "budget":
        checks.append(("group balance", criteria.check_group_balance(rows)))
    else:
        checks.append(("mean load", criteria.check_mean_load(rows)))
    return checks


def cmd_overflow(args, params: Params):
    spec = ExperimentSpec(
        "amplified", args.n, args.trials, args.seed,
        workload=params.text("workload", "random-fill"),
        params=_with_defaults(params, phased=0, eps=0.5),
    )
    return list(run_experiment(spec, overflow_extras))


def _bit_sizes(args, params: Params) -> List[int]:
    """``--n`` if given, else ``sizes`` (slash-separated, since params split on commas)."""
    if args.n_given:
        return [args.n]
    return [int(x) for x in params.text("sizes", "1024/16384/262144").split("/")]


def cmd_bits(args, params: Params):
    k = params.int_("k", 8)
    records = []
    for n in _bit_sizes(args, params):
        for t in range(args.trials):
            seed = (args.seed + t) % (1 << 64)
            struct_tape, _ = trial_tapes(seed)
            trie = BudgetTrie(n, struct_tape, k=k)
            records.append(TrialRecord(
                seed=seed, structure="budget", n=n, max_load=0, overflow_q=0, backyard_size=0,
                bits_used=trie.bits_used, failure_kind="none", op_count=0,
                probe_count_histogram={}, extras={"bit_bound": budget_bit_bound(n)},
            ))
    return records


class InjectivityRow:
    """Row for the injectivity suite, which has its own header."""

    __slots__ = ("seed", "structure", "n", "values")

    def __init__(self, seed: int, n: int, values: Dict[str, object]):
        self.seed = seed
        self.structure = "prime-product"
        self.n = n
        self.values = values

    def row(self, columns: Sequence[str]) -> List[str]:
        out = []
        for c in columns:
            v = self.values[c]
            out.append(("1" if v else "0") if isinstance(v, bool) else str(v))
        return out


def cmd_injectivity(args, params: Params):
    u = params.int_("u", 40)
    c = params.int_("c", 2)
    count = params.int_("keys", 1024)
    rows = []
    for t in range(args.trials):
        seed = (args.seed + t) % (1 << 64)
        struct_tape, rng = trial_tapes(seed)
        h = pph_new(struct_tape, args.n, u, c)
        keys = distinct_keys(rng, count, u)
        rows.append(InjectivityRow(seed, args.n, {
            "seed": seed, "n": args.n, "u": u, "c": c, "key_count": count,
            "injective": h.is_injective_on(keys), "bits_used": h.bits_used, "output_bits": h.output_bits,
        }))
    return rows


def cmd_manysets(args, params: Params):
    spec = ExperimentSpec(
        "manysets", args.n, args.trials, args.seed,
        workload=params.text("workload", "random-fill"),
        params=_with_defaults(params, p="poly:2", sets=32),
    )
    return list(run_experiment(spec, manysets_extras))


def cmd_fuzz(args, params: Params):
    which = params.text("structure", "all")
    names = STRUCTURES if which == "all" else tuple(which.split("/"))
    ops = params.int_("ops", 100_000)
    records = []
    for name in names:
        spec = ExperimentSpec(name, args.n, args.trials, args.seed, "mixed-ops",
                              _with_defaults(params, ops=ops, structure=name))
        spec.validate()
        for seed in spec.trial_seeds():
            outcome = fuzz_oracle(spec, seed)
            if outcome.ok:
                rec = outcome.record
                rec.extras["mismatch"] = 0
            else:
                print(f"{name} {outcome.describe()}", file=sys.stderr)
                rec = TrialRecord(seed, name, args.n, 0, 0, 0, 0, "none", len(outcome.counterexample),
                                  histogram([]), {"mismatch": 1})
            records.append(rec)
    return records


COMMANDS: Dict[str, Callable] = {
    "load-dist": cmd_load_dist,
    "overflow": cmd_overflow,
    "bits": cmd_bits,
    "injectivity": cmd_injectivity,
    "manysets": cmd_manysets,
    "fuzz": cmd_fuzz,
}


def evaluate(command: str, rows) -> Checks:
    """Threshold checks for a subcommand, computed from its CSV rows."""
    if not rows:
        return []
    if command == "load-dist":
        return _load_checks(rows)
    if command == "overflow":
        return [("overflow", criteria.check_overflow(rows))]
    if command == "bits":
        return [("bits", criteria.check_bits(rows))]
    if command == "injectivity":
        return [("injectivity", criteria.check_injectivity(rows))]
    if command == "manysets":
        return [
            ("failures", criteria.check_failures(rows)),
            ("backyard", criteria.check_backyard(rows)),
            ("space", criteria.check_space(rows)),
        ]
    if command == "fuzz":
        return [("oracle", criteria.check_fuzz(rows))]
    raise ValueError(command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotrie-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, default=None, help="capacity (power of two)")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help=f"u64 master seed (default ${ENV_SEED}, else 0)")
        p.add_argument("--out", default="-", help="CSV path, or - for stdout")
        p.add_argument("--params", default="", help="k=v,... experiment parameters")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> Tuple[int, str, Checks]:
    """Parse ``argv``, run the subcommand, and return (exit code, CSV, checks)."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    default_n, default_trials = DEFAULTS[args.command]
    args.n_given = args.n is not None
    args.n = args.n if args.n is not None else default_n
    args.trials = args.trials if args.trials is not None else default_trials
    args.seed = resolve_seed(args.seed)
    if not 0 <= args.seed < 1 << 64:
        raise ValueError("seed must be a u64")
    params = Params.parse(args.params)
    records = COMMANDS[args.command](args, params)
    text = write_csv(records, HEADERS[args.command])
    checks = evaluate(args.command, read_csv(text))
    breached = any(not ok for _, (ok, _) in checks)
    return (2 if breached else 0), text, checks


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, text, checks = run(argv)
    except (ValueError, ConfigurationError, OSError) as exc:
        print(f"rotrie-lab: error: {exc}", file=sys.stderr)
        return 1
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    for name, (ok, message) in checks:
        print(f"[{'pass' if ok else 'FAIL'}] {name}: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
