"""Oracle fuzzing with counterexample minimization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from .experiments import ExperimentSpec, Mismatch, TrialRecord, drive, histogram, trial_ops, trial_tapes
from .structures import Subject, build
from .workloads import KIND_NAMES, Op

Mutation = Callable[[Subject], None]


@dataclass
class FuzzOutcome:
    seed: int
    ok: bool
    record: Optional[TrialRecord] = None
    counterexample: Optional[List[Op]] = None
    detail: str = ""

    def describe(self) -> str:
        if self.ok:
            return f"seed {self.seed}: pass"
        lines = [f"seed {self.seed}: mismatch ({self.detail}); minimized to {len(self.counterexample)} ops"]
        lines.extend(f"  {KIND_NAMES[k]} {key}" for k, key in self.counterexample)
        return "\n".join(lines)


def _fails(spec: ExperimentSpec, seed: int, ops: Sequence[Op], values: Sequence[int],
           mutate: Optional[Mutation]) -> Optional[Mismatch]:
    struct_tape, _ = trial_tapes(seed)
    subject = build(spec.structure, spec.n, struct_tape, spec.parsed)
    if mutate is not None:
        mutate(subject)
    try:
        drive(subject, ops, oracle={}, values=values)
    except Mismatch as exc:
        return exc
    return None


def ddmin(items: list, fails: Callable[[list], bool]) -> list:
    """Delta debugging: a 1-minimal sublist of ``items`` on which ``fails`` holds."""
    n = 2
    while len(items) >= 2:
        chunk = max(1, len(items) // n)
        subsets = [items[i:i + chunk] for i in range(0, len(items), chunk)]
        reduced = False
        for i, sub in enumerate(subsets):
            complement = [x for j, s in enumerate(subsets) if j != i for x in s]
            if fails(sub):
                items, n, reduced = sub, 2, True
                break
            if len(subsets) > 2 and fails(complement):
                items, n, reduced = complement, max(n - 1, 2), True
                break
        if not reduced:
            if n >= len(items):
                break
            n = min(len(items), 2 * n)
    return items


def fuzz_oracle(spec: ExperimentSpec, seed: Optional[int] = None, *,
                mutate: Optional[Mutation] = None, ops: Optional[List[Op]] = None,
                minimize: bool = True) -> FuzzOutcome:
    """Cross-check one seed's operation sequence against a dict.

    ``mutate`` is applied to the freshly built structure before any operation;
    it exists to check that the fuzzer catches injected faults.  On a
    mismatch the failing prefix is minimized with :func:`ddmin`.
    """
    seed = spec.seed if seed is None else seed
    struct_tape, rng = trial_tapes(seed)
    subject = build(spec.structure, spec.n, struct_tape, spec.parsed)
    if mutate is not None:
        mutate(subject)
    if ops is None:
        ops = trial_ops(spec, subject, rng)
    try:
        probes = drive(subject, ops, oracle={})
    except Mismatch as exc:
        prefix = list(range(exc.position + 1))
        if minimize:
            prefix = ddmin(prefix, lambda idx: _fails(spec, seed, [ops[i] for i in idx], idx, mutate) is not None)
        return FuzzOutcome(seed, False, counterexample=[ops[i] for i in prefix], detail=str(exc))
    stats = subject.stats()
    record = TrialRecord(
        seed=seed, structure=spec.structure, n=spec.n, op_count=len(ops),
        probe_count_histogram=histogram(probes), **stats,
    )
    return FuzzOutcome(seed, True, record=record)
