"""Experiment specs, per-trial records, and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np

from ..randomness import RandomTape
from .structures import MANYSETS_KEY_BITS, STRUCTURES, Params, Subject, build
from .workloads import DELETE, INSERT, QUERY, WORKLOADS, Op, make_ops

RECORD_COLUMNS = (
    "seed", "structure", "n", "max_load", "overflow_q", "backyard_size",
    "bits_used", "failure_kind", "op_count", "probe_count_histogram",
)


@dataclass(frozen=True)
class ExperimentSpec:
    structure: str
    n: int
    trials: int = 1
    seed: int = 0
    workload: str = "mixed-ops"
    params: str = ""

    def validate(self) -> None:
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.workload not in WORKLOADS:
            raise ValueError(f"unknown workload {self.workload!r}")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two >= 16")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a u64")
        Params.parse(self.params)

    @property
    def parsed(self) -> Params:
        return Params.parse(self.params)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls(**json.loads(text))

    def trial_seeds(self) -> List[int]:
        """Trial ``t`` runs on seed ``seed + t``, so one row can be rerun alone."""
        return [(self.seed + t) % (1 << 64) for t in range(self.trials)]


@dataclass
class TrialRecord:
    seed: int
    structure: str
    n: int
    max_load: int
    overflow_q: int
    backyard_size: int
    bits_used: int
    failure_kind: str
    op_count: int
    probe_count_histogram: Dict[int, int]
    extras: Dict[str, object] = field(default_factory=dict)

    def row(self, columns: Sequence[str]) -> List[str]:
        out = []
        for col in columns:
            if col == "probe_count_histogram":
                out.append(format_histogram(self.probe_count_histogram))
            elif col in self.extras:
                out.append(_cell(self.extras[col]))
            else:
                out.append(_cell(getattr(self, col)))
        return out


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(round(v, 6))
    return str(v)


def format_histogram(hist: Dict[int, int]) -> str:
    """``probes:count`` pairs in probe order, separated by ``;``."""
    return ";".join(f"{p}:{hist[p]}" for p in sorted(hist))


def parse_histogram(text: str) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for part in text.split(";"):
        if part:
            p, c = part.split(":")
            out[int(p)] = int(c)
    return out


def histogram_quantile(hist: Dict[int, int], q: float) -> int:
    """Smallest probe count ``v`` with at least a ``q`` fraction of ops at or below ``v``."""
    total = sum(hist.values())
    if total == 0:
        return 0
    need = math.ceil(q * total - 1e-9)
    run = 0
    for p in sorted(hist):
        run += hist[p]
        if run >= need:
            return p
    return max(hist)


def merge_histograms(hists: Iterable[Dict[int, int]]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for h in hists:
        for p, c in h.items():
            out[p] = out.get(p, 0) + c
    return out


def trial_tapes(seed: int):
    root = RandomTape(seed)
    return root.fork("structure"), np.random.default_rng(root.fork("workload").draw_bits(64))


def trial_ops(spec: ExperimentSpec, subject: Subject, rng: np.random.Generator) -> List[Op]:
    params = spec.parsed
    sets = params.int_("sets", 32) if spec.structure == "manysets" else 0
    return make_ops(
        spec.workload, rng, spec.n, subject.key_bits,
        op_count=params.int_("ops", 0),
        sets=sets,
        set_key_bits=MANYSETS_KEY_BITS,
        load=params.int_("load", 0),
    )


class Mismatch(Exception):
    def __init__(self, position: int, op: Op, expected, got):
        super().__init__(f"op {position} {op}: expected {expected!r}, got {got!r}")
        self.position = position
        self.op = op
        self.expected = expected
        self.got = got


def drive(subject: Subject, ops: Sequence[Op], *, oracle: Optional[dict] = None,
          values: Optional[Sequence[int]] = None) -> List[int]:
    """Apply ``ops``; return per-op probe counts.

    With an ``oracle`` dict every query and delete result is checked and a
    :class:`Mismatch` is raised on the first disagreement.  The value stored
    by an insert is its position (or ``values[position]``).
    """
    impl = subject.impl
    ins, qry, dele = subject.insert, subject.query, subject.delete
    probes: List[int] = [0] * len(ops)
    last = impl.probes
    check = oracle is not None
    for pos, (kind, key) in enumerate(ops):
        value = pos if values is None else values[pos]
        if kind == INSERT:
            ins(key, value)
            if check:
                oracle[key] = value
        elif kind == QUERY:
            got = qry(key)
            if check:
                want = oracle.get(key)
                if got != want:
                    raise Mismatch(pos, (kind, key), want, got)
        else:
            got = dele(key)
            if check:
                want = key in oracle
                if want:
                    del oracle[key]
                if bool(got) != want:
                    raise Mismatch(pos, (kind, key), want, got)
        now = impl.probes
        probes[pos] = now - last
        last = now
    return probes


def histogram(probes: Sequence[int]) -> Dict[int, int]:
    counts = np.bincount(np.asarray(probes, dtype=np.int64)) if len(probes) else np.zeros(0, dtype=np.int64)
    return {int(p): int(c) for p, c in enumerate(counts.tolist()) if c}


Extras = Callable[[Subject], Dict[str, object]]


def run_trial(spec: ExperimentSpec, seed: int, extras: Optional[Extras] = None,
              *, check: bool = False) -> TrialRecord:
    struct_tape, rng = trial_tapes(seed)
    subject = build(spec.structure, spec.n, struct_tape, spec.parsed)
    ops = trial_ops(spec, subject, rng)
    probes = drive(subject, ops, oracle={} if check else None)
    stats = subject.stats()
    return TrialRecord(
        seed=seed,
        structure=spec.structure,
        n=spec.n,
        op_count=len(ops),
        probe_count_histogram=histogram(probes),
        extras=extras(subject) if extras else {},
        **stats,
    )


def run_experiment(spec: ExperimentSpec, extras: Optional[Extras] = None) -> Iterator[TrialRecord]:
    """One record per trial, in seed order.  Each trial owns its structure and tapes."""
    spec.validate()
    for seed in spec.trial_seeds():
        yield run_trial(spec, seed, extras)


def write_csv(records: Iterable[TrialRecord], columns: Sequence[str], out: Optional[io.TextIOBase] = None) -> str:
    """Serialize records sorted by seed; returns the CSV text and writes it to ``out``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in sorted(records, key=lambda r: (r.seed, r.structure, r.n)):
        writer.writerow(rec.row(columns))
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(text: str) -> List[Dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


__all__ = [
    "RECORD_COLUMNS", "ExperimentSpec", "TrialRecord", "Mismatch", "drive", "run_trial",
    "run_experiment", "write_csv", "read_csv", "format_histogram", "parse_histogram",
    "histogram_quantile", "merge_histograms", "INSERT", "DELETE", "QUERY",
]
