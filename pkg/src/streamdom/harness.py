"""Experiment harness: configs, metrics, runs, sweeps, result files.

Results are written as one CSV of metric rows plus one JSON-lines trace per
(method, seed), with a manifest naming the dataset hash. Transmission cost
is counted in object-sized entries (broadcasts once per recipient); all
result files are byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .datagen import GeneratorConfig, generate, partition_streams
from .errors import ParameterError
from .model import UncertainObject, format_object
from .protocol import SlotRecord, Trace, run_ptdbf, run_ptdmus, run_ptdsky

METHODS = ("ptdmus", "ptdsky", "ptdbf")

CSV_COLUMNS = [
    "u",
    "n",
    "d",
    "m",
    "swj",
    "rdeg",
    "delta",
    "k",
    "margin",
    "method",
    "seed",
    "precision",
    "recall",
    "cost_avg",
    "checks_avg",
    "cs_size_avg",
    "early_mct_count",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment point; field names follow the CLI flag names."""

    u: int = 10_000
    n: int = 5
    d: int = 9
    m: int = 10
    swj: int = 960
    rdeg: int = 6
    delta: int = 30
    k: int = 100
    margin: float = 160.0
    seed: int = 0
    method: str = "ptdmus"
    mct_forced: bool = False

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ParameterError(f"violated m >= 1: m = {self.m}")
        if self.u < self.m:
            raise ParameterError(f"violated u >= m: u = {self.u}, m = {self.m}")
        if self.swj < 1:
            raise ParameterError(f"violated swj >= 1: swj = {self.swj}")
        if self.rdeg < 2:
            raise ParameterError(f"violated rdeg >= 2: rdeg = {self.rdeg}")
        if not (1 <= self.delta <= self.k):
            raise ParameterError(
                f"violated 1 <= delta <= k: delta = {self.delta}, k = {self.k}"
            )
        if self.method not in METHODS:
            raise ParameterError(
                f"violated method in {METHODS}: method = {self.method!r}"
            )
        GeneratorConfig(  # delegates count/n/d/margin checks
            count=self.u, n_instances=self.n, dim=self.d,
            margin=self.margin, seed=self.seed,
        )

    @property
    def swh(self) -> int:
        return self.m * self.swj

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            count=self.u,
            n_instances=self.n,
            dim=self.d,
            margin=self.margin,
            seed=self.seed,
        )


def monitoring_period(config: ExperimentConfig) -> int:
    """Number of monitored slots once the windows are full (at least 1)."""
    span = config.u // config.m - config.swj
    return span if span > 0 else 1


def precision_recall(baseline: Trace, compared: Trace) -> tuple[float, float]:
    """Slot-averaged overlap percentages of the compared result vs baseline.

    An empty compared (baseline) set in a slot contributes 100 to the
    precision (recall) term when the other side is empty too, else 0.
    """
    if len(baseline.slots) != len(compared.slots):
        raise ParameterError(
            f"trace lengths differ: {len(baseline.slots)} vs {len(compared.slots)}"
        )
    p_sum = r_sum = 0.0
    for b, c in zip(baseline.slots, compared.slots):
        base, cmp_ = set(b.ptd), set(c.ptd)
        inter = len(base & cmp_)
        p_sum += (100.0 * inter / len(cmp_)) if cmp_ else (100.0 if not base else 0.0)
        r_sum += (100.0 * inter / len(base)) if base else (100.0 if not cmp_ else 0.0)
    n = len(baseline.slots)
    return p_sum / n, r_sum / n


@dataclass(frozen=True)
class MetricsRecord:
    config: ExperimentConfig
    method: str
    seed: int
    precision: float
    recall: float
    cost_avg: float
    checks_avg: float
    cs_size_avg: float
    early_mct_count: int

    def csv_row(self) -> dict[str, str]:
        c = self.config
        return {
            "u": str(c.u),
            "n": str(c.n),
            "d": str(c.d),
            "m": str(c.m),
            "swj": str(c.swj),
            "rdeg": str(c.rdeg),
            "delta": str(c.delta),
            "k": str(c.k),
            "margin": format(c.margin, "g"),
            "method": self.method,
            "seed": str(self.seed),
            "precision": format(self.precision, ".6f"),
            "recall": format(self.recall, ".6f"),
            "cost_avg": format(self.cost_avg, ".6f"),
            "checks_avg": format(self.checks_avg, ".6f"),
            "cs_size_avg": format(self.cs_size_avg, ".6f"),
            "early_mct_count": str(self.early_mct_count),
        }


def cost_decomposition(trace: Trace, m: int) -> tuple[int, int]:
    """(initial, update) transmission cost rebuilt from per-kind tallies.

    The initial term covers the first monitored slot, the update term all
    later slots; each is upload entries plus per-recipient broadcast
    entries. Must equal the raw per-message ledger total.
    """

    def slot_cost(rec: SlotRecord) -> int:
        e = rec.messages
        return (
            e.get("LocalCandidateUpload", 0)
            + e.get("UpdateInfoUpload", 0)
            + e.get("ScoreUpload", 0)
            + m * e.get("GlobalCandidateBroadcast", 0)
            + m * e.get("CheckingTimeBroadcast", 0)
        )

    if not trace.slots:
        return 0, 0
    initial = slot_cost(trace.slots[0])
    update = sum(slot_cost(rec) for rec in trace.slots[1:])
    return initial, update


def run_method(
    config: ExperimentConfig, streams: Sequence[Sequence[UncertainObject]]
) -> Trace:
    kwargs = dict(swj=config.swj, degree=config.rdeg, k=config.k)
    if config.method == "ptdmus":
        return run_ptdmus(
            streams, delta=config.delta, mct_forced=config.mct_forced, **kwargs
        )
    if config.method == "ptdsky":
        return run_ptdsky(streams, delta=config.delta, **kwargs)
    return run_ptdbf(streams, **kwargs)


def slot_record_dict(rec: SlotRecord) -> dict:
    return {
        "slot": rec.slot,
        "abs_slot": rec.abs_slot,
        "ptd": list(rec.ptd),
        "ptd_dom": list(rec.ptd_dom),
        "messages": dict(sorted(rec.messages.items())),
        "cost": rec.cost,
        "checks": dict(sorted(rec.checks.items())),
        "cs_size": rec.cs_size,
        "union_size": rec.union_size,
        "ct_size": rec.ct_size,
        "early_mct": rec.early_mct,
    }


def write_trace_jsonl(trace: Trace, path: Path) -> None:
    with path.open("w", encoding="ascii") as fh:
        for rec in trace.slots:
            fh.write(json.dumps(slot_record_dict(rec), sort_keys=True))
            fh.write("\n")


def read_trace_jsonl(path: Path) -> Trace:
    slots = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        slots.append(
            SlotRecord(
                slot=raw["slot"],
                abs_slot=raw["abs_slot"],
                ptd=tuple(raw["ptd"]),
                ptd_dom=tuple(raw["ptd_dom"]),
                messages=raw["messages"],
                cost=raw["cost"],
                checks=raw["checks"],
                cs_size=raw["cs_size"],
                union_size=raw["union_size"],
                ct_size=raw["ct_size"],
                early_mct=raw["early_mct"],
            )
        )
    return Trace(method="", slots=tuple(slots))


def metrics_from_trace(
    config: ExperimentConfig,
    trace: Trace,
    baseline: Trace,
) -> MetricsRecord:
    precision, recall = precision_recall(baseline, trace)
    n = len(trace.slots)
    return MetricsRecord(
        config=config,
        method=config.method,
        seed=config.seed,
        precision=precision,
        recall=recall,
        cost_avg=trace.total_cost / n,
        checks_avg=trace.total_checks / n,
        cs_size_avg=sum(rec.cs_size for rec in trace.slots) / n,
        early_mct_count=sum(rec.early_mct for rec in trace.slots),
    )


def dataset_digest(objects: Iterable[UncertainObject]) -> str:
    h = hashlib.sha256()
    for obj in objects:
        h.update(format_object(obj).encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


class ExperimentRunner:
    """Runs experiment points, caching datasets and baseline traces per seed."""

    def __init__(self, dataset: list[UncertainObject] | None = None, log=None):
        self._fixed_dataset = dataset
        self._datasets: dict[tuple, list[UncertainObject]] = {}
        self._baselines: dict[tuple, Trace] = {}
        self._log = log if log is not None else (lambda msg: print(msg, file=sys.stderr))

    def dataset_for(self, config: ExperimentConfig) -> list[UncertainObject]:
        if self._fixed_dataset is not None:
            return self._fixed_dataset
        gc = config.generator_config()
        key = dataclasses.astuple(gc)
        if key not in self._datasets:
            self._datasets[key] = generate(gc)
        return self._datasets[key]

    def _baseline_for(
        self, config: ExperimentConfig, streams
    ) -> Trace:
        key = (
            dataclasses.astuple(config.generator_config()),
            config.m,
            config.swj,
            config.rdeg,
            config.k,
        )
        if key not in self._baselines:
            self._baselines[key] = run_ptdbf(
                streams, swj=config.swj, degree=config.rdeg, k=config.k
            )
        return self._baselines[key]

    def run_point(
        self, config: ExperimentConfig, outdir: Path | None = None
    ) -> tuple[MetricsRecord, Trace]:
        objects = self.dataset_for(config)
        streams = partition_streams(objects, config.m)
        self._log(f"running {config.method} seed={config.seed} ...")
        trace = run_method(config, streams)
        if config.method == "ptdbf":
            baseline = trace
        else:
            baseline = self._baseline_for(config, streams)
        record = metrics_from_trace(config, trace, baseline)
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            name = f"trace_{config.method}_seed{config.seed}"
            if config.mct_forced:
                name += "_forced"
            write_trace_jsonl(trace, outdir / f"{name}.jsonl")
        return record, trace


def write_metrics_csv(records: Sequence[MetricsRecord], path: Path) -> None:
    with path.open("w", encoding="ascii", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.csv_row())


def write_manifest(
    path: Path,
    configs: Sequence[ExperimentConfig],
    digests: dict[str, str],
) -> None:
    payload = {
        "inputs": dict(sorted(digests.items())),
        "points": [
            {k: v for k, v in dataclasses.asdict(cfg).items()}
            for cfg in configs
        ],
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "ascii")


def run_experiment(
    configs: Sequence[ExperimentConfig],
    outdir: Path | None = None,
    dataset: list[UncertainObject] | None = None,
    log=None,
) -> list[MetricsRecord]:
    """Run every config point in order; write CSV, traces, and manifest."""
    runner = ExperimentRunner(dataset=dataset, log=log)
    records = []
    digests: dict[str, str] = {}
    for config in configs:
        record, _ = runner.run_point(config, outdir=outdir)
        records.append(record)
        gc = config.generator_config()
        key = f"dataset_u{gc.count}_n{gc.n_instances}_d{gc.dim}_M{gc.margin:g}_seed{gc.seed}"
        if key not in digests:
            digests[key] = dataset_digest(runner.dataset_for(config))
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(records, outdir / "metrics.csv")
        write_manifest(outdir / "manifest.json", list(configs), digests)
    return records


def sweep_configs(
    base: ExperimentConfig,
    param: str,
    values: Sequence,
    methods: Sequence[str],
    seeds: Sequence[int],
) -> list[ExperimentConfig]:
    """Cartesian sweep in deterministic (value, method, seed) order."""
    if param not in {f.name for f in dataclasses.fields(ExperimentConfig)}:
        raise ParameterError(f"unknown sweep parameter {param!r}")
    configs = []
    for value in values:
        for method in methods:
            for seed in seeds:
                configs.append(
                    dataclasses.replace(
                        base, **{param: value, "method": method, "seed": seed}
                    )
                )
    return configs
