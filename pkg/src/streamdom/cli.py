"""Command-line front end: generate / run / sweep / compare.

Parameters can come from a flat key=value config file (``--config``) and be
overridden by flags named after the simulation symbols (u, n, d, m, swj,
rdeg, delta, k, margin, seed, method).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datagen import GeneratorConfig, generate
from .errors import ParameterError, StreamDomError
from .harness import (
    METHODS,
    ExperimentConfig,
    precision_recall,
    read_trace_jsonl,
    run_experiment,
    sweep_configs,
)
from .model import read_dataset, write_dataset

_INT_KEYS = {"u", "n", "d", "m", "swj", "rdeg", "delta", "k", "seed"}
_FLOAT_KEYS = {"margin"}
_STR_KEYS = {"method"}


def _parse_value(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _STR_KEYS:
        return raw
    raise ParameterError(f"unknown config key {key!r}")


def load_config_file(path: str | Path) -> dict:
    """Flat key=value lines; blank lines and # comments ignored."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = _parse_value(key.strip(), raw.strip())
    return values


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    for key in sorted(_INT_KEYS):
        parser.add_argument(f"--{key}", type=int)
    parser.add_argument("--margin", type=float)


def _collect_params(args: argparse.Namespace) -> dict:
    params: dict = {}
    if args.config:
        params.update(load_config_file(args.config))
    for key in _INT_KEYS | _FLOAT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _int_list(raw: str) -> list[int]:
    return [int(v) for v in raw.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamdom",
        description="Top-k dominating query monitoring over uncertain streams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic dataset file")
    _add_param_flags(p_gen)
    p_gen.add_argument("--out", type=Path, required=True)

    p_run = sub.add_parser("run", help="run one or more methods at one config")
    _add_param_flags(p_run)
    p_run.add_argument("--method", action="append",
                       help=f"one of {METHODS}; repeatable (default ptdmus)")
    p_run.add_argument("--seeds", type=_int_list,
                       help="comma-separated seeds (default: the seed flag)")
    p_run.add_argument("--dataset", type=Path, help="load objects from file")
    p_run.add_argument("--outdir", type=Path, required=True)
    p_run.add_argument("--mct-forced", action="store_true",
                       help="rescore every candidate every slot")

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over values")
    _add_param_flags(p_sweep)
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated parameter values")
    p_sweep.add_argument("--methods", default="ptdmus,ptdsky,ptdbf")
    p_sweep.add_argument("--seeds", type=_int_list, default=[0])
    p_sweep.add_argument("--outdir", type=Path, required=True)

    p_cmp = sub.add_parser("compare", help="precision/recall of two traces")
    p_cmp.add_argument("--baseline", type=Path, required=True)
    p_cmp.add_argument("--compared", type=Path, required=True)
    return parser


def _config_from_params(params: dict, **overrides) -> ExperimentConfig:
    return ExperimentConfig(**{**params, **overrides})


def cmd_generate(args) -> int:
    params = _collect_params(args)
    cfg = GeneratorConfig(
        count=params.get("u", 10_000),
        n_instances=params.get("n", 5),
        dim=params.get("d", 9),
        margin=params.get("margin", 160.0),
        seed=params.get("seed", 0),
    )
    objects = generate(cfg)
    write_dataset(objects, args.out)
    print(f"wrote {len(objects)} objects to {args.out}")
    return 0


def cmd_run(args) -> int:
    params = _collect_params(args)
    if getattr(args, "method", None):
        methods = []
        for entry in args.method:
            methods.extend(v for v in entry.split(",") if v)
    else:
        methods = [params.pop("method", "ptdmus")]
    params.pop("method", None)
    seeds = args.seeds or [params.get("seed", 0)]
    configs = []
    for method in methods:
        for seed in seeds:
            configs.append(
                _config_from_params(
                    params, method=method, seed=seed, mct_forced=args.mct_forced
                )
            )
    dataset = read_dataset(args.dataset) if args.dataset else None
    records = run_experiment(configs, outdir=args.outdir, dataset=dataset)
    for rec in records:
        print(
            f"{rec.method} seed={rec.seed}: precision={rec.precision:.4f} "
            f"recall={rec.recall:.4f} cost_avg={rec.cost_avg:.1f} "
            f"checks_avg={rec.checks_avg:.1f}"
        )
    print(f"results in {args.outdir}")
    return 0


def cmd_sweep(args) -> int:
    params = _collect_params(args)
    params.pop("method", None)
    base = _config_from_params(params)
    raw_values = [v for v in args.values.split(",") if v.strip()]
    values = [_parse_value(args.param, v) for v in raw_values]
    methods = [v for v in args.methods.split(",") if v]
    configs = sweep_configs(base, args.param, values, methods, args.seeds)
    records = run_experiment(configs, outdir=args.outdir)
    print(f"{len(records)} rows -> {args.outdir / 'metrics.csv'}")
    return 0


def cmd_compare(args) -> int:
    baseline = read_trace_jsonl(args.baseline)
    compared = read_trace_jsonl(args.compared)
    precision, recall = precision_recall(baseline, compared)
    print(f"precision={precision:.6f} recall={recall:.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "run": cmd_run,
        "sweep": cmd_sweep,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except StreamDomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
