"""Sweep the candidate threshold and tabulate its cost/accuracy trade-off.

A loose threshold admits more candidates (more traffic, better recall);
a tight one uploads less. Writes the metric rows as CSV next to this
script and prints the table.

Run:  python demos/04_threshold_sweep.py   (takes ~a minute)
"""

from pathlib import Path

from streamdom.harness import ExperimentConfig, run_experiment, sweep_configs

base = ExperimentConfig(
    u=800, n=3, d=4, m=2, swj=150, rdeg=6, delta=6, k=12, margin=160.0
)
configs = sweep_configs(
    base, "delta", values=[2, 4, 8, 12], methods=["ptdmus"], seeds=[0]
)

outdir = Path(__file__).parent / "sweep_results"
records = run_experiment(configs, outdir=outdir, log=lambda msg: None)

print(f"{'delta':>5} {'precision':>10} {'recall':>8} {'traffic/slot':>13} {'checks/slot':>12}")
for rec in records:
    print(
        f"{rec.config.delta:>5} {rec.precision:>9.2f}% {rec.recall:>7.2f}% "
        f"{rec.cost_avg:>13.1f} {rec.checks_avg:>12.0f}"
    )
print(f"\nrows written to {outdir / 'metrics.csv'}")
