"""Run the three monitoring pipelines side by side on one small stream set.

Four monitors watch 150-object windows; the distributed methods upload
candidates to a coordinator while the centralized baseline sees everything.
Prints per-method accuracy against the baseline and the traffic each
method needed.

Run:  python demos/03_stream_monitoring.py   (takes ~a minute)
"""

from streamdom.datagen import GeneratorConfig, generate, partition_streams
from streamdom.harness import precision_recall
from streamdom.protocol import run_ptdbf, run_ptdmus, run_ptdsky

objects = generate(
    GeneratorConfig(count=1200, n_instances=3, dim=4, margin=160, seed=42)
)
streams = partition_streams(objects, m=4)
swj, delta, k = 150, 8, 15

baseline = run_ptdbf(streams, swj=swj, degree=6, k=k)
print(f"monitoring {len(baseline.slots)} slots, k={k}, delta={delta}, m=4\n")

for name, trace in [
    ("ptdmus", run_ptdmus(streams, swj=swj, degree=6, delta=delta, k=k)),
    ("ptdsky", run_ptdsky(streams, swj=swj, degree=6, delta=delta, k=k)),
]:
    precision, recall = precision_recall(baseline, trace)
    cost = trace.total_cost / len(trace.slots)
    checks = trace.total_checks / len(trace.slots)
    print(
        f"{name}: precision {precision:6.2f}%  recall {recall:6.2f}%  "
        f"traffic {cost:8.1f} entries/slot  checks {checks:10.0f}/slot"
    )

print("\nbaseline (ptdbf) transfers nothing but checks everything:")
print(
    f"ptdbf : precision 100.00%  recall 100.00%  traffic      0.0 entries/slot"
    f"  checks {baseline.total_checks / len(baseline.slots):10.0f}/slot"
)

slot = baseline.slots[len(baseline.slots) // 2]
print(f"\nmid-run slot {slot.slot}: top-{k} ids {list(slot.ptd)[:8]}...")
