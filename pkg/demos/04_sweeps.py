"""Small versions of the probe sweeps on the easy (0/7) and hard (7/9) tasks.

Five replications keep this to a few minutes; the CLI `sweep` command runs
the full grids and writes CSV and SVG output.
"""
from pathlib import Path

from signprobe.data import load_dataset, make_pair_task
from signprobe.harness import ModelBank, sweep_noise, sweep_prune, sweep_randomization, sweep_signflip
from signprobe.plotting import line_plot

N_REPS = 5
out_dir = Path("demo_out")
out_dir.mkdir(exist_ok=True)

train, test = load_dataset("mnist")
tasks = {"E": make_pair_task(train, test, 0, 7), "H": make_pair_task(train, test, 7, 9)}
bank = ModelBank(d=64, base_seed=0)  # shared, so each model trains once

runs = {
    "prune": sweep_prune(tasks, N_REPS, grid=(0.0, 0.5, 0.8, 0.9, 0.95), bank=bank),
    "noise": sweep_noise(tasks, N_REPS, grid=(0.0, 0.01, 0.1, 1.0, 10.0), bank=bank),
    "flip": sweep_signflip(tasks, N_REPS, grid=(0.0, 0.01, 0.05, 0.2), bank=bank),
    "randomize": sweep_randomization(tasks, N_REPS, bank=bank),
}
for name, res in runs.items():
    print(f"\n{name}: grid {[str(g) for g in res.grid]}")
    for v in res.variants:
        print(f"  {v:<9} " + " ".join(f"{m:.3f}" for m in res.medians(v)))
    (out_dir / f"{name}.svg").write_text(line_plot(res, title=name, log_x=name == "noise"))
print(f"\nplots written to {out_dir}/")
