"""
Region and sensing-bound sweeps
===============================

Small versions of the two sweeps, written to CSV with a run manifest and a
plot-ready table. The same runs are available from the command line, e.g.

    fa-iscsc sweep --kind region --config demos/configs/sweep.json \
        --values 0.0004,0.0009,0.0016,0.0025 --trials 10 --out results/region
"""

import sys

from fa_iscsc import SystemConfig
from fa_iscsc.harness import ExperimentSpec, emit_results, plot_table, run_crb_sweep, \
    run_region_sweep

out = sys.argv[1] if len(sys.argv) > 1 else "demo-results"
cfg = SystemConfig(ao_tol=1e-5, pos_tol=1e-7)

spec = ExperimentSpec("region-sweep", (0.0004, 0.0025), trials=2, config=cfg)
rows = run_region_sweep(spec)
header, table = plot_table(rows)
print(header)
for line in table:
    print(line)
print(emit_results(rows, "csv", f"{out}/region", config=cfg, seed=spec.seed))

spec = ExperimentSpec("crb-sweep", (1e3, 1e4, 1e5), trials=1, config=cfg,
                      presets=("1T-9FA", "3T-9FA"))
rows = run_crb_sweep(spec)
header, table = plot_table(rows)
print(header)
for line in table:
    print(line)
print(emit_results(rows, "json", f"{out}/crb", config=spec.config, seed=spec.seed))
