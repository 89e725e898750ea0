"""
How the error grows with clutter
================================

Sweep the mean clutter count from 10 to 50 per frame and look at the
average OSPA of each run. Seeds for the runs are derived from the base
seed, so the sweep is reproducible. Takes a minute or two.
"""

# %%
from pointfilter import FilterConfig, default_scenario, run_sweep
from pointfilter.harness import raw_measurement_ospa, sweep_summary

reports = run_sweep(FilterConfig(), default_scenario(seed=0), [10, 20, 30, 40, 50])
summary = sweep_summary(reports)

# %%
for rep in reports:
    scen = rep.config["scenario"]
    raw = raw_measurement_ospa(default_scenario(scen["lambda_c"], scen["seed"])).mean()
    print(f"lambda_c={scen['lambda_c']:4.0f}  filter {rep.averages['ospa']:6.2f}  raw {raw:6.2f}")
print(f"Spearman correlation of clutter rate and OSPA: {summary['spearman']:.2f}")
