# forecast vs actual bus load on the bundled 6-bus case as microgrids grow

from importlib import resources

import numpy as np

from mgsim import parse_case, run_baseline

case = resources.files("mgsim") / "data" / "six_bus.case"
scn = parse_case(str(case))

print("f      max|d| MW   sum|d| MWh")
for f in (0.0, 0.25, 0.5, 0.75, 1.0):
    m = run_baseline(scn.with_(penetration=f)).metrics
    print(f"{f:4.2f}  {m['max_abs_mw']:10.3f}  {m['total_abs_mwh']:11.3f}")

rep = run_baseline(scn)
delta = rep.actual.sum(axis=0) - rep.forecast.sum(axis=0)
print("\nhourly system mismatch at f = 0.5 (actual - forecast, MW)")
for t, d in enumerate(delta):
    bar = "#" * int(abs(d) / 5)
    print(f"{t:2d} {d:8.2f} {'-' if d < 0 else '+'}{bar}")

# which hours buy more than the utility planned for
print("\nhours with extra import:", np.flatnonzero(delta > 1e-6).tolist())
