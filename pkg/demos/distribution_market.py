# paradigm 3: bids go up through a distribution market, awards come back down

from importlib import resources

import numpy as np

from mgsim import build_demand_bid, parse_case, run_baseline, run_dmo

data = resources.files("mgsim") / "data"
scn = parse_case(str(data / "oscillation_1bus.case"))

mg = scn.instances()[0]
bid = build_demand_bid(mg, scn.default_grid(mg))
print("hour 0 demand steps (price, MW):", bid.demand[0])

rep = run_dmo(scn)
print("award hour 0:", rep.awards[mg.id][0], "MW, deviation", rep.deviations[mg.id][0])
print("welfare:", round(rep.welfare, 2))
print("sum|d| dmo:", rep.metrics["total_abs_mwh"], " baseline:", run_baseline(scn).metrics["total_abs_mwh"])

six = parse_case(str(data / "six_bus.case"))
rep = run_dmo(six)
print("\n6-bus: realized - cleared, worst bus-hour:", np.abs(rep.actual - rep.forecast).max())
for mid in sorted(rep.awards):
    a = rep.awards[mid]
    print(f"{mid}: import {a[a > 0].sum():8.2f} MWh, export {np.abs(a[a < 0]).sum():8.2f} MWh")
