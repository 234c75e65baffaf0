# paradigm 1: keep the day-ahead commitment, move committed units onto the realized load

from importlib import resources

import numpy as np

from mgsim import parse_case, run_redispatch

data = resources.files("mgsim") / "data"

rep = run_redispatch(parse_case(str(data / "six_bus.case")))
print("feasible:", rep.feasible["redispatch"])
names = rep.final.unit_names
for i, name in enumerate(names):
    moved = rep.redispatch_delta[i]
    print(f"{name}: moved in {np.count_nonzero(np.abs(moved) > 1e-6)} hours, "
          f"largest change {moved[np.argmax(np.abs(moved))]:+.2f} MW")
print("worst nodal residual after redispatch:", np.abs(rep.redispatch_residual).max())

# a microgrid with storage that recharges harder than the committed units can follow
over = run_redispatch(parse_case(str(data / "overcapacity.case")))
print("\nover-capacity fixture feasible:", over.feasible["redispatch"])
print("actual load:", over.actual.sum(axis=0), "forecast:", over.forecast.sum(axis=0))
