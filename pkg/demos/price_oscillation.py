# paradigm 2: re-clear the market on the revised load and watch the prices swing

from importlib import resources

from mgsim import parse_case, run_iterative

data = resources.files("mgsim") / "data"

rep = run_iterative(parse_case(str(data / "oscillation_1bus.case")))
tr = rep.trace
print(tr.label)
for k in range(len(tr)):
    print(f"iteration {k}: load {tr.total_load[k, 0]:6.1f} MW  price {tr.average_lmp[k, 0]:5.1f} $/MWh")

# more buses with microgrids, wider swings
for n in (1, 2, 3):
    tr = run_iterative(parse_case(str(data / f"oscillation_family_{n}.case"))).trace
    print(f"{n} microgrid bus(es): {tr.label:24s} price std {tr.price_oscillation():6.2f}")
