"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with ``-s`` or in the
``-v`` log); run this file directly to see only those lines.
"""

import math
import sys
import time

import numpy as np
import pytest

from conftest import check_schedule, data_path, lp_dual_objective, random_lp, random_microgrid, random_milp
from mgsim.casefile import parse_case
from mgsim.cli import main
from mgsim.grid import solve_unit_commitment
from mgsim.microgrid import build_demand_bid, schedule
from mgsim.milp import GE, LE, Status, enumerate_binaries, max_violation, solve_lp, solve_milp
from mgsim.paradigms import (
    Termination,
    aggregate_bids,
    clear_market,
    disaggregate_awards,
    run_baseline,
    run_dmo,
    run_iterative,
    run_redispatch,
)
from mgsim.report import FILES
from test_grid import merit_case, two_bus


@pytest.fixture
def verdict(request, capsys):
    """Print one PASS/FAIL line for the criterion the test checks."""
    notes = []
    yield notes
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    with capsys.disabled():
        print(f"\n[acceptance {request.node.name.split('_')[1]}] {'PASS' if ok else 'FAIL'} {'; '.join(notes)}")


def scenario(name):
    return parse_case(str(data_path(name)))


def test_1_milp_oracle(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    feasible = 0
    for _ in range(50):
        prob = random_milp(rng, n_bin=int(rng.integers(1, 9)), n_cont=int(rng.integers(0, 11)),
                           n_rows=int(rng.integers(1, 13)))
        sol = solve_milp(prob)
        best, _ = enumerate_binaries(prob)
        if math.isinf(best):
            assert sol.status is Status.INFEASIBLE
            continue
        feasible += 1
        assert sol.status is Status.OPTIMAL
        assert abs(sol.objective - best) <= 1e-6 * max(1.0, abs(best))
    elapsed = time.perf_counter() - start
    verdict.append(f"50 problems ({feasible} feasible) in {elapsed:.2f}s")
    assert elapsed < 10


def test_2_lp_duality(verdict):
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    worst_gap = worst_cs = 0.0
    for _ in range(100):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        assert sol.status is Status.OPTIMAL
        assert max_violation(prob, sol.primal) <= 1e-6
        gap = abs(sol.objective - lp_dual_objective(prob, sol.duals)) / (1 + abs(sol.objective))
        worst_gap = max(worst_gap, gap)
        slack = prob.A @ sol.primal - prob.rhs
        for s, y, r, b in zip(prob.senses, sol.duals, slack, prob.rhs):
            assert (s != GE or y >= -1e-9) and (s != LE or y <= 1e-9)
            worst_cs = max(worst_cs, abs(y * r) / (1 + abs(b)))
    elapsed = time.perf_counter() - start
    verdict.append(f"100 LPs in {elapsed:.2f}s, max rel gap {worst_gap:.1e}, max cs {worst_cs:.1e}")
    assert worst_gap <= 1e-6 and worst_cs <= 1e-5
    assert elapsed < 5


def test_3_lmp_fixtures(verdict):
    merit = solve_unit_commitment(merit_case()).lmp
    congested = solve_unit_commitment(two_bus(50)).lmp
    free = solve_unit_commitment(two_bus(100)).lmp
    verdict.append(f"merit {merit[0, 0]}, congested {congested[:, 0].tolist()}, uncongested {free[:, 0].tolist()}")
    assert merit[0, 0] == 20.0
    assert congested[:, 0].tolist() == [10.0, 30.0]
    assert abs(free[0, 0] - free[1, 0]) <= 1e-5


def test_4_microgrid_invariants(verdict):
    rng = np.random.default_rng(4242)
    start = time.perf_counter()
    for _ in range(200):
        case = random_microgrid(rng)
        p1, p2 = rng.uniform(5, 80, case.horizon), rng.uniform(5, 80, case.horizon)
        s1, s2 = schedule(case, p1), schedule(case, p2)
        for s in (s1, s2):
            check_schedule(case, s)
            if math.isinf(case.tie_limit):
                assert s.curtailment.max(initial=0.0) <= 1e-6
        c1, c2 = s1.total_cost, s2.total_cost
        for lam in (0.25, 0.5, 0.75):
            mixed = schedule(case, lam * p1 + (1 - lam) * p2).total_cost
            assert mixed >= lam * c1 + (1 - lam) * c2 - 1e-6 * (1 + abs(mixed))
        assert c2 <= c1 + np.dot(p2 - p1, s1.exchange) + 1e-6 * (1 + abs(c2))
    elapsed = time.perf_counter() - start
    verdict.append(f"200 cases in {elapsed:.2f}s")
    assert elapsed < 60


def test_5_mismatch_grows_with_penetration(verdict):
    scn = scenario("six_bus.case")
    totals = [run_baseline(scn.with_(penetration=f)).metrics["total_abs_mwh"] for f in (0, 0.25, 0.5, 0.75, 1.0)]
    verdict.append("sum|d| over f = " + ", ".join(f"{t:.2f}" for t in totals))
    assert totals[0] == 0.0
    assert totals[2] > 0
    assert all(a <= b for a, b in zip(totals, totals[1:]))


def test_6_redispatch(verdict):
    rep = run_redispatch(scenario("six_bus.case"))
    assert rep.feasible["redispatch"]
    residual = float(np.abs(rep.redispatch_residual).max())
    over = run_redispatch(scenario("overcapacity.case"))
    verdict.append(f"bundled residual {residual:.1e} MW, over-capacity flag feasible={over.feasible['redispatch']}")
    assert residual <= 1e-6
    assert over.feasible["redispatch"] is False


def test_7_price_oscillation(verdict):
    tr = run_iterative(scenario("oscillation_1bus.case")).trace
    loads = tr.total_load[:, 0]
    prices = tr.average_lmp[:, 0]
    stds = [run_iterative(scenario(f"oscillation_family_{n}.case")).trace.price_oscillation() for n in (1, 2, 3)]
    verdict.append(f"{tr.label}, loads {loads.tolist()}, prices {prices.tolist()}, "
                   f"family std {', '.join(f'{s:.2f}' for s in stds)}")
    assert tr.termination is Termination.CYCLE and tr.period == 2
    np.testing.assert_allclose(loads[:2], [60, 30], atol=1e-6)
    np.testing.assert_allclose(prices[:2], [45, 15], atol=1e-6)
    assert all(a <= b + 1e-9 for a, b in zip(stds, stds[1:]))


def test_8_distribution_market(verdict):
    scn = scenario("six_bus.case")
    mgs = scn.instances()
    groups = {}
    for mg in mgs:
        groups.setdefault(mg.attached_bus, {})[mg.id] = build_demand_bid(mg, scn.default_grid(mg))
    clearing = clear_market(scn.network, {b: aggregate_bids(list(g.values())) for b, g in groups.items()},
                            rigid_load=scn.rigid_load())
    for bus, group in groups.items():
        for side, awarded in (("demand", clearing.demand_award), ("supply", clearing.supply_award)):
            parts = disaggregate_awards(group, awarded[bus], side)
            for t in range(scn.network.horizon):
                units = sum(round(p[t] * 1e9) for p in parts.values())
                assert units == round(awarded[bus][t] * 1e9)
    per_bus_hour = {}
    for blk, q in zip(clearing.blocks, clearing.uc.block_accepted):
        per_bus_hour[blk.bus, blk.hour] = per_bus_hour.get((blk.bus, blk.hour), 0.0) + q
    for (bus, t), q in per_bus_hour.items():
        assert abs(clearing.demand_award[bus][t] + clearing.supply_award[bus][t] - q) <= 1e-9
    accepted = float(np.sum(clearing.uc.block_accepted))

    rep = run_dmo(scn)
    gap = float(np.abs(rep.actual - rep.forecast).max())
    osc = scenario("oscillation_1bus.case")
    dmo = run_dmo(osc).metrics["total_abs_mwh"]
    base = run_baseline(osc).metrics["total_abs_mwh"]
    verdict.append(f"accepted {accepted:.3f} MW, realized-cleared {gap:.1e} MW, oscillation dmo {dmo:.2f} vs baseline {base:.2f}")
    assert gap <= 1e-6
    assert dmo <= base


def test_9_end_to_end(verdict, tmp_path):
    case = str(data_path("six_bus.case"))
    times = {}
    for paradigm in ("baseline", "redispatch", "iterative", "dmo"):
        bundles = []
        for k in range(2):
            out = tmp_path / f"{paradigm}{k}"
            start = time.perf_counter()
            assert main(["run", "--case", case, "--paradigm", paradigm, "--out", str(out)]) == 0
            times[paradigm] = max(times.get(paradigm, 0.0), time.perf_counter() - start)
            bundles.append({name: (out / name).read_bytes() for name in FILES})
        assert bundles[0] == bundles[1], f"{paradigm} output differs between runs"
    verdict.append(", ".join(f"{p} {t:.1f}s" for p, t in times.items()) + ", byte-identical reruns")
    assert max(times.values()) < 60


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
