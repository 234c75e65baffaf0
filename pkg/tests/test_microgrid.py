import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import check_schedule, random_microgrid
from mgsim.grid import CaseInvalid
from mgsim.microgrid import (
    AdjustableLoad,
    AwardExceedsTie,
    BidCurve,
    DispatchableDer,
    MicrogridCase,
    StorageDer,
    build_demand_bid,
    net_load,
    operating_cost,
    schedule,
    schedule_with_fixed_exchange,
)


def dg(cap, mc, **kw):
    return DispatchableDer("dg", 0.0, cap, mc, **kw)


def arbitrage_case():
    bes = StorageDer("bes", 5, 5, 10, 0, 10, soc_initial=0, terminal_soc=0)
    return MicrogridCase("m", 1, [0, 0], storages=[bes])


def test_no_ders_imports_the_load():
    case = MicrogridCase("m", 1, [4, 7, 2], tie_limit=10)
    sched = schedule(case, [10, 20, 30])
    np.testing.assert_allclose(net_load(sched), [4, 7, 2], atol=1e-9)
    assert sched.curtailment.sum() == pytest.approx(0)
    assert sched.total_cost == pytest.approx(4 * 10 + 7 * 20 + 2 * 30)


def test_islanded_deficit_is_curtailed():
    case = MicrogridCase("m", 1, [10, 10], [dg(8, 30)], tie_limit=0)
    sched = schedule(case, [50, 50])
    np.testing.assert_allclose(sched.der_power["dg"], 8, atol=1e-9)
    np.testing.assert_allclose(sched.curtailment, 2, atol=1e-9)
    np.testing.assert_allclose(net_load(sched), 0, atol=1e-9)


def test_cheaper_import_beats_local_unit():
    case = MicrogridCase("m", 1, [10, 10], [dg(20, 30)])
    sched = schedule(case, 20)
    np.testing.assert_allclose(sched.exchange, 10, atol=1e-9)
    assert not sched.der_on["dg"].any()
    assert sched.total_cost == pytest.approx(400)


def test_storage_arbitrage():
    sched = schedule(arbitrage_case(), [10, 50])
    np.testing.assert_allclose(sched.charge["bes"], [5, 0], atol=1e-9)
    np.testing.assert_allclose(sched.discharge["bes"], [0, 5], atol=1e-9)
    np.testing.assert_allclose(net_load(sched), [5, -5], atol=1e-9)
    assert sched.total_cost == pytest.approx(-200)


def test_storage_arbitrage_matches_grid_search():
    # every integer charge/discharge pair over the two hours
    best = min(10 * (c1 - d1) + 50 * (c2 - d2)
               for c1 in range(6) for d1 in range(6) for c2 in range(6) for d2 in range(6)
               if min(c1, d1) == 0 and min(c2, d2) == 0 and c1 - d1 >= 0 and c1 - d1 + c2 - d2 == 0)
    assert schedule(arbitrage_case(), [10, 50]).total_cost == pytest.approx(best)


def test_adjustable_load_moves_to_the_cheap_hour():
    case = MicrogridCase("m", 1, [0, 0, 0], adjustable_loads=[AdjustableLoad("wash", 0, 4, 6, 0, 2)])
    sched = schedule(case, [30, 10, 20])
    np.testing.assert_allclose(sched.load_power["wash"], [0, 4, 2], atol=1e-9)


def test_min_operating_time_holds_the_load_on():
    load = AdjustableLoad("pump", 1, 4, 4, 0, 3, min_operating_time=3)
    case = MicrogridCase("m", 1, [0] * 4, adjustable_loads=[load])
    sched = schedule(case, [10, 100, 100, 10])
    on = sched.load_on["pump"]
    starts = [t for t in range(4) if on[t] and (t == 0 or not on[t - 1])]
    assert all(on[t:t + 3].all() for t in starts if t + 3 <= 4)
    check_schedule(case, sched)


def test_cost_reevaluation_matches_objective():
    rng = np.random.default_rng(4)
    for _ in range(20):
        case = random_microgrid(rng)
        price = rng.uniform(5, 80, case.horizon)
        sched = schedule(case, price)
        assert operating_cost(case, sched, price) == pytest.approx(sched.total_cost, rel=1e-6, abs=1e-6)


def test_price_series_length_checked():
    with pytest.raises(ValueError):
        schedule(arbitrage_case(), [1, 2, 3])


@pytest.mark.parametrize(
    "build",
    [
        lambda: StorageDer("s", 1, 1, 10, 0, 10, soc_initial=11),
        lambda: StorageDer("s", 1, 1, 10, 0, 10, charge_efficiency=0),
        lambda: StorageDer("s", 1, 1, 10, 2, 10, soc_initial=2, terminal_soc=1),
        lambda: AdjustableLoad("a", 0, 1, 5, 0, 1),
        lambda: AdjustableLoad("a", 0, 1, 1, 2, 1),
        lambda: MicrogridCase("m", 1, [1, 1], nondispatchable=[1]),
        lambda: MicrogridCase("m", 1, [-1]),
        lambda: MicrogridCase("m", 1, [1], [dg(5, 20)], voll=20),
        lambda: MicrogridCase("m", 1, [1], [dg(5, 20), dg(5, 30)]),
        lambda: MicrogridCase("m", 1, [1], adjustable_loads=[AdjustableLoad("a", 0, 1, 1, 0, 1)]),
        lambda: MicrogridCase("m", 1, [1], penetration=1.5),
    ],
)
def test_invalid_microgrids(build):
    with pytest.raises(CaseInvalid):
        build()


# -- award following ---------------------------------------------------------------


def test_following_the_own_optimum_costs_no_deviation():
    rng = np.random.default_rng(8)
    for _ in range(10):
        case = random_microgrid(rng)
        price = rng.uniform(5, 80, case.horizon)
        free = schedule(case, price)
        bound = schedule_with_fixed_exchange(case, free.exchange)
        np.testing.assert_allclose(bound.deviation_up + bound.deviation_down, 0, atol=1e-6)
        np.testing.assert_allclose(bound.exchange, free.exchange, atol=1e-6)
        check_schedule(case, bound)


def test_zero_award_self_supplies():
    case = MicrogridCase("m", 1, [5, 8], [dg(10, 30)], tie_limit=20)
    sched = schedule_with_fixed_exchange(case, [0, 0])
    np.testing.assert_allclose(sched.deviation_up + sched.deviation_down, 0, atol=1e-9)
    np.testing.assert_allclose(sched.der_power["dg"], [5, 8], atol=1e-9)


def test_award_beyond_tie_rejected():
    case = MicrogridCase("m", 1, [5], tie_limit=3)
    with pytest.raises(AwardExceedsTie):
        schedule_with_fixed_exchange(case, [5])


def test_unfollowable_award_pays_the_penalty():
    case = MicrogridCase("m", 1, [5], tie_limit=10, violation_penalty=100)
    sched = schedule_with_fixed_exchange(case, [8])
    assert sched.deviation_down[0] == pytest.approx(3)
    assert sched.total_cost == pytest.approx(300)


# -- bids --------------------------------------------------------------------------


def test_bid_from_a_local_unit():
    case = MicrogridCase("m", 1, [10], [dg(10, 30)])
    bid = build_demand_bid(case, [20, 40])
    assert bid.demand == (((20.0, 10.0),),)
    assert bid.supply == ((),)


def test_inelastic_bid_is_one_step_at_the_top():
    case = MicrogridCase("m", 1, [10, 10])
    bid = build_demand_bid(case, [10, 20, 30])
    assert bid.demand == (((30.0, 10.0),), ((30.0, 10.0),))


def test_empty_microgrid_has_empty_bid():
    bid = build_demand_bid(MicrogridCase("m", 1, [0, 0]), [10, 20])
    assert bid.is_empty()


def test_exporting_unit_offers_supply():
    case = MicrogridCase("m", 1, [0], [dg(10, 30)], tie_limit=10)
    bid = build_demand_bid(case, [20, 40])
    assert bid.supply == (((40.0, -10.0),),)
    assert bid.total_supply(0) == pytest.approx(10)


@pytest.mark.parametrize("grid", [[], [10, 10], [20, 10]])
def test_price_grid_must_ascend(grid):
    with pytest.raises(ValueError):
        build_demand_bid(MicrogridCase("m", 1, [1]), grid)


def test_bid_check_rejects_rising_prices():
    with pytest.raises(ValueError):
        BidCurve((((10, 1), (20, 1)),)).check()
    with pytest.raises(ValueError):
        BidCurve((((20, 6),),)).check(tie_limit=5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bids_are_monotone(seed):
    rng = np.random.default_rng(seed)
    case = random_microgrid(rng)
    bid = build_demand_bid(case, np.linspace(5, 80, 6))
    bid.check(case.tie_limit)
    assert bid.horizon == case.horizon


# -- invariants on random cases ------------------------------------------------------


def check_price_response(case, p1, p2):
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


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_price_response_invariants(seed):
    rng = np.random.default_rng(seed)
    case = random_microgrid(rng)
    check_price_response(case, rng.uniform(5, 80, case.horizon), rng.uniform(5, 80, case.horizon))
