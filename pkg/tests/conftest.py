import math
from importlib import resources

import numpy as np
import pytest

from mgsim.grid import Branch, Bus, NetworkCase, ThermalUnit
from mgsim.milp import GE, LE, LinearProgram

DATA = resources.files("mgsim") / "data"


def data_path(name: str):
    return DATA / name


def must_run(name, bus, p_max, mc, p_min=0.0, **kw):
    """Unit that is on from the start and costs nothing to keep on."""
    kw.setdefault("initial_on", True)
    kw.setdefault("initial_power", p_min)
    return ThermalUnit(name, bus, p_min, p_max, mc, **kw)


def single_bus(units, load):
    load = [list(np.atleast_1d(np.asarray(load, float)))]
    return NetworkCase([Bus(1, True)], [], units, load)


def two_bus(limit, load2=80.0):
    return NetworkCase(
        [Bus(1, True), Bus(2)],
        [Branch(1, 2, 0.1, limit)],
        [must_run("G1", 1, 100, 10), must_run("G2", 2, 100, 30)],
        [[0.0], [load2]],
    )


def random_milp(rng, n_bin=None, n_cont=None, n_rows=None) -> LinearProgram:
    """Small bounded MILP; feasibility is not guaranteed."""
    nb = rng.integers(1, 9) if n_bin is None else n_bin
    nc = rng.integers(0, 11) if n_cont is None else n_cont
    n = nb + nc
    m = rng.integers(1, 13) if n_rows is None else n_rows
    A = np.round(rng.uniform(-5, 5, (m, n)), 2)
    x0 = np.concatenate([rng.integers(0, 2, nb), rng.uniform(0, 5, nc)])
    slack = rng.uniform(0, 3, m)
    senses = rng.choice([LE, GE], m)
    rhs = np.where(senses == LE, A @ x0 + slack, A @ x0 - slack)
    # make about a third of the instances likely infeasible
    if rng.random() < 0.3:
        rhs = rhs + np.where(senses == LE, -1, 1) * rng.uniform(0, 20, m)
    lower = np.concatenate([np.zeros(nb), rng.uniform(-2, 0, nc)])
    upper = np.concatenate([np.ones(nb), rng.uniform(5, 8, nc)])
    return LinearProgram(
        cost=np.round(rng.uniform(-10, 10, n), 2),
        A=A,
        senses=list(senses),
        rhs=rhs,
        lower=lower,
        upper=upper,
        integer=[True] * nb + [False] * nc,
    )


def random_lp(rng) -> LinearProgram:
    """Feasible bounded LP with mixed relations."""
    n = int(rng.integers(1, 12))
    m = int(rng.integers(1, 12))
    A = np.round(rng.uniform(-5, 5, (m, n)), 2)
    lower = rng.uniform(-5, 0, n)
    upper = lower + rng.uniform(0.5, 10, n)
    x0 = rng.uniform(lower, upper)
    senses = list(rng.choice(["<=", "=", ">="], m, p=[0.4, 0.2, 0.4]))
    act = A @ x0
    rhs = np.array([a + (rng.uniform(0, 3) if s == "<=" else -rng.uniform(0, 3) if s == ">=" else 0.0) for a, s in zip(act, senses)])
    return LinearProgram(np.round(rng.uniform(-10, 10, n), 2), A, senses, rhs, lower, upper)


def lp_dual_objective(lp: LinearProgram, y: np.ndarray) -> float:
    """Lagrangian dual value b.y + min over the box of (c - A'y).x."""
    reduced = lp.cost - lp.A.T @ y
    box = np.where(reduced >= 0, reduced * lp.lower, reduced * lp.upper)
    return float(lp.rhs @ y + box.sum())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # lets fixtures see the outcome of the test body at teardown
    outcome = yield
    if call.when == "call":
        item.rep_call = outcome.get_result()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_microgrid(rng, horizon=None):
    """Small microgrid with a random mix of DER families; always schedulable."""
    from mgsim.microgrid import AdjustableLoad, DispatchableDer, MicrogridCase, StorageDer

    T = int(rng.integers(2, 5)) if horizon is None else horizon
    load = np.round(rng.uniform(0, 20, T), 2)
    ders = []
    for i in range(int(rng.integers(0, 3))):
        cap = float(rng.uniform(5, 25))
        ders.append(DispatchableDer(
            f"d{i}", p_min=float(rng.uniform(0, 0.4)) * cap, p_max=cap,
            marginal_cost=float(rng.uniform(10, 60)), no_load_cost=float(rng.uniform(0, 30)),
            startup_cost=float(rng.uniform(0, 50)), min_up=int(rng.integers(1, 3)),
            min_down=int(rng.integers(1, 3)),
        ))
    stores = []
    if rng.random() < 0.6:
        cap = float(rng.uniform(5, 20))
        init = float(rng.uniform(0, cap))
        stores.append(StorageDer(
            "s", charge_max=float(rng.uniform(1, 8)), discharge_max=float(rng.uniform(1, 8)),
            energy_capacity=cap, soc_min=0.0, soc_max=cap,
            charge_efficiency=float(rng.uniform(0.8, 1)), discharge_efficiency=float(rng.uniform(0.8, 1)),
            soc_initial=init, terminal_soc=init if rng.random() < 0.5 else None,
        ))
    adj = []
    if rng.random() < 0.5:
        t0 = int(rng.integers(0, T))
        t1 = int(rng.integers(t0, T))
        p_max = float(rng.uniform(2, 10))
        adj.append(AdjustableLoad("a", 0.0, p_max, float(rng.uniform(0, p_max * (t1 - t0 + 1))), t0, t1))
    # a finite tie still carries any adjustable load, so curtailment can always balance
    floor = max((a.p_max for a in adj), default=0.0)
    tie = math.inf if rng.random() < 0.5 else floor + float(rng.uniform(0, 30))
    # must-take output below the fixed load, or a closed tie would have nowhere to send it
    solar = np.round(rng.uniform(0, 1, T) * load, 2) if rng.random() < 0.5 else None
    return MicrogridCase("mg", 1, load, ders, stores, adj, nondispatchable=solar, tie_limit=tie)


def check_schedule(case, sched, tol=1e-6):
    """Balance, bounds and energy bookkeeping of a returned microgrid schedule."""
    from mgsim.microgrid import balance_residual

    assert np.abs(balance_residual(case, sched)).max(initial=0.0) <= tol
    assert np.all(np.abs(sched.exchange) <= case.tie_limit + tol)
    assert np.all(sched.curtailment >= -tol)
    assert np.all(sched.curtailment <= np.asarray(case.fixed_load) + tol)
    for d in case.dispatchables:
        on, p = sched.der_on[d.name], sched.der_power[d.name]
        assert np.all(p <= d.p_max * on + tol) and np.all(p >= d.p_min * on - tol)
    for s in case.storages:
        ch, dis, e = sched.charge[s.name], sched.discharge[s.name], sched.soc[s.name]
        assert np.all(ch <= s.charge_max + tol) and np.all(dis <= s.discharge_max + tol)
        assert np.all(ch >= -tol) and np.all(dis >= -tol)
        assert np.all(np.minimum(ch, dis) <= tol)
        assert np.all(e >= s.soc_min - tol) and np.all(e <= s.soc_max + tol)
        prev = np.concatenate([[s.soc_initial], e[:-1]])
        flow = s.charge_efficiency * ch - dis / s.discharge_efficiency
        np.testing.assert_allclose(e, prev + flow, atol=tol)
        if s.terminal_soc is not None:
            assert abs(e[-1] - s.terminal_soc) <= tol
    for a in case.adjustable_loads:
        p = sched.load_power[a.name]
        assert abs(p.sum() - a.energy) <= tol
        assert np.all(p >= -tol) and np.all(p <= a.p_max + tol)
        outside = [t for t in range(case.horizon) if not a.t_start <= t <= a.t_end]
        assert np.all(np.abs(p[outside]) <= tol)
