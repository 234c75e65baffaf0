"""Price-based microgrid scheduling and its market-based variants.

A microgrid minimizes local generation cost, curtailment at the value of lost
load and the cost of power bought over its tie line, subject to hourly power
balance, DER limits, energy requirements, inter-hour coupling and the tie-line
limit.  The generic DER constraints are realized by three families:
dispatchable units, energy storage and adjustable loads.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ._builder import LpBuilder, add_commitment_block, commitment_cost
from .grid import CaseInvalid, Infeasible, check_unit
from .milp import SolverOptions, Status, solve_milp

log = logging.getLogger(__name__)

DEFAULT_VOLL = 10_000.0
DEFAULT_VIOLATION_PENALTY = 1_000.0


class AwardExceedsTie(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class DispatchableDer:
    name: str
    p_min: float
    p_max: float
    marginal_cost: float
    no_load_cost: float = 0.0
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    ramp_up: float = math.inf
    ramp_down: float = math.inf
    min_up: int = 1
    min_down: int = 1
    initial_on: bool = False
    initial_power: float = 0.0
    initial_up_time: Optional[int] = None
    initial_down_time: Optional[int] = None

    def __post_init__(self):
        check_unit(self)


@dataclasses.dataclass(frozen=True)
class StorageDer:
    name: str
    charge_max: float
    discharge_max: float
    energy_capacity: float
    soc_min: float
    soc_max: float
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    soc_initial: float = 0.0
    # None leaves the end-of-day state of charge free
    terminal_soc: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.soc_min <= self.soc_initial <= self.soc_max <= self.energy_capacity:
            raise CaseInvalid(f"storage {self.name}: need soc_min <= soc_initial <= soc_max <= capacity")
        if not (0 < self.charge_efficiency <= 1 and 0 < self.discharge_efficiency <= 1):
            raise CaseInvalid(f"storage {self.name}: efficiencies must lie in (0, 1]")
        if self.charge_max < 0 or self.discharge_max < 0:
            raise CaseInvalid(f"storage {self.name}: power limits must be nonnegative")
        if self.terminal_soc is not None and not self.soc_min <= self.terminal_soc <= self.soc_max:
            raise CaseInvalid(f"storage {self.name}: terminal state of charge outside its limits")


@dataclasses.dataclass(frozen=True)
class AdjustableLoad:
    """Flexible load that must draw ``energy`` MWh inside hours ``t_start..t_end``."""

    name: str
    p_min: float
    p_max: float
    energy: float
    t_start: int
    t_end: int
    min_operating_time: int = 1
    pickup_rate: float = math.inf
    drop_rate: float = math.inf

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise CaseInvalid(f"load {self.name}: need 0 <= p_min <= p_max")
        if self.t_end < self.t_start or self.t_start < 0:
            raise CaseInvalid(f"load {self.name}: empty operating window")
        width = self.t_end - self.t_start + 1
        if not self.p_min * self.min_operating_time - 1e-9 <= self.energy <= self.p_max * width + 1e-9:
            raise CaseInvalid(f"load {self.name}: required energy cannot be met in its window")
        if self.min_operating_time < 1 or not (self.pickup_rate > 0 and self.drop_rate > 0):
            raise CaseInvalid(f"load {self.name}: invalid operating time or rates")


@dataclasses.dataclass(frozen=True)
class MicrogridCase:
    id: str
    attached_bus: int
    fixed_load: tuple  # MW per hour (all fixed loads summed)
    dispatchables: tuple = ()
    storages: tuple = ()
    adjustable_loads: tuple = ()
    nondispatchable: tuple = None  # MW per hour of must-take local generation
    voll: float = DEFAULT_VOLL
    tie_limit: float = math.inf
    violation_penalty: float = DEFAULT_VIOLATION_PENALTY
    # per-microgrid override of the scenario penetration
    penetration: Optional[float] = None

    def __post_init__(self):
        fl = tuple(float(v) for v in self.fixed_load)
        object.__setattr__(self, "fixed_load", fl)
        nd = self.nondispatchable
        object.__setattr__(self, "nondispatchable", tuple(float(v) for v in nd) if nd is not None else (0.0,) * len(fl))
        for name in ("dispatchables", "storages", "adjustable_loads"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    @property
    def horizon(self) -> int:
        return len(self.fixed_load)

    def validate(self):
        if math.isnan(self.tie_limit):
            raise CaseInvalid(f"microgrid {self.id}: tie limit is not a number")
        if len(self.nondispatchable) != self.horizon:
            raise CaseInvalid(f"microgrid {self.id}: nondispatchable forecast length differs from horizon")
        if any(v < 0 for v in self.fixed_load) or any(v < 0 for v in self.nondispatchable):
            raise CaseInvalid(f"microgrid {self.id}: loads and forecasts must be nonnegative")
        if self.tie_limit < 0:
            raise CaseInvalid(f"microgrid {self.id}: tie limit must be nonnegative")
        costs = [d.marginal_cost for d in self.dispatchables]
        if costs and self.voll <= max(costs):
            raise CaseInvalid(f"microgrid {self.id}: value of lost load must exceed every DER marginal cost")
        names = [d.name for d in (*self.dispatchables, *self.storages, *self.adjustable_loads)]
        if len(set(names)) != len(names):
            raise CaseInvalid(f"microgrid {self.id}: DER names must be unique")
        for a in self.adjustable_loads:
            if a.t_end >= self.horizon:
                raise CaseInvalid(f"load {a.name}: window ends after the horizon")
        if self.penetration is not None and not 0 <= self.penetration <= 1:
            raise CaseInvalid(f"microgrid {self.id}: penetration must lie in [0, 1]")

    @property
    def has_ders(self) -> bool:
        return bool(self.dispatchables or self.storages or self.adjustable_loads)

    def scaled(self, factor: float, fixed_load) -> "MicrogridCase":
        """Portfolio scaled by ``factor`` serving ``fixed_load``.

        Capacities, energies, ramps, fixed costs and the tie limit scale;
        marginal costs, efficiencies and time constants do not.
        """
        f = float(factor)
        ders = tuple(
            dataclasses.replace(
                d,
                p_min=d.p_min * f,
                p_max=d.p_max * f,
                no_load_cost=d.no_load_cost * f,
                startup_cost=d.startup_cost * f,
                shutdown_cost=d.shutdown_cost * f,
                ramp_up=d.ramp_up * f if f > 0 else d.ramp_up,
                ramp_down=d.ramp_down * f if f > 0 else d.ramp_down,
                initial_power=d.initial_power * f,
            )
            for d in self.dispatchables
        )
        stores = tuple(
            dataclasses.replace(
                s,
                charge_max=s.charge_max * f,
                discharge_max=s.discharge_max * f,
                energy_capacity=s.energy_capacity * f,
                soc_min=s.soc_min * f,
                soc_max=s.soc_max * f,
                soc_initial=s.soc_initial * f,
                terminal_soc=None if s.terminal_soc is None else s.terminal_soc * f,
            )
            for s in self.storages
        )
        loads = tuple(
            dataclasses.replace(
                a,
                p_min=a.p_min * f,
                p_max=a.p_max * f,
                energy=a.energy * f,
                pickup_rate=a.pickup_rate * f if f > 0 else a.pickup_rate,
                drop_rate=a.drop_rate * f if f > 0 else a.drop_rate,
            )
            for a in self.adjustable_loads
        )
        return dataclasses.replace(
            self,
            fixed_load=tuple(fixed_load),
            dispatchables=ders,
            storages=stores,
            adjustable_loads=loads,
            nondispatchable=tuple(v * f for v in self.nondispatchable),
            # inf * 0 is nan; an unlimited tie stays unlimited
            tie_limit=self.tie_limit * f if math.isfinite(self.tie_limit) else math.inf,
        )


@dataclasses.dataclass(frozen=True, eq=False)
class MicrogridSchedule:
    microgrid: str
    der_power: dict  # name -> MW per hour
    der_on: dict  # name -> 0/1 per hour
    charge: dict  # storage name -> MW per hour
    discharge: dict
    soc: dict  # storage name -> MWh at the end of each hour
    load_power: dict  # adjustable load name -> MW per hour
    load_on: dict
    exchange: np.ndarray  # MW per hour, positive = import
    curtailment: np.ndarray
    deviation_up: np.ndarray
    deviation_down: np.ndarray
    total_cost: float
    node_count: int = 0

    @property
    def horizon(self) -> int:
        return self.exchange.shape[0]


@dataclasses.dataclass
class _Model:
    builder: LpBuilder
    ders: list
    charge: list
    discharge: list
    mode: list
    soc: list
    load: list
    load_on: list
    exchange: np.ndarray
    curtail: np.ndarray
    dev_up: np.ndarray
    dev_down: np.ndarray


def _build(case: MicrogridCase, price, award=None) -> _Model:
    T = case.horizon
    b = LpBuilder()
    fixed = np.asarray(case.fixed_load)
    tie = case.tie_limit
    tie_bound = tie if math.isfinite(tie) else _unbounded_tie(case)

    ders = [add_commitment_block(b, d, T, f"{case.id}.{d.name}") for d in case.dispatchables]

    charge, discharge, mode, soc = [], [], [], []
    for s in case.storages:
        tag = f"{case.id}.{s.name}"
        ch = np.array([b.var(f"{tag}.ch[{t}]", 0, s.charge_max) for t in range(T)])
        dis = np.array([b.var(f"{tag}.dis[{t}]", 0, s.discharge_max) for t in range(T)])
        # mode 1 = charging; rules out simultaneous charge and discharge
        md = np.array([b.var(f"{tag}.mode[{t}]", 0, 1, binary=True) for t in range(T)])
        e = np.array([b.var(f"{tag}.soc[{t}]", s.soc_min, s.soc_max) for t in range(T)])
        for t in range(T):
            b.le([(ch[t], 1), (md[t], -s.charge_max)], 0, f"{tag}.chmode[{t}]")
            b.le([(dis[t], 1), (md[t], s.discharge_max)], s.discharge_max, f"{tag}.dismode[{t}]")
            terms = [(e[t], 1), (ch[t], -s.charge_efficiency), (dis[t], 1 / s.discharge_efficiency)]
            if t == 0:
                b.eq(terms, s.soc_initial, f"{tag}.energy[0]")
            else:
                b.eq(terms + [(e[t - 1], -1)], 0, f"{tag}.energy[{t}]")
        if s.terminal_soc is not None and T:
            b.fix(e[-1], s.terminal_soc)
        charge.append(ch)
        discharge.append(dis)
        mode.append(md)
        soc.append(e)

    loads, load_on = [], []
    for a in case.adjustable_loads:
        tag = f"{case.id}.{a.name}"
        p = np.empty(T, int)
        z = np.empty(T, int)
        y = np.empty(T, int)
        for t in range(T):
            inside = a.t_start <= t <= a.t_end
            p[t] = b.var(f"{tag}.p[{t}]", 0, a.p_max if inside else 0)
            z[t] = b.var(f"{tag}.on[{t}]", 0, 1 if inside else 0, binary=True)
            y[t] = b.var(f"{tag}.start[{t}]", 0, 1 if inside else 0)
        for t in range(a.t_start, a.t_end + 1):
            b.le([(p[t], 1), (z[t], -a.p_max)], 0, f"{tag}.pmax[{t}]")
            if a.p_min > 0:
                b.ge([(p[t], 1), (z[t], -a.p_min)], 0, f"{tag}.pmin[{t}]")
            b.ge([(y[t], 1), (z[t], -1)] + ([(z[t - 1], 1)] if t > 0 else []), 0, f"{tag}.start[{t}]")
            if a.min_operating_time > 1:
                window = range(t, min(t + a.min_operating_time, T))
                b.ge([(z[k], 1) for k in window] + [(y[t], -len(window))], 0, f"{tag}.minop[{t}]")
            if t > 0 and a.pickup_rate < a.p_max:
                b.le([(p[t], 1), (p[t - 1], -1), (z[t - 1], a.p_max)], a.pickup_rate + a.p_max, f"{tag}.pickup[{t}]")
            if t > 0 and a.drop_rate < a.p_max:
                b.le([(p[t - 1], 1), (p[t], -1), (z[t], a.p_max)], a.drop_rate + a.p_max, f"{tag}.drop[{t}]")
        b.eq([(p[t], 1) for t in range(T)], a.energy, f"{tag}.energy")
        loads.append(p)
        load_on.append(z)

    exchange = np.empty(T, int)
    curtail = np.empty(T, int)
    dev_up = np.empty(T if award is not None else 0, int)
    dev_down = np.empty(T if award is not None else 0, int)
    for t in range(T):
        exchange[t] = b.var(f"{case.id}.pm[{t}]", -tie_bound, tie_bound, 0.0 if award is not None else price[t])
        curtail[t] = b.var(f"{case.id}.ls[{t}]", 0, fixed[t], case.voll)
        if award is not None:
            dev_up[t] = b.var(f"{case.id}.dev+[{t}]", 0, 2 * tie_bound, case.violation_penalty)
            dev_down[t] = b.var(f"{case.id}.dev-[{t}]", 0, 2 * tie_bound, case.violation_penalty)
            b.eq([(exchange[t], 1), (dev_up[t], -1), (dev_down[t], 1)], award[t], f"{case.id}.award[{t}]")

    for t in range(T):
        terms = [(exchange[t], 1), (curtail[t], 1)]
        terms += [(d["power"][t], 1) for d in ders]
        terms += [(dis[t], 1) for dis in discharge] + [(ch[t], -1) for ch in charge]
        terms += [(p[t], -1) for p in loads]
        b.eq(terms, fixed[t] - case.nondispatchable[t], f"{case.id}.balance[{t}]")

    return _Model(b, ders, charge, discharge, mode, soc, loads, load_on, exchange, curtail, dev_up, dev_down)


def _unbounded_tie(case: MicrogridCase) -> float:
    # a finite stand-in for an unlimited tie line: enough to cover any balance
    need = max(case.fixed_load, default=0.0) + max(case.nondispatchable, default=0.0)
    need += sum(d.p_max for d in case.dispatchables)
    need += sum(s.charge_max + s.discharge_max for s in case.storages)
    need += sum(a.p_max for a in case.adjustable_loads)
    return 2.0 * need + 1.0


def _solve(case: MicrogridCase, model: _Model, opts) -> MicrogridSchedule:
    lp = model.builder.build()
    sol = solve_milp(lp, opts)
    if sol.status is not Status.OPTIMAL:
        raise Infeasible(f"microgrid {case.id}: no schedule balances the microgrid ({sol.status.value})")
    x = sol.primal

    def pick(idx):
        return np.array(x[idx], dtype=float)

    return MicrogridSchedule(
        microgrid=case.id,
        der_power={d.name: pick(v["power"]) for d, v in zip(case.dispatchables, model.ders)},
        der_on={d.name: np.round(pick(v["on"])).astype(int) for d, v in zip(case.dispatchables, model.ders)},
        charge={s.name: pick(v) for s, v in zip(case.storages, model.charge)},
        discharge={s.name: pick(v) for s, v in zip(case.storages, model.discharge)},
        soc={s.name: pick(v) for s, v in zip(case.storages, model.soc)},
        load_power={a.name: pick(v) for a, v in zip(case.adjustable_loads, model.load)},
        load_on={a.name: np.round(pick(v)).astype(int) for a, v in zip(case.adjustable_loads, model.load_on)},
        exchange=pick(model.exchange),
        curtailment=pick(model.curtail),
        deviation_up=pick(model.dev_up) if model.dev_up.size else np.zeros(case.horizon),
        deviation_down=pick(model.dev_down) if model.dev_down.size else np.zeros(case.horizon),
        total_cost=float(sol.objective),
        node_count=sol.node_count,
    )


def _check_series(case, series, what):
    arr = np.asarray(series, dtype=float).ravel()
    if arr.size == 1 and case.horizon != 1:
        arr = np.full(case.horizon, arr[0])
    if arr.shape != (case.horizon,):
        raise ValueError(f"{what} must cover the {case.horizon}-hour horizon")
    return arr


def schedule(case: MicrogridCase, price, opts: SolverOptions | None = None) -> MicrogridSchedule:
    """Optimal price-based schedule for an hourly price series (a scalar means flat)."""
    price = _check_series(case, price, "price")
    return _solve(case, _build(case, price), opts)


def schedule_with_fixed_exchange(case: MicrogridCase, award, opts: SolverOptions | None = None) -> MicrogridSchedule:
    """Schedule that follows an awarded exchange, paying ``violation_penalty`` on deviations."""
    award = _check_series(case, award, "award")
    if np.any(np.abs(award) > case.tie_limit + 1e-9):
        raise AwardExceedsTie(f"microgrid {case.id}: award exceeds the tie-line limit {case.tie_limit}")
    return _solve(case, _build(case, None, award=award), opts)


def net_load(sched: MicrogridSchedule) -> np.ndarray:
    """What the main grid sees: hourly exchange, negative when exporting."""
    return sched.exchange.copy()


def operating_cost(case: MicrogridCase, sched: MicrogridSchedule, price=None) -> float:
    """Re-evaluate the scheduling objective from the schedule's own values.

    ``price`` prices the exchange (price-based mode); without it, deviations are
    charged at the violation penalty (award-following mode).
    """
    total = 0.0
    for d in case.dispatchables:
        total += commitment_cost(d, sched.der_on[d.name], sched.der_power[d.name])
    total += case.voll * float(np.sum(sched.curtailment))
    if price is not None:
        total += float(np.dot(_check_series(case, price, "price"), sched.exchange))
    total += case.violation_penalty * float(np.sum(sched.deviation_up + sched.deviation_down))
    return total


def balance_residual(case: MicrogridCase, sched: MicrogridSchedule) -> np.ndarray:
    supply = sched.exchange + sched.curtailment + np.asarray(case.nondispatchable)
    for p in sched.der_power.values():
        supply = supply + p
    for s in case.storages:
        supply = supply + sched.discharge[s.name] - sched.charge[s.name]
    demand = np.asarray(case.fixed_load) + sum((p for p in sched.load_power.values()), np.zeros(case.horizon))
    return supply - demand


# -- demand bids ---------------------------------------------------------------


@dataclasses.dataclass(frozen=True, eq=False)
class BidCurve:
    """Hourly stepwise bids.

    ``demand[t]`` lists ``(price, MW)`` import steps with strictly decreasing
    prices; a step is taken when the clearing price is at or below its price.
    ``supply[t]`` lists export offers as ``(price, -MW)``, also by decreasing
    price; an offer is taken when the clearing price is at or above its price.
    ``owner`` tags each step with the microgrid that submitted it.
    """

    demand: tuple
    supply: tuple = None
    owner: str = ""
    clipped: float = 0.0  # MW removed to keep sampled demand monotone

    def __post_init__(self):
        demand = tuple(tuple((float(p), float(q)) for p, q in hour) for hour in self.demand)
        supply = self.supply if self.supply is not None else ((),) * len(demand)
        supply = tuple(tuple((float(p), float(q)) for p, q in hour) for hour in supply)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "supply", supply)

    @property
    def horizon(self) -> int:
        return len(self.demand)

    def total_demand(self, hour: int) -> float:
        return sum(q for _, q in self.demand[hour])

    def total_supply(self, hour: int) -> float:
        return -sum(q for _, q in self.supply[hour])

    def is_empty(self) -> bool:
        return not any(self.demand) and not any(self.supply)

    def check(self, tie_limit: float = math.inf):
        for side in (self.demand, self.supply):
            for hour in side:
                prices = [p for p, _ in hour]
                if any(a <= b for a, b in zip(prices, prices[1:])):
                    raise ValueError("bid prices must strictly decrease along each hour")
        for t in range(self.horizon):
            if any(q < 0 for _, q in self.demand[t]) or any(q > 0 for _, q in self.supply[t]):
                raise ValueError("demand steps must be nonnegative and supply steps nonpositive")
            if self.total_demand(t) > tie_limit + 1e-6 or self.total_supply(t) > tie_limit + 1e-6:
                raise ValueError("cumulative bid quantity exceeds the tie-line limit")


def default_price_grid(case: MicrogridCase, system_costs: Sequence[float], samples: int = 20) -> np.ndarray:
    """Evenly spaced prices from half the cheapest DER cost to twice the dearest system cost."""
    der_costs = [d.marginal_cost for d in case.dispatchables]
    low = 0.5 * min(der_costs or list(system_costs) or [1.0])
    high = 2.0 * max(list(system_costs) or der_costs or [1.0])
    if high <= low:
        high = low + 1.0
    return np.linspace(low, high, samples)


def build_demand_bid(case: MicrogridCase, price_grid, opts: SolverOptions | None = None) -> BidCurve:
    """Sample the price response at flat prices and turn it into hourly bid steps."""
    grid = np.asarray(price_grid, dtype=float).ravel()
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("price grid must be nonempty and strictly ascending")
    T = case.horizon
    sampled = np.array([schedule(case, np.full(T, p), opts).exchange for p in grid])  # (K, T)
    sampled[np.abs(sampled) < 1e-9] = 0.0

    buy = np.maximum(sampled, 0.0)
    sell = np.maximum(-sampled, 0.0)
    # demand must not rise with price nor supply fall; clip to the monotone envelope
    buy_env = np.minimum.accumulate(buy, axis=0)
    sell_env = np.minimum.accumulate(sell[::-1], axis=0)[::-1]
    clipped = float(np.sum(buy - buy_env) + np.sum(sell - sell_env))
    if clipped > 1e-6:
        log.warning("microgrid %s: clipped %.6f MW of non-monotone sampled response", case.id, clipped)

    demand, supply = [], []
    for t in range(T):
        steps = []
        for k in range(grid.size):
            nxt = buy_env[k + 1, t] if k + 1 < grid.size else 0.0
            q = buy_env[k, t] - nxt
            if q > 1e-9:
                steps.append((grid[k], q))
        demand.append(tuple(reversed(steps)))
        offers = []
        for k in range(grid.size):
            prev = sell_env[k - 1, t] if k > 0 else 0.0
            q = sell_env[k, t] - prev
            if q > 1e-9:
                offers.append((grid[k], -q))
        supply.append(tuple(reversed(offers)))
    return BidCurve(tuple(demand), tuple(supply), owner=case.id, clipped=clipped)
