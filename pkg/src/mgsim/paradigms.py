"""The four grid/microgrid coordination experiments.

* baseline: ISO clears the forecast, microgrids answer its LMPs, and the
  realized net load departs from the forecast.
* redispatch: the ISO absorbs that departure with the committed units.
* iterative: ISO and microgrids trade prices and loads until the loads repeat.
* dmo: microgrids bid through a distribution market operator, the ISO clears
  the bids, awards come back down and the microgrids follow them.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Optional, Sequence

import numpy as np

from . import grid
from .grid import DemandBlock, NetworkCase, RedispatchInfeasible, UcResult
from .microgrid import (
    BidCurve,
    MicrogridCase,
    MicrogridSchedule,
    build_demand_bid,
    default_price_grid,
    net_load,
    schedule,
    schedule_with_fixed_exchange,
)
from .milp import SolverOptions

log = logging.getLogger(__name__)

PARADIGMS = ("baseline", "redispatch", "iterative", "dmo")

# awards are settled on a 1e-9 MW grid so that splits add up exactly
_AWARD_UNITS = 1e9


@dataclasses.dataclass(frozen=True)
class Scenario:
    network: NetworkCase
    microgrids: tuple = ()  # MicrogridCase templates at full penetration
    penetration: float = 0.5
    paradigm: str = "baseline"
    max_iter: int = 50
    load_tol: float = 1e-3
    price_grid: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "microgrids", tuple(self.microgrids))
        if self.price_grid is not None:
            object.__setattr__(self, "price_grid", tuple(float(p) for p in self.price_grid))
        if not 0 <= self.penetration <= 1:
            raise grid.CaseInvalid("penetration must lie in [0, 1]")
        if self.paradigm not in PARADIGMS:
            raise grid.CaseInvalid(f"unknown paradigm {self.paradigm!r}")
        if self.max_iter < 2:
            raise grid.CaseInvalid("max_iter must be at least 2")
        if not self.load_tol > 0:
            raise grid.CaseInvalid("load_tol must be positive")
        ids = set(self.network.bus_ids)
        seen = set()
        for mg in self.microgrids:
            if mg.attached_bus not in ids:
                raise grid.CaseInvalid(f"microgrid {mg.id} is attached to unknown bus {mg.attached_bus}")
            if mg.id in seen:
                raise grid.CaseInvalid(f"duplicate microgrid id {mg.id}")
            seen.add(mg.id)
            if mg.horizon not in (0, self.network.horizon):
                raise grid.CaseInvalid(f"microgrid {mg.id} horizon differs from the network's")

    def with_(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def bus_penetration(self, bus: int) -> float:
        """Share of a bus's forecast load operated by its microgrids (0 without one)."""
        here = [mg for mg in self.microgrids if mg.attached_bus == bus]
        if not here:
            return 0.0
        overrides = {mg.penetration for mg in here if mg.penetration is not None}
        if len(overrides) > 1:
            raise grid.CaseInvalid(f"microgrids at bus {bus} disagree on penetration")
        return overrides.pop() if overrides else self.penetration

    def instances(self) -> list[MicrogridCase]:
        """Microgrids scaled to their penetration and serving their share of bus load."""
        load = self.network.load_matrix()
        out = []
        for mg in self.microgrids:
            bus = mg.attached_bus
            peers = sum(1 for other in self.microgrids if other.attached_bus == bus)
            f = self.bus_penetration(bus)
            share = f * load[self.network.bus_index(bus)] / peers
            out.append(mg.scaled(f / peers, share))
        return out

    def rigid_load(self) -> np.ndarray:
        """Bus-hour load that stays outside the microgrids."""
        load = self.network.load_matrix()
        for k, bus in enumerate(self.network.bus_ids):
            load[k] *= 1.0 - self.bus_penetration(bus)
        return load

    def default_grid(self, mg: MicrogridCase) -> np.ndarray:
        if self.price_grid is not None:
            return np.asarray(self.price_grid)
        return default_price_grid(mg, [u.marginal_cost for u in self.network.units])


class Termination(str, enum.Enum):
    FIXED_POINT = "FixedPoint"
    CYCLE = "CycleDetected"
    MAX_ITERATIONS = "MaxIterations"


@dataclasses.dataclass(frozen=True, eq=False)
class IterationTrace:
    load: list  # per iteration, (bus, hour) MW the ISO cleared
    lmp: list  # per iteration, (bus, hour) $/MWh
    system_cost: list  # per iteration, $
    microgrid_cost: list  # per iteration, {microgrid id: $}
    termination: Termination
    period: int = 0

    def __len__(self):
        return len(self.load)

    @property
    def average_lmp(self) -> np.ndarray:
        """(iteration, hour) system average LMP."""
        if not self.lmp:
            return np.zeros((0, 0))
        return np.array([l.mean(axis=0) for l in self.lmp])

    @property
    def total_load(self) -> np.ndarray:
        """(iteration, hour) system load."""
        if not self.load:
            return np.zeros((0, 0))
        return np.array([l.sum(axis=0) for l in self.load])

    def price_oscillation(self) -> float:
        """Population std over iterations of the day-average system LMP."""
        if not self.lmp:
            return 0.0
        return float(np.std(self.average_lmp.mean(axis=1)))

    @property
    def label(self) -> str:
        if self.termination is Termination.CYCLE:
            return f"CycleDetected(period {self.period})"
        return self.termination.value


def mismatch_metrics(forecast, actual) -> dict:
    delta = np.asarray(actual, float) - np.asarray(forecast, float)
    return {
        "max_abs_mw": float(np.max(np.abs(delta))) if delta.size else 0.0,
        "total_abs_mwh": float(np.sum(np.abs(delta))),
        "hourly_delta_mw": delta.sum(axis=0) if delta.size else np.zeros(0),
    }


@dataclasses.dataclass(frozen=True, eq=False)
class ParadigmReport:
    paradigm: str
    penetration: float
    bus_ids: tuple
    forecast: np.ndarray  # (bus, hour) MW, what the ISO planned for
    actual: np.ndarray  # (bus, hour) MW, what materialized
    uc: Optional[UcResult] = None  # day-ahead clearing
    final: Optional[UcResult] = None  # dispatch the report ends with
    schedules: dict = dataclasses.field(default_factory=dict)
    redispatch_delta: Optional[np.ndarray] = None  # (unit, hour) MW
    redispatch_residual: Optional[np.ndarray] = None  # (bus, hour) MW
    trace: Optional[IterationTrace] = None
    awards: dict = dataclasses.field(default_factory=dict)  # microgrid -> MW per hour
    deviations: dict = dataclasses.field(default_factory=dict)
    welfare: float = math.nan
    baseline_total_abs_mwh: float = math.nan
    feasible: dict = dataclasses.field(default_factory=dict)
    notes: tuple = ()
    microgrid_buses: dict = dataclasses.field(default_factory=dict)

    @property
    def metrics(self) -> dict:
        return mismatch_metrics(self.forecast, self.actual)

    @property
    def hours(self) -> int:
        return self.forecast.shape[1]


# -- shared pipeline -------------------------------------------------------------


def _respond(scn: Scenario, mgs: Sequence[MicrogridCase], lmp: np.ndarray, opts) -> tuple[np.ndarray, dict]:
    """Microgrids answer bus LMPs; returns the resulting bus load and schedules."""
    net = scn.network
    load = scn.rigid_load()
    schedules = {}
    for mg in mgs:
        k = net.bus_index(mg.attached_bus)
        sched = schedule(mg, lmp[k], opts)
        schedules[mg.id] = sched
        load[k] += net_load(sched)
    return load, schedules


def run_baseline(scn: Scenario, opts: SolverOptions | None = None) -> ParadigmReport:
    """Clear the forecast, let microgrids respond to the LMPs, compare loads."""
    net = scn.network
    forecast = net.load_matrix()
    uc = grid.solve_unit_commitment(net, opts)
    mgs = scn.instances()
    actual, schedules = _respond(scn, mgs, uc.lmp, opts)
    return ParadigmReport(
        paradigm="baseline",
        penetration=scn.penetration,
        bus_ids=tuple(net.bus_ids),
        forecast=forecast,
        actual=actual,
        uc=uc,
        final=uc,
        schedules=schedules,
        feasible={"unit_commitment": True},
        microgrid_buses={mg.id: mg.attached_bus for mg in mgs},
    )


def run_redispatch(scn: Scenario, opts: SolverOptions | None = None) -> ParadigmReport:
    """Paradigm 1: re-dispatch the day-ahead commitment against the realized load."""
    base = run_baseline(scn, opts)
    try:
        res = grid.solve_dispatch_with_lmp(scn.network, base.uc.commitment, opts, load=base.actual)
    except RedispatchInfeasible:
        log.info("redispatch infeasible under the day-ahead commitment")
        return dataclasses.replace(
            base,
            paradigm="redispatch",
            feasible={**base.feasible, "redispatch": False},
            notes=("redispatch infeasible under the day-ahead commitment",),
        )
    return dataclasses.replace(
        base,
        paradigm="redispatch",
        final=res,
        redispatch_delta=res.dispatch - base.uc.dispatch,
        redispatch_residual=res.balance_residual,
        feasible={**base.feasible, "redispatch": True},
    )


def run_iterative(scn: Scenario, opts: SolverOptions | None = None) -> ParadigmReport:
    """Paradigm 2: re-clear the market on each revised load until loads repeat."""
    net = scn.network
    mgs = scn.instances()
    tol = scn.load_tol
    load = net.load_matrix()
    loads, lmps, costs, mg_costs = [], [], [], []
    seen: dict[bytes, int] = {}
    termination, period = Termination.MAX_ITERATIONS, 0
    uc = first_uc = None
    schedules = {}
    for k in range(scn.max_iter):
        uc = grid.solve_unit_commitment(net, opts, load=load)
        first_uc = first_uc or uc
        loads.append(load)
        lmps.append(uc.lmp)
        costs.append(uc.total_cost)
        response, schedules = _respond(scn, mgs, uc.lmp, opts)
        mg_costs.append({mid: s.total_cost for mid, s in schedules.items()})
        if k >= 1 and np.max(np.abs(load - loads[-2]), initial=0.0) < tol:
            termination = Termination.FIXED_POINT
            break
        key = np.round(load / tol).astype(np.int64).tobytes()
        if key in seen:
            termination, period = Termination.CYCLE, k - seen[key]
            break
        seen[key] = k
        load = response
    trace = IterationTrace(loads, lmps, costs, mg_costs, termination, period)
    # the last cleared load against what the microgrids do at its prices
    return ParadigmReport(
        paradigm="iterative",
        penetration=scn.penetration,
        bus_ids=tuple(net.bus_ids),
        forecast=loads[-1],
        actual=response,
        uc=first_uc,
        final=uc,
        schedules=schedules,
        trace=trace,
        feasible={"unit_commitment": True},
        microgrid_buses={mg.id: mg.attached_bus for mg in mgs},
        notes=(f"termination: {trace.label}",),
    )


# -- distribution market -----------------------------------------------------------


def aggregate_bids(bids: Sequence[BidCurve]) -> BidCurve:
    """Merge bid curves step by step; equal prices are summed."""
    bids = list(bids)
    if not bids:
        return BidCurve(())
    T = bids[0].horizon
    if any(b.horizon != T for b in bids):
        raise ValueError("bid curves cover different horizons")

    def merge(side):
        out = []
        for t in range(T):
            acc: dict[float, float] = {}
            for b in bids:
                for p, q in getattr(b, side)[t]:
                    acc[p] = acc.get(p, 0.0) + q
            out.append(tuple(sorted(acc.items(), key=lambda pq: -pq[0])))
        return tuple(out)

    if len(bids) == 1:
        return bids[0]
    return BidCurve(merge("demand"), merge("supply"), owner="+".join(b.owner for b in bids))


@dataclasses.dataclass(frozen=True, eq=False)
class MarketClearing:
    uc: UcResult
    demand_award: dict  # bus -> MW per hour
    supply_award: dict  # bus -> MW per hour (exported, >= 0)
    welfare: float
    accepted_total: float
    blocks: tuple = ()  # the DemandBlocks, aligned with uc.block_accepted

    def award(self, bus: int) -> np.ndarray:
        """Net award at a bus, positive = import into the distribution side."""
        return self.demand_award[bus] - self.supply_award[bus]


def _quantize(x) -> np.ndarray:
    return np.round(np.asarray(x, float) * _AWARD_UNITS) / _AWARD_UNITS


def clear_market(
    network: NetworkCase, bids: dict, opts: SolverOptions | None = None, rigid_load=None
) -> MarketClearing:
    """Welfare-maximizing UC with price-responsive blocks at the bid buses.

    ``rigid_load`` (default: the network's load) is served unconditionally.
    Each step may be accepted in part; demand bids enter the objective at minus
    their price, supply offers at plus theirs.
    """
    T = network.horizon
    blocks = []
    for bus, curve in sorted(bids.items()):
        for t in range(T):
            for p, q in curve.demand[t]:
                blocks.append(DemandBlock(bus, t, p, q))
            for p, q in curve.supply[t]:
                blocks.append(DemandBlock(bus, t, p, q))
    uc = grid.solve_unit_commitment(network, opts, blocks, load=rigid_load)
    demand = {bus: np.zeros(T) for bus in bids}
    supply = {bus: np.zeros(T) for bus in bids}
    welfare = 0.0
    for blk, acc in zip(blocks, uc.block_accepted):
        acc = min(max(float(acc), 0.0), abs(blk.quantity))
        if blk.quantity > 0:
            demand[blk.bus][blk.hour] += acc
            welfare += blk.price * acc
        else:
            supply[blk.bus][blk.hour] += acc
            welfare -= blk.price * acc
    welfare -= uc.total_cost
    demand = {b: _quantize(v) for b, v in demand.items()}
    supply = {b: _quantize(v) for b, v in supply.items()}
    accepted = float(sum(v.sum() for v in demand.values()) + sum(v.sum() for v in supply.values()))
    return MarketClearing(uc, demand, supply, welfare, accepted, tuple(blocks))


def _split(amount: int, steps: list[tuple[float, int, str]]) -> dict[str, int]:
    """Fill integer step quantities in order; equal prices share pro rata."""
    out: dict[str, int] = {}
    k = 0
    while k < len(steps) and amount > 0:
        j = k
        while j < len(steps) and steps[j][0] == steps[k][0]:
            j += 1
        level = steps[k:j]
        size = sum(q for _, q, _ in level)
        if size <= amount:
            for _, q, owner in level:
                out[owner] = out.get(owner, 0) + q
            amount -= size
        else:
            shares = [amount * q // size for _, q, _ in level]
            rema = [amount * q % size for _, q, _ in level]
            left = amount - sum(shares)
            for i in sorted(range(len(level)), key=lambda i: (-rema[i], i))[:left]:
                shares[i] += 1
            for (_, _, owner), s in zip(level, shares):
                out[owner] = out.get(owner, 0) + s
            amount = 0
        k = j
    return out


class AwardExceedsBids(ValueError):
    pass


def disaggregate_awards(bids: dict, award, side: str = "demand") -> dict:
    """Split a bus award among the microgrids whose bids made it up.

    Steps are filled by merit order (highest demand price first, cheapest
    supply offer first); steps at equal prices share pro rata.  Quantities are
    settled on a 1e-9 MW grid, so the shares add up to the award exactly.
    ``award`` is MW per hour (a scalar means a single hour).
    """
    award = np.atleast_1d(np.asarray(award, float))
    T = award.size
    owners = list(bids)
    out = {o: np.zeros(T) for o in owners}
    for t in range(T):
        steps = []
        for o in owners:
            for p, q in getattr(bids[o], side)[t]:
                steps.append((p, int(round(abs(q) * _AWARD_UNITS)), o))
        # stable sort keeps input order within a price level
        steps.sort(key=(lambda s: -s[0]) if side == "demand" else (lambda s: s[0]))
        amount = int(round(award[t] * _AWARD_UNITS))
        if amount < 0:
            raise ValueError("awards must be nonnegative")
        if amount > sum(q for _, q, _ in steps):
            raise AwardExceedsBids(f"hour {t}: award {award[t]} exceeds the bid total")
        for o, units in _split(amount, steps).items():
            out[o][t] = units / _AWARD_UNITS
    return out


def run_dmo(scn: Scenario, opts: SolverOptions | None = None) -> ParadigmReport:
    """Paradigm 3: bid, aggregate, clear, disaggregate, follow."""
    net = scn.network
    mgs = scn.instances()
    rigid = scn.rigid_load()
    notes = []

    bids = {}
    for mg in mgs:
        if not mg.has_ders and not any(mg.fixed_load):
            continue
        curve = build_demand_bid(mg, scn.default_grid(mg), opts)
        if curve.clipped > 1e-6:
            notes.append(f"microgrid {mg.id}: clipped {curve.clipped:.6f} MW of non-monotone bids")
        bids[mg.id] = curve
    by_bus: dict[int, dict] = {}
    for mg in mgs:
        if mg.id in bids:
            by_bus.setdefault(mg.attached_bus, {})[mg.id] = bids[mg.id]
    aggregated = {bus: aggregate_bids(list(group.values())) for bus, group in by_bus.items()}

    clearing = clear_market(net, aggregated, opts, rigid_load=rigid)

    cleared = rigid.copy()
    realized = rigid.copy()
    awards, deviations, schedules = {}, {}, {}
    for bus, group in by_bus.items():
        k = net.bus_index(bus)
        dem = disaggregate_awards(group, clearing.demand_award[bus], "demand")
        sup = disaggregate_awards(group, clearing.supply_award[bus], "supply")
        for mid in group:
            mg = next(m for m in mgs if m.id == mid)
            award = np.clip(dem[mid] - sup[mid], -mg.tie_limit, mg.tie_limit)
            sched = schedule_with_fixed_exchange(mg, award, opts)
            awards[mid] = award
            deviations[mid] = sched.deviation_up - sched.deviation_down
            schedules[mid] = sched
            cleared[k] += award
            realized[k] += net_load(sched)

    try:
        baseline = run_baseline(scn, opts).metrics["total_abs_mwh"]
    except grid.Infeasible:
        baseline = math.nan
    return ParadigmReport(
        paradigm="dmo",
        penetration=scn.penetration,
        bus_ids=tuple(net.bus_ids),
        forecast=cleared,
        actual=realized,
        uc=clearing.uc,
        final=clearing.uc,
        schedules=schedules,
        awards=awards,
        deviations=deviations,
        welfare=clearing.welfare,
        baseline_total_abs_mwh=baseline,
        feasible={"market_clearing": True},
        microgrid_buses={mg.id: mg.attached_bus for mg in mgs},
        notes=tuple(notes),
    )


RUNNERS = {
    "baseline": run_baseline,
    "redispatch": run_redispatch,
    "iterative": run_iterative,
    "dmo": run_dmo,
}


def run(scn: Scenario, paradigm: str | None = None, opts: SolverOptions | None = None) -> ParadigmReport:
    return RUNNERS[paradigm or scn.paradigm](scn, opts)
