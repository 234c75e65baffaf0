"""ISO side: DC network, day-ahead unit commitment, fixed-commitment dispatch and LMPs."""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from ._builder import LpBuilder, add_commitment_block, commitment_cost
from .milp import (
    LinearProgram,
    SolverError,
    SolverOptions,
    Status,
    fix_binaries,
    solve_lp,
    solve_milp,
)

BASE_MVA = 100.0
ANGLE_LIMIT = math.pi


class CaseInvalid(ValueError):
    pass


class Infeasible(SolverError):
    pass


class RedispatchInfeasible(Infeasible):
    """No dispatch balances the revised load under the fixed commitment."""


@dataclasses.dataclass(frozen=True)
class Bus:
    id: int
    is_reference: bool = False


@dataclasses.dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    reactance: float
    flow_limit: float

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise CaseInvalid(f"branch {self.from_bus}-{self.to_bus} connects a bus to itself")
        if not self.reactance > 0:
            raise CaseInvalid("branch reactance must be positive")
        if self.flow_limit < 0:
            raise CaseInvalid("branch flow limit must be nonnegative")


@dataclasses.dataclass(frozen=True)
class ThermalUnit:
    name: str
    bus: int
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
    # hours already spent in the initial state; None means long settled
    initial_up_time: Optional[int] = None
    initial_down_time: Optional[int] = None

    def __post_init__(self):
        check_unit(self)


def check_unit(u):
    if not 0 <= u.p_min <= u.p_max:
        raise CaseInvalid(f"unit {u.name}: need 0 <= p_min <= p_max")
    if min(u.marginal_cost, u.no_load_cost, u.startup_cost, u.shutdown_cost) < 0:
        raise CaseInvalid(f"unit {u.name}: costs must be nonnegative")
    if not (u.ramp_up > 0 and u.ramp_down > 0):
        raise CaseInvalid(f"unit {u.name}: ramp rates must be positive")
    if u.min_up < 1 or u.min_down < 1:
        raise CaseInvalid(f"unit {u.name}: minimum up/down times must be at least 1 h")
    if u.initial_on and not u.p_min - 1e-9 <= u.initial_power <= u.p_max + 1e-9:
        raise CaseInvalid(f"unit {u.name}: initial power outside its limits")


@dataclasses.dataclass(frozen=True)
class NetworkCase:
    """Buses, branches, units and the LSE's hourly load forecast.

    ``load`` holds one tuple of hourly MW values per bus, in ``buses`` order.
    """

    buses: tuple
    branches: tuple
    units: tuple
    load: tuple

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "load", tuple(tuple(float(v) for v in row) for row in self.load))
        self.validate()

    @property
    def horizon(self) -> int:
        return len(self.load[0]) if self.load else 0

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def reference_bus(self) -> int:
        return next(b.id for b in self.buses if b.is_reference)

    def bus_index(self, bus_id: int) -> int:
        return self.bus_ids.index(bus_id)

    def load_matrix(self) -> np.ndarray:
        return np.array(self.load, dtype=float).reshape(len(self.buses), self.horizon)

    def with_load(self, load) -> "NetworkCase":
        return dataclasses.replace(self, load=np.asarray(load, float).tolist())

    def validate(self):
        ids = self.bus_ids
        if not ids:
            raise CaseInvalid("case has no buses")
        if len(set(ids)) != len(ids):
            raise CaseInvalid("bus ids must be unique")
        if sum(b.is_reference for b in self.buses) != 1:
            raise CaseInvalid("exactly one reference bus is required")
        known = set(ids)
        for br in self.branches:
            if br.from_bus not in known or br.to_bus not in known:
                raise CaseInvalid(f"branch {br.from_bus}-{br.to_bus} references an unknown bus")
        names = [u.name for u in self.units]
        if len(set(names)) != len(names):
            raise CaseInvalid("unit names must be unique")
        for u in self.units:
            if u.bus not in known:
                raise CaseInvalid(f"unit {u.name} references unknown bus {u.bus}")
        if len(self.load) != len(ids):
            raise CaseInvalid("one load row per bus is required")
        if len({len(row) for row in self.load}) > 1:
            raise CaseInvalid("load rows must share one horizon")
        if any(v < 0 for row in self.load for v in row):
            raise CaseInvalid("loads must be nonnegative")


@dataclasses.dataclass(frozen=True)
class DemandBlock:
    """Price-responsive block at a bus-hour; negative ``quantity`` is a supply offer."""

    bus: int
    hour: int
    price: float
    quantity: float


@dataclasses.dataclass(frozen=True, eq=False)
class UcResult:
    bus_ids: tuple
    unit_names: tuple
    commitment: np.ndarray  # (unit, hour) 0/1
    dispatch: np.ndarray  # (unit, hour) MW
    angles: np.ndarray  # (bus, hour) rad
    flows: np.ndarray  # (branch, hour) MW
    lmp: np.ndarray  # (bus, hour) $/MWh
    total_cost: float  # generation cost, $
    balance_residual: np.ndarray  # (bus, hour) MW
    block_accepted: np.ndarray = None  # per DemandBlock, MW
    objective: float = math.nan
    node_count: int = 0

    @property
    def horizon(self) -> int:
        return self.lmp.shape[1]


@dataclasses.dataclass
class _UcModel:
    lp: LinearProgram
    units: list
    theta: np.ndarray
    flow: np.ndarray
    balance: np.ndarray
    blocks: np.ndarray


def _load(case: NetworkCase, load) -> np.ndarray:
    if load is None:
        return case.load_matrix()
    load = np.asarray(load, dtype=float)
    if load.shape != (len(case.buses), case.horizon):
        raise CaseInvalid("load override must be (bus, hour) shaped")
    return load


def _build(case: NetworkCase, blocks: Sequence[DemandBlock] = (), load=None) -> _UcModel:
    T = case.horizon
    ids = case.bus_ids
    bidx = {b: k for k, b in enumerate(ids)}
    load = _load(case, load)
    b = LpBuilder()

    units = [add_commitment_block(b, u, T, f"g.{u.name}") for u in case.units]
    theta = np.empty((len(ids), T), int)
    for k, bus in enumerate(case.buses):
        for t in range(T):
            lim = 0.0 if bus.is_reference else ANGLE_LIMIT
            theta[k, t] = b.var(f"theta.{bus.id}[{t}]", -lim, lim)
    flow = np.empty((len(case.branches), T), int)
    for l, br in enumerate(case.branches):
        susceptance = BASE_MVA / br.reactance
        f, to = bidx[br.from_bus], bidx[br.to_bus]
        for t in range(T):
            flow[l, t] = b.var(f"flow.{br.from_bus}-{br.to_bus}[{t}]", -br.flow_limit, br.flow_limit)
            b.eq(
                [(flow[l, t], 1), (theta[f, t], -susceptance), (theta[to, t], susceptance)],
                0,
                f"dcflow.{l}[{t}]",
            )
    block_vars = np.empty(len(blocks), int)
    for k, blk in enumerate(blocks):
        if blk.bus not in bidx or not 0 <= blk.hour < T:
            raise CaseInvalid(f"demand block at bus {blk.bus} hour {blk.hour} is outside the case")
        # accepted demand earns its bid price; accepted supply is paid its offer
        block_vars[k] = b.var(f"block{k}", 0, abs(blk.quantity), -math.copysign(blk.price, blk.quantity))

    terms = {(k, t): [] for k in range(len(ids)) for t in range(T)}
    for u, v in zip(case.units, units):
        for t in range(T):
            terms[bidx[u.bus], t].append((v["power"][t], 1))
    for l, br in enumerate(case.branches):
        for t in range(T):
            terms[bidx[br.from_bus], t].append((flow[l, t], -1))
            terms[bidx[br.to_bus], t].append((flow[l, t], 1))
    for k, blk in enumerate(blocks):
        terms[bidx[blk.bus], blk.hour].append((block_vars[k], -1 if blk.quantity > 0 else 1))
    balance = np.empty((len(ids), T), int)
    for k in range(len(ids)):
        for t in range(T):
            balance[k, t] = b.eq(terms[k, t], load[k, t], f"balance.{ids[k]}[{t}]")
    return _UcModel(b.build(), units, theta, flow, balance, block_vars)


def build_uc_problem(case: NetworkCase, blocks: Sequence[DemandBlock] = (), load=None) -> LinearProgram:
    """Unit commitment MILP with DC network constraints.

    Nodal balance reads generation + inflow - outflow = load for every
    bus-hour; the objective is no-load, energy, startup and shutdown cost.
    Optional demand blocks add price-responsive demand (welfare clearing).
    ``load`` overrides the case forecast; negative entries are net injections.
    """
    return _build(case, blocks, load).lp


def _commitment_matrix(model: _UcModel, x: np.ndarray) -> np.ndarray:
    if not model.units:
        return np.zeros((0, model.theta.shape[1]), int)
    return np.array([np.round(x[u["on"]]) for u in model.units], dtype=int)


def _result(case, model, x, duals, objective, node_count=0) -> UcResult:
    T = case.horizon
    commitment = _commitment_matrix(model, x)
    dispatch = np.array([x[u["power"]] for u in model.units]).reshape(len(case.units), T)
    lp = model.lp
    resid = (lp.A[model.balance.ravel()] @ x - lp.rhs[model.balance.ravel()]).reshape(model.balance.shape)
    gen_cost = sum(
        commitment_cost(u, commitment[k], dispatch[k]) for k, u in enumerate(case.units)
    )
    return UcResult(
        bus_ids=tuple(case.bus_ids),
        unit_names=tuple(u.name for u in case.units),
        commitment=commitment,
        dispatch=dispatch,
        angles=x[model.theta],
        flows=x[model.flow].reshape(len(case.branches), T),
        lmp=duals[model.balance],
        total_cost=float(gen_cost),
        balance_residual=resid,
        block_accepted=x[model.blocks] if model.blocks.size else np.zeros(0),
        objective=float(objective),
        node_count=node_count,
    )


def _dispatch(case, model, commitment, opts) -> UcResult:
    commitment = np.asarray(commitment)
    if commitment.shape != (len(case.units), case.horizon):
        raise CaseInvalid("commitment must cover every (unit, hour)")
    values = np.zeros(model.lp.n_vars)
    for u, row in zip(model.units, commitment):
        values[u["on"]] = row
    fixed = fix_binaries(model.lp, values[model.lp.binary_indices])
    sol = solve_lp(fixed, opts)
    if sol.status is not Status.OPTIMAL:
        raise RedispatchInfeasible("no feasible dispatch under the fixed commitment")
    return _result(case, model, sol.primal, sol.duals, sol.objective)


def solve_dispatch_with_lmp(
    case: NetworkCase,
    commitment,
    opts: SolverOptions | None = None,
    blocks: Sequence[DemandBlock] = (),
    load=None,
) -> UcResult:
    """Economic dispatch for a fixed commitment; LMPs are nodal-balance duals."""
    return _dispatch(case, _build(case, blocks, load), commitment, opts)


def solve_unit_commitment(
    case: NetworkCase, opts: SolverOptions | None = None, blocks: Sequence[DemandBlock] = (), load=None
) -> UcResult:
    """Commit and dispatch units, then price every bus-hour from the fixed-commitment LP."""
    model = _build(case, blocks, load)
    sol = solve_milp(model.lp, opts)
    if sol.status is not Status.OPTIMAL:
        raise Infeasible(f"unit commitment is {sol.status.value.lower()}")
    commitment = _commitment_matrix(model, sol.primal)
    try:
        res = _dispatch(case, model, commitment, opts)
    except RedispatchInfeasible as exc:  # pragma: no cover - rounding of a feasible commitment
        raise Infeasible("commitment lost feasibility after rounding") from exc
    return dataclasses.replace(res, node_count=sol.node_count)


def average_lmp(result: UcResult, hour: int) -> float:
    """System average LMP at one hour (arithmetic mean over buses)."""
    if not 0 <= hour < result.horizon:
        raise IndexError(f"hour {hour} outside horizon {result.horizon}")
    return float(np.mean(result.lmp[:, hour]))
