"""Small helper for assembling a LinearProgram row by row."""

from __future__ import annotations

import numpy as np

from .milp import EQ, GE, LE, LinearProgram


class LpBuilder:
    def __init__(self):
        self.names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.cost: list[float] = []
        self.binary: list[bool] = []
        self.rows: list[dict[int, float]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []

    def var(self, name: str, lb: float, ub: float, cost: float = 0.0, binary: bool = False) -> int:
        self.names.append(name)
        self.lower.append(float(lb))
        self.upper.append(float(ub))
        self.cost.append(float(cost))
        self.binary.append(binary)
        return len(self.names) - 1

    def add_cost(self, j: int, c: float):
        self.cost[j] += c

    def fix(self, j: int, value: float):
        self.lower[j] = self.upper[j] = float(value)

    def row(self, terms, sense: str, rhs: float, name: str = "") -> int:
        coefs: dict[int, float] = {}
        for j, c in terms:
            if c:
                coefs[j] = coefs.get(j, 0.0) + float(c)
        self.rows.append(coefs)
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"r{len(self.rows) - 1}")
        return len(self.rows) - 1

    def le(self, terms, rhs, name=""):
        return self.row(terms, LE, rhs, name)

    def ge(self, terms, rhs, name=""):
        return self.row(terms, GE, rhs, name)

    def eq(self, terms, rhs, name=""):
        return self.row(terms, EQ, rhs, name)

    def build(self) -> LinearProgram:
        n, m = len(self.names), len(self.rows)
        A = np.zeros((m, n))
        for i, coefs in enumerate(self.rows):
            for j, c in coefs.items():
                A[i, j] = c
        return LinearProgram(
            cost=self.cost,
            A=A,
            senses=self.senses,
            rhs=self.rhs,
            lower=self.lower,
            upper=self.upper,
            integer=self.binary,
            var_names=self.names,
            row_names=self.row_names,
        )


def add_commitment_block(b: LpBuilder, unit, horizon: int, tag: str, scale: float = 1.0) -> dict:
    """Commitment, output and start/stop variables of one thermal-style unit.

    ``unit`` needs the ThermalUnit/DispatchableDer attributes.  ``scale``
    multiplies capacities, ramps and fixed costs (not the marginal cost).
    Returns index arrays ``on``, ``power``, ``start``, ``stop``.
    """
    T = horizon
    p_min, p_max = unit.p_min * scale, unit.p_max * scale
    ramp_up, ramp_down = unit.ramp_up * scale, unit.ramp_down * scale
    on0 = 1.0 if unit.initial_on else 0.0
    p0 = unit.initial_power * scale if unit.initial_on else 0.0

    forced_on = forced_off = 0
    if unit.initial_on and unit.initial_up_time is not None:
        forced_on = max(0, unit.min_up - unit.initial_up_time)
    if not unit.initial_on and unit.initial_down_time is not None:
        forced_off = max(0, unit.min_down - unit.initial_down_time)

    on = np.empty(T, int)
    power = np.empty(T, int)
    start = np.empty(T, int)
    stop = np.empty(T, int)
    for t in range(T):
        on[t] = b.var(f"{tag}.on[{t}]", 0, 1, unit.no_load_cost * scale, binary=True)
        if t < forced_on:
            b.fix(on[t], 1)
        if t < forced_off:
            b.fix(on[t], 0)
        power[t] = b.var(f"{tag}.p[{t}]", 0, p_max, unit.marginal_cost)
        start[t] = b.var(f"{tag}.su[{t}]", 0, 1, unit.startup_cost * scale)
        stop[t] = b.var(f"{tag}.sd[{t}]", 0, 1, unit.shutdown_cost * scale)

    for t in range(T):
        b.le([(power[t], 1), (on[t], -p_max)], 0, f"{tag}.pmax[{t}]")
        if p_min > 0:
            b.ge([(power[t], 1), (on[t], -p_min)], 0, f"{tag}.pmin[{t}]")
        # start/stop indicators are exact once commitment is integral
        if t == 0:
            b.eq([(start[0], 1), (stop[0], -1), (on[0], -1)], -on0, f"{tag}.logic[0]")
            if on0:
                b.fix(start[0], 0)
            else:
                b.fix(stop[0], 0)
        else:
            b.eq([(start[t], 1), (stop[t], -1), (on[t], -1), (on[t - 1], 1)], 0, f"{tag}.logic[{t}]")
            b.le([(start[t], 1), (on[t - 1], 1)], 1, f"{tag}.su_ok[{t}]")
            b.le([(stop[t], 1), (on[t - 1], -1)], 0, f"{tag}.sd_ok[{t}]")

        su_ramp = max(p_min, ramp_up)
        if ramp_up < p_max:
            if t == 0:
                b.le([(power[0], 1), (start[0], -su_ramp)], p0 + ramp_up * on0, f"{tag}.ramp_up[0]")
            else:
                b.le(
                    [(power[t], 1), (power[t - 1], -1), (on[t - 1], -ramp_up), (start[t], -su_ramp)],
                    0,
                    f"{tag}.ramp_up[{t}]",
                )
        sd_ramp = max(p_min, ramp_down)
        if ramp_down < p_max:
            if t == 0:
                b.le([(power[0], -1), (on[0], -ramp_down), (stop[0], -sd_ramp)], -p0, f"{tag}.ramp_dn[0]")
            else:
                b.le(
                    [(power[t - 1], 1), (power[t], -1), (on[t], -ramp_down), (stop[t], -sd_ramp)],
                    0,
                    f"{tag}.ramp_dn[{t}]",
                )
        if unit.min_up > 1:
            window = range(max(0, t - unit.min_up + 1), t + 1)
            b.le([(start[k], 1) for k in window] + [(on[t], -1)], 0, f"{tag}.min_up[{t}]")
        if unit.min_down > 1:
            window = range(max(0, t - unit.min_down + 1), t + 1)
            b.le([(stop[k], 1) for k in window] + [(on[t], 1)], 1, f"{tag}.min_dn[{t}]")
    return {"on": on, "power": power, "start": start, "stop": stop}


def commitment_cost(unit, on, power, scale: float = 1.0) -> float:
    """Operating cost of a unit schedule, recomputed from its on/off series."""
    on = np.round(np.asarray(on, float))
    prev = np.concatenate([[1.0 if unit.initial_on else 0.0], on[:-1]])
    starts = np.maximum(on - prev, 0.0)
    stops = np.maximum(prev - on, 0.0)
    return float(
        unit.marginal_cost * np.sum(power)
        + scale * unit.no_load_cost * on.sum()
        + scale * unit.startup_cost * starts.sum()
        + scale * unit.shutdown_cost * stops.sum()
    )
