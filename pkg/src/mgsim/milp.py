"""Dense linear and mixed-binary programming.

The LP engine is a bounded-variable primal simplex on a dense tableau.  Each
row gets one slack column whose bounds encode the relation, so variable bounds
never become rows.  Branch and bound reuses the parent's basis and restores
primal feasibility with a dual simplex.

Sign convention for duals (minimization): ``duals[i]`` is the change in the
optimal objective per unit increase of ``rhs[i]``.  A ``>=`` row therefore has
a nonnegative dual and a ``<=`` row a nonpositive one.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)

# internal tolerances of the simplex engine, on row-scaled data
_PIVOT_TOL = 1e-9
_PRICE_TOL = 1e-9
_PRIMAL_TOL = 1e-9
_PHASE1_TOL = 1e-8
_DEGENERATE_RUN = 50
_REFACTOR_EVERY = 100
# memory budget for tableau copies kept on the branch-and-bound stack
_STACK_BYTES = 256 * 2**20


class SolverError(Exception):
    """Base class for solver failures."""


class PivotLimitExceeded(SolverError):
    pass


class NodeLimitExceeded(SolverError):
    """Branch and bound ran out of nodes.  ``solution`` holds the incumbent."""

    def __init__(self, message: str, solution: "MilpSolution"):
        super().__init__(message)
        self.solution = solution


class AssignmentMismatch(ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    eps_feas: float = 1e-6
    eps_dual: float = 1e-6
    eps_int: float = 1e-6
    node_limit: int = 200_000
    pivot_limit: int = 1_000_000
    gap_abs: float = 1e-7

    def __post_init__(self):
        for name in ("eps_feas", "eps_dual", "eps_int", "gap_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.node_limit <= 0 or self.pivot_limit <= 0:
            raise ValueError("limits must be positive")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min cost @ x`` subject to ``A x (senses) rhs`` and ``lower <= x <= upper``.

    Variables flagged in ``integer`` are binaries.  Arrays are copied and made
    read-only on construction.
    """

    cost: np.ndarray
    A: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray = None
    var_names: tuple = None
    row_names: tuple = None

    def __post_init__(self):
        cost = _frozen(self.cost)
        n = cost.shape[0]
        A = np.array(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.senses), 0))
        A.setflags(write=False)
        integer = np.zeros(n, bool) if self.integer is None else self.integer
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "rhs", _frozen(self.rhs))
        object.__setattr__(self, "lower", _frozen(self.lower))
        object.__setattr__(self, "upper", _frozen(self.upper))
        object.__setattr__(self, "integer", _frozen(integer, bool))
        if self.var_names is not None:
            object.__setattr__(self, "var_names", tuple(self.var_names))
        if self.row_names is not None:
            object.__setattr__(self, "row_names", tuple(self.row_names))
        self._validate()

    def _validate(self):
        n, m = self.n_vars, self.n_rows
        if self.A.shape != (m, n):
            raise ValueError(f"constraint matrix is {self.A.shape}, expected {(m, n)}")
        if self.rhs.shape != (m,):
            raise ValueError("rhs length differs from row count")
        if any(s not in _SENSES for s in self.senses):
            raise ValueError(f"relations must be one of {_SENSES}")
        for arr, name in ((self.lower, "lower"), (self.upper, "upper"), (self.integer, "integer")):
            if arr.shape != (n,):
                raise ValueError(f"{name} length differs from variable count")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("variable bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        b = self.integer
        if np.any(self.lower[b] < 0) or np.any(self.upper[b] > 1):
            raise ValueError("binary variables need bounds within [0, 1]")
        if self.var_names is not None and len(self.var_names) != n:
            raise ValueError("var_names length differs from variable count")
        if self.row_names is not None and len(self.row_names) != m:
            raise ValueError("row_names length differs from row count")

    @property
    def n_vars(self) -> int:
        return self.cost.shape[0]

    @property
    def n_rows(self) -> int:
        return len(self.senses)

    @property
    def binary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.integer)

    def replace_bounds(self, lower=None, upper=None, integer=None) -> "LinearProgram":
        return dataclasses.replace(
            self,
            lower=self.lower if lower is None else lower,
            upper=self.upper if upper is None else upper,
            integer=self.integer if integer is None else integer,
        )

    def to_text(self) -> str:
        """One equation per line, for bug reports."""
        vn = self.var_names or tuple(f"x{j}" for j in range(self.n_vars))
        rn = self.row_names or tuple(f"c{i}" for i in range(self.n_rows))

        def expr(coefs):
            terms = [f"{c:+.10g} {vn[j]}" for j, c in enumerate(coefs) if c != 0.0]
            return " ".join(terms) if terms else "0"

        lines = ["minimize", f"  obj: {expr(self.cost)}", "subject to"]
        for i in range(self.n_rows):
            lines.append(f"  {rn[i]}: {expr(self.A[i])} {self.senses[i]} {self.rhs[i]:.10g}")
        lines.append("bounds")
        for j in range(self.n_vars):
            kind = " binary" if self.integer[j] else ""
            lines.append(f"  {self.lower[j]:.10g} <= {vn[j]} <= {self.upper[j]:.10g}{kind}")
        return "\n".join(lines) + "\n"


@dataclasses.dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    primal: np.ndarray
    duals: np.ndarray
    objective: float
    pivots: int = 0


@dataclasses.dataclass(frozen=True, eq=False)
class MilpSolution:
    status: Status
    primal: np.ndarray
    objective: float
    node_count: int
    incumbent_bound_gap: float


class _Simplex:
    """Working state of one bounded-variable simplex run.

    Columns are ``[structural | slack | artificial]``; row ``i`` reads
    ``A_i x + s_i (+/- a_i) = b_i`` after scaling each row by its largest
    coefficient.  Slack bounds encode the relation.
    """

    def __init__(self, lp: LinearProgram, opts: SolverOptions):
        self.opts = opts
        self.n = lp.n_vars
        self.m = lp.n_rows
        m, n = self.m, self.n
        scale = np.abs(lp.A).max(axis=1) if n else np.ones(m)
        scale = np.where(scale > 0, scale, 1.0)
        self.row_scale = scale
        A = lp.A / scale[:, None]
        b = lp.rhs / scale
        slack_lo = np.array([0.0 if s == LE else (-np.inf if s == GE else 0.0) for s in lp.senses])
        slack_hi = np.array([np.inf if s == LE else 0.0 for s in lp.senses])

        # initial point: structurals at lower bound, slacks at their finite bound
        resid = b - A @ lp.lower if n else b.copy()
        need_art = (resid < slack_lo - _PRIMAL_TOL) | (resid > slack_hi + _PRIMAL_TOL)
        art_rows = np.flatnonzero(need_art)
        k = art_rows.size
        art = np.zeros((m, k))
        art[art_rows, np.arange(k)] = np.sign(resid[art_rows])

        self.M = np.hstack([A, np.eye(m), art])
        self.M_sparse = sp.csc_matrix(self.M)
        self.b = b
        self.N = n + m + k
        self.n_art = k
        self.lo = np.concatenate([lp.lower, slack_lo, np.zeros(k)])
        self.hi = np.concatenate([lp.upper, slack_hi, np.full(k, np.inf)])
        self.cost = np.concatenate([lp.cost, np.zeros(m + k)])
        self.at_upper = np.zeros(self.N, bool)
        self.at_upper[n : n + m] = np.isneginf(slack_lo)
        self.basis = np.arange(n, n + m)
        self.basis[art_rows] = n + m + np.arange(k)
        self.pivots = 0
        self.T = None
        self.xB = None
        self.d = None

    # -- basis bookkeeping -------------------------------------------------

    def snapshot(self, with_tableau: bool):
        state = {"basis": self.basis.copy(), "at_upper": self.at_upper.copy()}
        if with_tableau:
            state.update(T=self.T.copy(), xB=self.xB.copy(), d=self.d.copy())
        return state

    def restore(self, snap, lower, upper):
        self.basis, self.at_upper = snap["basis"], snap["at_upper"]
        self.set_structural_bounds(lower, upper)
        if "T" in snap:
            self.T, self.xB, self.d = snap["T"], snap["xB"], snap["d"]
        else:
            self.refactor()

    def set_structural_bounds(self, lower, upper):
        self.lo[: self.n] = lower
        self.hi[: self.n] = upper

    def nonbasic_values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.hi, self.lo)
        x[self.basis] = 0.0
        return x

    def _factor(self):
        return splu(self.M_sparse[:, self.basis].tocsc())

    def refactor(self):
        if self.m == 0:
            self.T = np.zeros((0, self.N))
            self.xB = np.zeros(0)
        else:
            lu = self._factor()
            self.T = lu.solve(self.M)
            self.xB = lu.solve(self.b - self.M @ self.nonbasic_values())
        self.d = self.cost - self.cost[self.basis] @ self.T

    def reprice(self):
        self.d = self.cost - self.cost[self.basis] @ self.T

    def _initial_tableau(self):
        # the starting basis is a signed identity: slacks (+1) and artificials (+/-1)
        sign = self.M[np.arange(self.m), self.basis] if self.m else np.zeros(0)
        self.T = self.M * sign[:, None]
        self.xB = sign * (self.b - self.M @ self.nonbasic_values())
        self.reprice()

    def refresh_values(self):
        """Recompute the basic solution from a fresh factorization (one solve)."""
        if self.m:
            self.xB = self._factor().solve(self.b - self.M @ self.nonbasic_values())

    def values(self) -> np.ndarray:
        x = self.nonbasic_values()
        x[self.basis] = self.xB
        return x

    def _pivot(self, r: int, q: int):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)
        if rows.size:
            prow = T[r]
            cols = np.flatnonzero(prow)
            if cols.size < 0.5 * self.N:
                T[np.ix_(rows, cols)] -= np.outer(col[rows], prow[cols])
            else:
                T[rows] -= np.outer(col[rows], prow)
        self.d -= self.d[q] * T[r]
        self.d[q] = 0.0
        self.basis[r] = q
        self.pivots += 1
        if self.pivots > self.opts.pivot_limit:
            raise PivotLimitExceeded(f"pivot budget of {self.opts.pivot_limit} exhausted")
        if self.pivots % _REFACTOR_EVERY == 0:
            self.refactor()

    def _movable(self) -> np.ndarray:
        nb = np.ones(self.N, bool)
        nb[self.basis] = False
        return nb & (self.hi - self.lo > _PRIMAL_TOL)

    # -- primal simplex ----------------------------------------------------

    def primal(self) -> Status:
        """Primal simplex from a primal-feasible basis under ``self.cost``."""
        degenerate = 0
        bland = False
        while True:
            mov = self._movable()
            d = self.d
            inc = mov & ~self.at_upper & (d < -_PRICE_TOL)
            dec = mov & self.at_upper & (d > _PRICE_TOL)
            score = np.where(inc, -d, 0.0) + np.where(dec, d, 0.0)
            cand = np.flatnonzero(score)
            if cand.size == 0:
                return Status.OPTIMAL
            q = cand[0] if bland else cand[np.argmax(score[cand])]
            direction = 1.0 if inc[q] else -1.0
            alpha = self.T[:, q] * direction
            lB, uB = self.lo[self.basis], self.hi[self.basis]
            ratio = np.full(self.m, np.inf)
            pos = alpha > _PIVOT_TOL
            neg = alpha < -_PIVOT_TOL
            ratio[pos] = np.maximum(self.xB[pos] - lB[pos], 0.0) / alpha[pos]
            ratio[neg] = np.maximum(uB[neg] - self.xB[neg], 0.0) / -alpha[neg]
            theta_row = ratio.min() if self.m else np.inf
            theta_flip = self.hi[q] - self.lo[q]
            if not np.isfinite(theta_row) and not np.isfinite(theta_flip):
                return Status.UNBOUNDED
            if theta_flip <= theta_row:
                self.xB -= alpha * theta_flip
                self.at_upper[q] = not self.at_upper[q]
                degenerate = 0
                bland = False
                continue
            theta = theta_row
            ties = np.flatnonzero(ratio <= theta + 1e-12)
            if bland:
                r = ties[np.argmin(self.basis[ties])]
            else:
                r = ties[np.argmax(np.abs(alpha[ties]))]
            leaving = self.basis[r]
            entering_value = (self.lo[q] + theta) if direction > 0 else (self.hi[q] - theta)
            self.xB -= alpha * theta
            self.xB[r] = entering_value
            self.at_upper[leaving] = alpha[r] < 0
            self._pivot(r, q)
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= _DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False

    # -- dual simplex ------------------------------------------------------

    def dual(self) -> Status:
        """Dual simplex from a dual-feasible basis; stops when primal feasible."""
        while True:
            lB, uB = self.lo[self.basis], self.hi[self.basis]
            below = lB - self.xB
            above = self.xB - uB
            viol = np.maximum(below, above)
            if self.m == 0 or viol.max() <= _PRIMAL_TOL:
                return Status.OPTIMAL
            r = int(np.argmax(viol))
            row = self.T[r]
            mov = self._movable()
            to_upper = above[r] > below[r]
            if not to_upper:
                target = lB[r]
                elig = mov & ((~self.at_upper & (row < -_PIVOT_TOL)) | (self.at_upper & (row > _PIVOT_TOL)))
            else:
                target = uB[r]
                elig = mov & ((~self.at_upper & (row > _PIVOT_TOL)) | (self.at_upper & (row < -_PIVOT_TOL)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return Status.INFEASIBLE
            ratios = np.abs(self.d[cand]) / np.abs(row[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            q = ties[np.argmax(np.abs(row[ties]))]
            leaving = self.basis[r]
            step = (self.xB[r] - target) / row[q]
            xq = (self.hi[q] if self.at_upper[q] else self.lo[q]) + step
            self.xB -= self.T[:, q] * step
            self.xB[r] = xq
            self.at_upper[leaving] = to_upper
            self._pivot(r, q)

    def dual_feasible(self) -> bool:
        mov = self._movable()
        d = self.d
        bad = mov & ((~self.at_upper & (d < -1e-7)) | (self.at_upper & (d > 1e-7)))
        return not bad.any()

    # -- drivers -----------------------------------------------------------

    def cold_solve(self) -> Status:
        n, m = self.n, self.m
        real_cost = self.cost
        self._initial_tableau()
        if self.n_art:
            self.cost = np.zeros(self.N)
            self.cost[n + m :] = 1.0
            self.reprice()
            self.primal()
            infeas = self.values()[n + m :].sum()
            self.cost = real_cost
            if infeas > _PHASE1_TOL * max(1.0, np.abs(self.b).max()):
                return Status.INFEASIBLE
        self.hi[n + m :] = 0.0
        self.reprice()
        np.clip(self.xB, self.lo[self.basis], self.hi[self.basis], out=self.xB)
        return self._finish(self.primal())

    def warm_solve(self) -> Status:
        """Re-optimize after a bound change; the basis must already be factored."""
        if not self.dual_feasible():
            status = self._phase1_from_here()
            if status is not Status.OPTIMAL:
                return status
            return self._finish(self.primal())
        status = self.dual()
        if status is not Status.OPTIMAL:
            return status
        return self._finish(self.primal())

    def _phase1_from_here(self) -> Status:
        # drift left the basis dual infeasible; the caller restarts cold
        raise _ColdRestart()

    def _finish(self, status: Status) -> Status:
        # refactor and mop up drift until both feasibilities hold
        for _ in range(5):
            if status is not Status.OPTIMAL:
                return status
            self.refresh_values()
            lB, uB = self.lo[self.basis], self.hi[self.basis]
            if self.m and (np.any(self.xB < lB - _PRIMAL_TOL) or np.any(self.xB > uB + _PRIMAL_TOL)):
                if self.dual_feasible():
                    status = self.dual()
                    continue
                return Status.INFEASIBLE
            if not self.dual_feasible():
                status = self.primal()
                continue
            return Status.OPTIMAL
        return status

    def objective(self) -> float:
        return float(self.cost[: self.n] @ self.values()[: self.n])

    def structural(self) -> np.ndarray:
        return self.values()[: self.n].copy()

    def duals(self) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        y = self._factor().solve(self.cost[self.basis], trans="T")
        return y / self.row_scale


class _ColdRestart(Exception):
    pass


def _check_options(opts):
    return SolverOptions() if opts is None else opts


def solve_lp(lp: LinearProgram, opts: SolverOptions | None = None) -> LpSolution:
    """Solve the continuous relaxation of ``lp`` (integrality flags are ignored)."""
    opts = _check_options(opts)
    sim = _Simplex(lp, opts)
    status = sim.cold_solve()
    if status is not Status.OPTIMAL:
        nan = np.full(lp.n_vars, np.nan)
        return LpSolution(status, nan, np.full(lp.n_rows, np.nan), math.nan, sim.pivots)
    return LpSolution(status, sim.structural(), sim.duals(), sim.objective(), sim.pivots)


def fix_binaries(lp: LinearProgram, assignment) -> LinearProgram:
    """Clamp every binary to the given 0/1 value and drop integrality.

    ``assignment`` is either a sequence aligned with ``lp.binary_indices`` or a
    mapping from variable index to value covering exactly those indices.
    """
    idx = lp.binary_indices
    if isinstance(assignment, Mapping):
        if set(assignment) != set(idx.tolist()):
            raise AssignmentMismatch("assignment keys differ from the binary variables")
        values = np.array([assignment[j] for j in idx], dtype=float)
    else:
        values = np.asarray(assignment, dtype=float).ravel()
        if values.shape != idx.shape:
            raise AssignmentMismatch(
                f"assignment has {values.size} values for {idx.size} binary variables"
            )
    if np.any((values != 0.0) & (values != 1.0)):
        raise AssignmentMismatch("binary assignment values must be 0 or 1")
    if idx.size == 0:
        return lp
    lower = lp.lower.copy()
    upper = lp.upper.copy()
    lower[idx] = values
    upper[idx] = values
    return lp.replace_bounds(lower=lower, upper=upper, integer=np.zeros(lp.n_vars, bool))


def solve_milp(lp: LinearProgram, opts: SolverOptions | None = None) -> MilpSolution:
    """Branch and bound over the binary variables of ``lp``.

    Dives depth-first (nearest rounding first); once an incumbent exists,
    backtracking resumes from the open node with the lowest bound.
    """
    opts = _check_options(opts)
    bins = lp.binary_indices
    priced = lp.cost[bins] != 0
    sim = _Simplex(lp, opts)
    status = sim.cold_solve()
    nodes = 1
    if status is Status.UNBOUNDED:
        return MilpSolution(status, np.full(lp.n_vars, np.nan), math.nan, nodes, math.inf)

    best_x = None
    best_obj = math.inf
    stack: list = []
    lower, upper = lp.lower.copy(), lp.upper.copy()

    def prune_level(bound):
        return bound >= best_obj - max(opts.gap_abs, 1e-9 * abs(best_obj))

    while True:
        if status is Status.OPTIMAL:
            obj = sim.objective()
            if not prune_level(obj):
                x = sim.structural()
                xb = x[bins]
                frac = np.abs(xb - np.round(xb))
                if bins.size == 0 or frac.max() <= opts.eps_int:
                    best_x, best_obj = x, obj
                else:
                    score = np.where(frac > opts.eps_int, frac, -1.0)
                    # binaries that carry cost (commitments) go before pure
                    # logic flags, whose branches rarely move the bound
                    costly = (score > 0) & priced
                    if costly.any():
                        score = np.where(costly, score, -1.0)
                    k = int(np.argmax(score))
                    j = bins[k]
                    near = 1.0 if xb[k] >= 0.5 else 0.0
                    far_lo, far_hi = lower.copy(), upper.copy()
                    far_lo[j] = far_hi[j] = 1.0 - near
                    keep = (len(stack) + 1) * sim.T.nbytes <= _STACK_BYTES
                    stack.append((far_lo, far_hi, sim.snapshot(keep), obj))
                    lower[j] = upper[j] = near
                    status = _warm(sim, lp, opts, lower, upper)
                    nodes += 1
                    if nodes > opts.node_limit:
                        raise _node_limit(lp, best_x, best_obj, nodes, stack)
                    continue
        # current node finished: backtrack depth-first until an incumbent
        # exists, then resume from the open node with the best bound
        stack = [s for s in stack if not prune_level(s[3])]
        if not stack:
            break
        if best_x is None:
            lo_s, hi_s, snap, bound = stack.pop()
        else:
            pick = min(range(len(stack)), key=lambda i: (stack[i][3], -i))
            lo_s, hi_s, snap, bound = stack.pop(pick)
        lower, upper = lo_s, hi_s
        sim.restore(snap, lower, upper)
        status = _warm(sim, lp, opts, lower, upper)
        nodes += 1
        if nodes > opts.node_limit:
            raise _node_limit(lp, best_x, best_obj, nodes, stack)

    if best_x is None:
        return MilpSolution(Status.INFEASIBLE, np.full(lp.n_vars, np.nan), math.nan, nodes, math.inf)
    return MilpSolution(Status.OPTIMAL, best_x, best_obj, nodes, 0.0)


def _warm(sim: _Simplex, lp, opts, lower, upper) -> Status:
    # only the (basic) branching variable changed bounds, so xB is still valid
    sim.set_structural_bounds(lower, upper)
    try:
        return sim.warm_solve()
    except _ColdRestart:
        fresh = _Simplex(lp.replace_bounds(lower=lower, upper=upper), opts)
        status = fresh.cold_solve()
        sim.__dict__.update(fresh.__dict__)
        return status


def _node_limit(lp, best_x, best_obj, nodes, stack) -> NodeLimitExceeded:
    open_bound = min((s[3] for s in stack), default=best_obj)
    gap = best_obj - open_bound if best_x is not None else math.inf
    status = Status.OPTIMAL if best_x is not None else Status.INFEASIBLE
    primal = best_x if best_x is not None else np.full(lp.n_vars, np.nan)
    sol = MilpSolution(status, primal, best_obj, nodes, gap)
    return NodeLimitExceeded(f"node limit reached after {nodes} nodes", sol)


def enumerate_binaries(lp: LinearProgram, opts: SolverOptions | None = None) -> tuple[float, np.ndarray | None]:
    """Brute-force MILP optimum: solve the fixed-binary LP for every 0/1 assignment.

    Exponential in the number of binaries; meant as a test oracle.
    """
    bins = lp.binary_indices
    best, best_x = math.inf, None
    for bits in range(2 ** bins.size):
        values = [(bits >> k) & 1 for k in range(bins.size)]
        sol = solve_lp(fix_binaries(lp, values), opts)
        if sol.status is Status.OPTIMAL and sol.objective < best:
            best, best_x = sol.objective, sol.primal
    return best, best_x


def max_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest absolute violation of rows (scaled by their largest coefficient) and bounds."""
    x = np.asarray(x, float)
    worst = 0.0
    if lp.n_rows:
        scale = np.abs(lp.A).max(axis=1)
        scale = np.where(scale > 0, scale, 1.0)
        act = (lp.A @ x - lp.rhs) / scale
        for s, v in zip(lp.senses, act):
            if s == LE:
                worst = max(worst, v)
            elif s == GE:
                worst = max(worst, -v)
            else:
                worst = max(worst, abs(v))
    if lp.n_vars:
        worst = max(worst, float(np.max(lp.lower - x)), float(np.max(x - lp.upper)))
    return worst
