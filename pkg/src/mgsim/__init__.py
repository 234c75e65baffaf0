"""Bulk-grid unit commitment with price-responsive microgrids."""

from .casefile import ParseError, ValidationError, parse_case, parse_text, serialize
from .grid import (
    Branch,
    Bus,
    CaseInvalid,
    DemandBlock,
    Infeasible,
    NetworkCase,
    RedispatchInfeasible,
    ThermalUnit,
    UcResult,
    average_lmp,
    solve_dispatch_with_lmp,
    solve_unit_commitment,
)
from .microgrid import (
    AdjustableLoad,
    AwardExceedsTie,
    BidCurve,
    DispatchableDer,
    MicrogridCase,
    MicrogridSchedule,
    StorageDer,
    build_demand_bid,
    net_load,
    schedule,
    schedule_with_fixed_exchange,
)
from .milp import LinearProgram, SolverError, SolverOptions, Status, fix_binaries, solve_lp, solve_milp
from .paradigms import (
    AwardExceedsBids,
    ParadigmReport,
    Scenario,
    Termination,
    aggregate_bids,
    clear_market,
    disaggregate_awards,
    run,
    run_baseline,
    run_dmo,
    run_iterative,
    run_redispatch,
)
from .report import write_report

__version__ = "0.1.0"
