"""Plain-text case files.

A case file is a list of bracketed sections holding whitespace-separated
columns; ``#`` starts a comment.  Sections::

    [buses]        id [reference]
    [branches]     from to reactance flow_limit
    [units]        name bus p_min p_max marginal_cost no_load startup shutdown
                   ramp_up ramp_down min_up min_down initial_on initial_power
                   [initial_up_time initial_down_time]
    [loads]        bus mw_hour0 mw_hour1 ...
    [microgrid ID] keyed lines:
                   bus B | voll V | tie_limit P | violation_penalty V | penetration F
                   fixed_load mw... | nondispatchable mw...
                   dispatchable <same columns as a unit, without bus>
                   storage name charge_max discharge_max capacity soc_min soc_max
                           charge_eff discharge_eff soc_initial terminal_soc
                   adjustable name p_min p_max energy t_start t_end min_operating_time
                              pickup_rate drop_rate
    [scenario]     penetration F | paradigm P | max_iter N | load_tol MW
                   | price_grid p... | horizon T

``inf`` is accepted for unlimited rates and tie limits, ``-`` for an unset
optional value.  Hours are numbered from 0.
"""

from __future__ import annotations

import math
from pathlib import Path

from .grid import Branch, Bus, CaseInvalid, NetworkCase, ThermalUnit
from .microgrid import AdjustableLoad, DispatchableDer, MicrogridCase, StorageDer
from .paradigms import Scenario

DEFAULT_HORIZON = 24


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ValidationError(CaseInvalid):
    def __init__(self, entity: str, rule: str):
        super().__init__(f"{entity}: {rule}")
        self.entity = entity
        self.rule = rule


def _num(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(line, f"expected a number, got {tok!r}") from None


def _int(tok: str, line: int) -> int:
    v = _num(tok, line)
    if v != int(v):
        raise ParseError(line, f"expected an integer, got {tok!r}")
    return int(v)


def _opt_int(tok: str, line: int):
    return None if tok == "-" else _int(tok, line)


def _opt_num(tok: str, line: int):
    return None if tok == "-" else _num(tok, line)


def _flag(tok: str, line: int) -> bool:
    if tok not in ("0", "1"):
        raise ParseError(line, f"expected 0 or 1, got {tok!r}")
    return tok == "1"


_UNIT_COLS = (
    "p_min p_max marginal_cost no_load_cost startup_cost shutdown_cost "
    "ramp_up ramp_down min_up min_down initial_on initial_power"
).split()


def _unit_kwargs(toks: list[str], line: int) -> dict:
    if len(toks) not in (12, 14):
        raise ParseError(line, f"expected 12 or 14 unit columns, got {len(toks)}")
    kw = {}
    for name, tok in zip(_UNIT_COLS, toks):
        if name in ("min_up", "min_down"):
            kw[name] = _int(tok, line)
        elif name == "initial_on":
            kw[name] = _flag(tok, line)
        else:
            kw[name] = _num(tok, line)
    if len(toks) == 14:
        kw["initial_up_time"] = _opt_int(toks[12], line)
        kw["initial_down_time"] = _opt_int(toks[13], line)
    return kw


def _tokenize(text: str):
    """Yield (line number, section header or None, tokens)."""
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(no, "unterminated section header")
            yield no, line[1:-1].split(), None
        else:
            yield no, None, line.split()


def parse_text(text: str) -> Scenario:
    buses, branches, units, loads = [], [], [], {}
    mg_specs: dict[str, dict] = {}
    scenario: dict = {}
    section = None
    current_mg = None
    seen_sections = set()
    for no, header, toks in _tokenize(text):
        if header is not None:
            kind = header[0] if header else ""
            if kind == "microgrid":
                if len(header) != 2:
                    raise ParseError(no, "microgrid sections need exactly one id")
                current_mg = header[1]
                if current_mg in mg_specs:
                    raise ParseError(no, f"duplicate microgrid {current_mg}")
                mg_specs[current_mg] = {"line": no, "ders": [], "storages": [], "loads": []}
            elif kind in ("buses", "branches", "units", "loads", "scenario") and len(header) == 1:
                if kind in seen_sections:
                    raise ParseError(no, f"duplicate section [{kind}]")
                seen_sections.add(kind)
            else:
                raise ParseError(no, f"unknown section [{' '.join(header)}]")
            section = kind
            continue
        if section is None:
            raise ParseError(no, "data before the first section")
        if section == "buses":
            if len(toks) not in (1, 2):
                raise ParseError(no, "bus lines are: id [reference]")
            buses.append((no, _int(toks[0], no), _flag(toks[1], no) if len(toks) == 2 else False))
        elif section == "branches":
            if len(toks) != 4:
                raise ParseError(no, "branch lines are: from to reactance flow_limit")
            branches.append((no, _int(toks[0], no), _int(toks[1], no), _num(toks[2], no), _num(toks[3], no)))
        elif section == "units":
            if len(toks) < 2:
                raise ParseError(no, "unit lines start with: name bus")
            units.append((no, toks[0], _int(toks[1], no), _unit_kwargs(toks[2:], no)))
        elif section == "loads":
            bus = _int(toks[0], no)
            if bus in loads:
                raise ParseError(no, f"duplicate load row for bus {bus}")
            loads[bus] = (no, [_num(t, no) for t in toks[1:]])
        elif section == "microgrid":
            _microgrid_line(mg_specs[current_mg], toks, no)
        elif section == "scenario":
            _scenario_line(scenario, toks, no)

    if "buses" not in seen_sections or not buses:
        raise ParseError(1, "missing [buses] section")
    return _assemble(buses, branches, units, loads, mg_specs, scenario)


def _microgrid_line(spec: dict, toks: list[str], no: int):
    key, rest = toks[0], toks[1:]
    if key in ("bus", "voll", "tie_limit", "violation_penalty", "penetration"):
        if len(rest) != 1:
            raise ParseError(no, f"{key} takes one value")
        spec[key] = (no, _int(rest[0], no) if key == "bus" else _num(rest[0], no))
    elif key in ("fixed_load", "nondispatchable"):
        spec[key] = (no, [_num(t, no) for t in rest])
    elif key == "dispatchable":
        if not rest:
            raise ParseError(no, "dispatchable needs a name")
        spec["ders"].append((no, rest[0], _unit_kwargs(rest[1:], no)))
    elif key == "storage":
        if len(rest) != 10:
            raise ParseError(no, "storage lines need 10 columns")
        vals = [_num(t, no) for t in rest[1:9]] + [_opt_num(rest[9], no)]
        spec["storages"].append((no, rest[0], vals))
    elif key == "adjustable":
        if len(rest) != 9:
            raise ParseError(no, "adjustable lines need 9 columns")
        nums = [_num(t, no) for t in rest[1:4]]
        ints = [_int(t, no) for t in rest[4:7]]
        rates = [_num(t, no) for t in rest[7:9]]
        spec["loads"].append((no, rest[0], nums + ints + rates))
    else:
        raise ParseError(no, f"unknown microgrid key {key!r}")


def _scenario_line(scenario: dict, toks: list[str], no: int):
    key, rest = toks[0], toks[1:]
    if key == "price_grid":
        scenario[key] = tuple(_num(t, no) for t in rest)
        return
    if len(rest) != 1:
        raise ParseError(no, f"{key} takes one value")
    if key in ("penetration", "load_tol"):
        scenario[key] = _num(rest[0], no)
    elif key in ("max_iter", "horizon"):
        scenario[key] = _int(rest[0], no)
    elif key == "paradigm":
        scenario[key] = rest[0]
    else:
        raise ParseError(no, f"unknown scenario key {key!r}")


def _build(entity: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except CaseInvalid as exc:
        raise ValidationError(entity, str(exc)) from None
    except TypeError as exc:  # pragma: no cover - guarded by column counts
        raise ValidationError(entity, str(exc)) from None


def _assemble(buses, branches, units, loads, mg_specs, scenario) -> Scenario:
    ids = [b[1] for b in buses]
    has_ref = any(ref for _, _, ref in buses)
    lowest = min(ids)
    bus_objs = [Bus(i, ref or (not has_ref and i == lowest)) for _, i, ref in buses]

    lengths = {len(v[1]) for v in loads.values()}
    if len(lengths) > 1:
        raise ValidationError("loads", "rows must share one horizon")
    T = scenario.get("horizon", lengths.pop() if lengths else DEFAULT_HORIZON)
    for bus, (no, row) in loads.items():
        if bus not in ids:
            raise ValidationError(f"load at bus {bus}", "references an unknown bus")
        if len(row) != T:
            raise ValidationError(f"load at bus {bus}", f"needs {T} hourly values")
    load = [loads.get(i, (0, [0.0] * T))[1] for i in ids]

    branch_objs = [
        _build(f"branch {f}-{t} (line {no})", Branch, f, t, x, lim) for no, f, t, x, lim in branches
    ]
    unit_objs = [_build(f"unit {name}", ThermalUnit, name, bus, **kw) for no, name, bus, kw in units]
    network = _build("network", NetworkCase, bus_objs, branch_objs, unit_objs, load)

    mgs = []
    for mid, spec in mg_specs.items():
        entity = f"microgrid {mid}"
        if "bus" not in spec:
            raise ValidationError(entity, "missing 'bus' line")
        ders = [_build(f"{entity} DER {n}", DispatchableDer, n, **kw) for _, n, kw in spec["ders"]]
        stores = [_build(f"{entity} storage {n}", StorageDer, n, *vals) for _, n, vals in spec["storages"]]
        adj = [_build(f"{entity} load {n}", AdjustableLoad, n, *vals) for _, n, vals in spec["loads"]]
        kw = {k: spec[k][1] for k in ("voll", "tie_limit", "violation_penalty", "penetration") if k in spec}
        fixed = spec.get("fixed_load", (0, [0.0] * T))[1]
        nd = spec.get("nondispatchable", (0, None))[1]
        mgs.append(
            _build(entity, MicrogridCase, mid, spec["bus"][1], fixed, ders, stores, adj, nd, **kw)
        )
    kw = {k: scenario[k] for k in ("penetration", "paradigm", "max_iter", "load_tol", "price_grid") if k in scenario}
    return _build("scenario", Scenario, network, mgs, **kw)


def parse_case(path) -> Scenario:
    """Read and validate a case file."""
    return parse_text(Path(path).read_text())


# -- serialization ---------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _unit_cols(u) -> list[str]:
    cols = [_fmt(getattr(u, c)) for c in _UNIT_COLS]
    if u.initial_up_time is not None or u.initial_down_time is not None:
        cols += [_fmt(u.initial_up_time), _fmt(u.initial_down_time)]
    return cols


def serialize(scn: Scenario) -> str:
    net = scn.network
    out = ["[buses]"]
    out += [f"{b.id} {_fmt(b.is_reference)}" for b in net.buses]
    out.append("[branches]")
    out += [f"{br.from_bus} {br.to_bus} {_fmt(br.reactance)} {_fmt(br.flow_limit)}" for br in net.branches]
    out.append("[units]")
    out += [" ".join([u.name, str(u.bus)] + _unit_cols(u)) for u in net.units]
    out.append("[loads]")
    out += [" ".join([str(b.id)] + [_fmt(v) for v in row]) for b, row in zip(net.buses, net.load)]
    for mg in scn.microgrids:
        out.append(f"[microgrid {mg.id}]")
        out.append(f"bus {mg.attached_bus}")
        out.append(f"voll {_fmt(mg.voll)}")
        out.append(f"tie_limit {_fmt(mg.tie_limit)}")
        out.append(f"violation_penalty {_fmt(mg.violation_penalty)}")
        if mg.penetration is not None:
            out.append(f"penetration {_fmt(mg.penetration)}")
        out.append("fixed_load " + " ".join(_fmt(v) for v in mg.fixed_load))
        out.append("nondispatchable " + " ".join(_fmt(v) for v in mg.nondispatchable))
        for d in mg.dispatchables:
            out.append(" ".join(["dispatchable", d.name] + _unit_cols(d)))
        for s in mg.storages:
            vals = [s.charge_max, s.discharge_max, s.energy_capacity, s.soc_min, s.soc_max,
                    s.charge_efficiency, s.discharge_efficiency, s.soc_initial, s.terminal_soc]
            out.append(" ".join(["storage", s.name] + [_fmt(v) for v in vals]))
        for a in mg.adjustable_loads:
            vals = [a.p_min, a.p_max, a.energy, a.t_start, a.t_end, a.min_operating_time,
                    a.pickup_rate, a.drop_rate]
            out.append(" ".join(["adjustable", a.name] + [_fmt(v) for v in vals]))
    out.append("[scenario]")
    out.append(f"horizon {net.horizon}")
    out.append(f"penetration {_fmt(scn.penetration)}")
    out.append(f"paradigm {scn.paradigm}")
    out.append(f"max_iter {scn.max_iter}")
    out.append(f"load_tol {_fmt(scn.load_tol)}")
    if scn.price_grid is not None:
        out.append("price_grid " + " ".join(_fmt(p) for p in scn.price_grid))
    return "\n".join(out) + "\n"
