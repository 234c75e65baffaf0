"""Writing a ParadigmReport to a directory of CSV files plus a summary."""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .paradigms import ParadigmReport

FILES = ("summary.txt", "netload.csv", "lmp.csv", "dispatch.csv", "trace.csv", "awards.csv")


class IoError(OSError):
    pass


@dataclasses.dataclass(frozen=True)
class ReportBundle:
    directory: Path

    def path(self, name: str) -> Path:
        return self.directory / name

    @property
    def files(self) -> dict:
        return {name: self.directory / name for name in FILES}


def fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _netload_rows(rep: ParadigmReport):
    for t in range(rep.hours):
        for k, bus in sorted(enumerate(rep.bus_ids), key=lambda kb: kb[1]):
            yield t, bus, fmt(rep.forecast[k, t]), fmt(rep.actual[k, t])


def _lmp_rows(rep):
    if rep.final is None:
        return
    for t in range(rep.final.horizon):
        for k, bus in sorted(enumerate(rep.final.bus_ids), key=lambda kb: kb[1]):
            yield t, bus, fmt(rep.final.lmp[k, t])


def _dispatch_rows(rep):
    if rep.final is None:
        return
    res = rep.final
    order = sorted(range(len(res.unit_names)), key=lambda i: res.unit_names[i])
    for t in range(res.horizon):
        for i in order:
            yield t, res.unit_names[i], int(res.commitment[i, t]), fmt(res.dispatch[i, t])


def _trace_rows(rep):
    tr = rep.trace
    if tr is None or not len(tr):
        return
    load, price = tr.total_load, tr.average_lmp
    for it in range(len(tr)):
        for t in range(load.shape[1]):
            yield it, t, fmt(load[it, t]), fmt(price[it, t])


def _award_rows(rep):
    bus_of = rep.microgrid_buses
    for t in range(rep.hours):
        for mid in sorted(rep.awards, key=lambda m: (bus_of.get(m, 0), m)):
            dev = rep.deviations.get(mid, np.zeros(rep.hours))
            yield t, bus_of.get(mid, ""), mid, fmt(rep.awards[mid][t]), fmt(dev[t])


def summary_lines(rep: ParadigmReport) -> list[str]:
    m = rep.metrics
    lines = [
        f"paradigm: {rep.paradigm}",
        f"penetration: {fmt(rep.penetration)}",
        f"buses: {len(rep.bus_ids)}",
        f"hours: {rep.hours}",
        f"max_abs_mismatch_mw: {fmt(m['max_abs_mw'])}",
        f"total_abs_mismatch_mwh: {fmt(m['total_abs_mwh'])}",
    ]
    if rep.final is not None:
        lines.append(f"system_cost: {fmt(rep.final.total_cost)}")
    for key in sorted(rep.feasible):
        lines.append(f"feasible_{key}: {'yes' if rep.feasible[key] else 'no'}")
    if rep.redispatch_delta is not None:
        lines.append(f"max_abs_redispatch_mw: {fmt(np.max(np.abs(rep.redispatch_delta), initial=0.0))}")
        lines.append(f"max_abs_nodal_residual_mw: {fmt(np.max(np.abs(rep.redispatch_residual), initial=0.0))}")
    if rep.trace is not None:
        lines.append(f"termination: {rep.trace.label}")
        lines.append(f"iterations: {len(rep.trace)}")
        lines.append(f"price_oscillation_std: {fmt(rep.trace.price_oscillation())}")
    if rep.paradigm == "dmo":
        lines.append(f"welfare: {fmt(rep.welfare)}")
        lines.append(f"baseline_total_abs_mismatch_mwh: {fmt(rep.baseline_total_abs_mwh)}")
    lines.append("hourly_mismatch_mw: " + " ".join(fmt(v) for v in m["hourly_delta_mw"]))
    lines += [f"note: {n}" for n in rep.notes]
    return lines


def write_report(rep: ParadigmReport, directory) -> ReportBundle:
    """Write every file of the bundle into ``directory`` (created if needed)."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.txt").write_text("\n".join(summary_lines(rep)) + "\n")
        _write_csv(out / "netload.csv", ("hour", "bus", "forecast_mw", "actual_mw"), _netload_rows(rep))
        _write_csv(out / "lmp.csv", ("hour", "bus", "price"), _lmp_rows(rep))
        _write_csv(out / "dispatch.csv", ("hour", "unit", "committed", "mw"), _dispatch_rows(rep))
        _write_csv(out / "trace.csv", ("iteration", "hour", "total_load_mw", "avg_lmp"), _trace_rows(rep))
        _write_csv(
            out / "awards.csv", ("hour", "bus", "microgrid", "award_mw", "deviation_mw"), _award_rows(rep)
        )
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return ReportBundle(out)


def read_netload(path) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Bus ids and (bus, hour) forecast/actual matrices from a netload.csv."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    buses = sorted({int(r["bus"]) for r in rows})
    hours = 1 + max((int(r["hour"]) for r in rows), default=-1)
    idx = {b: k for k, b in enumerate(buses)}
    forecast = np.zeros((len(buses), hours))
    actual = np.zeros((len(buses), hours))
    for r in rows:
        k, t = idx[int(r["bus"])], int(r["hour"])
        forecast[k, t] = float(r["forecast_mw"])
        actual[k, t] = float(r["actual_mw"])
    return buses, forecast, actual
