"""Parameter sweeps over seeded scenarios, written as plot-ready CSV."""

from __future__ import annotations

import csv
import enum
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .errors import UavPecError, ValidationError
from .gjra import EA_SIZE_LIMIT, Scheme, solve
from .model import (DEFAULT_AREA_SIDE_M, PhysicsConfig, SolverConfig, TaskRanges, UavBudget,
                    generate_scenario)

ROW_COLUMNS = ["param", "value", "seed", "scheme", "total_latency_s", "rounds", "converged", "wall_time_s"]
SUMMARY_COLUMNS = ["param", "value", "scheme", "median_total_latency_s", "n_solved", "median_gap_to_ea"]


class SweepParam(str, enum.Enum):
    N_DEVICES = "n_devices"
    M_POSITIONS = "m_positions"
    TASK_CYCLES = "task_cycles"
    TASK_BITS = "task_bits"
    P_MAX_UAV = "p_max_uav"
    BANDWIDTH = "bandwidth"
    F_UE_MAX = "f_ue_max"
    F_UAV_MAX = "f_uav_max"


@dataclass(frozen=True)
class SweepBase:
    """Scenario settings held fixed while one parameter is swept."""

    n: int = 50
    m: int = 4
    area_side_m: float = DEFAULT_AREA_SIDE_M
    task_ranges: TaskRanges = field(default_factory=TaskRanges)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    budget: UavBudget = field(default_factory=UavBudget)


@dataclass(frozen=True)
class SweepSpec:
    parameter: SweepParam
    values: tuple
    seeds: tuple
    schemes: tuple
    base: SweepBase = field(default_factory=SweepBase)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        try:
            object.__setattr__(self, "parameter", SweepParam(self.parameter))
            object.__setattr__(self, "schemes", tuple(Scheme(x) for x in self.schemes))
        except ValueError as exc:
            raise ValidationError("sweep", str(exc)) from None
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "seeds", tuple(int(x) for x in self.seeds))
        if not self.values:
            raise ValidationError("values", "need at least one value")
        if not self.seeds:
            raise ValidationError("seeds", "need at least one seed")
        if not self.schemes:
            raise ValidationError("schemes", "need at least one scheme")
        if Scheme.EA in self.schemes:
            for v in self.values:
                n, m = self.size_at(v)
                if (2 * m) ** n > EA_SIZE_LIMIT:
                    raise ValidationError("schemes", f"EA exceeds the size guard at {self.parameter.value}={v}")

    def size_at(self, value):
        n, m = self.base.n, self.base.m
        if self.parameter is SweepParam.N_DEVICES:
            n = int(value)
        elif self.parameter is SweepParam.M_POSITIONS:
            m = int(value)
        return n, m

    def scenario(self, value, seed):
        """Scenario for one sweep cell; task-size values set the range maximum at a fixed min/max ratio."""
        b = self.base
        n, m = self.size_at(value)
        physics, budget, ranges = b.physics, b.budget, b.task_ranges
        p = self.parameter
        if p is SweepParam.TASK_CYCLES:
            lo, hi = ranges.cycles
            ranges = replace(ranges, cycles=(value * lo / hi, float(value)))
        elif p is SweepParam.TASK_BITS:
            lo, hi = ranges.bits
            ranges = replace(ranges, bits=(value * lo / hi, float(value)))
        elif p is SweepParam.P_MAX_UAV:
            budget = replace(budget, power_max_w=float(value))
        elif p is SweepParam.F_UAV_MAX:
            budget = replace(budget, cpu_max_hz=float(value))
        elif p is SweepParam.BANDWIDTH:
            physics = replace(physics, bandwidth_hz=float(value))
        elif p is SweepParam.F_UE_MAX:
            physics = replace(physics, max_device_freq_hz=float(value))
        return generate_scenario(n, m, b.area_side_m, seed, physics, budget, ranges)


def load_sweep_spec(path) -> SweepSpec:
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError("sweep", f"not valid JSON ({exc})") from exc
    return sweep_spec_from_dict(data)


def sweep_spec_from_dict(data: dict) -> SweepSpec:
    try:
        base_d = dict(data.get("base", {}))
        ranges = TaskRanges(
            bits=tuple(base_d.pop("bits", TaskRanges().bits)),
            cycles=tuple(base_d.pop("cycles", TaskRanges().cycles)),
        )
        physics = PhysicsConfig(**base_d.pop("physics", {}))
        budget = UavBudget(**base_d.pop("budget", {}))
        base = SweepBase(task_ranges=ranges, physics=physics, budget=budget, **base_d)
        solver = SolverConfig(**data.get("solver", {}))
        return SweepSpec(parameter=data["parameter"], values=data["values"], seeds=data["seeds"],
                         schemes=data["schemes"], base=base, solver=solver)
    except (KeyError, TypeError) as exc:
        raise ValidationError("sweep", f"malformed sweep spec ({exc})") from exc


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    seed: int
    scheme: str
    total_latency_s: float
    rounds: int
    converged: bool
    wall_time_s: float


def _run_cell(args):
    spec, value, seed = args
    rows = []
    scenario = None
    for scheme in spec.schemes:
        cfg = replace(spec.solver, rng_seed=seed)
        try:
            if scenario is None:
                scenario = spec.scenario(value, seed)
            rep = solve(scenario, scheme, cfg)
            rows.append(SweepRow(spec.parameter.value, value, seed, scheme.value, rep.total_latency,
                                 rep.rounds, rep.converged, rep.wall_time_s))
        except UavPecError:
            rows.append(SweepRow(spec.parameter.value, value, seed, scheme.value, math.nan, 0, False, 0.0))
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Rows in spec order: values, then seeds, then schemes."""
    cells = [(spec, v, s) for v in spec.values for s in spec.seeds]
    if jobs <= 1:
        chunks = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, cells))
    return [row for chunk in chunks for row in chunk]


def _g(x) -> str:
    return f"{float(x):.12g}"


def _value_str(v) -> str:
    return str(v) if isinstance(v, int) else _g(v)


def write_rows_csv(rows, path, timing=True) -> None:
    with open(os.fspath(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow([r.param, _value_str(r.value), r.seed, r.scheme, _g(r.total_latency_s), r.rounds,
                        str(r.converged).lower(), _g(r.wall_time_s) if timing else "0"])


def summarize(rows) -> list[dict]:
    """Per (value, scheme) median latency and median relative gap to EA on the same seed."""
    order = []
    groups: dict = {}
    ea = {(r.value, r.seed): r.total_latency_s for r in rows
          if r.scheme == Scheme.EA.value and r.converged}
    for r in rows:
        key = (r.value, r.scheme)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    for value, scheme in order:
        ok = [r for r in groups[(value, scheme)] if r.converged and not math.isnan(r.total_latency_s)]
        lat = [r.total_latency_s for r in ok]
        gaps = [(r.total_latency_s - ea[(value, r.seed)]) / ea[(value, r.seed)]
                for r in ok if (value, r.seed) in ea]
        out.append({
            "param": groups[(value, scheme)][0].param,
            "value": value,
            "scheme": scheme,
            "median_total_latency_s": statistics.median(lat) if lat else math.nan,
            "n_solved": len(ok),
            "median_gap_to_ea": statistics.median(gaps) if gaps else None,
        })
    return out


def write_summary_csv(summary, path) -> None:
    with open(os.fspath(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summary:
            gap = s["median_gap_to_ea"]
            w.writerow([s["param"], _value_str(s["value"]), s["scheme"], _g(s["median_total_latency_s"]),
                        s["n_solved"], "" if gap is None else _g(gap)])


def read_rows_csv(path) -> list[SweepRow]:
    with open(os.fspath(path), newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        rows = []
        for d in rd:
            raw_v = d["value"]
            value = int(raw_v) if raw_v.lstrip("-").isdigit() else float(raw_v)
            rows.append(SweepRow(d["param"], value, int(d["seed"]), d["scheme"],
                                 float(d["total_latency_s"]), int(d["rounds"]),
                                 d["converged"] == "true", float(d["wall_time_s"])))
        return rows
