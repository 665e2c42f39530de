"""Problem-instance types, seeded scenario generation and JSON persistence.

All types are frozen dataclasses; a :class:`Scenario` also exposes packed
numpy views (``scenario.task_bits`` etc.) for the vectorized solvers.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import SchemaVersionError, ValidationError

SCHEMA_VERSION = 1

# Default radio, harvesting and budget constants.
DEFAULT_AREA_SIDE_M = math.sqrt(1000.0)
DEFAULT_UPLINK_POWER_W = 2.83e-3
DEFAULT_CAPACITANCE = 1e-28


class ElevationConvention(str, enum.Enum):
    HORIZONTAL = "horizontal"
    SLANT = "slant"


def _require(cond, fieldname, message):
    if not cond:
        raise ValidationError(fieldname, message)


def _finite(x):
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


@dataclass(frozen=True)
class Device:
    id: int
    position: tuple[float, float]
    task_bits: float
    task_cycles: float
    local_freq: float
    uplink_power: float = DEFAULT_UPLINK_POWER_W
    capacitance_k: float = DEFAULT_CAPACITANCE

    def __post_init__(self):
        x, y = self.position
        _require(_finite(x) and _finite(y) and x >= 0 and y >= 0, "position",
                 f"device {self.id} coordinates must be finite and non-negative, got {self.position}")
        _require(_finite(self.task_bits) and self.task_bits > 0, "task_bits", "must be > 0")
        _require(_finite(self.task_cycles) and self.task_cycles > 0, "task_cycles", "must be > 0")
        _require(_finite(self.local_freq) and self.local_freq > 0, "local_freq", "must be > 0")
        _require(_finite(self.uplink_power) and self.uplink_power > 0, "uplink_power", "must be > 0")
        _require(_finite(self.capacitance_k) and self.capacitance_k > 0, "capacitance_k", "must be > 0")


@dataclass(frozen=True)
class HoverPosition:
    id: int
    position: tuple[float, float]

    def __post_init__(self):
        x, y = self.position
        _require(_finite(x) and _finite(y), "position",
                 f"hover position {self.id} coordinates must be finite")


@dataclass(frozen=True)
class PhysicsConfig:
    """Radio, harvesting and CPU constants.

    ``ref_gain`` is the linear channel power gain at 1 m; ``noise_power_w``
    is in watts (-60 dBm by default).
    """

    altitude_m: float = 10.0
    bandwidth_hz: float = 10e6
    noise_power_w: float = 1e-9
    carrier_hz: float = 2e9
    eta_los_db: float = 0.1
    eta_nlos_db: float = 21.0
    los_a: float = 4.88
    los_b: float = 0.49
    ref_gain: float = 1e-3
    eh_efficiency: float = 0.8
    cpu_exponent: float = 3.0
    elevation_convention: ElevationConvention = ElevationConvention.HORIZONTAL
    max_device_freq_hz: float = 1e6

    def __post_init__(self):
        object.__setattr__(self, "elevation_convention",
                           _parse_convention(self.elevation_convention))
        _require(_finite(self.altitude_m) and self.altitude_m > 0, "altitude_m", "must be > 0")
        _require(_finite(self.bandwidth_hz) and self.bandwidth_hz > 0, "bandwidth_hz", "must be > 0")
        _require(_finite(self.noise_power_w) and self.noise_power_w > 0, "noise_power_w", "must be > 0")
        _require(_finite(self.carrier_hz) and self.carrier_hz > 0, "carrier_hz", "must be > 0")
        _require(_finite(self.eta_los_db), "eta_los_db", "must be finite")
        _require(_finite(self.eta_nlos_db), "eta_nlos_db", "must be finite")
        _require(_finite(self.los_a) and self.los_a > 0, "los_a", "must be > 0")
        _require(_finite(self.los_b) and self.los_b > 0, "los_b", "must be > 0")
        _require(_finite(self.ref_gain) and self.ref_gain > 0, "ref_gain", "must be > 0")
        _require(_finite(self.eh_efficiency) and 0 < self.eh_efficiency <= 1, "eh_efficiency",
                 f"must lie in (0, 1], got {self.eh_efficiency}")
        _require(_finite(self.cpu_exponent) and self.cpu_exponent >= 2, "cpu_exponent", "must be >= 2")
        _require(_finite(self.max_device_freq_hz) and self.max_device_freq_hz > 0,
                 "max_device_freq_hz", "must be > 0")


def _parse_convention(value):
    try:
        return ElevationConvention(value)
    except ValueError:
        raise ValidationError("elevation_convention", f"unknown convention {value!r}") from None


@dataclass(frozen=True)
class UavBudget:
    cpu_max_hz: float = 3e6
    power_max_w: float = 0.1

    def __post_init__(self):
        _require(_finite(self.cpu_max_hz) and self.cpu_max_hz > 0, "cpu_max_hz", "must be > 0")
        _require(_finite(self.power_max_w) and self.power_max_w > 0, "power_max_w", "must be > 0")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and caps for the inner (connection) and outer (BCD) loops.

    ``step0`` is the base subgradient step, in seconds per unit of
    cap-normalized constraint residual.
    """

    eps_inner: float = 1e-6
    eps_outer: float = 1e-10
    k_max: int = 100
    r_max: int = 200
    step0: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        _require(self.eps_inner > 0, "eps_inner", "must be > 0")
        _require(self.eps_outer > 0, "eps_outer", "must be > 0")
        _require(int(self.k_max) >= 1, "k_max", "must be >= 1")
        _require(int(self.r_max) >= 1, "r_max", "must be >= 1")
        _require(self.step0 > 0, "step0", "must be > 0")
        _require(int(self.rng_seed) >= 0, "rng_seed", "must be a non-negative integer")


@dataclass(frozen=True)
class TaskRanges:
    """Uniform draw ranges for task data size (bits) and workload (cycles)."""

    bits: tuple[float, float] = (1e3, 1e4)
    cycles: tuple[float, float] = (2e5, 1e6)

    def __post_init__(self):
        for name, (lo, hi) in (("task_ranges.bits", self.bits), ("task_ranges.cycles", self.cycles)):
            _require(_finite(lo) and _finite(hi) and 0 < lo <= hi, name,
                     f"need 0 < min <= max, got ({lo}, {hi})")


@dataclass(frozen=True)
class Scenario:
    devices: tuple[Device, ...]
    positions: tuple[HoverPosition, ...]
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    budget: UavBudget = field(default_factory=UavBudget)

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "positions", tuple(self.positions))
        _require(len(self.devices) >= 1, "devices", "need at least one device")
        _require(len(self.positions) >= 1, "positions", "need at least one hover position")
        for k, d in enumerate(self.devices):
            _require(d.id == k, "devices", f"ids must be dense 0..N-1, entry {k} has id {d.id}")
            _require(d.local_freq <= self.physics.max_device_freq_hz * (1 + 1e-12), "local_freq",
                     f"device {k} exceeds max_device_freq_hz")
        for k, q in enumerate(self.positions):
            _require(q.id == k, "positions", f"ids must be dense 0..M-1, entry {k} has id {q.id}")

    @property
    def n(self) -> int:
        return len(self.devices)

    @property
    def m(self) -> int:
        return len(self.positions)

    # packed views; dataclass eq/hash ignore them
    @cached_property
    def device_xy(self) -> np.ndarray:
        return np.array([d.position for d in self.devices], dtype=float).reshape(self.n, 2)

    @cached_property
    def hover_xy(self) -> np.ndarray:
        return np.array([q.position for q in self.positions], dtype=float).reshape(self.m, 2)

    @cached_property
    def task_bits(self) -> np.ndarray:
        return np.array([d.task_bits for d in self.devices], dtype=float)

    @cached_property
    def task_cycles(self) -> np.ndarray:
        return np.array([d.task_cycles for d in self.devices], dtype=float)

    @cached_property
    def local_freq(self) -> np.ndarray:
        return np.array([d.local_freq for d in self.devices], dtype=float)

    @cached_property
    def uplink_power(self) -> np.ndarray:
        return np.array([d.uplink_power for d in self.devices], dtype=float)

    @cached_property
    def capacitance(self) -> np.ndarray:
        return np.array([d.capacitance_k for d in self.devices], dtype=float)


def generate_scenario(
    n: int,
    m: int,
    area_side_m: float = DEFAULT_AREA_SIDE_M,
    seed: int = 0,
    physics: Optional[PhysicsConfig] = None,
    budget: Optional[UavBudget] = None,
    task_ranges: Optional[TaskRanges] = None,
    uplink_power_w: float = DEFAULT_UPLINK_POWER_W,
    capacitance_k: float = DEFAULT_CAPACITANCE,
) -> Scenario:
    """Draw a random scenario on the square ``[0, area_side_m]^2``.

    The draw order is fixed (device xy, hover xy, task bits, task cycles)
    so that for a given seed the task sizes are an affine function of the
    ranges. Every device runs at ``physics.max_device_freq_hz``.
    """
    _require(isinstance(n, (int, np.integer)) and n >= 1, "n", f"need n >= 1, got {n}")
    _require(isinstance(m, (int, np.integer)) and m >= 1, "m", f"need m >= 1, got {m}")
    _require(_finite(area_side_m) and area_side_m >= 0, "area_side_m", "must be finite and >= 0")
    _require(int(seed) >= 0, "seed", "must be a non-negative integer")
    physics = physics or PhysicsConfig()
    budget = budget or UavBudget()
    task_ranges = task_ranges or TaskRanges()

    rng = np.random.default_rng(int(seed))
    dev_xy = np.round(rng.uniform(0.0, 1.0, size=(n, 2)) * area_side_m, 6)
    hov_xy = np.round(rng.uniform(0.0, 1.0, size=(m, 2)) * area_side_m, 6)
    u_bits = rng.uniform(0.0, 1.0, size=n)
    u_cycles = rng.uniform(0.0, 1.0, size=n)
    b_lo, b_hi = task_ranges.bits
    c_lo, c_hi = task_ranges.cycles
    bits = b_lo + u_bits * (b_hi - b_lo)
    cycles = c_lo + u_cycles * (c_hi - c_lo)

    devices = tuple(
        Device(
            id=i,
            position=(float(dev_xy[i, 0]), float(dev_xy[i, 1])),
            task_bits=float(bits[i]),
            task_cycles=float(cycles[i]),
            local_freq=float(physics.max_device_freq_hz),
            uplink_power=float(uplink_power_w),
            capacitance_k=float(capacitance_k),
        )
        for i in range(n)
    )
    positions = tuple(
        HoverPosition(id=j, position=(float(hov_xy[j, 0]), float(hov_xy[j, 1]))) for j in range(m)
    )
    return Scenario(devices=devices, positions=positions, physics=physics, budget=budget)


def with_overrides(s: Scenario, *, physics=None, budget=None, local_freq=None) -> Scenario:
    """Copy of ``s`` with replaced configs; ``local_freq`` resets every device."""
    physics = physics or s.physics
    devices = s.devices
    if local_freq is not None:
        devices = tuple(replace(d, local_freq=float(local_freq)) for d in devices)
    return Scenario(devices=devices, positions=s.positions, physics=physics,
                    budget=budget or s.budget)


# --- persistence -------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    physics = asdict(s.physics)
    physics["elevation_convention"] = s.physics.elevation_convention.value
    return {
        "version": SCHEMA_VERSION,
        "devices": [
            {
                "id": d.id,
                "x": d.position[0],
                "y": d.position[1],
                "task_bits": d.task_bits,
                "task_cycles": d.task_cycles,
                "local_freq": d.local_freq,
                "uplink_power": d.uplink_power,
                "capacitance_k": d.capacitance_k,
            }
            for d in s.devices
        ],
        "positions": [{"id": q.id, "x": q.position[0], "y": q.position[1]} for q in s.positions],
        "physics": physics,
        "budget": asdict(s.budget),
    }


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict) or "version" not in data:
        raise SchemaVersionError(None, SCHEMA_VERSION)
    if data["version"] != SCHEMA_VERSION:
        raise SchemaVersionError(data["version"], SCHEMA_VERSION)
    try:
        devices = [
            Device(
                id=int(d["id"]),
                position=(float(d["x"]), float(d["y"])),
                task_bits=float(d["task_bits"]),
                task_cycles=float(d["task_cycles"]),
                local_freq=float(d["local_freq"]),
                uplink_power=float(d["uplink_power"]),
                capacitance_k=float(d["capacitance_k"]),
            )
            for d in data["devices"]
        ]
        positions = [HoverPosition(id=int(q["id"]), position=(float(q["x"]), float(q["y"])))
                     for q in data["positions"]]
        physics = PhysicsConfig(**data["physics"])
        budget = UavBudget(**data["budget"])
    except (KeyError, TypeError) as exc:
        raise ValidationError("schema", f"malformed scenario file ({exc})") from exc
    return Scenario(devices=devices, positions=positions, physics=physics, budget=budget)


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def save_scenario(s: Scenario, path) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(dumps_scenario(s))


def load_scenario(path) -> Scenario:
    """Read a scenario file; raises FileNotFoundError, SchemaVersionError or ValidationError."""
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError("schema", f"not valid JSON ({exc})") from exc
    return scenario_from_dict(data)


def make_scenario(devices: Sequence[dict], positions: Sequence[tuple[float, float]],
                  physics: Optional[PhysicsConfig] = None,
                  budget: Optional[UavBudget] = None) -> Scenario:
    """Build a scenario from plain dicts; handy for hand-crafted test instances."""
    physics = physics or PhysicsConfig()
    devs = []
    for i, d in enumerate(devices):
        kw = dict(d)
        kw.setdefault("local_freq", physics.max_device_freq_hz)
        devs.append(Device(id=i, **kw))
    hov = [HoverPosition(id=j, position=tuple(map(float, q))) for j, q in enumerate(positions)]
    return Scenario(devices=tuple(devs), positions=tuple(hov), physics=physics,
                    budget=budget or UavBudget())
