"""Energy, time and latency primitives for local and offloaded execution.

Harvesting time is always taken at its lower bound, i.e. the charge time at
which harvested energy exactly covers the energy the device spends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelTable
from .errors import InfeasibleError
from .model import Scenario

CAP_RTOL = 1e-9


def local_exec_time(task_cycles, f_local_hz):
    return np.asarray(task_cycles, dtype=float) / f_local_hz


def local_exec_energy(k, task_cycles, f_local_hz, v=3.0):
    """CPU energy ``k F f^(v-1)``; with v = 3 this is ``k F f^2``."""
    return k * np.asarray(task_cycles, dtype=float) * np.power(f_local_hz, v - 1.0)


def tx_time(task_bits, rate_bps):
    return np.asarray(task_bits, dtype=float) / rate_bps


def tx_energy(p_uplink_w, tx_time_s):
    return np.asarray(p_uplink_w, dtype=float) * tx_time_s


def offload_compute_time(task_cycles, f_share_hz):
    f = np.asarray(f_share_hz, dtype=float)
    if np.any(f <= 0):
        raise InfeasibleError("cpu_share", detail="offloaded task needs a positive UAV CPU share")
    return np.asarray(task_cycles, dtype=float) / f


def energy_demand_coeff(rho, k, task_cycles, f_local, p_uplink, tx_time_s, eta0, gain, v=3.0):
    """Charging energy demand ``A``; harvest time is ``A / p`` for charge power ``p``.

    ``rho`` may be 0/1 or relaxed in [0, 1]. Broadcasts over array inputs.
    """
    rho = np.asarray(rho, dtype=float)
    spent = (1.0 - rho) * local_exec_energy(k, task_cycles, f_local, v) + rho * tx_energy(p_uplink, tx_time_s)
    return spent / (eta0 * np.asarray(gain, dtype=float))


def harvest_time(a_coeff, charge_w):
    a = np.asarray(a_coeff, dtype=float)
    p = np.asarray(charge_w, dtype=float)
    if np.any((p <= 0) & (a > 0)):
        raise InfeasibleError("charging", detail="device with positive energy demand gets no charging power")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a / np.where(p > 0, p, 1.0), 0.0)
    return out if out.ndim else float(out)


def demand_matrix(s: Scenario, table: ChannelTable, rho) -> np.ndarray:
    """``A[i, j]``: energy demand of device i if it were charged at position j."""
    rho = np.asarray(rho, dtype=float)[:, None]
    ph = s.physics
    t_tr = tx_time(s.task_bits[:, None], table.rate_bps)
    return energy_demand_coeff(rho, s.capacitance[:, None], s.task_cycles[:, None],
                               s.local_freq[:, None], s.uplink_power[:, None], t_tr,
                               ph.eh_efficiency, table.gain, ph.cpu_exponent)


@dataclass(frozen=True, eq=False)
class Allocation:
    """One candidate solution.

    connect:      (N, M) 0/1, exactly one 1 per row
    offload:      (N,)   0/1 offload decision
    cpu_share_hz: (N, M) UAV CPU frequency granted to each offloaded task
    charge_w:     (N, M) UAV charging power granted to each device
    """

    connect: np.ndarray
    offload: np.ndarray
    cpu_share_hz: np.ndarray
    charge_w: np.ndarray

    @property
    def position_of(self) -> np.ndarray:
        return np.argmax(self.connect, axis=1)

    def copy(self, **changes) -> "Allocation":
        fields = dict(connect=self.connect, offload=self.offload,
                      cpu_share_hz=self.cpu_share_hz, charge_w=self.charge_w)
        fields.update(changes)
        return Allocation(**{k: np.array(v, copy=True) for k, v in fields.items()})

    def to_dict(self) -> dict:
        return {
            "connect": self.connect.astype(int).tolist(),
            "offload": self.offload.astype(int).tolist(),
            "cpu_share_hz": [[_fmt(x) for x in row] for row in self.cpu_share_hz],
            "charge_w": [[_fmt(x) for x in row] for row in self.charge_w],
        }


def _fmt(x):
    return float(f"{float(x):.12g}")


def connection_from_positions(pos, m) -> np.ndarray:
    pos = np.asarray(pos, dtype=int)
    a = np.zeros((pos.size, m), dtype=np.int8)
    a[np.arange(pos.size), pos] = 1
    return a


@dataclass(frozen=True, eq=False)
class LatencyBreakdown:
    eh_s: np.ndarray
    local_s: np.ndarray
    tx_s: np.ndarray
    offload_compute_s: np.ndarray
    total_s: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.total_s))

    def to_dict(self) -> dict:
        return {
            "total_s": _fmt(self.total),
            "devices": [
                {
                    "id": i,
                    "eh_s": _fmt(self.eh_s[i]),
                    "local_s": _fmt(self.local_s[i]),
                    "tx_s": _fmt(self.tx_s[i]),
                    "offload_compute_s": _fmt(self.offload_compute_s[i]),
                    "total_s": _fmt(self.total_s[i]),
                }
                for i in range(self.total_s.size)
            ],
        }


def check_structure(s: Scenario, alloc: Allocation) -> None:
    """Raise InfeasibleError on the first violated structural constraint."""
    a, rho = alloc.connect, alloc.offload
    n, m = s.n, s.m
    if a.shape != (n, m) or alloc.cpu_share_hz.shape != (n, m) or alloc.charge_w.shape != (n, m):
        raise InfeasibleError("shape", detail=f"expected ({n}, {m}) matrices")
    if rho.shape != (n,):
        raise InfeasibleError("shape", detail=f"offload vector must have length {n}")
    if not np.all((a == 0) | (a == 1)):
        raise InfeasibleError("binary connection")
    rows = a.sum(axis=1)
    bad = np.flatnonzero(rows != 1)
    if bad.size:
        raise InfeasibleError("single connection", device=int(bad[0]),
                              detail=f"row sums to {int(rows[bad[0]])}")
    if np.any(alloc.cpu_share_hz < 0):
        i, j = np.argwhere(alloc.cpu_share_hz < 0)[0]
        raise InfeasibleError("cpu_share >= 0", device=int(i), position=int(j))
    if np.any(alloc.charge_w < 0):
        i, j = np.argwhere(alloc.charge_w < 0)[0]
        raise InfeasibleError("charge >= 0", device=int(i), position=int(j))
    used_cpu = np.sum(rho[:, None] * a * alloc.cpu_share_hz, axis=0)
    over = np.flatnonzero(used_cpu > s.budget.cpu_max_hz * (1 + CAP_RTOL))
    if over.size:
        raise InfeasibleError("UAV CPU cap", position=int(over[0]),
                              detail=f"{used_cpu[over[0]]!r} Hz > {s.budget.cpu_max_hz!r} Hz")
    used_p = np.sum(a * alloc.charge_w, axis=0)
    over = np.flatnonzero(used_p > s.budget.power_max_w * (1 + CAP_RTOL))
    if over.size:
        raise InfeasibleError("UAV charging cap", position=int(over[0]),
                              detail=f"{used_p[over[0]]!r} W > {s.budget.power_max_w!r} W")


def total_latency(s: Scenario, table: ChannelTable, alloc: Allocation) -> LatencyBreakdown:
    check_structure(s, alloc)
    idx = np.arange(s.n)
    pos = alloc.position_of
    rho = alloc.offload.astype(float)
    a_coeff = demand_matrix(s, table, rho)[idx, pos]
    p = alloc.charge_w[idx, pos]
    f_o = alloc.cpu_share_hz[idx, pos]

    starving = np.flatnonzero((p <= 0) & (a_coeff > 0))
    if starving.size:
        i = int(starving[0])
        raise InfeasibleError("charging", device=i, position=int(pos[i]),
                              detail="positive energy demand but zero charging power")
    no_cpu = np.flatnonzero((rho > 0) & (f_o <= 0))
    if no_cpu.size:
        i = int(no_cpu[0])
        raise InfeasibleError("cpu_share", device=i, position=int(pos[i]),
                              detail="offloaded task has no UAV CPU share")

    eh = harvest_time(a_coeff, p)
    off = rho > 0
    local = np.where(off, 0.0, local_exec_time(s.task_cycles, s.local_freq))
    tx = np.where(off, tx_time(s.task_bits, table.rate_bps[idx, pos]), 0.0)
    comp = np.zeros(s.n)
    comp[off] = s.task_cycles[off] / f_o[off]
    total = eh + local + tx + comp
    return LatencyBreakdown(eh_s=eh, local_s=local, tx_s=tx, offload_compute_s=comp, total_s=total)


def objective(s: Scenario, table: ChannelTable, alloc: Allocation) -> float:
    return total_latency(s, table, alloc).total


def energy_balance(s: Scenario, table: ChannelTable, alloc: Allocation, breakdown: LatencyBreakdown):
    """Per-device (harvested, consumed) energy in joules, evaluated independently of ``A``."""
    idx = np.arange(s.n)
    pos = alloc.position_of
    ph = s.physics
    p = alloc.charge_w[idx, pos]
    g = table.gain[idx, pos]
    harvested = ph.eh_efficiency * p * g * breakdown.eh_s
    off = alloc.offload.astype(bool)
    e_local = local_exec_energy(s.capacitance, s.task_cycles, s.local_freq, ph.cpu_exponent)
    e_tx = s.uplink_power * s.task_bits / table.rate_bps[idx, pos]
    consumed = np.where(off, e_tx, e_local)
    return harvested, consumed
