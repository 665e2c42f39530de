"""Block solvers for the alternating (BCD) optimization.

Each solver updates one block of variables with the other blocks fixed:

* :func:`decide_offloading`  - local/offload choice, greedy rule plus CPU-cap repair
* :func:`allocate_uav_cpu`    - UAV CPU split per hover position (closed form)
* :func:`allocate_charging`   - UAV charging-power split per position (closed form)
* :func:`manage_connections`  - device-to-position assignment by dual subgradient

Both closed forms solve ``min sum_i w_i^2 / x_i  s.t.  sum_i x_i <= cap``
whose minimizer is ``x_i = cap * w_i / sum_k w_k``; the cap always binds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelTable
from .energymodel import CAP_RTOL, Allocation, demand_matrix, objective, tx_time
from .errors import InfeasibleError
from .model import Scenario, SolverConfig

log = logging.getLogger(__name__)


@dataclass
class DualState:
    """Multipliers for the per-position caps.

    ``mu``/``lam`` are the CPU/power multipliers of the closed-form
    allocations. ``beta``/``gamma`` belong to the connection subproblem and
    price the cap-normalized constraints ``sum f / f_max <= 1`` and
    ``sum p / p_max <= 1``, so they are measured in seconds.
    """

    mu: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    step0: float = 1.0

    @classmethod
    def zeros(cls, m, step0=1.0):
        z = np.zeros(m)
        return cls(mu=z.copy(), lam=z.copy(), beta=z.copy(), gamma=z.copy(), step0=step0)


@dataclass(frozen=True, eq=False)
class ModeCosts:
    h1: np.ndarray  # latency if executed locally
    h2: np.ndarray  # latency if offloaded


# --- closed-form continuous blocks ------------------------------------------

def split_budget(weights, cap):
    """``cap * w_i / sum(w)``; all-zero weights get nothing."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        return np.zeros_like(w)
    return cap * w / total


def _column_split(connect, weights, cap):
    """Per-column ``split_budget`` over the devices connected to each column."""
    w = connect * weights
    totals = w.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(w > 0, cap * w / np.where(totals > 0, totals, 1.0), 0.0)
    return out


def allocate_uav_cpu(s: Scenario, connect, offload) -> np.ndarray:
    rho = np.asarray(offload, dtype=float)
    w = np.sqrt(s.task_cycles) * rho
    return _column_split(np.asarray(connect, dtype=float), w[:, None], s.budget.cpu_max_hz)


def allocate_charging(s: Scenario, table: ChannelTable, connect, offload) -> np.ndarray:
    a_coeff = demand_matrix(s, table, offload)
    return _column_split(np.asarray(connect, dtype=float), np.sqrt(a_coeff), s.budget.power_max_w)


def cpu_multipliers(s: Scenario, connect, offload) -> np.ndarray:
    """Optimal CPU-cap multipliers ``(sum sqrt(F) / f_max)^2`` per position."""
    w = np.asarray(connect, dtype=float) * (np.sqrt(s.task_cycles) * np.asarray(offload, float))[:, None]
    return (w.sum(axis=0) / s.budget.cpu_max_hz) ** 2


def power_multipliers(s: Scenario, table: ChannelTable, connect, offload) -> np.ndarray:
    w = np.asarray(connect, dtype=float) * np.sqrt(demand_matrix(s, table, offload))
    return (w.sum(axis=0) / s.budget.power_max_w) ** 2


def complete_allocation(s: Scenario, table: ChannelTable, connect, offload) -> Allocation:
    """Allocation with budget-tight CPU and charging splits for fixed binaries."""
    connect = np.asarray(connect, dtype=np.int8)
    offload = np.asarray(offload, dtype=np.int8)
    return Allocation(
        connect=connect.copy(),
        offload=offload.copy(),
        cpu_share_hz=allocate_uav_cpu(s, connect, offload),
        charge_w=allocate_charging(s, table, connect, offload),
    )


# --- trial values: what device i would get if it joined column j ------------

def trial_cpu_shares(s: Scenario, connect, offload) -> np.ndarray:
    """(N, M) CPU share device i would receive offloading at j, others fixed."""
    a = np.asarray(connect, dtype=float)
    rho = np.asarray(offload, dtype=float)
    sq = np.sqrt(s.task_cycles)
    col = (a * (sq * rho)[:, None]).sum(axis=0)
    others = col[None, :] - a * (sq * rho)[:, None]
    return s.budget.cpu_max_hz * sq[:, None] / (others + sq[:, None])


def trial_charges(s: Scenario, table: ChannelTable, connect, offload) -> np.ndarray:
    """(N, M) charging power device i would receive at j, others fixed."""
    a = np.asarray(connect, dtype=float)
    sq = np.sqrt(demand_matrix(s, table, offload))
    col = (a * sq).sum(axis=0)
    others = col[None, :] - a * sq
    denom = others + sq
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sq > 0, s.budget.power_max_w * sq / np.where(denom > 0, denom, 1.0), 0.0)


# --- offloading decision -----------------------------------------------------

def mode_costs(s: Scenario, table: ChannelTable, alloc: Allocation) -> ModeCosts:
    """Latency of each device in local mode (h1) and offload mode (h2).

    Both use the device's current charging power and, for h2, its current
    CPU share at the connected position.
    """
    idx = np.arange(s.n)
    pos = alloc.position_of
    p = alloc.charge_w[idx, pos]
    f_o = alloc.cpu_share_hz[idx, pos]
    for arr, name in ((p, "charging"), (f_o, "cpu_share")):
        bad = np.flatnonzero(arr <= 0)
        if bad.size:
            i = int(bad[0])
            raise InfeasibleError(name, device=i, position=int(pos[i]),
                                  detail="mode costs need a positive value at the connected position")
    ph = s.physics
    g = table.gain[idx, pos]
    harvest = ph.eh_efficiency * p * g
    t_local = s.task_cycles / s.local_freq
    e_local = s.capacitance * s.task_cycles * s.local_freq ** (ph.cpu_exponent - 1.0)
    t_tr = tx_time(s.task_bits, table.rate_bps[idx, pos])
    h1 = e_local / harvest + t_local
    h2 = s.uplink_power * t_tr / harvest + s.task_cycles / f_o + t_tr
    return ModeCosts(h1=h1, h2=h2)


def _with_trial_shares(s: Scenario, alloc: Allocation) -> Allocation:
    """Give every connected local device the CPU share it would get by offloading."""
    idx = np.arange(s.n)
    pos = alloc.position_of
    shares = alloc.cpu_share_hz.copy()
    missing = shares[idx, pos] <= 0
    if np.any(missing):
        trial = trial_cpu_shares(s, alloc.connect, alloc.offload)
        shares[idx[missing], pos[missing]] = trial[idx[missing], pos[missing]]
    return Allocation(alloc.connect, alloc.offload, shares, alloc.charge_w)


def decide_offloading(s: Scenario, table: ChannelTable, alloc: Allocation,
                      costs: ModeCosts | None = None) -> np.ndarray:
    """Binary offload vector for fixed connections, CPU shares and charging.

    Every device first picks its cheaper mode (ties go to offloading). Then,
    position by position, while the offloaders overrun the UAV CPU cap the
    offloader with the smallest positive advantage ``h1 - h2`` is sent back
    to local execution (lowest index on ties).
    """
    alloc = _with_trial_shares(s, alloc)
    if costs is None:
        costs = mode_costs(s, table, alloc)
    diff = costs.h1 - costs.h2
    rho = (diff >= 0).astype(np.int8)

    a = alloc.connect.astype(bool)
    shares = alloc.cpu_share_hz
    limit = s.budget.cpu_max_hz * (1 + CAP_RTOL)
    for j in range(s.m):
        members = a[:, j]
        while np.sum(shares[:, j] * (rho * members)) > limit:
            cand = np.flatnonzero(members & (rho == 1))
            pos_adv = cand[diff[cand] > 0]
            pool = pos_adv if pos_adv.size else cand
            k = int(pool[np.argmin(diff[pool])])
            rho[k] = 0
    return rho


# --- connection management ---------------------------------------------------

def latency_matrix(s: Scenario, table: ChannelTable, offload, f_trial, p_trial) -> np.ndarray:
    """(N, M) own latency of device i if connected at j with the given trial values."""
    rho = np.asarray(offload, dtype=float)[:, None]
    a_coeff = demand_matrix(s, table, offload)
    with np.errstate(divide="ignore", invalid="ignore"):
        eh = np.where(a_coeff > 0, a_coeff / p_trial, 0.0)
        comp = np.where(rho > 0, s.task_cycles[:, None] / np.where(f_trial > 0, f_trial, np.inf), 0.0)
    local = (1.0 - rho) * (s.task_cycles / s.local_freq)[:, None]
    tx = rho * tx_time(s.task_bits[:, None], table.rate_bps)
    return eh + local + rho * comp + tx


def connection_cost(i, j, dual: DualState, s: Scenario, table: ChannelTable, offload,
                    f_trial, p_trial) -> float:
    """Lagrangian cost of connecting device ``i`` at position ``j``."""
    raw = latency_matrix(s, table, offload, f_trial, p_trial)[i, j]
    rho_i = float(offload[i])
    return float(raw + dual.beta[j] * rho_i * f_trial[i, j] / s.budget.cpu_max_hz
                 + dual.gamma[j] * p_trial[i, j] / s.budget.power_max_w)


def connection_costs(s: Scenario, table: ChannelTable, offload, f_trial, p_trial,
                     dual: DualState) -> np.ndarray:
    rho = np.asarray(offload, dtype=float)[:, None]
    raw = latency_matrix(s, table, offload, f_trial, p_trial)
    return (raw + dual.beta[None, :] * rho * f_trial / s.budget.cpu_max_hz
            + dual.gamma[None, :] * p_trial / s.budget.power_max_w)


@dataclass
class ConnectionResult:
    connect: np.ndarray
    dual: DualState
    iterations: int
    dual_infeasible: bool
    objective_trace: list = field(default_factory=list)


def manage_connections(s: Scenario, table: ChannelTable, alloc: Allocation,
                       cfg: SolverConfig, evaluate=None) -> ConnectionResult:
    """Reassign devices to hover positions with offload decisions fixed.

    Each pass prices the CPU and charging caps with ``beta``/``gamma``,
    computes every device's trial share at every position given the
    previous assignment, connects each device to its cheapest position and
    takes a projected subgradient ascent step on the multipliers. The loop
    stops once the objective moves less than ``cfg.eps_inner`` at a
    cap-feasible assignment, or after ``cfg.k_max`` passes. The best
    assignment seen (including the incoming one) is returned, so the
    objective never increases.

    ``evaluate(connect) -> float`` scores an assignment; by default it is
    the total latency with closed-form CPU and charging splits.
    """
    rho = alloc.offload.astype(np.int8)
    if evaluate is None:
        def evaluate(conn):
            return objective(s, table, complete_allocation(s, table, conn, rho))

    dual = DualState.zeros(s.m, cfg.step0)
    current = alloc.connect.astype(np.int8)
    best_conn, best_obj = current.copy(), evaluate(current)
    trace = [best_obj]
    if s.m == 1:
        return ConnectionResult(current, dual, 0, False, trace)

    f_cap, p_cap = s.budget.cpu_max_hz, s.budget.power_max_w
    feasible = False
    prev_obj = best_obj
    k = 0
    idx = np.arange(s.n)
    for k in range(1, int(cfg.k_max) + 1):
        f_trial = trial_cpu_shares(s, current, rho) * rho[:, None]
        p_trial = trial_charges(s, table, current, rho)
        h = connection_costs(s, table, rho, f_trial, p_trial, dual)
        pos = np.argmin(h, axis=1)
        nxt = np.zeros_like(current)
        nxt[idx, pos] = 1

        resid_f = (nxt * f_trial).sum(axis=0) / f_cap - 1.0
        resid_p = (nxt * p_trial).sum(axis=0) / p_cap - 1.0
        feasible = bool(np.all(resid_f <= CAP_RTOL) and np.all(resid_p <= CAP_RTOL))

        step = cfg.step0 / math.sqrt(k)
        dual.beta = np.maximum(dual.beta + step * resid_f, 0.0)
        dual.gamma = np.maximum(dual.gamma + step * resid_p, 0.0)

        obj = evaluate(nxt)
        trace.append(obj)
        if obj < best_obj:
            best_obj, best_conn = obj, nxt.copy()
        log.debug("conn pass %d obj=%.9g feasible=%s beta=%s gamma=%s",
                  k, obj, feasible, dual.beta, dual.gamma)
        current = nxt
        if feasible and abs(obj - prev_obj) < cfg.eps_inner:
            break
        prev_obj = obj

    dual.mu = cpu_multipliers(s, best_conn, rho)
    dual.lam = power_multipliers(s, table, best_conn, rho)
    return ConnectionResult(best_conn, dual, k, not feasible, trace)
