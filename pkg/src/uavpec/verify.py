"""Independent numeric oracles and invariant checks.

The closed-form CPU and charging splits are checked against two numeric
solvers that know nothing about their structure: projected gradient descent
on the capped simplex and a successively refined grid search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelTable
from .energymodel import CAP_RTOL, Allocation, demand_matrix, energy_balance, total_latency
from .errors import InfeasibleError
from .model import PhysicsConfig, Scenario, TaskRanges, generate_scenario
from .subsolvers import allocate_charging, allocate_uav_cpu


def split_objective(weights, x):
    """``sum w_i / x_i`` with +inf outside the positive orthant."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(x <= 0):
        return np.inf
    return float(np.sum(w / x))


def project_capped_simplex(v):
    """Euclidean projection onto ``{y >= 0, sum(y) <= 1}``."""
    v = np.asarray(v, dtype=float)
    z = np.maximum(v, 0.0)
    if z.sum() <= 1.0:
        return z
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - (css - 1.0) / ks > 0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def projected_gradient_split(weights, cap, tol=1e-12, max_iter=200_000):
    """Minimize ``sum w_i / x_i`` s.t. ``x >= 0, sum x <= cap`` numerically.

    Works on normalized variables ``y = x / cap`` from the uniform point,
    with backtracking (halving) line search; stops once an accepted step
    lowers the objective by less than ``tol`` relative.
    """
    w = np.asarray(weights, dtype=float)
    scale = w.max()
    c = w / scale
    y = np.full(w.size, 1.0 / w.size)
    fy = np.sum(c / y)
    t = 1e-3
    for _ in range(max_iter):
        grad = -c / y ** 2
        while True:
            y_new = project_capped_simplex(y - t * grad)
            f_new = split_objective(c, y_new)
            step = y_new - y
            if f_new <= fy + grad @ step + (step @ step) / (2 * t):
                break
            t *= 0.5
            if t < 1e-300:
                return cap * y
        decrease = fy - f_new
        y, fy = y_new, f_new
        if decrease < tol * fy:
            break
        t *= 2.0
    return cap * y


def grid_split(weights, cap, rounds=45):
    """Minimize ``sum w_i / x_i`` on ``sum x = cap`` by a shrinking grid.

    The first k-1 fractions are gridded around the incumbent and the last
    takes the remainder; the window halves every round. Meant for k <= 4.
    """
    w = np.asarray(weights, dtype=float)
    k = w.size
    if k == 1:
        return np.array([float(cap)])
    pts = {2: 41, 3: 21, 4: 11}.get(k, 7)
    center = np.full(k - 1, 1.0 / k)
    half = 0.5
    c = w / w.max()
    offsets = np.linspace(-1.0, 1.0, pts)
    best = None
    for _ in range(rounds):
        axes = [center[d] + half * offsets for d in range(k - 1)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k - 1)
        last = 1.0 - mesh.sum(axis=1, keepdims=True)
        y = np.hstack([mesh, last])
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(np.all(y > 0, axis=1), np.sum(c / np.where(y > 0, y, 1.0), axis=1), np.inf)
        b = int(np.argmin(vals))
        best = y[b]
        center = mesh[b]
        half *= 0.5
    return cap * best


def kkt_oracle_cpu(task_cycles, f_max):
    """Numeric UAV CPU split minimizing total compute time ``sum F_i / f_i``."""
    return projected_gradient_split(task_cycles, f_max)


def kkt_oracle_power(demands, p_max):
    """Numeric charging split minimizing total harvest time ``sum A_i / p_i``."""
    return projected_gradient_split(demands, p_max)


@dataclass(frozen=True)
class OracleReport:
    label: str
    closed_form_objective: float
    numeric_objective: float
    relative_gap: float
    constraint_residuals: float  # relative cap slack of the closed form, sum(x)/cap - 1
    passed: bool


def compare_split(label, weights, closed, cap, numeric, tol=1e-6, cap_tol=1e-9) -> OracleReport:
    cf = split_objective(weights, closed)
    nu = split_objective(weights, numeric)
    gap = (nu - cf) / cf
    resid = float(np.sum(closed) / cap - 1.0)
    num_resid = float(np.sum(numeric) / cap - 1.0)
    ok = abs(gap) <= tol and abs(resid) <= cap_tol and num_resid <= 1e-9
    return OracleReport(label, cf, nu, gap, resid, ok)


def random_column(seed, max_devices=4):
    """A one-position scenario with 1..max_devices devices and a random offload vector."""
    rng = np.random.default_rng([seed, 0xC01])
    k = int(rng.integers(1, max_devices + 1))
    s = generate_scenario(k, 1, seed=int(seed), task_ranges=TaskRanges(), physics=PhysicsConfig())
    rho = rng.integers(0, 2, size=k).astype(np.int8)
    if not rho.any():
        rho[int(rng.integers(0, k))] = 1
    return s, rho


def column_reports(s: Scenario, table: ChannelTable, rho, seed_label="", tol=1e-6):
    """Closed-form vs both numeric oracles for the single position of ``s``."""
    conn = np.ones((s.n, 1), dtype=np.int8)
    reports = []
    off = np.flatnonzero(rho)
    f_closed = allocate_uav_cpu(s, conn, rho)[off, 0]
    weights = s.task_cycles[off]
    cap = s.budget.cpu_max_hz
    reports.append(compare_split(f"cpu/pgd {seed_label}", weights, f_closed, cap,
                                 kkt_oracle_cpu(weights, cap), tol))
    reports.append(compare_split(f"cpu/grid {seed_label}", weights, f_closed, cap,
                                 grid_split(weights, cap), tol))
    a_coeff = demand_matrix(s, table, rho)[:, 0]
    p_closed = allocate_charging(s, table, conn, rho)[:, 0]
    cap = s.budget.power_max_w
    reports.append(compare_split(f"power/pgd {seed_label}", a_coeff, p_closed, cap,
                                 kkt_oracle_power(a_coeff, cap), tol))
    reports.append(compare_split(f"power/grid {seed_label}", a_coeff, p_closed, cap,
                                 grid_split(a_coeff, cap), tol))
    return reports


def oracle_suite(n_instances=100, seed=0, tol=1e-6):
    from .channel import build_channel_table

    out = []
    for k in range(n_instances):
        s, rho = random_column(seed + k)
        out.extend(column_reports(s, build_channel_table(s), rho, f"#{seed + k}", tol))
    return out


def check_allocation(s: Scenario, table: ChannelTable, alloc: Allocation, rtol=1e-9) -> list[str]:
    """Every violated model constraint, as readable messages; empty when feasible."""
    issues = []
    a = np.asarray(alloc.connect)
    rho = np.asarray(alloc.offload)
    if a.shape != (s.n, s.m):
        return [f"connection matrix has shape {a.shape}, expected {(s.n, s.m)}"]
    if not np.all((a == 0) | (a == 1)):
        issues.append("connection matrix is not binary")
    for i in np.flatnonzero(a.sum(axis=1) != 1):
        issues.append(f"single-connection constraint violated, device {i}")
    if not np.all((rho == 0) | (rho == 1)):
        issues.append("offload vector is not binary")
    if np.any(alloc.cpu_share_hz < 0):
        issues.append("negative UAV CPU share")
    if np.any(alloc.charge_w < 0):
        issues.append("negative charging power")
    used_f = np.sum(rho[:, None] * a * alloc.cpu_share_hz, axis=0)
    for j in np.flatnonzero(used_f > s.budget.cpu_max_hz * (1 + rtol)):
        issues.append(f"UAV CPU cap violated, position {j}")
    used_p = np.sum(a * alloc.charge_w, axis=0)
    for j in np.flatnonzero(used_p > s.budget.power_max_w * (1 + rtol)):
        issues.append(f"charging cap violated, position {j}")
    if issues:
        return issues
    try:
        bd = total_latency(s, table, alloc)
    except InfeasibleError as exc:
        return [str(exc)]
    harvested, consumed = energy_balance(s, table, alloc, bd)
    for i in np.flatnonzero(np.abs(harvested - consumed) > rtol * np.maximum(consumed, 1e-300)):
        issues.append(f"energy balance violated, device {i}: harvested {harvested[i]:.6g} J, "
                      f"consumed {consumed[i]:.6g} J")
    return issues


def cap_tightness(s: Scenario, table: ChannelTable, alloc: Allocation):
    """Relative slack ``used / cap - 1`` of both caps at every position that has users."""
    a = alloc.connect.astype(float)
    rho = alloc.offload.astype(float)
    cpu_users = (a * rho[:, None]).sum(axis=0) > 0
    pow_users = (a * (demand_matrix(s, table, rho) > 0)).sum(axis=0) > 0
    f = np.sum(rho[:, None] * a * alloc.cpu_share_hz, axis=0) / s.budget.cpu_max_hz - 1.0
    p = np.sum(a * alloc.charge_w, axis=0) / s.budget.power_max_w - 1.0
    return f[cpu_users], p[pow_users]


__all__ = [
    "OracleReport", "check_allocation", "cap_tightness", "column_reports", "compare_split",
    "grid_split", "kkt_oracle_cpu", "kkt_oracle_power", "oracle_suite", "project_capped_simplex",
    "projected_gradient_split", "random_column", "split_objective", "CAP_RTOL",
]
