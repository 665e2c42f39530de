"""Air-to-ground radio quantities per (device, hover position) pair.

Pathloss values are kept in dB, gains in linear scale; the only
conversions between the two go through :func:`db_to_linear` and
:func:`linear_to_db`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ChannelDomainError
from .model import ElevationConvention, Scenario

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def distance(w, q, altitude):
    """3-D distance between a ground point ``w`` and the UAV hovering above ``q``."""
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    horiz2 = np.sum((q - w) ** 2, axis=-1)
    return np.sqrt(horiz2 + altitude ** 2)


def free_space_pathloss_db(carrier_hz, c=SPEED_OF_LIGHT):
    return 20.0 * math.log10(carrier_hz) + 20.0 * math.log10(4.0 * math.pi / c)


def los_probability(theta_deg, a, b):
    """Sigmoid LoS probability; ``theta_deg`` is the elevation angle in degrees."""
    return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(theta_deg, dtype=float) - a)))


def elevation_deg(w, q, altitude, convention=ElevationConvention.HORIZONTAL):
    """Elevation angle of the UAV seen from the device, in degrees.

    HORIZONTAL uses arctan(H / horizontal distance) and returns 90 when the
    UAV is straight overhead. SLANT evaluates arctan(H / d) with the 3-D
    distance ``d``, which caps the angle at 45 degrees.
    """
    convention = ElevationConvention(convention)
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    horiz = np.sqrt(np.sum((q - w) ** 2, axis=-1))
    if convention is ElevationConvention.SLANT:
        d = np.sqrt(horiz ** 2 + altitude ** 2)
        return np.degrees(np.arctan(altitude / d))
    # arctan2 gives exactly 90 deg at zero horizontal offset
    return np.degrees(np.arctan2(altitude, horiz))


def los_nlos_pathloss_db(dist_m, carrier_hz, eta_db):
    return free_space_pathloss_db(carrier_hz) + 20.0 * np.log10(dist_m) + eta_db


def average_pathloss_db(p_los, pl_los_db, pl_nlos_db):
    return p_los * pl_los_db + (1.0 - p_los) * pl_nlos_db


def uplink_rate_bps(p_tx_w, sigma2_w, pathloss_db, bandwidth_hz):
    snr = p_tx_w / (sigma2_w * db_to_linear(pathloss_db))
    return bandwidth_hz * np.log2(1.0 + snr)


def channel_gain(g0_linear, dist_m):
    """WPT channel power gain ``g0 / d`` (reference distance 1 m)."""
    d = np.asarray(dist_m, dtype=float)
    if np.any(d < 1.0):
        raise ChannelDomainError(f"distance below the 1 m reference: min {float(np.min(d))!r}")
    return g0_linear / d


@dataclass(frozen=True)
class ChannelTable:
    """N x M matrices of distance, average pathloss, uplink rate and WPT gain."""

    dist_m: np.ndarray
    pathloss_db: np.ndarray
    rate_bps: np.ndarray
    gain: np.ndarray

    @property
    def n(self) -> int:
        return self.dist_m.shape[0]

    @property
    def m(self) -> int:
        return self.dist_m.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["device", "position", "dist_m", "pathloss_db", "rate_bps", "gain"])
            for i in range(self.n):
                for j in range(self.m):
                    writer.writerow([i, j] + [f"{float(v[i, j]):.12g}" for v in
                                              (self.dist_m, self.pathloss_db, self.rate_bps, self.gain)])


def build_channel_table(s: Scenario) -> ChannelTable:
    ph = s.physics
    w = s.device_xy[:, None, :]
    q = s.hover_xy[None, :, :]
    dist = distance(w, q, ph.altitude_m)
    theta = elevation_deg(w, q, ph.altitude_m, ph.elevation_convention)
    p_los = los_probability(theta, ph.los_a, ph.los_b)
    pl_los = los_nlos_pathloss_db(dist, ph.carrier_hz, ph.eta_los_db)
    pl_nlos = los_nlos_pathloss_db(dist, ph.carrier_hz, ph.eta_nlos_db)
    lam = average_pathloss_db(p_los, pl_los, pl_nlos)
    rate = uplink_rate_bps(s.uplink_power[:, None], ph.noise_power_w, lam, ph.bandwidth_hz)
    gain = channel_gain(ph.ref_gain, dist)
    for arr in (dist, lam, rate, gain):
        arr.setflags(write=False)
    return ChannelTable(dist_m=dist, pathloss_db=lam, rate_bps=rate, gain=gain)
