"""Wireless layer: empirical urban path loss, Rayleigh fading, Shannon rate.

Path loss uses the classic 1500-2000 MHz urban macro-cell regression
(small/medium city mobile-antenna correction, urban/suburban clutter term).
Received power multiplies in an exponential(1) fading gain |h|^2, and the
uplink service rate is the Shannon capacity of the resulting SNR, converted
to packets/s by the configured packet size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float = 40.0
    freq_mhz: float = 1800.0
    bs_height_m: float = 30.0
    ue_height_m: float = 1.5
    bandwidth_hz: float = 20e6
    noise_dbm: float = -91.99
    environment: str = "urban"
    min_distance_m: float = 10.0

    @classmethod
    def from_config(cls, cfg) -> "RadioConfig":
        bw = cfg["radio.bandwidth_hz"]
        # thermal noise floor + receiver noise figure
        noise_dbm = -174.0 + 10.0 * math.log10(bw) + cfg["radio.noise_figure_db"]
        return cls(
            tx_power_dbm=cfg["radio.tx_power_dbm"],
            freq_mhz=cfg["radio.freq_mhz"],
            bs_height_m=cfg["radio.bs_height_m"],
            ue_height_m=cfg["radio.ue_height_m"],
            bandwidth_hz=bw,
            noise_dbm=noise_dbm,
            environment=cfg["radio.environment"],
            min_distance_m=cfg["radio.min_distance_m"],
        )


def path_loss_db(rc: RadioConfig, distance_m):
    """Urban macro path loss in dB; distance is floored at rc.min_distance_m.

    Accepts scalars or arrays. Monotone non-decreasing in distance.
    """
    if not 1500.0 <= rc.freq_mhz <= 2000.0:
        raise ValueError(f"carrier {rc.freq_mhz} MHz outside model validity (1500-2000)")
    d_km = np.maximum(np.asarray(distance_m, dtype=float), rc.min_distance_m) / 1000.0
    f = rc.freq_mhz
    log_f = math.log10(f)
    log_hb = math.log10(rc.bs_height_m)
    a_hm = (1.1 * log_f - 0.7) * rc.ue_height_m - (1.56 * log_f - 0.8)
    c_m = 3.0 if rc.environment == "urban" else 0.0
    loss = (
        46.3
        + 33.9 * log_f
        - 13.82 * log_hb
        - a_hm
        + (44.9 - 6.55 * log_hb) * np.log10(d_km)
        + c_m
    )
    return loss if loss.shape else float(loss)


def sample_fading(rng: np.random.Generator, size=None):
    """Rayleigh power gain |h|^2 ~ Exponential(mean 1)."""
    return rng.exponential(1.0, size=size)


def _dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def received_power_w(rc: RadioConfig, distance_m, fading):
    """Linear received power: P_tx * |h|^2 / L_path."""
    loss_lin = 10.0 ** (np.asarray(path_loss_db(rc, distance_m)) / 10.0)
    return _dbm_to_w(rc.tx_power_dbm) * np.asarray(fading) / loss_lin


def shannon_rate_bps(rc: RadioConfig, rx_power_w):
    """B * log2(1 + SNR) in bit/s."""
    noise_w = _dbm_to_w(rc.noise_dbm)
    return rc.bandwidth_hz * np.log2(1.0 + np.asarray(rx_power_w) / noise_w)


def wireless_service_rate_pps(
    rc: RadioConfig, distance_m, fading, packet_size_bits: int
):
    """End-to-end uplink service rate in packets/s for given fading draw(s)."""
    rate = shannon_rate_bps(rc, received_power_w(rc, distance_m, fading))
    return rate / packet_size_bits


def rsrp_dbm(rc: RadioConfig, distance_m, fading):
    """Received power in dBm (handover measurements compare these)."""
    p = received_power_w(rc, distance_m, fading)
    return 10.0 * np.log10(np.maximum(p, 1e-300)) + 30.0
