"""End-to-end delay and context-migration time.

A request crosses one wireless hop (M/M/1: service rate from the radio layer,
arrival rate = the user's own stream), pays per-node processing twice per
traversed node (request + response, |L|+1 nodes for |L| links), and queues at
every wired link (M/D/1: deterministic service, mean wait rho/(2 mu (1-rho))
on top of the 1/mu transmission slot).

Context migration replaces the wireless and per-packet terms with a bulk
transfer: V_mem bits through each link's bit rate, plus the same processing
and per-link queueing costs the transfer experiences.

Any unstable station (mu_u <= lambda_u, or rho >= 1 on a link) yields an
infinite total: the caller treats that as a deadline violation, never a crash.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INFINITE = math.inf


@dataclass(frozen=True)
class LinkLoad:
    """Offered load on one wired link at one instant."""

    arrival_rate_pps: float
    service_rate_pps: float
    service_rate_bps: float = 0.0

    @property
    def utilization(self) -> float:
        return self.arrival_rate_pps / self.service_rate_pps


@dataclass(frozen=True)
class DelayBreakdown:
    wireless_s: float
    processing_s: float
    wired_s: float

    @property
    def total_s(self) -> float:
        return self.wireless_s + self.processing_s + self.wired_s

    @property
    def unstable(self) -> bool:
        return math.isinf(self.total_s)


def _mm1_sojourn_s(mu_pps: float, lam_pps: float) -> float:
    if mu_pps <= lam_pps:
        return INFINITE
    return 1.0 / (mu_pps - lam_pps)


def _md1_link_s(load: LinkLoad) -> float:
    rho = load.utilization
    if rho >= 1.0:
        return INFINITE
    mu = load.service_rate_pps
    return 1.0 / mu + rho / (2.0 * mu * (1.0 - rho))


def processing_s(n_links: int, t_p_s: float) -> float:
    """Per-node processing, request and response: 2 (|L|+1) t_p."""
    return 2.0 * (n_links + 1) * t_p_s


def e2e_delay(
    mu_u_pps: float, lambda_u_pps: float, path: Sequence[LinkLoad], t_p_s: float
) -> DelayBreakdown:
    """Mean end-to-end delay of a request over one wireless hop + wired path."""
    wireless = _mm1_sojourn_s(mu_u_pps, lambda_u_pps)
    wired = 0.0
    for load in path:
        wired += _md1_link_s(load)
    return DelayBreakdown(wireless, processing_s(len(path), t_p_s), wired)


def migration_time(v_mem_bits: float, path: Sequence[LinkLoad], t_p_s: float) -> float:
    """Time to move a service context of v_mem_bits along a wired path.

    Empty path (same EC) costs nothing. Transmission uses bit rates, the
    queueing term uses packet rates.
    """
    if not path:
        return 0.0
    total = processing_s(len(path), t_p_s)
    for load in path:
        total += v_mem_bits / load.service_rate_bps + _md1_link_s(load)
    return total


def accumulate_link_loads(
    model, assignments: dict, user_rates, n_links: int | None = None
) -> list[LinkLoad]:
    """Per-link offered load for a set of routed users.

    assignments: user -> (serving BS index, assigned EC index); unassigned
    users are simply absent. user_rates: scalar pps for everyone, or a
    user -> pps map.
    """
    n = model.n_links if n_links is None else n_links
    lam = np.zeros(n)
    for user in sorted(assignments):
        bs, ec = assignments[user]
        rate = user_rates[user] if isinstance(user_rates, dict) else user_rates
        for idx in model.bs_to_ec_indices(bs, ec):
            lam[idx] += rate
    return [
        LinkLoad(float(lam[i]), link.rate_pps, link.rate_bps)
        for i, link in enumerate(model.links)
    ]


# --- array fast path (used by the engine; must agree with the ops above) ---


def link_wait_array_s(lam_pps: np.ndarray, mu_pps: np.ndarray) -> np.ndarray:
    """Per-link M/D/1 delay (transmission + queue) with inf where rho >= 1."""
    rho = lam_pps / mu_pps
    with np.errstate(divide="ignore", invalid="ignore"):
        wait = 1.0 / mu_pps + rho / (2.0 * mu_pps * (1.0 - rho))
    return np.where(rho >= 1.0, INFINITE, wait)


def path_delay_s(
    mu_u_pps: float,
    lambda_u_pps: float,
    path_idx: Sequence[int],
    link_wait_s: np.ndarray,
    t_p_s: float,
) -> float:
    """Total delay using a precomputed per-link wait table."""
    total = _mm1_sojourn_s(mu_u_pps, lambda_u_pps) + processing_s(len(path_idx), t_p_s)
    for i in path_idx:
        total += link_wait_s[i]
    return total
