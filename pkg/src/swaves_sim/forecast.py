"""Demand forecasting: where will each VNF's users be connected soon?

Per BS and location, P(b|l) is estimated once on a spatial grid as the
fraction of fading draws under which b has the strongest RSRP at l. A user's
probability of NOT connecting to b over the horizon is then a Monte Carlo
mean over sampled future paths of prod_i (1 - P(b | l_i)), with the product
evaluated at the forecaster's coarse cadence. Per-VNF demand at b combines
its users:  P_vb = 1 - prod_u P_not(u, b).

The oracle variant replaces all of this with the realized future attachments
from the trace (0/1 entries); static/reactive use the instantaneous
attachment indicator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mobility, radio
from .rngs import stream


@dataclass(frozen=True)
class ForecastConfig:
    horizon_s: float = 5.0
    period_s: float = 1.0
    step_s: float = 1.0
    n_paths: int = 64
    n_fading: int = 128
    grid_n: int = 64
    oracle_horizon_s: float = 25.0

    @classmethod
    def from_config(cls, cfg) -> "ForecastConfig":
        return cls(
            horizon_s=cfg["forecast.horizon_s"],
            period_s=cfg["forecast.period_s"],
            step_s=cfg["forecast.step_s"],
            n_paths=cfg["forecast.n_paths"],
            n_fading=cfg["forecast.n_fading"],
            grid_n=cfg["forecast.grid_n"],
            oracle_horizon_s=cfg["forecast.oracle_horizon_s"],
        )


@dataclass(frozen=True)
class DemandForecast:
    """P_vb matrix: row = VNF, column = BS/EC cell. Oracle entries are 0/1."""

    t_s: float
    kind: str  # "swaves" | "oracle" | "indicator"
    p: np.ndarray  # (n_vnfs, n_bs)


def connection_likelihood(
    model, rc: radio.RadioConfig, location, n_fading: int, rng: np.random.Generator
) -> np.ndarray:
    """P(b|l): per-BS probability of being the strongest cell at `location`."""
    dists = np.hypot(
        model.bs_positions[:, 0] - location[0], model.bs_positions[:, 1] - location[1]
    )
    # fading is multiplicative, so comparing linear rx power is enough
    atten = 10.0 ** (-radio.path_loss_db(rc, dists) / 10.0)
    draws = rng.exponential(1.0, size=(n_fading, len(dists)))
    winners = np.argmax(draws * atten, axis=1)
    return np.bincount(winners, minlength=len(dists)) / float(n_fading)


class LikelihoodGrid:
    """P(b|l) table over square cells covering the area (built once per run)."""

    def __init__(self, model, rc, area_m: float, grid_n: int, n_fading: int, rng):
        self.grid_n = grid_n
        self.cell_m = area_m / grid_n
        table = np.empty((grid_n * grid_n, model.n_bs), dtype=np.float32)
        for iy in range(grid_n):
            cy = (iy + 0.5) * self.cell_m
            for ix in range(grid_n):
                cx = (ix + 0.5) * self.cell_m
                table[iy * grid_n + ix] = connection_likelihood(
                    model, rc, (cx, cy), n_fading, rng
                )
        self.table = table

    def lookup(self, positions: np.ndarray) -> np.ndarray:
        """positions (..., 2) -> P(b|l) rows (..., n_bs)."""
        ix = np.clip(
            (positions[..., 0] / self.cell_m).astype(np.int64), 0, self.grid_n - 1
        )
        iy = np.clip(
            (positions[..., 1] / self.cell_m).astype(np.int64), 0, self.grid_n - 1
        )
        return self.table[iy * self.grid_n + ix]


def estimate_not_connecting(sample_paths, likelihood_of, n_samples: int, rng) -> np.ndarray:
    """Monte Carlo of prod_i (1 - P(b|l_i)) over sampled paths, for every b.

    sample_paths(rng, n) must return n paths of horizon locations in whatever
    form likelihood_of understands; likelihood_of maps them to (n, steps,
    n_bs) probabilities. Toy models plug in enumerable path samplers here.
    """
    paths = sample_paths(rng, n_samples)
    p = likelihood_of(paths)
    return np.prod(1.0 - p, axis=1).mean(axis=0)


def prob_not_connecting(
    u: mobility.UserState,
    grid: LikelihoodGrid,
    fc: ForecastConfig,
    mcfg: mobility.MobilityConfig,
    dt_s: float,
    area_m: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """P(user not connected to b within the horizon), for every b."""
    eval_every = max(1, round(fc.step_s / dt_s))
    n_steps = round(fc.horizon_s / dt_s)

    def sample(rng_, n):
        return mobility.rollout_positions(
            u,
            mcfg.alpha,
            dt_s,
            n_steps,
            n,
            rng_,
            sigma_v=mcfg.sigma_v,
            sigma_theta=mcfg.sigma_theta,
            area_m=area_m,
            eval_every=eval_every,
        )

    return estimate_not_connecting(sample, grid.lookup, fc.n_paths, rng)


def demand_probability(not_connecting_by_user: np.ndarray) -> np.ndarray:
    """Combine users of one VNF: P_vb = 1 - prod_u P_not(u, b).

    not_connecting_by_user: (n_users_of_vnf, n_bs). Empty -> zeros.
    """
    if len(not_connecting_by_user) == 0:
        return np.zeros(0)
    return 1.0 - np.prod(not_connecting_by_user, axis=0)


class Forecaster:
    """SWAVES forecaster bound to one run (grid + per-user streams)."""

    def __init__(self, model, rc, fc, mcfg, dt_s, area_m, n_vnfs, vnf_of, seed):
        self.model = model
        self.rc = rc
        self.fc = fc
        self.mcfg = mcfg
        self.dt_s = dt_s
        self.area_m = area_m
        self.n_vnfs = n_vnfs
        self.vnf_of = vnf_of
        self.grid = LikelihoodGrid(
            model, rc, area_m, fc.grid_n, fc.n_fading, stream(seed, "likelihood")
        )
        self._user_rngs = [
            stream(seed, "forecast", uid) for uid in range(len(vnf_of))
        ]

    def refresh(self, trace: mobility.MobilityTrace, k_now: int, t_s: float) -> DemandForecast:
        n_bs = self.model.n_bs
        p = np.zeros((self.n_vnfs, n_bs))
        not_conn = np.ones((len(self.vnf_of), n_bs))
        for uid in range(len(self.vnf_of)):
            u = trace.user_state_at(k_now, uid)
            not_conn[uid] = prob_not_connecting(
                u, self.grid, self.fc, self.mcfg, self.dt_s, self.area_m,
                self._user_rngs[uid],
            )
        for v in range(self.n_vnfs):
            members = not_conn[self.vnf_of == v]
            if len(members):
                p[v] = demand_probability(members)
        return DemandForecast(t_s=t_s, kind="swaves", p=p)


def oracle_forecast(
    trace: mobility.MobilityTrace,
    vnf_of: np.ndarray,
    k_now: int,
    horizon_steps: int,
    n_vnfs: int,
    n_bs: int,
    t_s: float,
) -> DemandForecast:
    """Exact 0/1 demand from realized future attachments in (now, now+h].

    The window is clipped at the end of the trace.
    """
    hi = min(k_now + horizon_steps, trace.n_steps - 1)
    p = np.zeros((n_vnfs, n_bs))
    window = trace.serving[k_now + 1 : hi + 1]
    for uid, v in enumerate(vnf_of):
        for b in np.unique(window[:, uid]):
            if b >= 0:
                p[v, b] = 1.0
    return DemandForecast(t_s=t_s, kind="oracle", p=p)


def current_demand(
    serving_now: np.ndarray, vnf_of: np.ndarray, n_vnfs: int, n_bs: int, t_s: float
) -> DemandForecast:
    """Instantaneous attachment indicator (static/reactive demand input)."""
    p = np.zeros((n_vnfs, n_bs))
    for uid, v in enumerate(vnf_of):
        b = serving_now[uid]
        if b >= 0:
            p[v, int(b)] = 1.0
    return DemandForecast(t_s=t_s, kind="indicator", p=p)
