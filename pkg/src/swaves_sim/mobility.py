"""User mobility and BS attachment.

Movement is a memory-tunable Gauss-Markov process: speed and heading each
relax toward a per-user mean (mean heading = the user's initial random
heading) with autocorrelation alpha per step,

    v_t = a v_{t-1} + (1-a) v_bar + sqrt(1-a^2) * N(0, sigma_v)
    th_t = a th_{t-1} + (1-a) th_bar + sqrt(1-a^2) * N(0, sigma_th)

then the position advances v_t * dt along th_t. Walls reflect: position
mirrors back inside and both the heading and the mean heading flip on the
offending axis (flipping only the instantaneous heading lets the mean drag
users back into the wall).

Attachment follows an A3-style rule: a handover fires after the strongest
non-serving BS has exceeded the serving RSRP by `hysteresis_db` for
`ttr_s` consecutively (same candidate throughout; a candidate change resets
the timer). After a handover the old BS stays usable for exactly one control
step (DAPS), so there is no hard connectivity gap.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import radio
from .rngs import stream


@dataclass(frozen=True)
class MobilityConfig:
    alpha: float = 0.5
    mean_speed_mps: float = 1.4
    sigma_v: float = 0.5
    sigma_theta: float = 0.3
    hysteresis_db: float = 2.0
    ttr_s: float = 0.5

    @classmethod
    def from_config(cls, cfg) -> "MobilityConfig":
        return cls(
            alpha=cfg["mobility.alpha"],
            mean_speed_mps=cfg["mobility.mean_speed_mps"],
            sigma_v=cfg["mobility.sigma_v"],
            sigma_theta=cfg["mobility.sigma_theta"],
            hysteresis_db=cfg["mobility.hysteresis_db"],
            ttr_s=cfg["mobility.ttr_s"],
        )


@dataclass
class UserState:
    user: int
    x: float
    y: float
    speed_mps: float
    direction_rad: float
    mean_speed_mps: float
    mean_direction_rad: float
    serving_bs: int = -1
    daps_old_bs: int = -1
    a3_candidate: int = -1
    a3_timer_s: float = 0.0


def gauss_markov_step(
    u: UserState,
    alpha: float,
    dt_s: float,
    rng: np.random.Generator,
    sigma_v: float = 0.5,
    sigma_theta: float = 0.3,
    area_m: float = 1200.0,
) -> UserState:
    """One movement step (speed/heading update, then advance, then reflect)."""
    noise = math.sqrt(max(0.0, 1.0 - alpha * alpha))
    v_rnd, th_rnd = rng.standard_normal(2)
    u.speed_mps = max(
        0.0,
        alpha * u.speed_mps + (1 - alpha) * u.mean_speed_mps + noise * sigma_v * v_rnd,
    )
    u.direction_rad = (
        alpha * u.direction_rad
        + (1 - alpha) * u.mean_direction_rad
        + noise * sigma_theta * th_rnd
    )
    u.x += u.speed_mps * dt_s * math.cos(u.direction_rad)
    u.y += u.speed_mps * dt_s * math.sin(u.direction_rad)

    for _ in range(8):  # a tiny step can cross at most a corner; loop for safety
        if u.x < 0.0:
            u.x = -u.x
            u.direction_rad = math.pi - u.direction_rad
            u.mean_direction_rad = math.pi - u.mean_direction_rad
        elif u.x > area_m:
            u.x = 2.0 * area_m - u.x
            u.direction_rad = math.pi - u.direction_rad
            u.mean_direction_rad = math.pi - u.mean_direction_rad
        elif u.y < 0.0:
            u.y = -u.y
            u.direction_rad = -u.direction_rad
            u.mean_direction_rad = -u.mean_direction_rad
        elif u.y > area_m:
            u.y = 2.0 * area_m - u.y
            u.direction_rad = -u.direction_rad
            u.mean_direction_rad = -u.mean_direction_rad
        else:
            break
    return u


def update_attachment(
    u: UserState,
    model,
    rc: radio.RadioConfig,
    fading_draws: np.ndarray,
    hysteresis_db: float,
    ttr_s: float,
    dt_s: float,
) -> UserState:
    """Apply one control step of the A3 + time-to-reach rule.

    fading_draws: one |h|^2 gain per BS for this step. The caller detects a
    fired handover by watching serving_bs / daps_old_bs.
    """
    u.daps_old_bs = -1
    dists = np.hypot(
        model.bs_positions[:, 0] - u.x, model.bs_positions[:, 1] - u.y
    )
    rsrp = radio.rsrp_dbm(rc, dists, fading_draws)
    serving_rsrp = rsrp[u.serving_bs]
    rsrp_masked = rsrp.copy()
    rsrp_masked[u.serving_bs] = -np.inf
    best = int(np.argmax(rsrp_masked))
    if rsrp_masked[best] > serving_rsrp + hysteresis_db:
        if best == u.a3_candidate:
            u.a3_timer_s += dt_s
        else:
            u.a3_candidate = best
            u.a3_timer_s = dt_s
        if u.a3_timer_s + 1e-12 >= ttr_s:
            u.daps_old_bs = u.serving_bs
            u.serving_bs = best
            u.a3_candidate = -1
            u.a3_timer_s = 0.0
    else:
        u.a3_candidate = -1
        u.a3_timer_s = 0.0
    return u


@dataclass
class MobilityTrace:
    """Pre-generated positions/kinematics/attachment for every (step, user)."""

    dt_s: float
    mean_speed_mps: float
    x: np.ndarray  # (n_steps, n_users)
    y: np.ndarray
    speed: np.ndarray
    direction: np.ndarray
    mean_direction: np.ndarray
    serving: np.ndarray  # int16
    daps_old: np.ndarray  # int16, -1 = none

    @property
    def n_steps(self) -> int:
        return self.x.shape[0]

    @property
    def n_users(self) -> int:
        return self.x.shape[1]

    def hash_hex(self) -> str:
        h = hashlib.sha256()
        for arr in (
            self.x,
            self.y,
            self.speed,
            self.direction,
            self.mean_direction,
            self.serving,
            self.daps_old,
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def user_state_at(self, k: int, user: int) -> UserState:
        return UserState(
            user=user,
            x=float(self.x[k, user]),
            y=float(self.y[k, user]),
            speed_mps=float(self.speed[k, user]),
            direction_rad=float(self.direction[k, user]),
            mean_speed_mps=self.mean_speed_mps,
            mean_direction_rad=float(self.mean_direction[k, user]),
            serving_bs=int(self.serving[k, user]),
        )


def generate_trace(
    model,
    rc: radio.RadioConfig,
    mcfg: MobilityConfig,
    n_users: int,
    n_steps: int,
    dt_s: float,
    seed: int,
    area_m: float,
) -> MobilityTrace:
    """Walk every user independently (own seeded stream) for n_steps.

    The trace is strategy-independent by construction: placement decisions
    never feed back into movement or attachment.
    """
    shape = (n_steps, n_users)
    x = np.zeros(shape)
    y = np.zeros(shape)
    speed = np.zeros(shape)
    direction = np.zeros(shape)
    mean_dir = np.zeros(shape)
    serving = np.full(shape, -1, dtype=np.int16)
    daps = np.full(shape, -1, dtype=np.int16)

    for uid in range(n_users):
        rng = stream(seed, "trace", uid)
        ux, uy = rng.uniform(0.0, area_m, size=2)
        heading = rng.uniform(-math.pi, math.pi)
        u = UserState(
            user=uid,
            x=ux,
            y=uy,
            speed_mps=mcfg.mean_speed_mps,
            direction_rad=heading,
            mean_speed_mps=mcfg.mean_speed_mps,
            mean_direction_rad=heading,
        )
        # initial attachment: strongest RSRP under the first fading draw
        fading = radio.sample_fading(rng, size=model.n_bs)
        dists = np.hypot(
            model.bs_positions[:, 0] - u.x, model.bs_positions[:, 1] - u.y
        )
        u.serving_bs = int(np.argmax(radio.rsrp_dbm(rc, dists, fading)))

        for k in range(n_steps):
            if k > 0:
                gauss_markov_step(
                    u,
                    mcfg.alpha,
                    dt_s,
                    rng,
                    sigma_v=mcfg.sigma_v,
                    sigma_theta=mcfg.sigma_theta,
                    area_m=area_m,
                )
                fading = radio.sample_fading(rng, size=model.n_bs)
                update_attachment(
                    u, model, rc, fading, mcfg.hysteresis_db, mcfg.ttr_s, dt_s
                )
            x[k, uid] = u.x
            y[k, uid] = u.y
            speed[k, uid] = u.speed_mps
            direction[k, uid] = u.direction_rad
            mean_dir[k, uid] = u.mean_direction_rad
            serving[k, uid] = u.serving_bs
            daps[k, uid] = u.daps_old_bs

    return MobilityTrace(
        dt_s=dt_s,
        mean_speed_mps=mcfg.mean_speed_mps,
        x=x,
        y=y,
        speed=speed,
        direction=direction,
        mean_direction=mean_dir,
        serving=serving,
        daps_old=daps,
    )


def rollout_positions(
    u: UserState,
    alpha: float,
    dt_s: float,
    n_steps: int,
    n_paths: int,
    rng: np.random.Generator,
    sigma_v: float,
    sigma_theta: float,
    area_m: float,
    eval_every: int = 1,
) -> np.ndarray:
    """Monte Carlo futures of one user: (n_paths, n_evals, 2) positions.

    Same dynamics as gauss_markov_step, vectorized across paths; positions
    are recorded every `eval_every` steps (the forecaster's coarser cadence).
    """
    noise = math.sqrt(max(0.0, 1.0 - alpha * alpha))
    v = np.full(n_paths, u.speed_mps)
    th = np.full(n_paths, u.direction_rad)
    mth = np.full(n_paths, u.mean_direction_rad)
    x = np.full(n_paths, u.x)
    y = np.full(n_paths, u.y)
    n_evals = n_steps // eval_every
    out = np.empty((n_paths, n_evals, 2))
    e = 0
    for k in range(1, n_steps + 1):
        draws = rng.standard_normal((2, n_paths))
        v = alpha * v + (1 - alpha) * u.mean_speed_mps + noise * sigma_v * draws[0]
        np.maximum(v, 0.0, out=v)
        th = alpha * th + (1 - alpha) * mth + noise * sigma_theta * draws[1]
        x = x + v * dt_s * np.cos(th)
        y = y + v * dt_s * np.sin(th)
        for _ in range(2):
            m = x < 0.0
            if m.any():
                x[m] = -x[m]
                th[m] = math.pi - th[m]
                mth[m] = math.pi - mth[m]
            m = x > area_m
            if m.any():
                x[m] = 2.0 * area_m - x[m]
                th[m] = math.pi - th[m]
                mth[m] = math.pi - mth[m]
            m = y < 0.0
            if m.any():
                y[m] = -y[m]
                th[m] = -th[m]
                mth[m] = -mth[m]
            m = y > area_m
            if m.any():
                y[m] = 2.0 * area_m - y[m]
                th[m] = -th[m]
                mth[m] = -mth[m]
        if k % eval_every == 0:
            out[:, e, 0] = x
            out[:, e, 1] = y
            e += 1
    return out
