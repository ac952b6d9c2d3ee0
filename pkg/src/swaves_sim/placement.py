"""Placement planning: per-EC lifecycle targets plus user-to-instance routing.

An epoch solves each EC independently. Instances that serve someone (attached
or mid-migration toward them) are pinned Running; instances mid-transition
keep their reserved footprint and cannot be redirected until the chain ends
(a replacement wish is queued instead). The remaining instances are assigned
lifecycle targets by an exact knapsack over the leftover capacity, maximizing

    score(v, state) = P_vb * readiness(state) - epsilon * share(state)

where readiness discounts a state by its remaining boot time toward Running
and share charges its resource footprint. Cells with P_vb below the drop
threshold are forced to Descriptor outright.

Users are then routed greedily in user-id order to the delay-minimizing
instance of their VNF among those Running or heading to Running, updating
wired link loads as each user lands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lifecycle import (
    ResourceVector,
    State,
    TransitionTable,
    footprint,
    reserved_footprint,
    route_peak_footprint,
)


@dataclass(frozen=True)
class PlacementConfig:
    strategy: str = "swaves"
    p_drop: float = 0.05
    epsilon: float = 0.01
    use_paused: bool = False
    reactive_neighbors: int = 6
    reactive_spread_p: float = 0.5

    @classmethod
    def from_config(cls, cfg) -> "PlacementConfig":
        return cls(
            strategy=cfg["placement.strategy"],
            p_drop=cfg["placement.p_drop"],
            epsilon=cfg["placement.epsilon"],
            use_paused=cfg["placement.use_paused"],
            reactive_neighbors=cfg["placement.reactive_neighbors"],
            reactive_spread_p=cfg["placement.reactive_spread_p"],
        )


@dataclass
class UserCtx:
    """Per-user snapshot the planner needs (engine fills this each epoch)."""

    uid: int
    vnf: int
    serving_bs: int
    mu_u_pps: float
    lambda_pps: float
    context_ec: Optional[int]  # established session, None before first attach
    pinned: bool = False  # mid-migration users keep their assignment


@dataclass
class PlacementPlan:
    targets: dict = field(default_factory=dict)  # (ec, vnf) -> State
    pendings: dict = field(default_factory=dict)  # (ec, vnf) -> State, queued
    assignments: dict = field(default_factory=dict)  # uid -> ec | None


def neighbor_table(model, k: int) -> np.ndarray:
    """k nearest other cells per BS, by BS position (row-sorted by distance)."""
    n = model.n_bs
    k = min(k, n - 1)
    out = np.zeros((n, k), dtype=np.int64)
    pos = model.bs_positions
    for b in range(n):
        d = np.hypot(pos[:, 0] - pos[b, 0], pos[:, 1] - pos[b, 1])
        d[b] = np.inf
        out[b] = np.argsort(d, kind="stable")[:k]
    return out


def spread_demand(p: np.ndarray, neighbors: np.ndarray, spread_p: float) -> np.ndarray:
    """Copy a damped echo of each demanded cell onto its nearest neighbors."""
    if spread_p <= 0.0 or neighbors.shape[1] == 0:
        return p
    out = p.copy()
    for v, b in zip(*np.nonzero(p)):
        for nb in neighbors[b]:
            out[v, nb] = max(out[v, nb], spread_p * p[v, b])
    return out


def _readiness(state: State, table: TransitionTable) -> float:
    boot = table.full_boot_s
    if boot <= 0.0:
        return 1.0
    return 1.0 - min(1.0, table.route_time_s(state, State.RUNNING) / boot)


def _share(state: State, r_v: ResourceVector, r_tot: ResourceVector) -> float:
    fp = footprint(state, r_v)
    return sum(f / t for f, t in zip(fp, r_tot)) / len(r_tot)


def plan_ec_targets(
    records: dict,
    demand_row: np.ndarray,
    r_v: ResourceVector,
    r_tot: ResourceVector,
    table: TransitionTable,
    pcfg: PlacementConfig,
) -> tuple[dict, dict]:
    """Solve one EC. records: vnf -> InstanceRecord (all VNFs present).

    Returns (targets, pendings): vnf -> State. Targets cover every free
    instance; pendings queue a teardown wish for busy instances whose demand
    has collapsed.
    """
    targets: dict = {}
    pendings: dict = {}
    budget = list(r_tot)
    free = []
    for v in sorted(records):
        rec = records[v]
        if rec.serving_anyone():
            # pinned Running (audited invariant: serving implies Running)
            for i, r in enumerate(footprint(rec.state, r_v)):
                budget[i] -= r
            continue
        if rec.in_flight:
            for i, r in enumerate(reserved_footprint(rec, table, r_v)):
                budget[i] -= r
            if demand_row[v] < pcfg.p_drop and rec.goal != State.DESCRIPTOR:
                pendings[v] = State.DESCRIPTOR
            continue
        free.append(v)

    states = [State.DESCRIPTOR, State.STOPPED]
    if pcfg.use_paused:
        states.append(State.PAUSED)
    states.append(State.RUNNING)

    # forced drops leave the search; they always fit (teardown never grows
    # the footprint past what the instance already reserves)
    searched = []
    for v in free:
        if demand_row[v] < pcfg.p_drop:
            targets[v] = State.DESCRIPTOR
            for i, r in enumerate(
                route_peak_footprint(records[v].state, State.DESCRIPTOR, table, r_v)
            ):
                budget[i] -= r
        else:
            searched.append(v)

    if not searched:
        return targets, pendings

    # candidate list per searched vnf, best score first
    cand: list[list[tuple[float, State, ResourceVector]]] = []
    for v in searched:
        cur = records[v].state
        opts = []
        for s in states:
            score = demand_row[v] * _readiness(s, table) - pcfg.epsilon * _share(
                s, r_v, r_tot
            )
            cost = route_peak_footprint(cur, s, table, r_v)
            opts.append((score, s, cost))
        opts.sort(key=lambda o: (-o[0], o[1].value))
        cand.append(opts)

    order = sorted(
        range(len(searched)), key=lambda i: (-cand[i][0][0], searched[i])
    )
    searched = [searched[i] for i in order]
    cand = [cand[i] for i in order]

    # exact branch and bound; the additive bound assumes the best remaining
    # candidate of every undecided vnf fits, which upper-bounds the truth
    n = len(searched)
    best_total = [float(-math.inf)]
    best_pick: list[list[int]] = [[0] * n]
    suffix_best = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_best[i] = suffix_best[i + 1] + cand[i][0][0]

    pick = [0] * n

    def dfs(i: int, acc: float, left: list[float]) -> None:
        if acc + suffix_best[i] <= best_total[0]:
            return
        if i == n:
            best_total[0] = acc
            best_pick[0] = pick.copy()
            return
        for j, (score, _s, cost) in enumerate(cand[i]):
            if all(c <= l + 1e-9 for c, l in zip(cost, left)):
                pick[i] = j
                dfs(i + 1, acc + score, [l - c for l, c in zip(left, cost)])
        # a Descriptor target always fits, so every branch has a child

    dfs(0, 0.0, budget)

    for i, v in enumerate(searched):
        targets[v] = cand[i][best_pick[0][i]][1]
    return targets, pendings


def _tier_candidates(records: dict, targets: dict, n_ecs: int, vnf: int):
    """(running_now, heading_to_running) EC index lists for one VNF."""
    tier1 = []
    tier2 = []
    for ec in range(n_ecs):
        rec = records[(ec, vnf)]
        if rec.state == State.RUNNING and not rec.in_flight:
            tier1.append(ec)
        elif rec.in_flight and rec.goal == State.RUNNING:
            tier2.append(ec)
        elif not rec.in_flight and targets.get((ec, vnf)) == State.RUNNING:
            if rec.state != State.RUNNING:
                tier2.append(ec)
    return tier1, tier2


def assign_users(
    model,
    records: dict,
    targets: dict,
    users: list[UserCtx],
    t_p_s: float,
    link_mu_pps: np.ndarray,
) -> dict:
    """Greedy delay-minimizing routing, one user at a time by user id.

    Wired link loads start from the pinned users and grow as each user is
    placed; each candidate is evaluated with the user's own traffic already
    on the path. Users with a session only consider instances Running right
    now; session-less users may also wait on instances heading to Running.
    Returns uid -> ec (or None when no instance of the user's VNF exists).
    """
    lam = np.zeros(len(link_mu_pps))
    assignments: dict = {}
    ordered = sorted(users, key=lambda u: u.uid)
    for u in ordered:
        if u.pinned and u.context_ec is not None:
            assignments[u.uid] = u.context_ec
            for i in model.bs_to_ec_indices(u.serving_bs, u.context_ec):
                lam[i] += u.lambda_pps
    for u in ordered:
        if u.pinned:
            if u.uid not in assignments:
                assignments[u.uid] = None
            continue
        tier1, tier2 = _tier_candidates(records, targets, model.n_bs, u.vnf)
        pool = tier1 if tier1 else ([] if u.context_ec is not None else tier2)
        if u.context_ec is not None and not tier1:
            # session exists but nothing is Running: hold the session where
            # it is rather than bounce it onto a cold instance
            pool = [u.context_ec]
        best_ec = None
        best_delay = math.inf
        for ec in pool:
            idx = model.bs_to_ec_indices(u.serving_bs, ec)
            d = 1.0 / (u.mu_u_pps - u.lambda_pps) if u.mu_u_pps > u.lambda_pps else math.inf
            d += 2.0 * (len(idx) + 1) * t_p_s
            for i in idx:
                mu = link_mu_pps[i]
                rho = (lam[i] + u.lambda_pps) / mu
                if rho >= 1.0:
                    d = math.inf
                    break
                d += 1.0 / mu + rho / (2.0 * mu * (1.0 - rho))
            if d < best_delay:
                best_delay = d
                best_ec = ec
        if best_ec is None and u.context_ec is not None:
            best_ec = u.context_ec  # deep fade: hold the session, do not drop
        assignments[u.uid] = best_ec
        if best_ec is not None:
            for i in model.bs_to_ec_indices(u.serving_bs, best_ec):
                lam[i] += u.lambda_pps
    return assignments


def build_plan(
    model,
    records: dict,
    demand: np.ndarray,
    users: list[UserCtx],
    r_v: ResourceVector,
    r_tot: ResourceVector,
    table: TransitionTable,
    pcfg: PlacementConfig,
    t_p_s: float,
    link_mu_pps: np.ndarray,
) -> PlacementPlan:
    """One full epoch: knapsack every EC, then route users onto the result."""
    plan = PlacementPlan()
    for ec in range(model.n_bs):
        recs = {v: records[(ec, v)] for v in range(demand.shape[0])}
        targets, pendings = plan_ec_targets(
            recs, demand[:, ec], r_v, r_tot, table, pcfg
        )
        for v, s in targets.items():
            plan.targets[(ec, v)] = s
        for v, s in pendings.items():
            plan.pendings[(ec, v)] = s
    plan.assignments = assign_users(
        model, records, plan.targets, users, t_p_s, link_mu_pps
    )
    return plan
