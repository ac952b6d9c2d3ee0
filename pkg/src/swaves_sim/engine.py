"""Fixed-step simulation engine tying mobility, lifecycle and placement.

Each step: read the pre-generated mobility trace, collect events (handovers,
completed lifecycle transitions), run a placement epoch when the strategy
calls for one, rebuild wired link loads from the resulting routing, price
every user's end-to-end delay once, then classify that step's Poisson packet
arrivals. Packets are judged at their emission instant: an instance that
flips state mid-step splits the step's packets accordingly.

Failure causes, in precedence order: instance not Running, user mid-
migration, delay above the deadline (an unstable queue prices as infinite
delay and lands here). Everything else counts as served.

A per-step auditor (sim.audit) checks the run's structural invariants:
in-flight transitions are never preempted or redirected (c1), the instance
ledger stays one record per EC/VNF pair (c2), reserved footprints never
exceed EC capacity (c3), and user sessions stay consistent, attached users
always sit on Running instances (c4).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import forecast, mobility, placement, radio
from .config import RunConfig
from .lifecycle import (
    InstanceRecord,
    ResourceVector,
    State,
    TransitionTable,
    begin_transition,
    footprint,
    reserved_footprint,
    route_peak_footprint,
    state_at,
    tick,
)
from .queueing import LinkLoad, link_wait_array_s, migration_time, path_delay_s
from .rngs import stream
from .topology import NodeId, TopologyConfig, build_topology

STRATEGIES = ("static", "reactive", "swaves", "oracle")


@dataclass
class RunResult:
    summary: dict
    totals: np.ndarray  # per-user counted packets
    cause_not_running: np.ndarray
    cause_migrating: np.ndarray
    cause_deadline: np.ndarray
    violations: list
    trace_hash: str
    n_epochs: int = 0
    n_migrations: int = 0

    @property
    def unsuccessful(self) -> np.ndarray:
        return self.cause_not_running + self.cause_migrating + self.cause_deadline

    @property
    def ratios(self) -> np.ndarray:
        tot = np.maximum(self.totals, 1)
        return np.where(self.totals > 0, self.unsuccessful / tot, 0.0)


class _EventLog:
    def __init__(self, path):
        self._fh = open(path, "w") if path else None

    def write(self, t_s: float, line: str) -> None:
        if self._fh is not None:
            self._fh.write(f"t={t_s:.3f} {line}\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def _dump_forecast_csv(out_dir: str, t_s: float, p: np.ndarray) -> None:
    path = os.path.join(out_dir, f"forecast_t{t_s:.1f}.csv")
    with open(path, "w") as fh:
        fh.write("vnf,bs,p\n")
        for v in range(p.shape[0]):
            for b in range(p.shape[1]):
                fh.write(f"{v},{b},{repr(float(p[v, b]))}\n")


def run(
    cfg: RunConfig,
    seed: int,
    out_dir: str | None = None,
    log_events: bool = False,
    dump_forecast: bool = False,
) -> RunResult:
    strategy = cfg["placement.strategy"]
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")

    dt = cfg["sim.dt_s"]
    n_steps = round(cfg["sim.duration_s"] / dt)
    n_users = cfg["sim.n_users"]
    n_vnfs = cfg["service.n_vnfs"]
    audit = cfg["sim.audit"]
    area_m = cfg["topology.area_m"]
    pkt_bits = cfg["topology.packet_size_bits"]
    lam_pps = cfg["traffic.lambda_u_bps"] / pkt_bits
    t_p = cfg["delay.t_p_s"]
    d_max_s = cfg["service.d_max_ms"] / 1e3
    v_mem_bits = cfg["service.v_mem_bits"]
    warmup_s = cfg["metrics.warmup_s"]

    model = build_topology(TopologyConfig.from_config(cfg), stream(seed, "topology"))
    rc = radio.RadioConfig.from_config(cfg)
    mcfg = mobility.MobilityConfig.from_config(cfg)
    table = TransitionTable.from_config(cfg)
    pcfg = placement.PlacementConfig.from_config(cfg)
    fc = forecast.ForecastConfig.from_config(cfg)
    r_v = ResourceVector(
        cfg["service.r_v_cpu"], cfg["service.r_v_mem_gb"], cfg["service.r_v_disk_gb"]
    )
    r_tot = ResourceVector(
        cfg["service.r_tot_cpu"], cfg["service.r_tot_mem_gb"], cfg["service.r_tot_disk_gb"]
    )
    fp_cache = {s: footprint(s, r_v) for s in State}

    trace = mobility.generate_trace(
        model, rc, mcfg, n_users, n_steps, dt, seed, area_m
    )
    trace_hash = trace.hash_hex()
    vnf_of = stream(seed, "vnf-assign").integers(0, n_vnfs, size=n_users)

    records = {}
    for ec in range(model.n_bs):
        for v in range(n_vnfs):
            records[(ec, v)] = InstanceRecord(ec=ec, vnf=v)
    ordered_keys = list(records)
    expected_keys = set(ordered_keys)

    link_mu_pps = np.array([l.rate_pps for l in model.links])
    fading_rngs = [stream(seed, "fading", u) for u in range(n_users)]
    packet_rngs = [stream(seed, "packets", u) for u in range(n_users)]

    assigned_ec: list = [None] * n_users
    context_ec: list = [None] * n_users
    migration_target: list = [None] * n_users
    migrating_until = np.full(n_users, -math.inf)

    tot = np.zeros(n_users, dtype=np.int64)
    c_nr = np.zeros(n_users, dtype=np.int64)
    c_mg = np.zeros(n_users, dtype=np.int64)
    c_dl = np.zeros(n_users, dtype=np.int64)

    forecaster = None
    demand = None
    neighbors = (
        placement.neighbor_table(model, pcfg.reactive_neighbors)
        if strategy == "reactive"
        else None
    )
    period_steps = max(1, round(fc.period_s / dt))
    oracle_steps = max(1, round(fc.oracle_horizon_s / dt))
    mean_pk = lam_pps * dt

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    evlog = _EventLog(
        os.path.join(out_dir, "events.log") if (log_events and out_dir) else None
    )

    violations: list = []
    c1_snap: dict = {}
    pending_events: list = ["start"]
    n_epochs = 0
    n_migrations = 0
    lam_links = np.zeros(model.n_links)

    def capacity_allows(ec: int, rec: InstanceRecord, target: State) -> bool:
        left = list(r_tot)
        for v in range(n_vnfs):
            other = records[(ec, v)]
            if other is rec:
                continue
            for i, x in enumerate(reserved_footprint(other, table, r_v)):
                left[i] -= x
        need = route_peak_footprint(rec.state, target, table, r_v)
        return all(n <= l + 1e-9 for n, l in zip(need, left))

    def attach_ready() -> None:
        for uid in range(n_users):
            ec = assigned_ec[uid]
            if ec is None or context_ec[uid] is not None:
                continue
            if migration_target[uid] is not None:
                continue
            rec = records[(ec, vnf_of[uid])]
            if rec.state is State.RUNNING and rec.transition is None:
                context_ec[uid] = ec
                rec.attached_users.add(uid)

    for k in range(n_steps):
        t = k * dt
        t_end = t + dt
        serving_k = trace.serving[k]
        daps_k = trace.daps_old[k]

        events = pending_events
        pending_events = []
        if k > 0:
            for uid in np.nonzero(serving_k != trace.serving[k - 1])[0]:
                events.append(("handover", int(uid)))
                evlog.write(
                    t,
                    f"handover user={uid} from={trace.serving[k - 1][uid]} "
                    f"to={serving_k[uid]}",
                )

        # wireless service rate per user under this step's fading draw
        bs_xy = model.bs_positions[serving_k]
        dists = np.hypot(trace.x[k] - bs_xy[:, 0], trace.y[k] - bs_xy[:, 1])
        fad = np.array([fading_rngs[u].exponential(1.0) for u in range(n_users)])
        mu_u = np.asarray(
            radio.wireless_service_rate_pps(rc, dists, fad, pkt_bits), dtype=float
        )
        mu_daps = np.full(n_users, math.nan)
        for uid in np.nonzero(daps_k >= 0)[0]:
            d_old = math.hypot(
                trace.x[k, uid] - model.bs_positions[daps_k[uid], 0],
                trace.y[k, uid] - model.bs_positions[daps_k[uid], 1],
            )
            mu_daps[uid] = radio.wireless_service_rate_pps(
                rc, d_old, fading_rngs[uid].exponential(1.0), pkt_bits
            )

        attach_ready()

        if strategy == "static":
            do_epoch = k == 0
        elif strategy == "reactive":
            do_epoch = bool(events)
        else:
            do_epoch = bool(events) or (k % period_steps == 0)

        if do_epoch:
            n_epochs += 1
            refreshed = False
            if strategy == "static":
                demand = forecast.current_demand(
                    serving_k, vnf_of, n_vnfs, model.n_bs, t
                ).p
                refreshed = True
            elif strategy == "reactive":
                base = forecast.current_demand(
                    serving_k, vnf_of, n_vnfs, model.n_bs, t
                ).p
                demand = placement.spread_demand(
                    base, neighbors, pcfg.reactive_spread_p
                )
                refreshed = True
            elif strategy == "swaves":
                if demand is None or k % period_steps == 0:
                    if forecaster is None:
                        forecaster = forecast.Forecaster(
                            model, rc, fc, mcfg, dt, area_m, n_vnfs, vnf_of, seed
                        )
                    demand = forecaster.refresh(trace, k, t).p
                    refreshed = True
            else:  # oracle
                if demand is None or k % period_steps == 0:
                    demand = forecast.oracle_forecast(
                        trace, vnf_of, k, oracle_steps, n_vnfs, model.n_bs, t
                    ).p
                    refreshed = True
            if refreshed and dump_forecast and out_dir is not None:
                _dump_forecast_csv(out_dir, t, demand)
            evlog.write(t, f"epoch strategy={strategy} events={len(events)}")

            users_ctx = [
                placement.UserCtx(
                    uid=uid,
                    vnf=int(vnf_of[uid]),
                    serving_bs=int(serving_k[uid]),
                    mu_u_pps=float(mu_u[uid]),
                    lambda_pps=lam_pps,
                    context_ec=context_ec[uid],
                    pinned=migration_target[uid] is not None,
                )
                for uid in range(n_users)
            ]
            plan = placement.build_plan(
                model, records, demand, users_ctx, r_v, r_tot, table, pcfg,
                t_p, link_mu_pps,
            )

            for key in sorted(plan.targets):
                rec = records[key]
                target = plan.targets[key]
                if target is not rec.state and rec.transition is None:
                    begin_transition(rec, target, table, t)
                    evlog.write(
                        t,
                        f"lifecycle ec={key[0]} vnf={key[1]} begin "
                        f"target={target.value} eta={rec.transition[1]:.3f}",
                    )
            for key in sorted(plan.pendings):
                rec = records[key]
                if rec.transition is not None:
                    rec.pending_target = plan.pendings[key]
                    evlog.write(
                        t,
                        f"lifecycle ec={key[0]} vnf={key[1]} queue "
                        f"target={plan.pendings[key].value}",
                    )

            for uid in sorted(plan.assignments):
                if migration_target[uid] is not None:
                    continue  # pinned until the move lands
                new = plan.assignments[uid]
                old_ctx = context_ec[uid]
                if new is None:
                    assigned_ec[uid] = None
                    continue
                assigned_ec[uid] = new
                if old_ctx is not None and new != old_ctx:
                    idx = model.path_indices(NodeId("EC", old_ctx), NodeId("EC", new))
                    path = [
                        LinkLoad(
                            float(lam_links[i]),
                            model.links[i].rate_pps,
                            model.links[i].rate_bps,
                        )
                        for i in idx
                    ]
                    t_mig = migration_time(v_mem_bits, path, t_p)
                    records[(old_ctx, int(vnf_of[uid]))].attached_users.discard(uid)
                    rec = records[(new, int(vnf_of[uid]))]
                    rec.migrating_users[uid] = t + t_mig
                    migrating_until[uid] = t + t_mig
                    migration_target[uid] = new
                    context_ec[uid] = None
                    n_migrations += 1
                    evlog.write(
                        t, f"migrate user={uid} ec={old_ctx}->{new} takes={t_mig:.6f}"
                    )
            attach_ready()

        # wired loads induced by the current routing
        lam_links[:] = 0.0
        for uid in range(n_users):
            ec = assigned_ec[uid]
            if ec is None:
                continue
            for i in model.bs_to_ec_indices(int(serving_k[uid]), ec):
                lam_links[i] += lam_pps
        link_wait = link_wait_array_s(lam_links, link_mu_pps)

        # one delay per user-step (DAPS keeps the old cell usable one step)
        delay_u = np.full(n_users, math.inf)
        for uid in range(n_users):
            ec = assigned_ec[uid]
            if ec is None:
                continue
            idx = model.bs_to_ec_indices(int(serving_k[uid]), ec)
            d = path_delay_s(float(mu_u[uid]), lam_pps, idx, link_wait, t_p)
            if daps_k[uid] >= 0:
                idx2 = model.bs_to_ec_indices(int(daps_k[uid]), ec)
                d2 = path_delay_s(float(mu_daps[uid]), lam_pps, idx2, link_wait, t_p)
                d = min(d, d2)
            delay_u[uid] = d

        # packet arrivals, classified at their emission instants
        if t_end > warmup_s:
            for uid in range(n_users):
                n_pk = int(packet_rngs[uid].poisson(mean_pk))
                if n_pk == 0:
                    continue
                ec = assigned_ec[uid]
                rec = records[(ec, int(vnf_of[uid]))] if ec is not None else None
                mig_until = (
                    migrating_until[uid] if migration_target[uid] is not None else -math.inf
                )
                boundary = t < warmup_s
                if rec is not None and rec.transition is not None:
                    boundary = boundary or rec.transition[1] < t_end
                if mig_until > -math.inf:
                    boundary = boundary or mig_until < t_end
                if not boundary:
                    tot[uid] += n_pk
                    if rec is None or state_at(rec, table, t) is not State.RUNNING:
                        c_nr[uid] += n_pk
                    elif mig_until >= t_end:
                        c_mg[uid] += n_pk
                    elif delay_u[uid] > d_max_s:
                        c_dl[uid] += n_pk
                else:
                    offs = packet_rngs[uid].uniform(0.0, dt, size=n_pk)
                    offs.sort()
                    for off in offs:
                        tau = t + off
                        if tau < warmup_s:
                            continue
                        tot[uid] += 1
                        if rec is None or state_at(rec, table, tau) is not State.RUNNING:
                            c_nr[uid] += 1
                        elif tau < mig_until:
                            c_mg[uid] += 1
                        elif delay_u[uid] > d_max_s:
                            c_dl[uid] += 1
        else:
            for uid in range(n_users):
                packet_rngs[uid].poisson(mean_pk)

        # advance lifecycle chains and land finished migrations
        t_next = (k + 1) * dt
        for key in ordered_keys:
            rec = records[key]
            if rec.transition is None:
                continue
            for tm, st, reached in tick(rec, table, t_next):
                evlog.write(
                    tm,
                    f"lifecycle ec={key[0]} vnf={key[1]} state={st.value}"
                    + (" reached=1" if reached else ""),
                )
                if reached:
                    pending_events.append(("ready", key))
                    if rec.pending_target is not None:
                        tgt = rec.pending_target
                        rec.pending_target = None
                        if tgt is not rec.state and capacity_allows(key[0], rec, tgt):
                            begin_transition(rec, tgt, table, tm)
                            evlog.write(
                                tm,
                                f"lifecycle ec={key[0]} vnf={key[1]} begin "
                                f"target={tgt.value} eta={rec.transition[1]:.3f}",
                            )

        for uid in range(n_users):
            tgt = migration_target[uid]
            if tgt is not None and migrating_until[uid] <= t_next:
                done_at = float(migrating_until[uid])
                rec = records[(tgt, int(vnf_of[uid]))]
                rec.migrating_users.pop(uid, None)
                rec.attached_users.add(uid)
                context_ec[uid] = tgt
                migration_target[uid] = None
                migrating_until[uid] = -math.inf
                evlog.write(done_at, f"migrate-done user={uid} ec={tgt}")

        if audit:
            _audit_step(
                records, ordered_keys, expected_keys, context_ec, vnf_of,
                migration_target, table, r_v, r_tot, fp_cache, t_next, c1_snap,
                violations,
            )

    evlog.close()

    unsucc = c_nr + c_mg + c_dl
    total = int(tot.sum())
    ratios = np.where(tot > 0, unsucc / np.maximum(tot, 1), 0.0)
    summary = {
        "strategy": strategy,
        "alpha": float(cfg["mobility.alpha"]),
        "d_max_ms": float(cfg["service.d_max_ms"]),
        "seed": int(seed),
        "mean_ratio": (float(unsucc.sum()) / total) if total else 0.0,
        "median_ratio": float(np.median(ratios)),
        "p95_ratio": float(np.percentile(ratios, 95)),
        "total_packets": total,
        "trace_hash": trace_hash,
    }
    result = RunResult(
        summary=summary,
        totals=tot,
        cause_not_running=c_nr,
        cause_migrating=c_mg,
        cause_deadline=c_dl,
        violations=violations,
        trace_hash=trace_hash,
        n_epochs=n_epochs,
        n_migrations=n_migrations,
    )
    if out_dir is not None:
        write_outputs(out_dir, result)
    return result


def _audit_step(
    records, ordered_keys, expected_keys, context_ec, vnf_of, migration_target,
    table, r_v, r_tot, fp_cache, t_now, c1_snap, violations,
):
    # c1: an in-flight hop is never swapped out from under its own clock
    for key in ordered_keys:
        rec = records[key]
        prev = c1_snap.get(key)
        if prev is not None:
            p_state, p_hop, p_done = prev
            if p_done > t_now + 1e-12 and (
                rec.state is not p_state or rec.transition != (p_hop, p_done)
            ):
                violations.append(f"c1 t={t_now:.3f} {key}: in-flight hop disturbed")
        c1_snap[key] = (
            (rec.state, rec.transition[0], rec.transition[1])
            if rec.transition is not None
            else None
        )

    # c2: exactly one ledger row per (EC, VNF)
    if records.keys() != expected_keys:
        violations.append(f"c2 t={t_now:.3f}: instance ledger keys changed")

    # c3: reserved footprints fit EC capacity
    n_vnfs = len(vnf_of) and max(v for _, v in expected_keys) + 1
    ecs = {ec for ec, _ in expected_keys}
    for ec in ecs:
        used = [0.0, 0.0, 0.0]
        for v in range(n_vnfs):
            rec = records[(ec, v)]
            fp = (
                fp_cache[rec.state]
                if rec.transition is None
                else reserved_footprint(rec, table, r_v)
            )
            for i in range(3):
                used[i] += fp[i]
        if any(u > cap + 1e-9 for u, cap in zip(used, r_tot)):
            violations.append(f"c3 t={t_now:.3f} ec={ec}: capacity exceeded {used}")

    # c4: session bookkeeping is consistent and attached implies Running
    n_ctx = 0
    for uid, ctx in enumerate(context_ec):
        if ctx is None:
            continue
        n_ctx += 1
        rec = records[(ctx, int(vnf_of[uid]))]
        if uid not in rec.attached_users:
            violations.append(f"c4 t={t_now:.3f} user={uid}: context not attached")
        if rec.state is not State.RUNNING:
            violations.append(f"c4 t={t_now:.3f} user={uid}: attached to {rec.state.value}")
    n_att = sum(len(records[k].attached_users) for k in ordered_keys)
    if n_att != n_ctx:
        violations.append(f"c4 t={t_now:.3f}: {n_att} attachments for {n_ctx} sessions")
    for uid, tgt in enumerate(migration_target):
        if tgt is not None and uid not in records[(tgt, int(vnf_of[uid]))].migrating_users:
            violations.append(f"c4 t={t_now:.3f} user={uid}: migration not registered")


def write_outputs(out_dir: str, result: RunResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    unsucc = result.unsuccessful
    ratios = result.ratios
    with open(os.path.join(out_dir, "per_user.csv"), "w") as fh:
        fh.write(
            "user_id,total_packets,unsuccessful,ratio,"
            "cause_not_running,cause_migrating,cause_deadline\n"
        )
        for uid in range(len(result.totals)):
            fh.write(
                f"{uid},{result.totals[uid]},{unsucc[uid]},{repr(float(ratios[uid]))},"
                f"{result.cause_not_running[uid]},{result.cause_migrating[uid]},"
                f"{result.cause_deadline[uid]}\n"
            )
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
