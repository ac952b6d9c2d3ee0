"""Instance lifecycle: descriptor -> source -> image -> stopped -> running.

Every (EC, VNF) pair owns exactly one record walking a fixed state machine.
Transitions are non-preemptible: once a hop starts, the record's visible
state stays frozen until the hop's completion time, and multi-hop targets
chain hop by hop. Resource accounting is pessimistic: a transition reserves
the componentwise maximum footprint over every state it will visit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional


class State(enum.Enum):
    DESCRIPTOR = "descriptor"
    SOURCE = "source"
    IMAGE = "image"
    STOPPED = "stopped"
    PAUSED = "paused"
    RUNNING = "running"

    def __repr__(self):
        return self.value


class ResourceVector(NamedTuple):
    cpu: float
    mem_gb: float
    disk_gb: float

    def plus(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(a + b for a, b in zip(self, other)))

    def max_with(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(*(max(a, b) for a, b in zip(self, other)))

    def fits_within(self, cap: "ResourceVector", tol: float = 1e-9) -> bool:
        return all(a <= c + tol for a, c in zip(self, cap))


ZERO = ResourceVector(0.0, 0.0, 0.0)


def footprint(state: State, r_v: ResourceVector) -> ResourceVector:
    """Resources held while sitting in a state.

    Descriptor holds nothing; source/image/stopped hold disk only; paused
    frees the CPU but keeps memory and disk; running holds everything.
    """
    if state is State.DESCRIPTOR:
        return ZERO
    if state in (State.SOURCE, State.IMAGE, State.STOPPED):
        return ResourceVector(0.0, 0.0, r_v.disk_gb)
    if state is State.PAUSED:
        return ResourceVector(0.0, r_v.mem_gb, r_v.disk_gb)
    return r_v  # RUNNING


@dataclass(frozen=True)
class TransitionTable:
    t_download_s: float = 19.2
    t_build_s: float = 0.0
    t_deploy_s: float = 0.1
    t_start_s: float = 0.53
    t_stop_s: float = 0.53
    t_pause_s: float = 0.096
    t_resume_s: float = 0.096

    @classmethod
    def from_config(cls, cfg) -> "TransitionTable":
        return cls(
            t_download_s=cfg["lifecycle.t_download_s"],
            t_build_s=cfg["lifecycle.t_build_s"],
            t_deploy_s=cfg["lifecycle.t_deploy_s"],
            t_start_s=cfg["lifecycle.t_start_s"],
            t_stop_s=cfg["lifecycle.t_stop_s"],
            t_pause_s=cfg["lifecycle.t_pause_s"],
            t_resume_s=cfg["lifecycle.t_resume_s"],
        )

    def edges(self) -> list[tuple[State, State, float]]:
        S = State
        return [
            (S.DESCRIPTOR, S.SOURCE, self.t_download_s),
            (S.SOURCE, S.IMAGE, self.t_build_s),
            (S.IMAGE, S.STOPPED, self.t_deploy_s),
            (S.STOPPED, S.RUNNING, self.t_start_s),
            (S.RUNNING, S.STOPPED, self.t_stop_s),
            (S.RUNNING, S.PAUSED, self.t_pause_s),
            (S.PAUSED, S.RUNNING, self.t_resume_s),
            # deletion: instant, back to the bare descriptor
            (S.STOPPED, S.DESCRIPTOR, 0.0),
            (S.IMAGE, S.DESCRIPTOR, 0.0),
            (S.SOURCE, S.DESCRIPTOR, 0.0),
        ]

    def duration(self, src: State, dst: State) -> float:
        for a, b, dur in self.edges():
            if a is src and b is dst:
                return dur
        raise ValueError(f"no edge {src} -> {dst}")

    def route(self, src: State, dst: State) -> list[State]:
        """Hop sequence (excluding src, including dst), fewest hops.

        BFS in declared edge order, so routing is deterministic.
        """
        if src is dst:
            return []
        adjacency: dict[State, list[State]] = {}
        for a, b, _ in self.edges():
            adjacency.setdefault(a, []).append(b)
        prev: dict[State, State] = {src: src}
        frontier = [src]
        while frontier:
            nxt = []
            for node in frontier:
                for succ in adjacency.get(node, []):
                    if succ not in prev:
                        prev[succ] = node
                        if succ is dst:
                            path = [succ]
                            while prev[path[-1]] is not path[-1]:
                                path.append(prev[path[-1]])
                            return list(reversed(path))[1:]
                        nxt.append(succ)
            frontier = nxt
        raise ValueError(f"no route {src} -> {dst}")

    def route_time_s(self, src: State, dst: State) -> float:
        total, cur = 0.0, src
        for hop in self.route(src, dst):
            total += self.duration(cur, hop)
            cur = hop
        return total

    @property
    def full_boot_s(self) -> float:
        return self.route_time_s(State.DESCRIPTOR, State.RUNNING)


@dataclass
class InstanceRecord:
    """One VNF's lifecycle on one EC."""

    ec: int
    vnf: int
    state: State = State.DESCRIPTOR
    # in-flight hop: (hop target, absolute completion time)
    transition: Optional[tuple[State, float]] = None
    goal: Optional[State] = None
    pending_target: Optional[State] = None
    attached_users: set = field(default_factory=set)
    migrating_users: dict = field(default_factory=dict)  # user -> completes_at_s

    @property
    def in_flight(self) -> bool:
        return self.transition is not None

    def serving_anyone(self) -> bool:
        return bool(self.attached_users) or bool(self.migrating_users)


def begin_transition(
    rec: InstanceRecord, target: State, table: TransitionTable, now_s: float
) -> None:
    """Start moving toward target (first hop only; tick() chains the rest)."""
    if rec.transition is not None:
        raise ValueError(f"EC{rec.ec}/VNF{rec.vnf}: transition already in flight")
    if rec.state is target:
        raise ValueError(f"EC{rec.ec}/VNF{rec.vnf}: already in {target}")
    hop = table.route(rec.state, target)[0]
    rec.goal = target
    rec.transition = (hop, now_s + table.duration(rec.state, hop))


def tick(rec: InstanceRecord, table: TransitionTable, now_s: float) -> list:
    """Advance due hops up to now_s. Returns [(time, new_state, reached_goal)]."""
    out = []
    while rec.transition is not None:
        hop, completes_at = rec.transition
        if completes_at > now_s:
            break
        rec.state = hop
        if rec.state is rec.goal:
            rec.transition = None
            rec.goal = None
            out.append((completes_at, rec.state, True))
        else:
            nxt = table.route(rec.state, rec.goal)[0]
            rec.transition = (nxt, completes_at + table.duration(rec.state, nxt))
            out.append((completes_at, rec.state, False))
    return out


def state_at(rec: InstanceRecord, table: TransitionTable, at_s: float) -> State:
    """Effective state at a (sub-step) time without mutating the record."""
    state, trans, goal = rec.state, rec.transition, rec.goal
    while trans is not None:
        hop, completes_at = trans
        if completes_at > at_s:
            break
        state = hop
        if state is goal:
            trans = None
        else:
            nxt = table.route(state, goal)[0]
            trans = (nxt, completes_at + table.duration(state, nxt))
    return state


def time_to_running(
    state: State, in_flight: Optional[tuple[State, float]], table: TransitionTable
) -> float:
    """Remaining seconds until RUNNING; in-flight hop counts its residual."""
    if in_flight is not None:
        hop, remaining_s = in_flight
        return remaining_s + table.route_time_s(hop, State.RUNNING)
    return table.route_time_s(state, State.RUNNING)


def route_peak_footprint(
    src: State, dst: State, table: TransitionTable, r_v: ResourceVector
) -> ResourceVector:
    """Componentwise max footprint over src and every state visited to dst."""
    peak = footprint(src, r_v)
    for hop in table.route(src, dst):
        peak = peak.max_with(footprint(hop, r_v))
    return peak


def reserved_footprint(
    rec: InstanceRecord, table: TransitionTable, r_v: ResourceVector
) -> ResourceVector:
    """What this record pins right now, counting any in-flight chain's peak."""
    if rec.transition is None:
        return footprint(rec.state, r_v)
    hop, _ = rec.transition
    peak = footprint(rec.state, r_v).max_with(footprint(hop, r_v))
    if rec.goal is not None and rec.goal is not hop:
        peak = peak.max_with(route_peak_footprint(hop, rec.goal, table, r_v))
    return peak
