"""Tree-shaped edge network: BS leaves, M1/M2 aggregation, one M3 root.

Each base station is co-located with one edge cloud (EC) behind an access
link. BSs attach to M1 switches by spatial clustering, M1s to M2s the same
way, every M2 to the single root. All routing follows the unique tree path;
what the rest of the simulator consumes is, per node pair, the ordered list
of wired links (for per-link queueing) and its length (for processing delay).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class NodeId(NamedTuple):
    kind: str  # "BS" | "EC" | "M1" | "M2" | "M3"
    index: int


@dataclass(frozen=True)
class WiredLink:
    a: NodeId
    b: NodeId
    rate_bps: float
    rate_pps: float


@dataclass(frozen=True)
class TopologyConfig:
    n_m2: int = 4
    n_m1: int = 16
    n_bs: int = 64
    area_m: float = 1200.0
    layout: str = "grid"
    jitter_m: float = 0.0
    packet_size_bits: int = 12_000
    link_rate_bps: float = 1e9

    @classmethod
    def from_config(cls, cfg) -> "TopologyConfig":
        return cls(
            n_m2=cfg["topology.n_m2"],
            n_m1=cfg["topology.n_m1"],
            n_bs=cfg["topology.n_bs"],
            area_m=cfg["topology.area_m"],
            layout=cfg["topology.layout"],
            jitter_m=cfg["topology.jitter_m"],
            packet_size_bits=cfg["topology.packet_size_bits"],
            link_rate_bps=cfg["link.rate_bps"],
        )


def cluster_bs(positions: np.ndarray, k: int, rng: np.random.Generator):
    """Plain Lloyd k-means with seeded k-means++ init.

    Ties on equidistant centroids resolve to the lowest centroid index
    (argmin semantics), and an emptied cluster is re-seeded on the point
    currently farthest from its assigned centroid, so the result is a pure
    function of (positions, k, rng state).

    Returns (labels, centroids).
    """
    n = len(positions)
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    pts = np.asarray(positions, dtype=float)

    # k-means++ seeding
    centroids = np.empty((k, 2))
    centroids[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[j:] = pts[0]  # all points identical
            break
        centroids[j] = pts[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((pts - centroids[j]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(200):
        dists = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        for j in range(k):
            members = pts[new_labels == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                worst = int(np.argmax(dists[np.arange(n), new_labels]))
                centroids[j] = pts[worst]
                new_labels[worst] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids


def _bs_layout(tcfg: TopologyConfig, rng: np.random.Generator) -> np.ndarray:
    n, area = tcfg.n_bs, tcfg.area_m
    if tcfg.layout == "uniform":
        return rng.uniform(0.0, area, size=(n, 2))
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    xs = (np.arange(cols) + 0.5) * (area / cols)
    ys = (np.arange(rows) + 0.5) * (area / rows)
    grid = np.array([(xs[i % cols], ys[i // cols]) for i in range(n)])
    if tcfg.jitter_m > 0:
        grid = grid + rng.uniform(-tcfg.jitter_m, tcfg.jitter_m, size=grid.shape)
        grid = np.clip(grid, 0.0, area)
    return grid


@dataclass
class NetworkModel:
    """Immutable (by convention) topology shared by every subsystem."""

    cfg: TopologyConfig
    bs_positions: np.ndarray  # (n_bs, 2) meters
    cluster_of: np.ndarray  # (n_bs,) BS -> M1 index
    m2_of: np.ndarray  # (n_m1,) M1 -> M2 index
    links: list[WiredLink] = field(default_factory=list)
    _parent: dict = field(default_factory=dict)  # tree node -> (parent node, link idx)
    _path_cache: dict = field(default_factory=dict)

    @property
    def n_bs(self) -> int:
        return self.cfg.n_bs

    @property
    def n_links(self) -> int:
        return len(self.links)

    def nodes(self) -> list[NodeId]:
        out = [NodeId("M3", 0)]
        out += [NodeId("M2", i) for i in range(self.cfg.n_m2)]
        out += [NodeId("M1", i) for i in range(self.cfg.n_m1)]
        out += [NodeId("BS", i) for i in range(self.cfg.n_bs)]
        out += [NodeId("EC", i) for i in range(self.cfg.n_bs)]
        return out

    # --- paths ---

    def _attach_point(self, node: NodeId):
        """(tree node, access link indices) — ECs hang off their BS."""
        if node.kind == "EC":
            return NodeId("BS", node.index), (node.index,)
        return node, ()

    def _climb(self, node: NodeId):
        chain = [(node, None)]
        while node in self._parent:
            parent, link = self._parent[node]
            chain.append((parent, link))
            node = parent
        return chain

    def path_indices(self, src: NodeId, dst: NodeId) -> tuple[int, ...]:
        """Ordered link indices of the unique src -> dst route."""
        key = (src, dst)
        cached = self._path_cache.get(key)
        if cached is not None:
            return cached
        if src == dst:
            path: tuple[int, ...] = ()
        else:
            a, pre = self._attach_point(src)
            b, post = self._attach_point(dst)
            if a == b:
                mid: tuple[int, ...] = ()
            else:
                up_a = self._climb(a)
                up_b = self._climb(b)
                anc_b = {node: i for i, (node, _) in enumerate(up_b)}
                mid_list = []
                for i, (node, _) in enumerate(up_a):
                    if node in anc_b:
                        down = up_b[1 : anc_b[node] + 1]
                        mid_list = [lk for _, lk in up_a[1 : i + 1]]
                        mid_list += [lk for _, lk in reversed(down)]
                        break
                mid = tuple(mid_list)
            path = pre + mid + post
        self._path_cache[key] = path
        return path

    def wired_path(self, src: NodeId, dst: NodeId) -> list[WiredLink]:
        return [self.links[i] for i in self.path_indices(src, dst)]

    def ec_to_ec_path(self, e1: int, e2: int) -> list[WiredLink]:
        return self.wired_path(NodeId("EC", e1), NodeId("EC", e2))

    def bs_to_ec_indices(self, bs: int, ec: int) -> tuple[int, ...]:
        return self.path_indices(NodeId("BS", bs), NodeId("EC", ec))


def build_topology(tcfg: TopologyConfig, rng: np.random.Generator) -> NetworkModel:
    """Place BSs, cluster them under M1/M2 switches, and wire the tree."""
    if tcfg.n_bs % tcfg.n_m1 != 0:
        raise ValueError(
            f"n_bs = {tcfg.n_bs} does not divide evenly into n_m1 = {tcfg.n_m1} clusters"
        )
    if tcfg.n_m1 < tcfg.n_m2:
        raise ValueError("need at least as many M1 switches as M2 switches")

    bs_pos = _bs_layout(tcfg, rng)
    cluster_of, centroids = cluster_bs(bs_pos, tcfg.n_m1, rng)
    m2_of, _ = cluster_bs(centroids, tcfg.n_m2, rng)

    model = NetworkModel(
        cfg=tcfg, bs_positions=bs_pos, cluster_of=cluster_of, m2_of=m2_of
    )
    rate_pps = tcfg.link_rate_bps / tcfg.packet_size_bits

    def add(a: NodeId, b: NodeId) -> int:
        model.links.append(WiredLink(a, b, tcfg.link_rate_bps, rate_pps))
        return len(model.links) - 1

    for i in range(tcfg.n_bs):  # EC access links (no tree parent entry)
        add(NodeId("EC", i), NodeId("BS", i))
    for i in range(tcfg.n_bs):
        m1 = NodeId("M1", int(cluster_of[i]))
        model._parent[NodeId("BS", i)] = (m1, add(NodeId("BS", i), m1))
    for j in range(tcfg.n_m1):
        m2 = NodeId("M2", int(m2_of[j]))
        model._parent[NodeId("M1", j)] = (m2, add(NodeId("M1", j), m2))
    for k in range(tcfg.n_m2):
        root = NodeId("M3", 0)
        model._parent[NodeId("M2", k)] = (root, add(NodeId("M2", k), root))
    return model
