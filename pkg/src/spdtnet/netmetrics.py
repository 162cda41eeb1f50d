"""Static projections, clustering, daily aggregates and temporal centralities."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .contact import TemporalContactNetwork
from .exposure import ExposureParams, link_exposures

DEFAULT_PROJECTION_DECAY = 1.0 / 3600.0  # decay time fixed at 60 minutes


@dataclass(frozen=True)
class StaticProjection:
    node_count: int
    edges: np.ndarray  # (m, 2) unique directed edges
    threshold: float
    b: float

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g

    def undirected(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(map(tuple, self.edges.tolist()))
        return g


def static_projection(net: TemporalContactNetwork, params: ExposureParams = ExposureParams(),
                      b: float = DEFAULT_PROJECTION_DECAY, threshold: float = 0.01) -> StaticProjection:
    """Directed edge u -> v when some link u -> v delivers a positive dose >= ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if len(net):
        e = link_exposures(net.ts, net.tl, net.tsp, net.tlp, b, params)
        keep = (e > 0) & (e >= threshold)
        edges = np.unique(np.stack([net.host[keep], net.nbr[keep]], axis=1), axis=0)
    else:
        edges = np.zeros((0, 2), np.int64)
    return StaticProjection(net.node_count, edges.reshape(-1, 2), threshold, b)


@dataclass
class NodeDegrees:
    in_degree: np.ndarray
    out_degree: np.ndarray
    degree: np.ndarray  # undirected
    clustering: np.ndarray


def degree_and_clustering(proj: StaticProjection) -> NodeDegrees:
    n = proj.node_count
    e = proj.edges
    ind = np.bincount(e[:, 1], minlength=n) if len(e) else np.zeros(n, np.int64)
    outd = np.bincount(e[:, 0], minlength=n) if len(e) else np.zeros(n, np.int64)
    g = proj.undirected()
    deg = np.array([g.degree(v) for v in range(n)], np.int64)
    cc = nx.clustering(g)
    return NodeDegrees(ind, outd, deg, np.array([cc[v] for v in range(n)], float))


@dataclass
class DailyAggregate:
    day: int
    active_nodes: int
    mean_degree: float
    mean_clustering: float


def daily_aggregates(net: TemporalContactNetwork, params: ExposureParams = ExposureParams(),
                     b: float = DEFAULT_PROJECTION_DECAY, threshold: float = 0.01
                     ) -> list[DailyAggregate | None]:
    """Per-day mean undirected degree and clustering over nodes with an edge; ``None`` for empty days."""
    out: list[DailyAggregate | None] = []
    for day in range(net.horizon_days):
        proj = static_projection(net.day_slice(day), params, b, threshold)
        if len(proj.edges) == 0:
            out.append(None)
            continue
        g = proj.undirected()
        g.remove_nodes_from([v for v in list(g.nodes) if g.degree(v) == 0])
        cc = nx.clustering(g)
        deg = np.array([d for _, d in g.degree()])
        out.append(DailyAggregate(day, g.number_of_nodes(), float(deg.mean()),
                                  float(np.mean(list(cc.values())))))
    return out


def log_binned_histogram(values, bins_per_decade: int = 5):
    """Counts of positive integer values in logarithmic bins; returns (edges, counts)."""
    v = np.asarray(values)
    v = v[v > 0]
    if len(v) == 0:
        return np.array([1.0]), np.zeros(0, np.int64)
    top = np.log10(v.max()) + 1e-9
    edges = np.unique(np.floor(np.logspace(0, max(top, 1e-9), int(np.ceil(top * bins_per_decade)) + 1)))
    edges = np.append(edges, v.max() + 1)
    counts, _ = np.histogram(v, bins=edges)
    return edges, counts


# --------------------------------------------------------------------------
# temporal paths

@dataclass(frozen=True)
class TemporalPathConfig:
    max_gap_days: int = 5

    def __post_init__(self):
        if self.max_gap_days < 1:
            raise ValueError("max_gap_days must be >= 1")


def _daily_adjacency(net: TemporalContactNetwork):
    days = net.link_days()
    triples = np.unique(np.stack([net.host, days, net.nbr], axis=1), axis=0)
    adj: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for u, d, v in triples.tolist():
        adj[u].append((d, v))
    return adj


def temporal_distances_from(adj, source: int, cfg: TemporalPathConfig):
    """BFS over (node, day) states: first hop on any day, then day gaps in [1, max_gap].

    Returns ``dist`` (node -> hops), plus the level DAG ``parents`` keyed by
    state, and ``state_level``.
    """
    level = {}
    parents: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    frontier = []
    for d, v in adj.get(source, ()):
        if v == source:
            continue
        st = (v, d)
        if st not in level:
            level[st] = 1
            frontier.append(st)
        parents[st].append((source, -1))
    dist = {}
    hops = 1
    while frontier:
        for v, _ in frontier:
            dist.setdefault(v, hops)
        nxt = []
        for st in frontier:
            u, du = st
            for d, v in adj.get(u, ()):
                if not 1 <= d - du <= cfg.max_gap_days or v == source:
                    continue
                ns = (v, d)
                lv = level.get(ns)
                if lv is None:
                    level[ns] = hops + 1
                    nxt.append(ns)
                    parents[ns].append(st)
                elif lv == hops + 1:
                    parents[ns].append(st)
        frontier = nxt
        hops += 1
    return dist, parents, level


def _shortest_sequences(target: int, dist_t: int, parents, level, source: int):
    """All node sequences of shortest time-respecting paths from source to target."""
    ends = [st for st, lv in level.items() if st[0] == target and lv == dist_t]
    seqs = set()

    def back(st, tail):
        if st[1] == -1:
            seqs.add((source,) + tail)
            return
        for p in parents[st]:
            back(p, (st[0],) + tail)

    for st in ends:
        back(st, ())
    return seqs


@dataclass
class TemporalCentrality:
    betweenness: np.ndarray
    closeness: np.ndarray


def temporal_centralities(net: TemporalContactNetwork, cfg: TemporalPathConfig = TemporalPathConfig(),
                          sources=None) -> TemporalCentrality:
    """Hop-count temporal betweenness and closeness.

    Shortest paths are counted once per distinct node sequence, whatever the
    start day.  ``sources`` restricts the BFS to a subset (a sampled variant
    for large networks).
    """
    n = net.node_count
    adj = _daily_adjacency(net)
    bc = np.zeros(n)
    cc = np.zeros(n)
    srcs = range(n) if sources is None else np.asarray(sources).tolist()
    for s in srcs:
        if s not in adj:
            continue
        dist, parents, level = temporal_distances_from(adj, s, cfg)
        for v, dv in dist.items():
            cc[v] += 1.0 / dv
            if dv < 2:
                continue
            for seq in _shortest_sequences(v, dv, parents, level, s):
                for mid in seq[1:-1]:
                    bc[mid] += 1
    return TemporalCentrality(bc, cc)
