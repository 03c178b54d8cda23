"""Deterministic greedy-modularity clustering, composition and display filters.

The clustering is the usual two-phase scheme (local moves, then graph
aggregation, repeated until no gain) run with a fixed node ordering
instead of randomized sweeps, so identical inputs give identical
partitions on every run and platform. Edge weights count in modularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .graphs import Graph


@dataclass(frozen=True)
class Partition:
    """Node -> cluster assignment; cluster ids are 1..k by descending size."""

    assignment: dict
    modularity: float
    cluster_sizes: dict

    def clusters(self) -> dict:
        """Cluster id -> sorted list of member nodes."""
        out: dict = {}
        for node, cid in self.assignment.items():
            out.setdefault(cid, []).append(node)
        for members in out.values():
            members.sort()
        return out


def modularity(g: Graph, partition, resolution: float = 1.0) -> float:
    """Weighted modularity of an assignment (Partition or node->cluster map).

    Q = sum over clusters of [w_in/W - resolution * (s/(2W))^2] with W the
    total edge weight, w_in the intra-cluster weight and s the summed node
    strengths. An edgeless graph has Q = 0 by convention.
    """
    assignment = partition.assignment if isinstance(partition, Partition) else partition
    for u in g.nodes():
        if u not in assignment:
            raise ValueError(f"node {u!r} not assigned to any cluster")
    total = sum(w for _u, _v, w in g.edges())
    if total == 0:
        return 0.0
    w_in: dict = {}
    strength: dict = {}
    for u, v, w in g.edges():
        cu, cv = assignment[u], assignment[v]
        if cu == cv:
            w_in[cu] = w_in.get(cu, 0.0) + w
        strength[cu] = strength.get(cu, 0.0) + w
        strength[cv] = strength.get(cv, 0.0) + w
    q = 0.0
    for cid in set(assignment.values()):
        s = strength.get(cid, 0.0)
        q += w_in.get(cid, 0.0) / total - resolution * (s / (2.0 * total)) ** 2
    return q


def _local_moves(adj, strengths, self_loops, total, resolution):
    """One local-move phase; returns (community list, improved flag).

    ``adj`` is a list of {neighbor: weight} dicts without self-loops;
    ``self_loops`` carries per-node self-loop weights from aggregation.
    """
    n = len(adj)
    comm = list(range(n))
    comm_strength = [strengths[i] + 2.0 * self_loops[i] for i in range(n)]
    node_strength = list(comm_strength)
    improved = False
    two_w = 2.0 * total
    while True:
        moved = False
        for i in range(n):
            current = comm[i]
            k_i = node_strength[i]
            weight_to: dict = {}
            for j, w in adj[i].items():
                weight_to[comm[j]] = weight_to.get(comm[j], 0.0) + w
            comm_strength[current] -= k_i
            half_norm = two_w * two_w / 2.0  # 2 W^2
            best_comm = current
            best_gain = weight_to.get(current, 0.0) / total - resolution * k_i * comm_strength[current] / half_norm
            # sorted targets: the smallest community id wins near-ties, and a
            # move needs a strictly positive gain over staying put
            for target in sorted(weight_to):
                if target == current:
                    continue
                gain = weight_to[target] / total - resolution * k_i * comm_strength[target] / half_norm
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_comm = target
            comm_strength[best_comm] += k_i
            if best_comm != current:
                comm[i] = best_comm
                moved = True
                improved = True
        if not moved:
            break
    return comm, improved


def _aggregate(adj, self_loops, comm):
    """Collapse communities into single nodes, merging edge weights."""
    ids = sorted(set(comm))
    remap = {old: new for new, old in enumerate(ids)}
    n2 = len(ids)
    new_adj: list = [{} for _ in range(n2)]
    new_self = [0.0] * n2
    for i, nbrs in enumerate(adj):
        ci = remap[comm[i]]
        new_self[ci] += self_loops[i]
        for j, w in nbrs.items():
            if j < i:
                continue
            cj = remap[comm[j]]
            if ci == cj:
                new_self[ci] += w
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
                new_adj[cj][ci] = new_adj[cj].get(ci, 0.0) + w
    return new_adj, new_self, remap


def detect_communities(g: Graph, seed_order=None, resolution: float = 1.0) -> Partition:
    """Greedy modularity clustering with a deterministic node ordering.

    ``seed_order`` fixes the order nodes are visited during local moves
    (default: sorted node ids). Cluster ids in the result are renumbered
    1..k by descending size, ties to the cluster holding the smallest node.
    """
    if g.n < 1:
        raise ValueError("community detection needs at least one node")
    order = list(seed_order) if seed_order is not None else g.nodes()
    if sorted(order) != g.nodes():
        raise ValueError("seed_order must enumerate exactly the graph's nodes")
    index = {u: i for i, u in enumerate(order)}

    adj: list = [{} for _ in order]
    for u, v, w in g.edges():
        i, j = index[u], index[v]
        adj[i][j] = w
        adj[j][i] = w
    self_loops = [0.0] * len(order)
    strengths = [sum(nbrs.values()) for nbrs in adj]
    total = sum(w for _u, _v, w in g.edges())

    membership = list(range(len(order)))  # original node -> current coarse node
    if total > 0:
        while True:
            comm, improved = _local_moves(adj, strengths, self_loops, total, resolution)
            if not improved:
                break
            adj, self_loops, remap = _aggregate(adj, self_loops, comm)
            strengths = [sum(nbrs.values()) for nbrs in adj]
            membership = [remap[comm[m]] for m in membership]
            if len(adj) == 1:
                break

    groups: dict = {}
    for node, coarse in zip(order, membership):
        groups.setdefault(coarse, []).append(node)
    ranked = sorted(groups.values(), key=lambda members: (-len(members), min(members)))
    assignment = {}
    sizes = {}
    for cid, members in enumerate(ranked, start=1):
        sizes[cid] = len(members)
        for node in members:
            assignment[node] = cid
    q = modularity(g, assignment, resolution=resolution)
    if q < 0.0:
        # all-in-one is always at least 0; never return anything worse
        assignment = {u: 1 for u in g.nodes()}
        sizes = {1: g.n}
        q = modularity(g, assignment, resolution=resolution)
    return Partition(assignment, q, sizes)


def composition(p: Partition) -> dict:
    """Exact per-cluster share of nodes, as percentages (Fractions sum to 100)."""
    total = sum(p.cluster_sizes.values())
    if total < 1:
        raise ValueError("composition needs at least one node")
    return {cid: Fraction(size * 100, total) for cid, size in p.cluster_sizes.items()}


def top_clusters(p: Partition, k: int) -> list:
    """The k largest cluster ids; ties go to the cluster with the smallest node."""
    if k < 1:
        raise ValueError("k must be >= 1")
    clusters = p.clusters()
    ranked = sorted(clusters, key=lambda cid: (-len(clusters[cid]), min(clusters[cid])))
    return ranked[:k]


def filter_top_betweenness(g: Graph, betweenness: dict, fraction: float) -> Graph:
    """Induced subgraph on the ceil(fraction*n) highest-betweenness nodes."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    count = math.ceil(fraction * g.n)
    ranked = sorted(g.nodes(), key=lambda u: (-betweenness[u], u))
    return g.subgraph(ranked[:count])
