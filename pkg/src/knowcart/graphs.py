"""Undirected weighted graph model and the network measures computed on it.

All centrality measures operate on the binary (unweighted) adjacency even
when edges carry weights; degree and mean degree optionally use weights.
Unreachable node pairs contribute zero to closeness and betweenness sums,
so every value stays finite on disconnected graphs.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_BETWEENNESS_CHUNK = 32  # fixed chunk size keeps reductions thread-count independent


class Graph:
    """Immutable undirected graph: no self-loops, no duplicate edges, weights > 0."""

    __slots__ = ("_adj", "_labels", "_edge_count")

    def __init__(self, nodes=(), edges=(), labels=None):
        self._adj: dict = {}
        self._labels: dict = dict(labels or {})
        self._edge_count = 0
        for u in nodes:
            self._adj.setdefault(u, {})
        for edge in edges:
            if len(edge) == 2:
                u, v = edge
                w = 1.0
            else:
                u, v, w = edge
            self._add_edge(u, v, float(w))

    def _add_edge(self, u, v, w: float):
        if u == v:
            raise ValueError(f"self-loop on node {u!r}")
        if w <= 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        self._adj.setdefault(u, {})
        self._adj.setdefault(v, {})
        if v in self._adj[u]:
            raise ValueError(f"duplicate edge {u!r}-{v!r}")
        self._adj[u][v] = w
        self._adj[v][u] = w
        self._edge_count += 1

    @property
    def n(self) -> int:
        return len(self._adj)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def nodes(self) -> list:
        return sorted(self._adj)

    def has_node(self, u) -> bool:
        return u in self._adj

    def neighbors(self, u) -> dict:
        return self._adj[u]

    def weight(self, u, v) -> float:
        return self._adj[u][v]

    def has_edge(self, u, v) -> bool:
        return u in self._adj and v in self._adj[u]

    def label(self, u) -> str:
        return self._labels.get(u, str(u))

    def labels(self) -> dict:
        return dict(self._labels)

    def edges(self) -> list:
        """Edges as (u, v, w) with u < v, sorted."""
        out = []
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if u < v:
                    out.append((u, v, w))
        out.sort(key=lambda e: (e[0], e[1]))
        return out

    def node_degree(self, u) -> int:
        return len(self._adj[u])

    def strength(self, u) -> float:
        return sum(self._adj[u].values())

    def subgraph(self, keep) -> "Graph":
        keep = set(keep)
        for u in keep:
            if u not in self._adj:
                raise KeyError(u)
        edges = [(u, v, w) for u, v, w in self.edges() if u in keep and v in keep]
        labels = {u: lbl for u, lbl in self._labels.items() if u in keep}
        return Graph(nodes=sorted(keep), edges=edges, labels=labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            set(self._adj) == set(other._adj)
            and self.edges() == other.edges()
        )

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"


@dataclass(frozen=True)
class EigenResult:
    """Dominant-eigenvector scores, max-normalized so the top node reads 1.0."""

    vector: dict
    dominant_eigenvalue: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class CentralityReport:
    """Per-node centralities plus the global mean degree and density."""

    degree: dict
    closeness: dict
    betweenness: dict
    eigencentrality: dict
    mean_degree: float
    density: float


def mean_degree(g: Graph, weighted: bool = False) -> float:
    """Average number of links per node (2L/n); strength average if weighted."""
    if g.n < 1:
        raise ValueError("mean degree needs at least one node")
    if weighted:
        return sum(g.strength(u) for u in g.nodes()) / g.n
    return 2.0 * g.edge_count / g.n


def density(g: Graph) -> float:
    """Proportion of present links out of all possible: 2L/(n(n-1))."""
    if g.n < 2:
        raise ValueError("density needs at least two nodes")
    return 2.0 * g.edge_count / (g.n * (g.n - 1))


def degree(g: Graph, k, weighted: bool = False):
    """Number of incident edges (or total incident weight if weighted)."""
    if not g.has_node(k):
        raise KeyError(k)
    return g.strength(k) if weighted else g.node_degree(k)


def _index_graph(g: Graph):
    order = g.nodes()
    index = {u: i for i, u in enumerate(order)}
    n = len(order)
    adj = np.zeros((n, n), dtype=np.float64)
    for u, v, _w in g.edges():
        i, j = index[u], index[v]
        adj[i, j] = 1.0
        adj[j, i] = 1.0
    return order, index, adj


def _bfs_layers(adj: np.ndarray, source: int):
    """Level-synchronous BFS: per-node distance, shortest-path counts, level masks."""
    n = adj.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n, dtype=np.float64)
    dist[source] = 0
    sigma[source] = 1.0
    frontier = np.zeros(n, dtype=bool)
    frontier[source] = True
    masks = [frontier]
    level = 0
    while True:
        inflow = adj[:, frontier] @ sigma[frontier]
        nxt = (dist < 0) & (inflow > 0)
        if not nxt.any():
            break
        level += 1
        dist[nxt] = level
        sigma[nxt] = inflow[nxt]
        frontier = nxt
        masks.append(frontier)
    return dist, sigma, masks


def closeness(g: Graph, k) -> float:
    """Sum of inverse shortest-path distances from ``k``, normalized by n-1."""
    if not g.has_node(k):
        raise KeyError(k)
    if g.n < 2:
        raise ValueError("closeness needs at least two nodes")
    order, index, adj = _index_graph(g)
    dist, _sigma, _masks = _bfs_layers(adj, index[k])
    reachable = dist > 0
    return float(np.sum(1.0 / dist[reachable])) / (g.n - 1)


def closeness_all(g: Graph) -> dict:
    if g.n < 2:
        raise ValueError("closeness needs at least two nodes")
    order, _index, adj = _index_graph(g)
    out = {}
    for i, u in enumerate(order):
        dist, _sigma, _masks = _bfs_layers(adj, i)
        reachable = dist > 0
        out[u] = float(np.sum(1.0 / dist[reachable])) / (g.n - 1)
    return out


def _betweenness_partial(adj: np.ndarray, sources) -> np.ndarray:
    """Sum of source dependencies (Brandes accumulation) over ``sources``."""
    n = adj.shape[0]
    acc = np.zeros(n, dtype=np.float64)
    for s in sources:
        _dist, sigma, masks = _bfs_layers(adj, s)
        delta = np.zeros(n, dtype=np.float64)
        for lev in range(len(masks) - 1, 0, -1):
            w_mask = masks[lev]
            v_mask = masks[lev - 1]
            coeff = (1.0 + delta[w_mask]) / sigma[w_mask]
            inflow = adj[:, w_mask] @ coeff
            delta[v_mask] += sigma[v_mask] * inflow[v_mask]
        delta[s] = 0.0
        acc += delta
    return acc


def betweenness_all(g: Graph, threads: int = 1) -> dict:
    """Pair-normalized betweenness for every node.

    Per-source BFS with Brandes-style dependency accumulation; the ordered
    per-pair sum is halved (undirected) and divided by (n-1)(n-2)/2.
    Sources are processed in fixed-size chunks and the chunk results are
    reduced in order, so output is identical for any thread count.
    """
    if g.n < 3:
        raise ValueError("betweenness needs at least three nodes")
    order, _index, adj = _index_graph(g)
    n = len(order)
    chunks = [range(lo, min(lo + _BETWEENNESS_CHUNK, n)) for lo in range(0, n, _BETWEENNESS_CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda c: _betweenness_partial(adj, c), chunks))
    else:
        partials = [_betweenness_partial(adj, c) for c in chunks]
    total = np.zeros(n, dtype=np.float64)
    for part in partials:
        total += part
    total /= (n - 1) * (n - 2)  # /2 for undirected double counting, /((n-1)(n-2)/2) to normalize
    return {u: float(total[i]) for i, u in enumerate(order)}


def eigencentrality(g: Graph, tol: float = 1e-10, max_iter: int = 10000) -> EigenResult:
    """Dominant eigenvector of the binary adjacency, from a uniform start.

    Iterates with the identity-shifted matrix (same eigenvectors) so the
    iteration also converges on bipartite structures, where the plain
    adjacency has a matching negative eigenvalue and oscillates forever.
    Convergence: successive max-normalized vectors differ by < tol in
    max-norm. The reported eigenvalue is the Rayleigh quotient of the
    unshifted adjacency.
    """
    if g.n < 1:
        raise ValueError("eigencentrality needs at least one node")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    order, _index, adj = _index_graph(g)
    n = len(order)
    if g.edge_count == 0:
        return EigenResult({u: 0.0 for u in order}, 0.0, 0, False)
    x = np.full(n, 1.0 / n, dtype=np.float64)
    x /= x.max()
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        y = adj @ x + x
        y /= y.max()
        if float(np.max(np.abs(y - x))) < tol:
            x = y
            converged = True
            break
        x = y
    lam = float(x @ (adj @ x)) / float(x @ x)
    vector = {u: float(x[i]) for i, u in enumerate(order)}
    return EigenResult(vector, lam, iterations, converged)


def compute_report(g: Graph, tol: float = 1e-10, max_iter: int = 10000, threads: int = 1) -> CentralityReport:
    """All four per-node measures plus mean degree and density in one pass."""
    deg = {u: g.node_degree(u) for u in g.nodes()}
    return CentralityReport(
        degree=deg,
        closeness=closeness_all(g),
        betweenness=betweenness_all(g, threads=threads),
        eigencentrality=eigencentrality(g, tol=tol, max_iter=max_iter).vector,
        mean_degree=mean_degree(g),
        density=density(g),
    )


def connected_components(g: Graph) -> list[list]:
    seen = set()
    components = []
    for start in g.nodes():
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = [start]
        while queue:
            u = queue.pop()
            for v in g.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    comp.append(v)
                    queue.append(v)
        components.append(sorted(comp))
    return components


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest component; ties to the smallest min id."""
    if g.n == 0:
        return Graph()
    components = connected_components(g)
    best = sorted(components, key=lambda c: (-len(c), c[0]))[0]
    return g.subgraph(best)


def edge_list_text(g: Graph) -> str:
    """Tab-separated ``src dst weight`` lines, sorted; integral weights as ints."""
    lines = []
    for u, v, w in g.edges():
        wtxt = str(int(w)) if float(w).is_integer() else repr(w)
        lines.append(f"{u}\t{v}\t{wtxt}")
    return "\n".join(lines) + ("\n" if lines else "")


def node_table_text(g: Graph) -> str:
    """CSV node table ``id,label`` covering every node, sorted by id."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["id", "label"])
    for u in g.nodes():
        writer.writerow([u, g.label(u)])
    return buf.getvalue()


def graph_from_text(edge_text: str, node_text: str | None = None) -> Graph:
    """Rebuild a graph from the edge-list / node-table pair."""
    nodes: list = []
    labels: dict = {}
    if node_text is not None:
        reader = csv.reader(io.StringIO(node_text))
        header = next(reader, None)
        if header is not None and header != ["id", "label"]:
            raise ValueError("node table must have header id,label")
        for row in reader:
            if not row:
                continue
            nodes.append(row[0])
            labels[row[0]] = row[1] if len(row) > 1 else row[0]
    edges = []
    for line in edge_text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"malformed edge line: {line!r}")
        edges.append((parts[0], parts[1], float(parts[2])))
    return Graph(nodes=nodes, edges=edges, labels=labels)


def write_graph_files(g: Graph, edges_path, nodes_path) -> None:
    with open(edges_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(edge_list_text(g))
    with open(nodes_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(node_table_text(g))


def read_graph_files(edges_path, nodes_path=None) -> Graph:
    with open(edges_path, "r", encoding="utf-8", newline="") as fh:
        edge_text = fh.read()
    node_text = None
    if nodes_path is not None:
        with open(nodes_path, "r", encoding="utf-8", newline="") as fh:
            node_text = fh.read()
    return graph_from_text(edge_text, node_text)
