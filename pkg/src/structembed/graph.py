"""Compact undirected graph over dense integer node ids.

Adjacency is stored CSR-style (offsets + sorted targets). Graphs are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "GraphLoad",
    "EdgeSplit",
    "GraphGenSpec",
    "GraphError",
    "load_edge_list",
    "save_edge_list",
    "save_node_labels",
    "parse_edge_lines",
    "neighborhood_subgraph",
    "split_edges_for_link_prediction",
    "generate_erdos_renyi",
    "clone_graph_with_bridge",
    "bfs_distances",
]


class GraphError(ValueError):
    """Malformed input or an operation precondition that does not hold."""


class Graph:
    """Undirected simple graph: no self loops, no duplicate edges.

    Neighbor lists are sorted ascending. ``targets`` has length 2*num_edges
    (each edge stored in both directions).
    """

    __slots__ = ("offsets", "targets", "num_nodes", "num_edges")

    def __init__(self, offsets: np.ndarray, targets: np.ndarray):
        self.offsets = offsets
        self.targets = targets
        self.num_nodes = len(offsets) - 1
        self.num_edges = len(targets) // 2
        offsets.setflags(write=False)
        targets.setflags(write=False)

    @classmethod
    def from_edges(cls, edges, num_nodes: int | None = None) -> "Graph":
        """Build from an iterable of (u, v) int pairs.

        Duplicates (in either direction) collapse; self loops are dropped.
        """
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise GraphError("edges must be pairs")
        if num_nodes is None:
            num_nodes = int(arr.max()) + 1 if arr.size else 0
        if arr.size and (arr.min() < 0 or arr.max() >= num_nodes):
            raise GraphError("node id out of range")
        keep = arr[:, 0] != arr[:, 1]
        arr = arr[keep]
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        uniq = np.unique(lo * num_nodes + hi) if num_nodes else np.empty(0, np.int64)
        lo, hi = uniq // max(num_nodes, 1), uniq % max(num_nodes, 1)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(offsets, dst.astype(np.int32))

    def neighbors(self, n: int) -> np.ndarray:
        return self.targets[self.offsets[n]:self.offsets[n + 1]]

    def degree(self, n: int) -> int:
        return int(self.offsets[n + 1] - self.offsets[n])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.num_nodes else 0

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def edge_array(self) -> np.ndarray:
        """All edges as an (num_edges, 2) array with u < v, sorted."""
        src = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        mask = src < self.targets
        return np.column_stack([src[mask], self.targets[mask]])

    def is_connected(self) -> bool:
        if self.num_nodes == 0:
            return False
        dist = bfs_distances(self, 0)
        return bool((dist >= 0).all())


def bfs_distances(g: Graph, start: int, max_depth: int | None = None) -> np.ndarray:
    """Hop distances from ``start``; -1 marks unreached nodes."""
    dist = np.full(g.num_nodes, -1, dtype=np.int32)
    dist[start] = 0
    frontier = np.array([start], dtype=np.int32)
    depth = 0
    while frontier.size and (max_depth is None or depth < max_depth):
        chunks = [g.targets[g.offsets[u]:g.offsets[u + 1]] for u in frontier]
        nxt = np.concatenate(chunks) if chunks else np.empty(0, np.int32)
        nxt = nxt[dist[nxt] < 0]
        if nxt.size == 0:
            break
        nxt = np.unique(nxt)
        depth += 1
        dist[nxt] = depth
        frontier = nxt
    return dist


@dataclass
class GraphLoad:
    """Result of parsing an edge list with external labels."""

    graph: Graph
    node_labels: list[str]
    self_loops_dropped: int
    duplicates_dropped: int

    def label_to_id(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.node_labels)}


def parse_edge_lines(lines, comment: str = "#") -> GraphLoad:
    label_ids: dict[str, int] = {}
    edges = []
    self_loops = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(comment):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected two tokens, got {len(parts)}")
        ids = []
        for tok in parts:
            if tok not in label_ids:
                label_ids[tok] = len(label_ids)
            ids.append(label_ids[tok])
        if ids[0] == ids[1]:
            self_loops += 1
            continue
        edges.append(ids)
    if not label_ids:
        raise GraphError("empty graph: no edges found")
    g = Graph.from_edges(np.asarray(edges, dtype=np.int64), num_nodes=len(label_ids))
    dups = len(edges) - g.num_edges
    labels = [None] * len(label_ids)
    for lab, i in label_ids.items():
        labels[i] = lab
    return GraphLoad(g, labels, self_loops, dups)


def load_edge_list(path, comment: str = "#") -> GraphLoad:
    """Parse a whitespace-separated edge list file.

    Node labels are arbitrary tokens, mapped to dense ids in order of first
    appearance. Lines starting with ``comment`` are skipped; duplicate and
    reversed-duplicate edges collapse; self loops are dropped (counted).
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            return parse_edge_lines(f, comment)
        except GraphError as e:
            raise GraphError(f"{path}: {e}") from None


def save_edge_list(g: Graph, path, node_labels: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for u, v in g.edge_array():
            if node_labels is not None:
                f.write(f"{node_labels[u]} {node_labels[v]}\n")
            else:
                f.write(f"{u} {v}\n")


def save_node_labels(labels: list[str], path) -> None:
    """Persist the external-label -> dense-id dictionary (one per line)."""
    with open(path, "w", encoding="utf-8") as f:
        for i, lab in enumerate(labels):
            f.write(f"{lab}\t{i}\n")


def neighborhood_subgraph(g: Graph, n: int, alpha: int):
    """All nodes within hop distance ``alpha`` of ``n`` and their degrees
    inside the induced subgraph.

    Returns ``(nodes, dists, induced_degrees)`` as aligned arrays sorted by
    node id. Only edges with both endpoints inside the ball count toward the
    induced degree.
    """
    if not 0 <= n < g.num_nodes:
        raise GraphError(f"node {n} out of range")
    if alpha < 0:
        raise GraphError("alpha must be >= 0")
    dist = bfs_distances(g, n, max_depth=alpha)
    nodes = np.flatnonzero(dist >= 0).astype(np.int32)
    dists = dist[nodes]
    if nodes.size == 1:
        return nodes, dists, np.zeros(1, dtype=np.int64)
    chunks = [g.targets[g.offsets[u]:g.offsets[u + 1]] for u in nodes]
    bounds = np.zeros(len(chunks) + 1, dtype=np.int64)
    np.cumsum([c.size for c in chunks], out=bounds[1:])
    flat = np.concatenate(chunks)
    inside = (dist[flat] >= 0).astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(inside)])
    induced = csum[bounds[1:]] - csum[bounds[:-1]]
    return nodes, dists, induced


@dataclass
class EdgeSplit:
    """Link-prediction data: mutilated-but-connected train graph plus
    balanced positive (removed) and negative (non-edge) pairs."""

    train_graph: Graph
    positive_edges: np.ndarray  # (k, 2)
    negative_edges: np.ndarray  # (k, 2)


def _spanning_tree_edge_mask(g: Graph) -> np.ndarray:
    """Boolean mask over edge_array rows marking BFS spanning-tree edges."""
    edges = g.edge_array()
    parent = np.full(g.num_nodes, -1, dtype=np.int64)
    seen = np.zeros(g.num_nodes, dtype=bool)
    seen[0] = True
    q = deque([0])
    tree_pairs = set()
    while q:
        u = q.popleft()
        for v in g.neighbors(u):
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                tree_pairs.add((min(u, int(v)), max(u, int(v))))
                q.append(int(v))
    mask = np.array([(int(u), int(v)) in tree_pairs for u, v in edges])
    return mask


def split_edges_for_link_prediction(g: Graph, fraction: float, seed: int) -> EdgeSplit:
    """Remove ``floor(fraction * |E|)`` non-bridge edges, keeping the
    remainder connected, and sample an equal number of non-edges.

    Removal picks among non-spanning-tree edges in shuffled order, so
    connectivity is preserved by construction. Raises when the quota exceeds
    the number of removable edges, reporting the achievable maximum.
    """
    if not g.is_connected():
        raise GraphError("graph must be connected before splitting")
    if not 0.0 < fraction < 1.0:
        raise GraphError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    edges = g.edge_array()
    quota = int(fraction * g.num_edges)
    tree_mask = _spanning_tree_edge_mask(g)
    removable = np.flatnonzero(~tree_mask)
    if quota > removable.size:
        raise GraphError(
            f"cannot remove {quota} edges while staying connected; "
            f"at most {removable.size} non-tree edges are removable"
        )
    rng.shuffle(removable)
    removed_idx = removable[:quota]
    keep_mask = np.ones(g.num_edges, dtype=bool)
    keep_mask[removed_idx] = False
    train = Graph.from_edges(edges[keep_mask], num_nodes=g.num_nodes)
    positives = edges[removed_idx]

    n = g.num_nodes
    existing = set((int(u) * n + int(v)) for u, v in edges)
    negatives = []
    seen = set()
    # Rejection sampling in batches; exact for sparse graphs.
    while len(negatives) < quota:
        need = quota - len(negatives)
        cand = rng.integers(0, n, size=(max(64, 2 * need), 2))
        for u, v in cand:
            if u == v:
                continue
            a, b = (int(u), int(v)) if u < v else (int(v), int(u))
            key = a * n + b
            if key in existing or key in seen:
                continue
            seen.add(key)
            negatives.append((a, b))
            if len(negatives) == quota:
                break
    return EdgeSplit(train, positives, np.asarray(negatives, dtype=np.int64))


@dataclass(frozen=True)
class GraphGenSpec:
    num_nodes: int
    avg_degree: float
    seed: int

    def __post_init__(self):
        if self.num_nodes < 2:
            raise GraphError("num_nodes must be >= 2")
        if self.avg_degree < 0:
            raise GraphError("avg_degree must be >= 0")


def generate_erdos_renyi(spec: GraphGenSpec) -> Graph:
    """G(n, p) with p = avg_degree / (n - 1), deterministic under seed.

    Uses geometric skipping over the ordered pair space, O(|E|) expected.
    """
    n = spec.num_nodes
    p = min(1.0, spec.avg_degree / (n - 1))
    rng = np.random.default_rng(spec.seed)
    if p <= 0.0:
        return Graph.from_edges(np.empty((0, 2), np.int64), num_nodes=n)
    total_pairs = n * (n - 1) // 2
    edges = []
    pos = -1
    log1mp = np.log1p(-p) if p < 1.0 else None
    while True:
        if p >= 1.0:
            skip = 1
        else:
            skip = 1 + int(np.floor(np.log(1.0 - rng.random()) / log1mp))
        pos += skip
        if pos >= total_pairs:
            break
        # Invert pos -> (u, v) in the u-major triangular enumeration.
        u = int((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * pos)) // 2)
        base = u * (2 * n - u - 1) // 2
        while base + (n - 1 - u) <= pos:  # guard float edge cases
            u += 1
            base = u * (2 * n - u - 1) // 2
        while base > pos:
            u -= 1
            base = u * (2 * n - u - 1) // 2
        v = u + 1 + (pos - base)
        edges.append((u, v))
    arr = np.asarray(edges, dtype=np.int64) if edges else np.empty((0, 2), np.int64)
    return Graph.from_edges(arr, num_nodes=n)


@dataclass
class ClonedGraph:
    """Two identical copies joined by one random bridge edge."""

    graph: Graph
    bridge: tuple[int, int]  # (node in copy A, node in copy B)


def clone_graph_with_bridge(g: Graph, seed: int) -> ClonedGraph:
    """Duplicate ``g`` and connect the copies with a single random edge.

    Node i of copy B becomes node i + |V|. Output: 2|V| nodes, 2|E|+1 edges.
    """
    if not g.is_connected():
        raise GraphError("graph must be connected")
    rng = np.random.default_rng(seed)
    n = g.num_nodes
    edges = g.edge_array()
    a = int(rng.integers(0, n))
    b = int(rng.integers(0, n)) + n
    all_edges = np.vstack([edges, edges + n, [[a, b]]])
    return ClonedGraph(Graph.from_edges(all_edges, num_nodes=2 * n), (a, b))
