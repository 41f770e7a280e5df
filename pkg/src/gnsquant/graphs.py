"""Weighted undirected graphs: builders, Laplacian, BFS hops, file formats.

Graphs are dense and immutable; the experiments run at a few thousand
vertices where dense storage is simpler and fast enough, and the
quantization algorithms read arbitrary filter columns anyway.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from gnsquant.rng import Xoshiro256StarStar

POINT_CLOUD_KINDS = ("sphere", "swiss_roll", "grid2d")


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or point-cloud files."""


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph with symmetric nonnegative weights.

    Invariants (checked in :meth:`from_weights`): ``weights`` is square and
    bit-exactly symmetric, has a zero diagonal (no self-loops) and no
    negative entries.  Instances are immutable and safe to share.
    """

    n_vertices: int
    weights: np.ndarray = field(repr=False)
    edge_count: int

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "Graph":
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        if not np.array_equal(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise ValueError("self-loops are not allowed (nonzero diagonal)")
        if np.any(w < 0.0):
            raise ValueError("edge weights must be nonnegative")
        w = w.copy()
        w.flags.writeable = False
        n = w.shape[0]
        edge_count = int(np.count_nonzero(np.triu(w, k=1)))
        return cls(n_vertices=n, weights=w, edge_count=edge_count)

    def degrees(self) -> np.ndarray:
        """Degree vector d, d_m = sum_n W[m, n]."""
        return self.weights.sum(axis=1)

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.weights[v] > 0.0)

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return True
        return bool(np.all(np.isfinite(bfs_distances(self, 0))))


def build_grid(rows: int, cols: int) -> Graph:
    """2D grid graph with unit weights, 4-neighborhood, row-major indexing."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError(f"grid needs rows*cols >= 2, got {rows}x{cols}")
    n = rows * cols
    w = np.zeros((n, n))
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                w[v, v + 1] = w[v + 1, v] = 1.0
            if i + 1 < rows:
                w[v, v + cols] = w[v + cols, v] = 1.0
    return Graph.from_weights(w)


def build_cycle(n: int) -> Graph:
    """Unit-weight cycle C_n, n >= 3."""
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    w = np.zeros((n, n))
    for v in range(n):
        u = (v + 1) % n
        w[v, u] = w[u, v] = 1.0
    return Graph.from_weights(w)


def build_knn_points(points: np.ndarray, k: int, sigma: float | None = None) -> Graph:
    """Symmetrized k-nearest-neighbor graph over a point cloud.

    Edge (i, j) exists when j is among i's k nearest points in Euclidean
    distance or vice versa; its weight is exp(-||p_i - p_j||^2 / (2 sigma^2)).
    Distance ties are broken toward the smaller vertex index so seeded
    pipelines stay deterministic.  When ``sigma`` is None it defaults to the
    mean k-th-neighbor distance.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"points must be a 2D array, got shape {pts.shape}")
    n = pts.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ValueError(f"k must be < number of points, got k={k} for {n} points")
    if sigma is not None and sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    diffs = pts[:, None, :] - pts[None, :, :]
    sq_dist = np.einsum("ijk,ijk->ij", diffs, diffs)
    # Sort candidates by (distance, index); argsort is stable so ties fall
    # to the smaller index on their own.
    order = np.argsort(sq_dist, axis=1, kind="stable")
    kth_dist = np.empty(n)
    nn_sets: list[np.ndarray] = []
    for i in range(n):
        cand = order[i][order[i] != i][:k]
        nn_sets.append(cand)
        kth_dist[i] = math.sqrt(sq_dist[i, cand[-1]])
    if sigma is None:
        sigma = float(np.mean(kth_dist))
        if sigma <= 0:
            sigma = 1.0  # all points coincide; any scale gives unit weights

    w = np.zeros((n, n))
    denom = 2.0 * sigma * sigma
    for i in range(n):
        for j in nn_sets[i]:
            weight = math.exp(-sq_dist[i, j] / denom)
            w[i, j] = weight
            w[j, i] = weight
    return Graph.from_weights(w)


def generate_point_cloud(kind: str, n: int, seed: int) -> np.ndarray:
    """Synthetic point cloud, deterministic in `seed`.

    ``sphere``: uniform on the unit sphere via normalized Gaussian triples.
    ``swiss_roll``: (t cos t, h, t sin t) with t ~ U[1.5pi, 4.5pi],
    h ~ U[0, 21].  ``grid2d``: unit-spacing lattice, row-major (no
    randomness).
    """
    if n < 4:
        raise ValueError(f"point cloud needs n >= 4, got {n}")
    if kind not in POINT_CLOUD_KINDS:
        raise ValueError(f"unknown point cloud kind {kind!r}; expected one of {POINT_CLOUD_KINDS}")
    rng = Xoshiro256StarStar(seed)
    if kind == "sphere":
        pts = np.empty((n, 3))
        for i in range(n):
            while True:
                g = np.array(rng.normals(3))
                norm = float(np.linalg.norm(g))
                if norm > 1e-12:
                    break
            pts[i] = g / norm
        return pts
    if kind == "swiss_roll":
        pts = np.empty((n, 3))
        for i in range(n):
            t = rng.uniform(1.5 * math.pi, 4.5 * math.pi)
            h = rng.uniform(0.0, 21.0)
            pts[i] = (t * math.cos(t), h, t * math.sin(t))
        return pts
    side = math.ceil(math.sqrt(n))
    pts = np.array([(i % side, i // side) for i in range(n)], dtype=float)
    return pts


def normalized_laplacian(g: Graph) -> np.ndarray:
    """Normalized Laplacian D^{-1/2} (D - W) D^{-1/2} as a dense array.

    Diagonal entries are exactly 1; the result is bit-exactly symmetric.
    """
    d = g.degrees()
    zero = np.flatnonzero(d <= 0.0)
    if zero.size:
        raise ValueError(f"vertex {int(zero[0])} is isolated (zero degree)")
    inv_sqrt = 1.0 / np.sqrt(d)
    lap = -g.weights * np.outer(inv_sqrt, inv_sqrt)
    np.fill_diagonal(lap, 1.0)
    return lap


def bfs_distances(g: Graph, start: int) -> np.ndarray:
    """Hop distance from `start` to every vertex; inf where unreachable."""
    if not 0 <= start < g.n_vertices:
        raise ValueError(f"start vertex {start} out of range [0, {g.n_vertices})")
    dist = np.full(g.n_vertices, np.inf)
    dist[start] = 0.0
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if dist[u] == np.inf:
                dist[u] = dist[v] + 1
                queue.append(int(u))
    return dist


def eccentricity(g: Graph, start: int) -> int:
    """Max hop distance from `start` within its connected component."""
    dist = bfs_distances(g, start)
    finite = dist[np.isfinite(dist)]
    return int(finite.max())


def k_hop_sets(g: Graph, start: int, s_max: int) -> list[set[int]]:
    """Hop shells T_1..T_{s_max}: T_k holds vertices at BFS distance exactly k."""
    if s_max < 1:
        raise ValueError(f"s_max must be >= 1, got {s_max}")
    dist = bfs_distances(g, start)
    return [set(np.flatnonzero(dist == k).tolist()) for k in range(1, s_max + 1)]


def load_edge_list(path) -> Graph:
    """Read the edge-list format: first line N, then "u v w" lines, '#' comments.

    Indices are 0-based with u < v.  Self-loops and duplicate edges with
    conflicting weights are rejected with the offending line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    n = None
    weights = None
    seen: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: expected vertex count, got {line!r}")
            if n < 1:
                raise GraphFormatError(f"{path}:{lineno}: vertex count must be >= 1, got {n}")
            weights = np.zeros((n, n))
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v w', got {line!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v w', got {line!r}")
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on vertex {u}")
        if not 0 <= u < v < n:
            raise GraphFormatError(f"{path}:{lineno}: need 0 <= u < v < {n}, got u={u} v={v}")
        if w < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative weight {w}")
        if (u, v) in seen and seen[(u, v)] != w:
            raise GraphFormatError(
                f"{path}:{lineno}: duplicate edge ({u},{v}) with conflicting weight "
                f"{w} (was {seen[(u, v)]})"
            )
        seen[(u, v)] = w
        weights[u, v] = weights[v, u] = w
    if n is None:
        raise GraphFormatError(f"{path}: empty file")
    return Graph.from_weights(weights)


def save_edge_list(g: Graph, path) -> None:
    """Write the edge-list format; weights keep full precision via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n_vertices}\n")
        for u in range(g.n_vertices):
            for v in range(u + 1, g.n_vertices):
                w = float(g.weights[u, v])
                if w != 0.0:
                    fh.write(f"{u} {v} {w!r}\n")


def load_point_cloud(path) -> np.ndarray:
    """Read a point-cloud CSV: one point per line, d decimal columns."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.split(",") if p.strip()]
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: expected decimal columns, got {line!r}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected {width} columns, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise GraphFormatError(f"{path}: empty point cloud")
    return np.array(rows)


def save_point_cloud(points: np.ndarray, path) -> None:
    pts = np.asarray(points, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for row in pts:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
