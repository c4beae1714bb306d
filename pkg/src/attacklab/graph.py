"""Undirected communication graphs, Laplacians and spectral decompositions.

Agent IDs are 1-based throughout, both in memory and in files.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or invalid generator arguments."""


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on agents ``1..n``.

    ``edges`` holds unordered pairs normalised to ``(min, max)``.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"graph needs at least one agent, got n={self.n}")
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop on agent {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge ({i}, {j}) has an agent outside [1, {self.n}]")
            if i > j:
                raise GraphError(f"edge ({i}, {j}) is not normalised")

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = 1.0
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def neighbors(self, i: int) -> list[int]:
        out = [b if a == i else a for a, b in self.edges if i in (a, b)]
        return sorted(out)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues and matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigvecs: np.ndarray


def _normalise(n: int, pairs) -> frozenset[tuple[int, int]]:
    out = set()
    for pair in pairs:
        i, j = (int(v) for v in pair)
        if i == j:
            raise GraphError(f"self-loop on agent {i}")
        key = (min(i, j), max(i, j))
        if key in out:
            raise GraphError(f"duplicate edge {key}")
        out.add(key)
    return frozenset(out)


def path_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError(f"path graph needs n >= 1, got {n}")
    return Graph(n, frozenset((i, i + 1) for i in range(1, n)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle graph needs n >= 3, got {n}")
    return Graph(n, _normalise(n, [(i, i % n + 1) for i in range(1, n + 1)]))


def explicit_graph(n: int, edges) -> Graph:
    if n < 1:
        raise GraphError(f"graph needs n >= 1, got {n}")
    return Graph(n, _normalise(n, edges))


def geometric_positions(n: int, width: float, seed: int) -> np.ndarray:
    """Uniform i.i.d. node positions in ``[0, width]^2``."""
    return np.random.default_rng(seed).uniform(0.0, width, size=(n, 2))


def random_geometric_graph(n: int, width: float, radius: float, seed: int) -> Graph:
    """Random geometric graph; no retry for connectivity, check with :func:`is_connected`."""
    if n < 1:
        raise GraphError(f"graph needs n >= 1, got {n}")
    if width <= 0 or radius <= 0:
        raise GraphError("width and radius must be positive")
    pos = geometric_positions(n, width, seed)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    ii, jj = np.nonzero(np.triu(dist <= radius, k=1))
    return Graph(n, frozenset((int(i) + 1, int(j) + 1) for i, j in zip(ii, jj)))


def connectivity_radius(n: int, width: float, seed: int) -> float:
    """Smallest radius making the seeded layout connected (longest MST edge)."""
    pos = geometric_positions(n, width, seed)
    if n == 1:
        return 0.0
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    # Prim's algorithm, dense
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    longest = 0.0
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        k = int(np.argmin(cand))
        longest = max(longest, float(cand[k]))
        in_tree[k] = True
        best = np.minimum(best, dist[k])
    return longest


def laplacian(g: Graph) -> np.ndarray:
    adj = g.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def is_connected(g: Graph) -> bool:
    adj: dict[int, list[int]] = {i: [] for i in range(1, g.n + 1)}
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {1}
    queue = deque([1])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == g.n


def spectral_decompose(L: np.ndarray) -> SpectralData:
    """Orthonormal eigendecomposition ``L = U diag(lam) U^T`` of a symmetric matrix.

    Eigenvalues ascend. Each eigenvector is signed so that its first
    entry of largest magnitude is non-negative, which makes the result
    reproducible across LAPACK builds for simple eigenvalues.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise GraphError(f"expected a square matrix, got shape {L.shape}")
    if L.size and np.max(np.abs(L - L.T)) > 1e-10:
        raise GraphError("matrix is not symmetric")
    lam, U = np.linalg.eigh(0.5 * (L + L.T))
    for k in range(U.shape[1]):
        col = U[:, k]
        mag = np.abs(col)
        idx = int(np.argmax(mag >= mag.max() - 1e-12))
        if col[idx] < 0:
            U[:, k] = -col
    return SpectralData(eigenvalues=lam, eigvecs=U)


def read_graph(path: str | Path) -> Graph:
    """Parse the text format: ``n=<int>`` then one ``i j`` pair per line."""
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise GraphError("graph file must start with 'n=<int>'")
    try:
        n = int(lines[0][2:])
    except ValueError as exc:
        raise GraphError(f"bad agent count line {lines[0]!r}") from exc
    pairs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise GraphError(f"expected 'i j', got {ln!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return explicit_graph(n, pairs)


def write_graph(g: Graph, path: str | Path) -> None:
    body = "\n".join(f"{i} {j}" for i, j in g.sorted_edges())
    Path(path).write_text(f"n={g.n}\n{body}\n" if body else f"n={g.n}\n", encoding="utf-8")
