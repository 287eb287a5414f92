"""Random undirected communication graphs.

Edges are a uniformly random subset of all agent pairs, with exactly
``floor(n (n - 1) / 2 * eta)`` edges. Disconnected draws are rejected and
redrawn from the next substream, so the result is uniform over connected
graphs of that size.

All randomness comes from numpy's PCG64 bit generator seeded with
``SeedSequence([seed, attempt])``; traces are portable across platforms.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TOL


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("a graph needs at least one agent")
        canon = set()
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop at agent {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            e = (min(i, j), max(i, j))
            if e in canon:
                raise GraphError(f"duplicate edge {e}")
            canon.add(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def is_connected(g: Graph) -> bool:
    """Breadth-first traversal from agent 0 reaches every agent."""
    adj = g.neighbors()
    seen = [False] * g.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == g.n


def edge_count(n: int, eta: float) -> int:
    return math.floor(n * (n - 1) / 2 * eta)


def generate_random_graph(n: int, eta: float, seed: int, max_retries: int | None = None) -> Graph:
    """Draw a connected graph with ``floor(n(n-1)/2 * eta)`` uniform random edges.

    Parameters
    ----------
    n : int
        Number of agents, at least 2.
    eta : float
        Edge density in (0, 1].
    seed : int
        64-bit seed. Attempt ``a`` uses ``SeedSequence([seed, a])``.
    max_retries : int, optional
        Bound on rejected draws (default 1000).

    Raises
    ------
    GraphError
        If the edge budget cannot connect ``n`` agents, or no connected draw
        was found within the retry bound.
    """
    if n < 2:
        raise GraphError("need n >= 2")
    if not (0.0 < eta <= 1.0):
        raise GraphError("eta must lie in (0, 1]")
    m = edge_count(n, eta)
    if m < n - 1:
        raise GraphError(f"{m} edges cannot connect {n} agents (need at least {n - 1})")
    retries = TOL.connect_retries if max_retries is None else max_retries
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(retries + 1):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, attempt])))
        pick = np.sort(rng.choice(iu.size, size=m, replace=False))
        g = Graph(n, tuple(zip(iu[pick].tolist(), ju[pick].tolist())))
        if is_connected(g):
            return g
    raise GraphError(f"no connected graph after {retries} retries (n={n}, eta={eta})")


def dump_edge_list(g: Graph, path) -> None:
    lines = [f"n={g.n}"] + [f"{i} {j}" for i, j in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path) -> Graph:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise GraphError("edge list must start with 'n=<count>'")
    n = int(lines[0][2:])
    edges = []
    for ln in lines[1:]:
        i, j = ln.split()
        edges.append((int(i), int(j)))
    return Graph(n, tuple(edges))
