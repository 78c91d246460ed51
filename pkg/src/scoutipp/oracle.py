"""Ground-truth optimum via exhaustive Dijkstra (scipy.sparse.csgraph).

The graph is assembled with vectorized numpy, independently of the A*
expansion loop in :mod:`scoutipp.follower`, and serves as its cross-check.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .follower import FollowerPath, path_cost
from .grid_map import GridIndex, GroundTruthScene


def grid_graph(costs: NDArray[np.float64], resolution: float) -> coo_matrix:
    """Directed 8-connected graph with trapezoidal edge weights."""
    height, width = costs.shape
    free = np.isfinite(costs)
    ids = np.arange(height * width).reshape(height, width)
    src, dst, wts = [], [], []
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        r0, r1 = max(0, -dr), height - max(0, dr)
        c0, c1 = max(0, -dc), width - max(0, dc)
        a = (slice(r0, r1), slice(c0, c1))
        b = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
        ok = free[a] & free[b]
        length = resolution * (math.sqrt(2.0) if dr and dc else 1.0)
        if dr and dc:
            # corner cells of the diagonal move a -> b
            corner1 = free[(slice(r0, r1), slice(c0 + dc, c1 + dc))]
            corner2 = free[(slice(r0 + dr, r1 + dr), slice(c0, c1))]
            ok &= corner1 | corner2
        w = 0.5 * length * (costs[a] + costs[b])
        for u, v in ((ids[a], ids[b]), (ids[b], ids[a])):
            src.append(u[ok])
            dst.append(v[ok])
            wts.append(w[ok])
    n = height * width
    return coo_matrix(
        (np.concatenate(wts), (np.concatenate(src), np.concatenate(dst))), shape=(n, n)
    )


def dijkstra_path(
    costs: NDArray[np.float64], start: GridIndex, goal: GridIndex, resolution: float
) -> list[GridIndex] | None:
    height, width = costs.shape
    start, goal = GridIndex(*start), GridIndex(*goal)
    if not (np.isfinite(costs[start.row, start.col]) and np.isfinite(costs[goal.row, goal.col])):
        return None
    if start == goal:
        return [start]
    graph = grid_graph(costs, resolution).tocsr()
    s = start.row * width + start.col
    t = goal.row * width + goal.col
    dist, pred = dijkstra(graph, directed=True, indices=s, return_predecessors=True)
    if not np.isfinite(dist[t]):
        return None
    flat = [t]
    while flat[-1] != s:
        flat.append(int(pred[flat[-1]]))
    flat.reverse()
    return [GridIndex(u % width, u // width) for u in flat]


def oracle_path(scene: GroundTruthScene) -> FollowerPath | None:
    cells = dijkstra_path(scene.follower_cost, scene.start, scene.goal, scene.resolution)
    if cells is None:
        return None
    cost = path_cost(cells, scene.follower_cost, scene.resolution)
    return FollowerPath(tuple(cells), cost, "ground_truth")


def oracle_optimum(scene: GroundTruthScene) -> float | None:
    """Exact optimal follower cost on the full scene, ``None`` if no path exists."""
    path = oracle_path(scene)
    return None if path is None else path.total_cost
