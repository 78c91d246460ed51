"""Asymptotically optimal sampling-based follower planner (RRT*).

Tree vertices are cell centers. An edge is the straight segment between two
centers, probed every half cell: every probed cell must be passable. The
follower path along an edge is the 8-connected chain of probed cells, with
consecutive perpendicular axial steps merged into one diagonal, and the edge
cost is the trapezoidal cost of that chain. The returned cell sequence is
therefore an ordinary grid path whose cost ``follower.path_cost`` reproduces.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .grid_map import GridIndex
from .follower import SQRT2, SamplingStar


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def segment_probe_cells(d_row: int, d_col: int) -> list[tuple[int, int]]:
    """Cells hit when sampling the segment (0,0)->(d_row,d_col) every half cell."""
    length = math.hypot(d_row, d_col)
    n = max(1, math.ceil(length / 0.5))
    cells = [(0, 0)]
    for k in range(1, n + 1):
        cell = (_round_half_up(d_row * k / n), _round_half_up(d_col * k / n))
        if cell != cells[-1]:
            cells.append(cell)
    return cells


def segment_chain(d_row: int, d_col: int) -> list[tuple[int, int]]:
    """8-connected follower chain for the segment, diagonals merged."""
    chain = list(segment_probe_cells(d_row, d_col))
    out = [chain[0]]
    i = 1
    while i < len(chain):
        a, b = out[-1], chain[i]
        if i + 1 < len(chain):
            c = chain[i + 1]
            ab = (b[0] - a[0], b[1] - a[1])
            bc = (c[0] - b[0], c[1] - b[1])
            axial_ab = abs(ab[0]) + abs(ab[1]) == 1
            axial_bc = abs(bc[0]) + abs(bc[1]) == 1
            if axial_ab and axial_bc and ab[0] * bc[0] + ab[1] * bc[1] == 0:
                out.append(c)
                i += 2
                continue
        out.append(b)
        i += 1
    return out


@lru_cache(maxsize=64)
def _offset_table(radius_cells: float, width: int, resolution: float):
    """Per-offset flat probe offsets, diagonal corner pairs, chain offsets, step weights."""
    r = int(math.floor(radius_cells + 1e-9))
    table = {}
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            if (dr or dc) and dr * dr + dc * dc <= radius_cells * radius_cells + 1e-9:
                probes = segment_probe_cells(dr, dc)
                chain = segment_chain(dr, dc)
                weights = []
                corners = []
                for (r0, c0), (r1, c1) in zip(chain, chain[1:]):
                    diag = r0 != r1 and c0 != c1
                    weights.append(0.5 * resolution * (SQRT2 if diag else 1.0))
                    if diag:
                        corners.append((r0 * width + c1, r1 * width + c0))
                table[(dr, dc)] = (
                    tuple(pr * width + pc for pr, pc in probes),
                    tuple(corners),
                    tuple(cr * width + cc for cr, cc in chain),
                    tuple(weights),
                    tuple(chain),
                )
    return table


def sampling_star_cells(
    costs: NDArray[np.float64],
    start: GridIndex,
    goal: GridIndex,
    resolution: float,
    params: SamplingStar,
) -> list[GridIndex] | None:
    height, width = costs.shape
    start, goal = GridIndex(*start), GridIndex(*goal)
    if math.isinf(costs[start.row, start.col]) or math.isinf(costs[goal.row, goal.col]):
        return None
    if start == goal:
        return [start]

    radius = params.rewire_radius / resolution
    table = _offset_table(float(radius), width, float(resolution))
    flat_costs = costs.ravel().tolist()
    inf = math.inf
    finite = costs[np.isfinite(costs)]
    cheapest = float(finite.min()) * resolution

    def edge_cost(a_row: int, a_col: int, b_row: int, b_col: int) -> float:
        probes, corners, chain, weights, _ = table[(b_row - a_row, b_col - a_col)]
        base = a_row * width + a_col
        for off in probes:
            if flat_costs[base + off] == inf:
                return inf
        for k1, k2 in corners:
            if flat_costs[base + k1] == inf and flat_costs[base + k2] == inf:
                return inf
        total = 0.0
        prev = flat_costs[base + chain[0]]
        for off, w in zip(chain[1:], weights):
            cur = flat_costs[base + off]
            total += w * (prev + cur)
            prev = cur
        return total

    rng = np.random.default_rng(params.seed)
    cap = params.iterations + 2
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    parent = [-1]
    cost = [0.0]
    children: list[list[int]] = [[]]
    index = {(start.row, start.col): 0}
    rows[0], cols[0] = start.row, start.col
    n = 1
    r2 = radius * radius + 1e-9

    # draw all random numbers up front so the stream is independent of branch outcomes
    bias_draws = rng.random(params.iterations)
    sample_rows = rng.integers(0, height, params.iterations)
    sample_cols = rng.integers(0, width, params.iterations)

    for it in range(params.iterations):
        if bias_draws[it] < params.goal_bias:
            sr, sc = goal.row, goal.col
        else:
            sr, sc = int(sample_rows[it]), int(sample_cols[it])
        d2 = (rows[:n] - sr) ** 2 + (cols[:n] - sc) ** 2
        near = int(np.argmin(d2))
        dist = math.sqrt(float(d2[near]))
        if dist == 0.0:
            continue
        if dist > radius:
            scale = radius / dist
            nr = _round_half_up(rows[near] + (sr - rows[near]) * scale)
            nc = _round_half_up(cols[near] + (sc - cols[near]) * scale)
        else:
            nr, nc = sr, sc
        if (nr, nc) in index or math.isinf(flat_costs[nr * width + nc]):
            continue
        d2n = (rows[:n] - nr) ** 2 + (cols[:n] - nc) ** 2
        neighbors = np.flatnonzero(d2n <= r2).tolist()
        best, best_cost = -1, inf
        edge_to: dict[int, float] = {}
        for j in neighbors:
            e = edge_cost(int(rows[j]), int(cols[j]), nr, nc)
            edge_to[j] = e
            if cost[j] + e < best_cost:
                best, best_cost = j, cost[j] + e
        if best < 0:
            continue
        k = n
        rows[k], cols[k] = nr, nc
        parent.append(best)
        cost.append(best_cost)
        children.append([])
        children[best].append(k)
        index[(nr, nc)] = k
        n += 1
        for j in neighbors:
            if j == best or edge_to[j] == inf:
                continue
            jr, jc = int(rows[j]), int(cols[j])
            if best_cost + cheapest * math.hypot(jr - nr, jc - nc) >= cost[j]:
                continue
            candidate = best_cost + edge_cost(nr, nc, jr, jc)
            if candidate < cost[j] - 1e-12:
                children[parent[j]].remove(j)
                parent[j] = k
                children[k].append(j)
                delta = candidate - cost[j]
                stack = [j]
                while stack:
                    m = stack.pop()
                    cost[m] += delta
                    stack.extend(children[m])

    goal_id = index.get((goal.row, goal.col))
    if goal_id is None:
        return None
    branch = [goal_id]
    while branch[-1] != 0:
        branch.append(parent[branch[-1]])
    branch.reverse()
    cells = [start]
    for a, b in zip(branch, branch[1:]):
        ar, ac = int(rows[a]), int(cols[a])
        chain = table[(int(rows[b]) - ar, int(cols[b]) - ac)][4]
        cells.extend(GridIndex(ac + dc, ar + dr) for dr, dc in chain[1:])
    return cells
