"""Follower path planning on partial and optimistic maps.

A *cost view* is a 2D float array indexed ``[row, col]`` holding the
per-cell follower cost, with ``inf`` for impassable cells. Moves are
8-connected; a diagonal move is refused when both cells it squeezes
between are impassable in the view.

Edge cost is trapezoidal: ``step_length * (c(a) + c(b)) / 2``.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import ContractError, InfeasiblePathError, MapBoundsError, ParameterError
from .grid_map import OBSERVED, UNKNOWN, GridIndex, PartialMap, complete

SQRT2 = math.sqrt(2.0)

# (d_row, d_col, is_diagonal); axial moves first
MOVES = (
    (0, 1, False), (0, -1, False), (1, 0, False), (-1, 0, False),
    (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True),
)


@dataclass(frozen=True)
class FollowerPath:
    cells: tuple[GridIndex, ...]
    total_cost: float
    provenance: str = "feasible"  # "feasible" | "optimistic" | "ground_truth"
    fill_cost: float | None = None

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def start(self) -> GridIndex:
        return self.cells[0]

    @property
    def goal(self) -> GridIndex:
        return self.cells[-1]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "col", "row"])
            for i, cell in enumerate(self.cells):
                writer.writerow([i, cell.col, cell.row])


@dataclass(frozen=True)
class GridAStar:
    pass


@dataclass(frozen=True)
class SamplingStar:
    iterations: int = 1500
    rewire_radius: float = 3.0
    seed: int = 0
    goal_bias: float = 0.05

    def __post_init__(self) -> None:
        if self.iterations <= 0:
            raise ParameterError(f"iterations must be > 0, got {self.iterations}")
        if not self.rewire_radius > 0:
            raise ParameterError(f"rewire_radius must be > 0, got {self.rewire_radius}")
        if not 0 <= self.goal_bias < 1:
            raise ParameterError(f"goal_bias must lie in [0, 1), got {self.goal_bias}")


PlannerKind = Union[GridAStar, SamplingStar]


def step_is_open(costs: NDArray[np.float64], a: GridIndex, b: GridIndex) -> bool:
    """Whether the move a -> b is allowed by the corner-cutting rule."""
    if a.col == b.col or a.row == b.row:
        return True
    return not (math.isinf(costs[a.row, b.col]) and math.isinf(costs[b.row, a.col]))


def path_cost(cells: Sequence[GridIndex], costs: NDArray[np.float64], resolution: float) -> float:
    """Discretized line integral of the follower cost along ``cells``.

    Axial and diagonal contributions are summed separately with ``math.fsum``
    and scaled once, so two paths with equal real cost over dyadic cost
    values return bit-identical floats.
    """
    height, width = costs.shape
    cells = [GridIndex(*c) for c in cells]
    if not cells:
        raise ContractError("empty path")
    for c in cells:
        if not (0 <= c.col < width and 0 <= c.row < height):
            raise MapBoundsError(f"path cell {tuple(c)} outside the map")
        if math.isinf(costs[c.row, c.col]):
            raise InfeasiblePathError(f"path crosses impassable cell {tuple(c)}")
    axial: list[float] = []
    diagonal: list[float] = []
    for a, b in zip(cells, cells[1:]):
        dc, dr = abs(a.col - b.col), abs(a.row - b.row)
        if max(dc, dr) != 1:
            raise ContractError(f"cells {tuple(a)} and {tuple(b)} are not 8-connected neighbors")
        pair = float(costs[a.row, a.col]) + float(costs[b.row, b.col])
        if dc and dr:
            if not step_is_open(costs, a, b):
                raise InfeasiblePathError(f"diagonal {tuple(a)}->{tuple(b)} cuts a blocked corner")
            diagonal.append(pair)
        else:
            axial.append(pair)
    return 0.5 * resolution * math.fsum(axial) + (0.5 * resolution * SQRT2) * math.fsum(diagonal)


def _finite_min(costs: NDArray[np.float64]) -> float:
    finite = costs[np.isfinite(costs)]
    return float(finite.min()) if finite.size else 0.0


def astar_grid(
    costs: NDArray[np.float64],
    start: GridIndex,
    goal: GridIndex,
    resolution: float,
    heuristic_cost: float | None = None,
) -> list[GridIndex] | None:
    """A* over 8-connected cells; ``None`` when start and goal are disconnected.

    The heuristic is Euclidean distance times ``heuristic_cost`` (by default
    the cheapest cell in the view). Ties on f are broken by smaller heuristic,
    then by lexicographic ``(col, row)``.
    """
    height, width = costs.shape
    start, goal = GridIndex(*start), GridIndex(*goal)
    for name, cell in (("start", start), ("goal", goal)):
        if not (0 <= cell.col < width and 0 <= cell.row < height):
            raise MapBoundsError(f"{name} {tuple(cell)} outside {width}x{height} map")
    if math.isinf(costs[start.row, start.col]) or math.isinf(costs[goal.row, goal.col]):
        return None
    if start == goal:
        return [start]
    h_per_m = (_finite_min(costs) if heuristic_cost is None else heuristic_cost) * resolution

    c = costs.ravel().tolist()
    inf = math.inf
    n = width * height
    g = [inf] * n
    parent = [-1] * n
    closed = bytearray(n)
    s = start.row * width + start.col
    t = goal.row * width + goal.col
    gr, gc = goal.row, goal.col
    half, half_diag = 0.5 * resolution, 0.5 * resolution * SQRT2
    hypot = math.hypot
    push, pop = heapq.heappush, heapq.heappop

    g[s] = 0.0
    h0 = h_per_m * hypot(start.row - gr, start.col - gc)
    heap = [(h0, h0, start.col * height + start.row, s)]
    while heap:
        _, _, _, u = pop(heap)
        if closed[u]:
            continue
        if u == t:
            break
        closed[u] = 1
        r, q = divmod(u, width)
        cu, gu = c[u], g[u]
        for dr, dq, diag in MOVES:
            rr, qq = r + dr, q + dq
            if rr < 0 or rr >= height or qq < 0 or qq >= width:
                continue
            v = rr * width + qq
            cv = c[v]
            if cv == inf or closed[v]:
                continue
            if diag:
                if c[r * width + qq] == inf and c[rr * width + q] == inf:
                    continue
                ng = gu + half_diag * (cu + cv)
            else:
                ng = gu + half * (cu + cv)
            if ng < g[v]:
                g[v] = ng
                parent[v] = u
                hv = h_per_m * hypot(rr - gr, qq - gc)
                push(heap, (ng + hv, hv, qq * height + rr, v))
    if parent[t] < 0:
        return None
    path = [t]
    while path[-1] != s:
        path.append(parent[path[-1]])
    path.reverse()
    return [GridIndex(u % width, u // width) for u in path]


def dijkstra_grid(
    costs: NDArray[np.float64], source: GridIndex, resolution: float
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Single-source costs to every cell with the same move rules as A*.

    Returns ``(dist, parent)`` as ``[row, col]`` arrays; ``parent`` holds flat
    indices (``row * width + col``), -1 for the source and unreachable cells.
    """
    height, width = costs.shape
    c = costs.ravel().tolist()
    inf = math.inf
    n = width * height
    dist = [inf] * n
    parent = [-1] * n
    done = bytearray(n)
    s = source.row * width + source.col
    if c[s] == inf:
        return np.full((height, width), inf), np.full((height, width), -1)
    half, half_diag = 0.5 * resolution, 0.5 * resolution * SQRT2
    dist[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = 1
        r, q = divmod(u, width)
        cu = c[u]
        for dr, dq, diag in MOVES:
            rr, qq = r + dr, q + dq
            if rr < 0 or rr >= height or qq < 0 or qq >= width:
                continue
            v = rr * width + qq
            cv = c[v]
            if cv == inf or done[v]:
                continue
            if diag:
                if c[r * width + qq] == inf and c[rr * width + q] == inf:
                    continue
                nd = d + half_diag * (cu + cv)
            else:
                nd = d + half * (cu + cv)
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return np.array(dist).reshape(height, width), np.array(parent).reshape(height, width)


def plan_on_view(
    costs: NDArray[np.float64],
    start: GridIndex,
    goal: GridIndex,
    resolution: float,
    kind: PlannerKind | None = None,
) -> list[GridIndex] | None:
    """Dispatch to the configured follower planner; returns the cell chain."""
    if kind is None or isinstance(kind, GridAStar):
        return astar_grid(costs, start, goal, resolution)
    if isinstance(kind, SamplingStar):
        from .sampling_star import sampling_star_cells

        return sampling_star_cells(costs, start, goal, resolution, kind)
    raise ParameterError(f"unknown follower planner kind {kind!r}")


def plan_feasible(
    map_: PartialMap, start: GridIndex, goal: GridIndex, kind: PlannerKind | None = None
) -> FollowerPath | None:
    """Cheapest path through explored traversable cells, or ``None``."""
    start, goal = GridIndex(*start), GridIndex(*goal)
    _check_endpoints(map_, start, goal)

    def run():
        view = map_.feasible_view()
        cells = plan_on_view(view, start, goal, map_.resolution, kind)
        if cells is None:
            return None
        return FollowerPath(tuple(cells), path_cost(cells, view, map_.resolution), "feasible")

    return map_.memo(("plan_feasible", start, goal, kind), run)


def plan_optimistic(
    map_: PartialMap, c: float, start: GridIndex, goal: GridIndex, kind: PlannerKind | None = None
) -> FollowerPath | None:
    """Cheapest path on the map completed with fill cost ``c``, or ``None``."""
    start, goal = GridIndex(*start), GridIndex(*goal)
    _check_endpoints(map_, start, goal)
    optimistic = complete(map_, c)

    def run():
        cells = plan_on_view(optimistic.costs, start, goal, map_.resolution, kind)
        if cells is None:
            return None
        cost = path_cost(cells, optimistic.costs, map_.resolution)
        return FollowerPath(tuple(cells), cost, "optimistic", float(c))

    return map_.memo(("plan_optimistic", float(c), start, goal, kind), run)


def _check_endpoints(map_: PartialMap, start: GridIndex, goal: GridIndex) -> None:
    for name, cell in (("start", start), ("goal", goal)):
        if not map_.in_bounds(cell):
            raise MapBoundsError(f"{name} {tuple(cell)} outside {map_.width}x{map_.height} map")


def unexplored_cells(path: FollowerPath | Iterable[GridIndex], map_: PartialMap) -> list[GridIndex]:
    """Cells that must still be observed before ``path`` is certified traversable.

    These are the unknown cells on the path plus, for each diagonal step not
    yet backed by an observed traversable corner cell, its unknown corner
    cells (the corner-cutting rule makes those part of the move).
    """
    cells = path.cells if isinstance(path, FollowerPath) else [GridIndex(*c) for c in path]
    state = map_.state
    out: list[GridIndex] = []
    seen: set[GridIndex] = set()

    def add(cell: GridIndex) -> None:
        if cell not in seen:
            seen.add(cell)
            out.append(cell)

    for cell in cells:
        if state[cell.row, cell.col] == UNKNOWN:
            add(cell)
    for a, b in zip(cells, cells[1:]):
        if a.col != b.col and a.row != b.row:
            corners = (GridIndex(b.col, a.row), GridIndex(a.col, b.row))
            if any(state[k.row, k.col] == OBSERVED for k in corners):
                continue
            for k in corners:
                if state[k.row, k.col] == UNKNOWN:
                    add(k)
    return out


def is_path_explored(path: FollowerPath | Iterable[GridIndex], map_: PartialMap) -> bool:
    return not unexplored_cells(path, map_)
