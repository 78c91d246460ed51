"""Comparison planners sharing the viewpoint-tree machinery.

Exploration, cost-aware and goal-aware differ from the path-aware planner
only in their gain model. The frontier-cost planner instead flies to the
best-scored frontier cell along a scout shortest path.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from .follower import FollowerPath, dijkstra_grid, plan_feasible, plan_optimistic
from .grid_map import OBSERVED, UNKNOWN, GridIndex, PartialMap, SensorFootprint, footprint_window
from .scout import (
    BUDGET,
    COMPLETE,
    GainModel,
    MaskGain,
    Mission,
    PathAwarePlanner,
    ScoutParams,
    Termination,
    TreePlanner,
    Waypoint,
    coverage_complete,
    edge_cost,
    information_gain,
    path_target_mask,
    window_sums,
)


def _window(pose: GridIndex, map_: PartialMap, footprint: SensorFootprint) -> tuple[slice, slice]:
    res = map_.resolution
    c0, c1, r0, r1 = footprint_window(
        (pose.col + 0.5) * res, (pose.row + 0.5) * res, footprint.half_extent, res, map_.width, map_.height
    )
    return slice(r0, r1 + 1), slice(c0, c1 + 1)


def gain_exploration(pose: GridIndex, map_: PartialMap, footprint: SensorFootprint) -> float:
    """Unknown area inside the footprint."""
    window = _window(GridIndex(*pose), map_, footprint)
    return float(np.count_nonzero(map_.state[window] == UNKNOWN)) * map_.resolution**2


def gain_goal_aware(
    pose: GridIndex, map_: PartialMap, footprint: SensorFootprint, goal_path: FollowerPath
) -> float:
    """Unknown area of the worst-case-filled path to the goal inside the footprint."""
    return information_gain(pose, map_, goal_path, footprint)


def gain_cost_aware(pose: GridIndex, map_: PartialMap, footprint: SensorFootprint, c_f_min: float) -> float:
    """Exploration gain scaled by ``c_f_min`` over the mean observed cost in view."""
    window = _window(GridIndex(*pose), map_, footprint)
    observed = map_.state[window] == OBSERVED
    weight = 1.0
    if observed.any():
        weight = c_f_min / float(map_.cost[window][observed].mean())
    return gain_exploration(pose, map_, footprint) * weight


class ExplorationGain(MaskGain):
    def __init__(self, map_: PartialMap):
        super().__init__(map_.state == UNKNOWN, map_.resolution)


class CostAwareGain:
    def __init__(self, map_: PartialMap, c_f_min: float):
        self.unknown = map_.state == UNKNOWN
        observed = map_.state == OBSERVED
        self.observed = observed
        self.observed_cost = np.where(observed, map_.cost, 0.0)
        self.c_f_min = c_f_min
        self.cell_area = map_.resolution**2

    def gains(self, cols, rows, half_cells):
        unknown = window_sums(self.unknown, cols, rows, half_cells)
        count = window_sums(self.observed, cols, rows, half_cells)
        total = window_sums(self.observed_cost, cols, rows, half_cells)
        weight = np.ones_like(unknown)
        seen = count > 0
        weight[seen] = self.c_f_min / (total[seen] / count[seen])
        return unknown * self.cell_area * weight

    def targets(self):
        return np.argwhere(self.unknown)


class ExplorationPlanner(TreePlanner):
    name = "exploration"

    def guide(self, map_: PartialMap) -> Termination | GainModel:
        if coverage_complete(map_):
            return Termination(COMPLETE, self.feasible_path(map_))
        return ExplorationGain(map_)


class CostAwarePlanner(TreePlanner):
    name = "cost_aware"

    def guide(self, map_: PartialMap) -> Termination | GainModel:
        if coverage_complete(map_):
            return Termination(COMPLETE, self.feasible_path(map_))
        return CostAwareGain(map_, self.mission.c_f_min)


class GoalAwarePlanner(TreePlanner):
    """Explores the worst-case-filled path toward the goal, then the rest of the map.

    The guiding path never switches to the lower cost bound. Once it is fully
    explored (a feasible path exists) or no such path remains, the planner
    falls back to plain exploration gain.
    """

    name = "goal_aware"

    def __init__(self, mission, params, follower=None):
        super().__init__(mission, params, follower)
        self.goal_reached = False

    def guide(self, map_: PartialMap) -> Termination | GainModel:
        if coverage_complete(map_):
            return Termination(COMPLETE, self.feasible_path(map_))
        if not self.goal_reached:
            m = self.mission
            path = plan_optimistic(map_, m.c_f_max, m.start, m.goal, self.follower)
            if path is not None:
                mask = path_target_mask(path, map_)
                if mask.any():
                    return MaskGain(mask, m.resolution)
            self.goal_reached = True
        return ExplorationGain(map_)


def _box_sum(values: NDArray) -> NDArray[np.float64]:
    """Sum over the 8-neighborhood (center excluded)."""
    padded = np.pad(values.astype(np.float64), 1)
    h, w = values.shape
    total = np.zeros((h, w))
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr or dc:
                total += padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return total


def frontier_cost_goals(map_: PartialMap, c_f_min: float) -> list[tuple[GridIndex, float]]:
    """Frontier cells ranked by ``c_f_min`` over the mean cost of adjacent observed cells.

    A frontier cell is an unknown cell 8-adjacent to an observed traversable
    cell. Ties keep ``(col, row)`` order.
    """
    observed = map_.state == OBSERVED
    count = _box_sum(observed)
    frontier = (map_.state == UNKNOWN) & (count > 0)
    if not frontier.any():
        return []
    total = _box_sum(np.where(observed, map_.cost, 0.0))
    rows, cols = np.nonzero(frontier)
    scores = c_f_min / (total[rows, cols] / count[rows, cols])
    order = np.lexsort((rows, cols, -scores))
    return [(GridIndex(int(cols[i]), int(rows[i])), float(scores[i])) for i in order]


class FrontierCostPlanner:
    """Flies toward the frontier cell with the best score per unit travel cost."""

    name = "frontier_cost"

    def __init__(self, mission: Mission, params: ScoutParams, follower=None):
        self.mission = mission
        self.params = params
        self.follower = follower
        self.pose = mission.start
        self.spent = 0.0

    def feasible_path(self, map_: PartialMap) -> FollowerPath | None:
        return plan_feasible(map_, self.mission.start, self.mission.goal, self.follower)

    def step(self, map_: PartialMap) -> Waypoint | Termination:
        m = self.mission
        goals = frontier_cost_goals(map_, m.c_f_min)
        if not goals:
            return Termination(COMPLETE, self.feasible_path(map_))
        dist, parent = dijkstra_grid(m.scout_cost, self.pose, m.resolution)
        best, best_key = None, None
        for cell, score in goals:
            travel = float(dist[cell.row, cell.col])
            if not travel > 0:
                continue
            key = (-score / travel, travel, cell.col, cell.row)
            if best_key is None or key < best_key:
                best, best_key = cell, key
        if best is None:
            return Termination(COMPLETE, self.feasible_path(map_))
        waypoint = self._along_path(best, parent)
        cost = edge_cost(self.pose, waypoint, m.scout_cost, m.resolution)
        if self.params.budget is not None and self.spent + cost > self.params.budget:
            return Termination(BUDGET, self.feasible_path(map_))
        length = m.resolution * math.hypot(waypoint.col - self.pose.col, waypoint.row - self.pose.row)
        self.spent += cost
        self.pose = waypoint
        return Waypoint(waypoint, cost, length)

    def _along_path(self, target: GridIndex, parent: NDArray[np.int64]) -> GridIndex:
        width = self.mission.width
        chain = [target]
        while chain[-1] != self.pose:
            flat = int(parent[chain[-1].row, chain[-1].col])
            chain.append(GridIndex(flat % width, flat // width))
        chain.reverse()
        limit = self.params.max_edge_length / self.mission.resolution
        waypoint = chain[1]
        for cell in chain[1:]:
            if math.hypot(cell.col - self.pose.col, cell.row - self.pose.row) <= limit + 1e-9:
                waypoint = cell
            else:
                break
        return waypoint


PLANNERS = {
    "path_aware": PathAwarePlanner,
    "exploration": ExplorationPlanner,
    "goal_aware": GoalAwarePlanner,
    "cost_aware": CostAwarePlanner,
    "frontier_cost": FrontierCostPlanner,
}


def make_planner(name: str, mission: Mission, params: ScoutParams, follower=None):
    try:
        cls = PLANNERS[name]
    except KeyError:
        raise ValueError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}") from None
    return cls(mission, params, follower)
