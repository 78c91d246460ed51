"""Path-aware scouting planner built on a receding-horizon viewpoint tree.

The tree holds candidate scout viewpoints. Each node carries a gain (area of
interesting unknown cells its footprint would reveal) and each edge a scout
travel cost; the planner picks the node maximizing accumulated gain over
accumulated cost, executes only the first edge toward it, and re-roots.

Which cells are "interesting" is decided by a gain model. The path-aware
model counts unexplored cells of the current optimistic follower path; the
baselines in :mod:`scoutipp.baselines` swap in other models.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from numpy.typing import NDArray

from .errors import ContractError, ParameterError
from .follower import (
    FollowerPath,
    PlannerKind,
    plan_feasible,
    plan_optimistic,
    unexplored_cells,
)
from .grid_map import (
    UNKNOWN,
    GridIndex,
    GroundTruthScene,
    PartialMap,
    SensorFootprint,
    coverage,
    footprint_window,
)

FIND_FEASIBLE = "find_feasible"
FIND_OPTIMAL = "find_optimal"


# --------------------------------------------------------------------------
# mission and decisions


@dataclass(frozen=True, eq=False)
class Mission:
    """What a scouting planner may know about the scene.

    The scout knows its own cost field, the endpoints, and the follower cost
    bounds, but never the follower cost field itself.
    """

    start: GridIndex
    goal: GridIndex
    c_f_min: float
    c_f_max: float
    resolution: float
    width: int
    height: int
    scout_cost: NDArray[np.float64]

    @classmethod
    def from_scene(
        cls, scene: GroundTruthScene, fill_min: float | None = None, fill_max: float | None = None
    ) -> Mission:
        return cls(
            start=scene.start,
            goal=scene.goal,
            c_f_min=scene.c_f_min if fill_min is None else fill_min,
            c_f_max=scene.c_f_max if fill_max is None else fill_max,
            resolution=scene.resolution,
            width=scene.width,
            height=scene.height,
            scout_cost=scene.scout_cost,
        )

    @property
    def uniform_scout_cost(self) -> float | None:
        first = float(self.scout_cost.flat[0])
        return first if np.all(self.scout_cost == first) else None


@dataclass(frozen=True)
class Waypoint:
    pose: GridIndex
    edge_cost: float
    length: float


INFEASIBLE = "infeasible"
OPTIMAL = "optimal"
BUDGET = "budget"
COMPLETE = "complete"


@dataclass(frozen=True)
class Termination:
    """``kind`` is one of INFEASIBLE, OPTIMAL, BUDGET, COMPLETE."""

    kind: str
    path: FollowerPath | None = None


@dataclass
class ScoutParams:
    footprint: SensorFootprint
    samples_per_step: int = 20
    max_edge_length: float | None = None  # default: 4 x footprint half extent
    retry_cap: int = 200
    budget: float | None = None
    seed: int = 0
    expansion_rounds: int = 5

    def __post_init__(self) -> None:
        if self.max_edge_length is None:
            self.max_edge_length = 4.0 * self.footprint.half_extent
        if self.samples_per_step <= 0 or self.retry_cap <= 0:
            raise ParameterError("samples_per_step and retry_cap must be positive")
        if not self.max_edge_length > 0:
            raise ParameterError(f"max_edge_length must be > 0, got {self.max_edge_length}")
        if self.budget is not None and self.budget < 0:
            raise ParameterError(f"budget must be >= 0, got {self.budget}")


# --------------------------------------------------------------------------
# scout travel cost


def edge_cost(a: GridIndex, b: GridIndex, scout_cost: NDArray[np.float64], resolution: float) -> float:
    """Line integral of the scout cost along the segment between cell centers.

    Midpoint rule on pieces of at most half a cell; exact path length times
    the cost when the scout cost field is constant.
    """
    a, b = GridIndex(*a), GridIndex(*b)
    if a == b:
        raise ContractError("edge endpoints must differ")
    length = resolution * math.hypot(b.col - a.col, b.row - a.row)
    first = scout_cost[a.row, a.col]
    if np.all(scout_cost == first):
        return length * float(first)
    n = max(1, math.ceil(length / (0.5 * resolution)))
    t = (np.arange(n) + 0.5) / n
    cols = np.floor(a.col + 0.5 + t * (b.col - a.col)).astype(np.intp)
    rows = np.floor(a.row + 0.5 + t * (b.row - a.row)).astype(np.intp)
    return float(math.fsum(scout_cost[rows, cols])) * length / n


# --------------------------------------------------------------------------
# gain models


def _integral(values: NDArray) -> NDArray[np.float64]:
    out = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    out[1:, 1:] = np.cumsum(np.cumsum(values, axis=0), axis=1)
    return out


def window_sums(
    values: NDArray, cols: NDArray[np.intp], rows: NDArray[np.intp], half_cells: int
) -> NDArray[np.float64]:
    """Sum of ``values`` over the clipped square window around each node."""
    height, width = values.shape
    ii = _integral(values)
    c0 = np.clip(cols - half_cells, 0, width)
    c1 = np.clip(cols + half_cells + 1, 0, width)
    r0 = np.clip(rows - half_cells, 0, height)
    r1 = np.clip(rows + half_cells + 1, 0, height)
    return ii[r1, c1] - ii[r0, c1] - ii[r1, c0] + ii[r0, c0]


class GainModel(Protocol):
    def gains(self, cols: NDArray[np.intp], rows: NDArray[np.intp], half_cells: int) -> NDArray[np.float64]:
        ...

    def targets(self) -> NDArray[np.intp]:
        """``(k, 2)`` array of ``(row, col)`` cells whose observation yields gain."""
        ...


class MaskGain:
    """Gain = number of target cells in the footprint times the cell area."""

    def __init__(self, mask: NDArray[np.bool_], resolution: float):
        self.mask = mask
        self.cell_area = resolution * resolution

    def gains(self, cols, rows, half_cells):
        return window_sums(self.mask, cols, rows, half_cells) * self.cell_area

    def targets(self):
        return np.argwhere(self.mask)


def path_target_mask(path: FollowerPath, map_: PartialMap) -> NDArray[np.bool_]:
    mask = np.zeros(map_.shape, dtype=bool)
    for cell in unexplored_cells(path, map_):
        mask[cell.row, cell.col] = True
    return mask


def information_gain(
    pose: GridIndex, map_: PartialMap, optimistic_path: FollowerPath, footprint: SensorFootprint
) -> float:
    """Area of unexplored optimistic-path cells inside the footprint at ``pose``."""
    pose = GridIndex(*pose)
    res = map_.resolution
    x, y = (pose.col + 0.5) * res, (pose.row + 0.5) * res
    c0, c1, r0, r1 = footprint_window(x, y, footprint.half_extent, res, map_.width, map_.height)
    count = sum(
        1 for cell in unexplored_cells(optimistic_path, map_) if c0 <= cell.col <= c1 and r0 <= cell.row <= r1
    )
    return count * res * res


# --------------------------------------------------------------------------
# viewpoint tree


@dataclass
class ScoutNode:
    pose: GridIndex
    parent: int | None
    gain: float = 0.0
    edge_cost: float = 0.0
    closed: bool = False


@dataclass
class ScoutTree:
    """Viewpoint tree rooted at the scout's current pose."""

    nodes: list[ScoutNode]
    root: int
    rng_seed: int
    children: list[list[int]] = field(default_factory=list)
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.rng = np.random.default_rng(self.rng_seed)
        if not self.children:
            self.children = [[] for _ in self.nodes]
        self._by_pose = {n.pose: i for i, n in enumerate(self.nodes)}
        # pose buffers grow by doubling; rows [0, len) are live
        cap = max(64, 2 * len(self.nodes))
        self._xy = np.zeros((2, cap), dtype=np.intp)
        for i, n in enumerate(self.nodes):
            self._xy[:, i] = n.pose

    @classmethod
    def at(cls, pose: GridIndex, seed: int = 0) -> ScoutTree:
        return cls([ScoutNode(GridIndex(*pose), None)], 0, seed)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root_pose(self) -> GridIndex:
        return self.nodes[self.root].pose

    def node_at(self, pose: GridIndex) -> int | None:
        return self._by_pose.get(pose)

    def add(self, pose: GridIndex, parent: int, cost: float) -> int:
        if cost <= 0:
            raise ContractError("edge cost must be positive")
        idx = len(self.nodes)
        self.nodes.append(ScoutNode(pose, parent, edge_cost=cost))
        self.children.append([])
        self.children[parent].append(idx)
        self._by_pose[pose] = idx
        if idx >= self._xy.shape[1]:
            grown = np.zeros((2, 2 * self._xy.shape[1]), dtype=np.intp)
            grown[:, :idx] = self._xy[:, :idx]
            self._xy = grown
        self._xy[:, idx] = pose
        return idx

    def poses(self) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        n = len(self.nodes)
        return self._xy[0, :n], self._xy[1, :n]

    def branch(self, idx: int) -> list[int]:
        """Node ids from the root down to ``idx``."""
        out = [idx]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        out.reverse()
        if out[0] != self.root:
            raise ContractError(f"node {idx} is not reachable from the root")
        return out

    def accumulate(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Accumulated gain and cost from the root to every node."""
        n = len(self.nodes)
        acc_gain = np.zeros(n)
        acc_cost = np.zeros(n)
        nodes, children = self.nodes, self.children
        acc_gain[self.root] = nodes[self.root].gain
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            gu, cu = acc_gain[u], acc_cost[u]
            for v in children[u]:
                acc_gain[v] = gu + nodes[v].gain
                acc_cost[v] = cu + nodes[v].edge_cost
                queue.append(v)
        return acc_gain, acc_cost

    def values(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        acc_gain, acc_cost = self.accumulate()
        values = np.zeros_like(acc_gain)
        off_root = acc_cost > 0
        values[off_root] = acc_gain[off_root] / acc_cost[off_root]
        return values, acc_cost

    def best_node(self) -> tuple[int, float]:
        """Highest-value node; ties prefer smaller accumulated cost, then insertion order."""
        values, acc_cost = self.values()
        order = np.lexsort((np.arange(len(values)), acc_cost, -values))
        best = int(order[0])
        return best, float(values[best])

    def first_step(self, idx: int) -> int:
        """The root's child on the branch toward ``idx``."""
        branch = self.branch(idx)
        if len(branch) < 2:
            raise ContractError("the root has no first step toward itself")
        return branch[1]

    def reroot(self, child: int) -> None:
        """Make a child of the root the new root, reversing their edge."""
        old = self.root
        node, old_node = self.nodes[child], self.nodes[old]
        if node.parent != old:
            raise ContractError("can only re-root at a child of the current root")
        self.children[old].remove(child)
        self.children[child].append(old)
        old_node.parent = child
        old_node.edge_cost = node.edge_cost
        node.parent = None
        node.edge_cost = 0.0
        self.root = child


def subtree_value(tree: ScoutTree, idx: int) -> float:
    """Accumulated gain over accumulated cost along the root -> ``idx`` branch."""
    branch = tree.branch(idx)
    if len(branch) == 1:
        return 0.0
    gain = math.fsum(tree.nodes[i].gain for i in branch)
    cost = math.fsum(tree.nodes[i].edge_cost for i in branch[1:])
    if cost <= 0:
        raise ContractError("zero accumulated cost off the root")
    return gain / cost


def _sample_node(tree: ScoutTree, mission: Mission, params: ScoutParams, target=None) -> int | None:
    """Add one viewpoint, steered to within the max edge length of its nearest node."""
    res = mission.resolution
    if target is None:
        col = int(tree.rng.integers(0, mission.width))
        row = int(tree.rng.integers(0, mission.height))
    else:
        row, col = int(target[0]), int(target[1])
    cols, rows = tree.poses()
    d2 = (cols - col) ** 2 + (rows - row) ** 2
    near = int(np.argmin(d2))
    dist = math.sqrt(float(d2[near]))
    max_cells = params.max_edge_length / res
    if dist > max_cells:
        scale = max_cells / dist
        col = int(cols[near] + math.trunc((col - cols[near]) * scale))
        row = int(rows[near] + math.trunc((row - rows[near]) * scale))
    pose = GridIndex(col, row)
    if tree.node_at(pose) is not None:
        return None
    parent_pose = tree.nodes[near].pose
    cost = edge_cost(parent_pose, pose, mission.scout_cost, res)
    return tree.add(pose, near, cost)


def expand_and_update(
    tree: ScoutTree,
    map_: PartialMap,
    gain_model: GainModel,
    mission: Mission,
    params: ScoutParams,
    n_samples: int | None = None,
) -> int:
    """Grow the tree by up to ``n_samples`` viewpoints, then refresh gains.

    Nodes whose footprint holds no unknown cell are closed for good with zero
    gain; all other nodes get their gain recomputed against ``gain_model``.
    Returns the number of nodes added.
    """
    wanted = params.samples_per_step if n_samples is None else n_samples
    added = attempts = 0
    while added < wanted and attempts < params.retry_cap:
        attempts += 1
        if _sample_node(tree, mission, params) is not None:
            added += 1
    update_gains(tree, map_, gain_model, params.footprint)
    return added


def update_gains(tree: ScoutTree, map_: PartialMap, gain_model: GainModel, footprint: SensorFootprint) -> None:
    open_ids = np.array([i for i, n in enumerate(tree.nodes) if not n.closed], dtype=np.intp)
    if open_ids.size == 0:
        return
    cols, rows = tree.poses()
    cols, rows = cols[open_ids], rows[open_ids]
    k = footprint.half_cells(map_.resolution)
    unknown = window_sums(map_.state == UNKNOWN, cols, rows, k)
    gains = gain_model.gains(cols, rows, k)
    for i, u, g in zip(open_ids.tolist(), unknown.tolist(), gains.tolist()):
        node = tree.nodes[i]
        if u == 0:
            node.closed = True
            node.gain = 0.0
        else:
            node.gain = g


# --------------------------------------------------------------------------
# planners


class TreePlanner:
    """Shared receding-horizon machinery; subclasses decide what to look for."""

    name = "tree"

    def __init__(self, mission: Mission, params: ScoutParams, follower: PlannerKind | None = None):
        self.mission = mission
        self.params = params
        self.follower = follower
        self.tree = ScoutTree.at(mission.start, params.seed)
        self.spent = 0.0

    @property
    def pose(self) -> GridIndex:
        return self.tree.root_pose

    def guide(self, map_: PartialMap) -> Termination | GainModel:
        raise NotImplementedError

    def feasible_path(self, map_: PartialMap) -> FollowerPath | None:
        return plan_feasible(map_, self.mission.start, self.mission.goal, self.follower)

    def step(self, map_: PartialMap) -> Waypoint | Termination:
        decision = self.guide(map_)
        if isinstance(decision, Termination):
            return decision
        return self.advance(map_, decision)

    def advance(self, map_: PartialMap, gain_model: GainModel) -> Waypoint | Termination:
        tree, params = self.tree, self.params
        expand_and_update(tree, map_, gain_model, self.mission, params)
        best, value = tree.best_node()
        rounds = 0
        while value <= 0 and rounds < params.expansion_rounds:
            expand_and_update(tree, map_, gain_model, self.mission, params)
            best, value = tree.best_node()
            rounds += 1
        if value <= 0:
            best, value = self._reach_for_target(map_, gain_model)
        if value <= 0:
            return Termination(COMPLETE, self.feasible_path(map_))
        child = tree.first_step(best)
        node = tree.nodes[child]
        cost = node.edge_cost  # re-rooting zeroes it
        if params.budget is not None and self.spent + cost > params.budget:
            return Termination(BUDGET, self.feasible_path(map_))
        length = self.mission.resolution * math.hypot(
            node.pose.col - self.pose.col, node.pose.row - self.pose.row
        )
        self.spent += cost
        tree.reroot(child)
        return Waypoint(node.pose, cost, length)

    def _reach_for_target(self, map_: PartialMap, gain_model: GainModel) -> tuple[int, float]:
        """Grow a branch straight toward the nearest target cell until it sees gain."""
        tree = self.tree
        targets = gain_model.targets()
        if len(targets) == 0:
            return tree.root, 0.0
        root = tree.root_pose
        d2 = (targets[:, 0] - root.row) ** 2 + (targets[:, 1] - root.col) ** 2
        target = targets[int(np.argmin(d2))]
        for _ in range(4 * (self.mission.width + self.mission.height)):
            if _sample_node(tree, self.mission, self.params, target=target) is None:
                break
            update_gains(tree, map_, gain_model, self.params.footprint)
            best, value = tree.best_node()
            if value > 0:
                return best, value
        update_gains(tree, map_, gain_model, self.params.footprint)
        return tree.best_node()


class PathAwarePlanner(TreePlanner):
    """Guides the scout along the optimistic follower path.

    Starts looking for any feasible path (unknown space filled at the upper
    cost bound), switches once to looking for the optimal one (filled at the
    lower bound), and stops on a certified optimal path or when no optimistic
    path exists.
    """

    name = "path_aware"

    def __init__(self, mission, params, follower=None):
        super().__init__(mission, params, follower)
        self.mode = FIND_FEASIBLE
        self.mode_switches = 0
        self.last_optimistic: FollowerPath | None = None

    @property
    def fill_cost(self) -> float:
        return self.mission.c_f_max if self.mode == FIND_FEASIBLE else self.mission.c_f_min

    def guide(self, map_: PartialMap) -> Termination | GainModel:
        m = self.mission
        while True:
            path = plan_optimistic(map_, self.fill_cost, m.start, m.goal, self.follower)
            self.last_optimistic = path
            if path is None:
                return Termination(INFEASIBLE)
            mask = path_target_mask(path, map_)
            if mask.any():
                return MaskGain(mask, m.resolution)
            if self.mode == FIND_FEASIBLE:
                self.mode = FIND_OPTIMAL
                self.mode_switches += 1
                continue
            return Termination(OPTIMAL, path)


def make_path_aware(scene: GroundTruthScene, params: ScoutParams, follower=None, **fills) -> PathAwarePlanner:
    return PathAwarePlanner(Mission.from_scene(scene, **fills), params, follower)


def coverage_complete(map_: PartialMap) -> bool:
    return coverage(map_) >= 1.0
