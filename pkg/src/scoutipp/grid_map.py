"""Grid-world representation: ground truth, partial map, optimistic completion.

Arrays are indexed ``[row, col]``; :class:`GridIndex` is ``(col, row)``.
Follower obstacles are stored in the follower cost layer as ``OBSTACLE``
(positive infinity), so any cost view can be consumed by the planners
without a separate mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import MapBoundsError, ParameterError, SceneFormatError

OBSTACLE = math.inf

UNKNOWN = 0
OBSERVED = 1
BLOCKED = 2  # observed follower obstacle

# Cost values stored in scenes are integer multiples of this unit, which keeps
# every path-cost partial sum exact in float64 (see follower.path_cost).
DEFAULT_COST_UNIT = 1.0 / 256.0

_EPS = 1e-9


class GridIndex(NamedTuple):
    col: int
    row: int


@dataclass(frozen=True)
class SensorFootprint:
    """Square, downward-looking camera footprint."""

    half_extent: float

    def __post_init__(self) -> None:
        if not self.half_extent > 0:
            raise ParameterError(f"footprint half_extent must be > 0, got {self.half_extent}")

    @classmethod
    def from_camera(cls, flying_height: float, fov_deg: float) -> SensorFootprint:
        return cls(flying_height * math.tan(math.radians(fov_deg) / 2.0))

    def half_cells(self, resolution: float) -> int:
        """Half-width in cells of the window seen from a cell center."""
        return int(math.floor(self.half_extent / resolution + _EPS))


def footprint_window(
    x: float, y: float, half_extent: float, resolution: float, width: int, height: int
) -> tuple[int, int, int, int]:
    """Clipped inclusive ``(col_lo, col_hi, row_lo, row_hi)`` of cells whose
    centers lie in the axis-aligned square of half-width ``half_extent``
    around the metric point ``(x, y)``. Empty windows have lo > hi."""
    col_lo = math.ceil((x - half_extent) / resolution - 0.5 - _EPS)
    col_hi = math.floor((x + half_extent) / resolution - 0.5 + _EPS)
    row_lo = math.ceil((y - half_extent) / resolution - 0.5 - _EPS)
    row_hi = math.floor((y + half_extent) / resolution - 0.5 + _EPS)
    return max(col_lo, 0), min(col_hi, width - 1), max(row_lo, 0), min(row_hi, height - 1)


def cell_center(cell: GridIndex, resolution: float) -> tuple[float, float]:
    return (cell.col + 0.5) * resolution, (cell.row + 0.5) * resolution


@dataclass(eq=False)
class GroundTruthScene:
    """Full follower and scout cost fields; never shown to the planners.

    ``follower_cost`` holds ``OBSTACLE`` for follower-intraversable cells.
    The scout can fly over every cell, so ``scout_cost`` is finite everywhere.
    """

    follower_cost: NDArray[np.float64]
    scout_cost: NDArray[np.float64]
    resolution: float
    c_f_min: float
    c_f_max: float
    start: GridIndex
    goal: GridIndex
    cost_unit: float = DEFAULT_COST_UNIT
    scout_cost_unit: float = DEFAULT_COST_UNIT

    def __post_init__(self) -> None:
        self.follower_cost = np.array(self.follower_cost, dtype=np.float64)
        self.scout_cost = np.array(self.scout_cost, dtype=np.float64)
        self.start = GridIndex(*self.start)
        self.goal = GridIndex(*self.goal)
        self.validate()
        self.follower_cost.setflags(write=False)
        self.scout_cost.setflags(write=False)

    @property
    def width(self) -> int:
        return self.follower_cost.shape[1]

    @property
    def height(self) -> int:
        return self.follower_cost.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.follower_cost.shape

    def in_bounds(self, cell: GridIndex) -> bool:
        return 0 <= cell.col < self.width and 0 <= cell.row < self.height

    def is_obstacle(self, cell: GridIndex) -> bool:
        return math.isinf(self.follower_cost[cell.row, cell.col])

    @property
    def free_mask(self) -> NDArray[np.bool_]:
        return np.isfinite(self.follower_cost)

    @property
    def uniform_scout_cost(self) -> float | None:
        """The scout cost if it is constant over the map, else ``None``."""
        first = float(self.scout_cost.flat[0])
        return first if np.all(self.scout_cost == first) else None

    def validate(self) -> None:
        fc, sc = self.follower_cost, self.scout_cost
        if fc.ndim != 2 or fc.size == 0:
            raise SceneFormatError("follower_cost must be a non-empty 2D array")
        if sc.shape != fc.shape:
            raise SceneFormatError(f"scout_cost shape {sc.shape} != follower_cost shape {fc.shape}")
        if not self.resolution > 0:
            raise SceneFormatError(f"resolution must be > 0, got {self.resolution}")
        if not 0 < self.c_f_min <= self.c_f_max:
            raise SceneFormatError(
                f"need 0 < c_f_min <= c_f_max, got {self.c_f_min}, {self.c_f_max}"
            )
        finite = np.isfinite(fc)
        bad = ~(np.isinf(fc) & (fc > 0)) & ~finite
        bad |= finite & ((fc < self.c_f_min) | (fc > self.c_f_max))
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise SceneFormatError(
                f"follower cost {fc[row, col]!r} at (col={col}, row={row}) outside "
                f"[{self.c_f_min}, {self.c_f_max}]"
            )
        if not (np.all(np.isfinite(sc)) and np.all(sc > 0)):
            row, col = np.argwhere(~(np.isfinite(sc) & (sc > 0)))[0]
            raise SceneFormatError(f"scout cost at (col={col}, row={row}) must be positive")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            if not self.in_bounds(cell):
                raise SceneFormatError(f"{name} {tuple(cell)} outside {self.width}x{self.height} map")
            if self.is_obstacle(cell):
                raise SceneFormatError(f"{name} {tuple(cell)} is an obstacle cell")

    def same_as(self, other: GroundTruthScene) -> bool:
        """Bit-exact equality of every field."""
        return (
            self.shape == other.shape
            and np.array_equal(self.follower_cost, other.follower_cost)
            and np.array_equal(self.scout_cost, other.scout_cost)
            and self.resolution == other.resolution
            and self.c_f_min == other.c_f_min
            and self.c_f_max == other.c_f_max
            and self.start == other.start
            and self.goal == other.goal
            and self.cost_unit == other.cost_unit
            and self.scout_cost_unit == other.scout_cost_unit
        )


@dataclass(eq=False)
class PartialMap:
    """Explored space with perfectly sensed follower costs.

    ``state`` holds UNKNOWN / OBSERVED / BLOCKED; ``cost`` is NaN for unknown
    cells and ``OBSTACLE`` for blocked ones. Cells never revert to UNKNOWN.
    """

    width: int
    height: int
    resolution: float
    state: NDArray[np.int8] = field(init=False)
    cost: NDArray[np.float64] = field(init=False)
    explored_count: int = field(init=False, default=0)
    version: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self.state = np.zeros((self.height, self.width), dtype=np.int8)
        self.cost = np.full((self.height, self.width), np.nan)
        self._cache: dict = {}

    @classmethod
    def for_scene(cls, scene: GroundTruthScene) -> PartialMap:
        return cls(scene.width, scene.height, scene.resolution)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def in_bounds(self, cell: GridIndex) -> bool:
        return 0 <= cell.col < self.width and 0 <= cell.row < self.height

    def cell_state(self, cell: GridIndex) -> int:
        return int(self.state[cell.row, cell.col])

    def is_known(self, cell: GridIndex) -> bool:
        return self.state[cell.row, cell.col] != UNKNOWN

    def unknown_mask(self) -> NDArray[np.bool_]:
        return self.state == UNKNOWN

    def observed_mask(self) -> NDArray[np.bool_]:
        """Cells observed as follower-traversable."""
        return self.state == OBSERVED

    def feasible_view(self) -> NDArray[np.float64]:
        """Cost view restricted to explored traversable space."""
        return self.memo(("feasible_view",), self._feasible_view)

    def _feasible_view(self) -> NDArray[np.float64]:
        view = np.where(self.state == OBSERVED, self.cost, OBSTACLE)
        view.setflags(write=False)
        return view

    def memo(self, key, compute):
        """Cache ``compute()`` until the next map mutation."""
        try:
            return self._cache[key]
        except KeyError:
            value = self._cache[key] = compute()
            return value

    def reveal_window(
        self, scene: GroundTruthScene, col_lo: int, col_hi: int, row_lo: int, row_hi: int
    ) -> NDArray[np.intp]:
        """Copy ground truth into the window; return ``(k, 2)`` newly known ``(row, col)``."""
        if col_lo > col_hi or row_lo > row_hi:
            return np.empty((0, 2), dtype=np.intp)
        win = (slice(row_lo, row_hi + 1), slice(col_lo, col_hi + 1))
        fresh = self.state[win] == UNKNOWN
        if not fresh.any():
            return np.empty((0, 2), dtype=np.intp)
        truth = scene.follower_cost[win]
        self.cost[win] = np.where(fresh, truth, self.cost[win])
        self.state[win] = np.where(
            fresh, np.where(np.isinf(truth), BLOCKED, OBSERVED), self.state[win]
        ).astype(np.int8)
        rel = np.argwhere(fresh)
        self.explored_count += len(rel)
        self.version += 1
        self._cache.clear()
        return rel + np.array([row_lo, col_lo])


def _check_compatible(map_: PartialMap, scene: GroundTruthScene) -> None:
    if map_.shape != scene.shape or map_.resolution != scene.resolution:
        raise ParameterError("partial map and scene disagree on size or resolution")


def observe_point(
    map_: PartialMap, scene: GroundTruthScene, x: float, y: float, footprint: SensorFootprint
) -> int:
    """Observe around the metric point ``(x, y)``; return the count of new cells."""
    _check_compatible(map_, scene)
    window = footprint_window(x, y, footprint.half_extent, map_.resolution, map_.width, map_.height)
    return len(map_.reveal_window(scene, *window))


def observe(
    map_: PartialMap, scene: GroundTruthScene, pose: GridIndex, footprint: SensorFootprint
) -> set[GridIndex]:
    """Observe the footprint centered on ``pose``'s cell center.

    Returns exactly the cells that transitioned from unknown.
    """
    pose = GridIndex(*pose)
    if not map_.in_bounds(pose):
        raise MapBoundsError(f"pose {tuple(pose)} outside {map_.width}x{map_.height} map")
    _check_compatible(map_, scene)
    x, y = cell_center(pose, map_.resolution)
    window = footprint_window(x, y, footprint.half_extent, map_.resolution, map_.width, map_.height)
    fresh = map_.reveal_window(scene, *window)
    return {GridIndex(int(c), int(r)) for r, c in fresh}


@dataclass(frozen=True, eq=False)
class OptimisticMap:
    """Snapshot of a partial map with unknown cells filled at ``fill_cost``."""

    costs: NDArray[np.float64]
    fill_cost: float
    resolution: float

    def query(self, cell: GridIndex) -> float:
        return float(self.costs[cell.row, cell.col])

    def passable(self, cell: GridIndex) -> bool:
        return math.isfinite(self.costs[cell.row, cell.col])


def complete(map_: PartialMap, c: float) -> OptimisticMap:
    """Fill every unknown cell with the constant cost ``c``; obstacles stay impassable."""
    if not (c > 0 and math.isfinite(c)):
        raise ParameterError(f"fill cost must be a positive finite number, got {c}")

    def build() -> NDArray[np.float64]:
        costs = np.where(map_.state == UNKNOWN, c, map_.cost)
        costs.setflags(write=False)
        return costs

    return OptimisticMap(map_.memo(("complete", c), build), float(c), map_.resolution)


def coverage(map_: PartialMap) -> float:
    return map_.explored_count / (map_.width * map_.height)


def free_space_coverage(map_: PartialMap, scene: GroundTruthScene) -> float:
    """Fraction of follower-traversable ground-truth cells that are explored."""
    free = scene.free_mask
    total = int(free.sum())
    return float(np.count_nonzero(free & (map_.state != UNKNOWN))) / total if total else 1.0


def cells_in_bounds(cells: Iterable[GridIndex], width: int, height: int) -> bool:
    return all(0 <= c.col < width and 0 <= c.row < height for c in cells)
