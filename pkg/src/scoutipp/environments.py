"""Procedural scenes: soil blobs on an exponential cost ladder, obstacle blobs,
and the synthetic open/closed box scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .errors import GenerationError, ParameterError
from .grid_map import DEFAULT_COST_UNIT, OBSTACLE, GridIndex, GroundTruthScene
from .oracle import dijkstra_path


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 48
    resolution: float = 0.5
    soil_count: int = 3
    gradient: float = 4.0  # c_f_max / c_f_min
    obstacle_fraction: float = 0.0
    blob_scale: float = 4.0  # meters between value-noise lattice points
    seed: int = 0
    c_f_min: float = 1.0
    start: GridIndex | None = None
    goal: GridIndex | None = None
    cost_unit: float = DEFAULT_COST_UNIT
    max_retries: int = 50

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ParameterError("scene must be at least 2x2 cells")
        if not self.resolution > 0 or not self.blob_scale > 0:
            raise ParameterError("resolution and blob_scale must be positive")
        if self.soil_count < 1:
            raise ParameterError(f"soil_count must be >= 1, got {self.soil_count}")
        if self.gradient < 1:
            raise ParameterError(f"gradient must be >= 1, got {self.gradient}")
        if not 0 <= self.obstacle_fraction < 1:
            raise ParameterError(f"obstacle_fraction must lie in [0, 1), got {self.obstacle_fraction}")

    @property
    def start_cell(self) -> GridIndex:
        if self.start is not None:
            return GridIndex(*self.start)
        return GridIndex(self.width // 8, self.height // 8)

    @property
    def goal_cell(self) -> GridIndex:
        if self.goal is not None:
            return GridIndex(*self.goal)
        return GridIndex(self.width - 1 - self.width // 8, self.height - 1 - self.height // 8)


def quantize(value: float, unit: float) -> float:
    return max(1, round(value / unit)) * unit


def cost_ladder(c_f_min: float, gradient: float, soil_count: int, unit: float = DEFAULT_COST_UNIT) -> list[float]:
    """``c_f_min * r**k`` for k < soil_count with ``r = gradient**(1/(soil_count-1))``,
    snapped to multiples of ``unit``."""
    if soil_count == 1:
        return [quantize(c_f_min, unit)]
    ratio = gradient ** (1.0 / (soil_count - 1))
    return [quantize(c_f_min * ratio**k, unit) for k in range(soil_count)]


def value_noise(shape: tuple[int, int], spacing: float, rng: np.random.Generator) -> NDArray[np.float64]:
    """Smoothly interpolated random lattice, values in [0, 1].

    ``spacing`` is the lattice period in cells; larger values give larger blobs.
    """
    height, width = shape
    spacing = max(spacing, 1.0)
    lattice = rng.random((int(math.ceil(height / spacing)) + 2, int(math.ceil(width / spacing)) + 2))
    y = np.arange(height) / spacing
    x = np.arange(width) / spacing
    y0, x0 = np.floor(y).astype(int), np.floor(x).astype(int)
    ty, tx = y - y0, x - x0
    sy, sx = ty * ty * (3 - 2 * ty), tx * tx * (3 - 2 * tx)
    a = lattice[np.ix_(y0, x0)]
    b = lattice[np.ix_(y0, x0 + 1)]
    c = lattice[np.ix_(y0 + 1, x0)]
    d = lattice[np.ix_(y0 + 1, x0 + 1)]
    sx_, sy_ = sx[None, :], sy[:, None]
    top = a + (b - a) * sx_
    bottom = c + (d - c) * sx_
    return top + (bottom - top) * sy_


def _soil_field(spec: SceneSpec, ladder: list[float], rng: np.random.Generator) -> NDArray[np.float64]:
    shape = (spec.height, spec.width)
    if len(ladder) == 1:
        return np.full(shape, ladder[0])
    noise = value_noise(shape, spec.blob_scale / spec.resolution, rng)
    edges = np.quantile(noise, np.linspace(0, 1, len(ladder) + 1)[1:-1])
    bins = np.searchsorted(edges, noise, side="right")
    order = rng.permutation(len(ladder))
    return np.asarray(ladder)[order][bins]


def _keep_out(spec: SceneSpec, radius: int = 2) -> NDArray[np.bool_]:
    rows, cols = np.mgrid[0 : spec.height, 0 : spec.width]
    mask = np.zeros((spec.height, spec.width), dtype=bool)
    for cell in (spec.start_cell, spec.goal_cell):
        mask |= (np.abs(rows - cell.row) <= radius) & (np.abs(cols - cell.col) <= radius)
    return mask


def _obstacles(spec: SceneSpec, rng: np.random.Generator) -> NDArray[np.bool_]:
    shape = (spec.height, spec.width)
    target = int(round(spec.obstacle_fraction * spec.width * spec.height))
    if target == 0:
        return np.zeros(shape, dtype=bool)
    noise = value_noise(shape, 0.5 * spec.blob_scale / spec.resolution, rng)
    noise[_keep_out(spec)] = -np.inf
    flat = np.argsort(-noise, axis=None, kind="stable")[:target]
    mask = np.zeros(spec.width * spec.height, dtype=bool)
    mask[flat] = True
    return mask.reshape(shape)


def generate(spec: SceneSpec) -> GroundTruthScene:
    """Deterministic scene for ``spec``; rerolls obstacles that cut start from goal."""
    start, goal = spec.start_cell, spec.goal_cell
    for cell in (start, goal):
        if not (0 <= cell.col < spec.width and 0 <= cell.row < spec.height):
            raise ParameterError(f"start/goal {tuple(cell)} outside the map")
    rng = np.random.default_rng(spec.seed)
    ladder = cost_ladder(spec.c_f_min, spec.gradient, spec.soil_count, spec.cost_unit)
    soil = _soil_field(spec, ladder, rng)
    for _ in range(spec.max_retries):
        blocked = _obstacles(spec, rng)
        follower = np.where(blocked, OBSTACLE, soil)
        if blocked[start.row, start.col] or blocked[goal.row, goal.col]:
            continue
        if dijkstra_path(follower, start, goal, spec.resolution) is None:
            continue
        return GroundTruthScene(
            follower_cost=follower,
            scout_cost=np.ones_like(soil),
            resolution=spec.resolution,
            c_f_min=min(ladder),
            c_f_max=max(ladder),
            start=start,
            goal=goal,
            cost_unit=spec.cost_unit,
        )
    raise GenerationError(
        f"no obstacle layout at fraction {spec.obstacle_fraction} kept start and goal "
        f"connected after {spec.max_retries} tries (seed {spec.seed})"
    )


def _box_scene(spec: SceneSpec, half_size: int, opening: int | None) -> GroundTruthScene:
    width, height = spec.width, spec.height
    start = spec.start if spec.start is not None else GridIndex(width // 8, height // 2)
    goal = spec.goal if spec.goal is not None else GridIndex(width - 1 - width // 4, height // 2)
    start, goal = GridIndex(*start), GridIndex(*goal)
    c0, c1 = goal.col - half_size, goal.col + half_size
    r0, r1 = goal.row - half_size, goal.row + half_size
    if c0 < 2 or r0 < 2 or c1 > width - 3 or r1 > height - 3 or start.col >= c0 - 1:
        raise ParameterError("box does not fit the map with a 2-cell margin")
    cost = quantize(spec.c_f_min, spec.cost_unit)
    follower = np.full((height, width), cost)
    follower[r0, c0 : c1 + 1] = OBSTACLE
    follower[r1, c0 : c1 + 1] = OBSTACLE
    follower[r0 : r1 + 1, c0] = OBSTACLE
    follower[r0 : r1 + 1, c1] = OBSTACLE
    if opening:
        # gap in the wall facing away from the start
        lo = goal.row - opening // 2
        follower[lo : lo + opening, c1] = cost
    return GroundTruthScene(
        follower_cost=follower,
        scout_cost=np.ones((height, width)),
        resolution=spec.resolution,
        c_f_min=cost,
        c_f_max=cost,
        start=start,
        goal=goal,
        cost_unit=spec.cost_unit,
    )


def make_open_box(spec: SceneSpec | None = None, half_size: int = 6, opening: int = 5) -> GroundTruthScene:
    """Goal inside a square obstacle ring with a gap on the side away from the start."""
    return _box_scene(spec or SceneSpec(), half_size, opening)


def make_closed_box(spec: SceneSpec | None = None, half_size: int = 6) -> GroundTruthScene:
    """Goal sealed inside a square obstacle ring; no follower path exists."""
    return _box_scene(spec or SceneSpec(), half_size, None)


def with_seed(spec: SceneSpec, seed: int) -> SceneSpec:
    return replace(spec, seed=seed)
