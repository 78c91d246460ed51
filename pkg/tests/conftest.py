from __future__ import annotations

import numpy as np
import pytest

from scoutipp.grid_map import OBSTACLE, GridIndex, GroundTruthScene, PartialMap


def make_scene(costs, start=(0, 0), goal=None, resolution=0.5, c_min=None, c_max=None, scout=None):
    costs = np.asarray(costs, dtype=float)
    finite = costs[np.isfinite(costs)]
    height, width = costs.shape
    return GroundTruthScene(
        follower_cost=costs,
        scout_cost=np.ones_like(costs) if scout is None else np.asarray(scout, dtype=float),
        resolution=resolution,
        c_f_min=float(finite.min()) if c_min is None else c_min,
        c_f_max=float(finite.max()) if c_max is None else c_max,
        start=GridIndex(*start),
        goal=GridIndex(width - 1, height - 1) if goal is None else GridIndex(*goal),
    )


def reveal_all(scene: GroundTruthScene) -> PartialMap:
    map_ = PartialMap.for_scene(scene)
    map_.reveal_window(scene, 0, scene.width - 1, 0, scene.height - 1)
    return map_


def random_costs(rng: np.random.Generator, width: int, height: int, blocked: float = 0.2):
    costs = rng.integers(256, 256 * 4, size=(height, width)) / 256.0
    return np.where(rng.random((height, width)) < blocked, OBSTACLE, costs)


@pytest.fixture
def uniform_scene():
    return make_scene(np.ones((8, 10)))
