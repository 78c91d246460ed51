from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from scoutipp.follower import is_path_explored, path_cost, plan_feasible, plan_optimistic, step_is_open
from scoutipp.grid_map import UNKNOWN, GridIndex, PartialMap, SensorFootprint, complete, observe
from scoutipp.oracle import oracle_optimum
from scoutipp.scene_io import parse_scene, scene_files
from scoutipp.scout import window_sums

from conftest import make_scene, random_costs

PROFILE = settings(max_examples=60, deadline=None)


@st.composite
def scenes(draw, max_side=14):
    width = draw(st.integers(2, max_side))
    height = draw(st.integers(2, max_side))
    seed = draw(st.integers(0, 2**32 - 1))
    blocked = draw(st.sampled_from([0.0, 0.15, 0.3]))
    rng = np.random.default_rng(seed)
    costs = random_costs(rng, width, height, blocked)
    start = GridIndex(int(rng.integers(width)), int(rng.integers(height)))
    goal = GridIndex(int(rng.integers(width)), int(rng.integers(height)))
    costs[start.row, start.col] = 1.0
    costs[goal.row, goal.col] = 1.0
    return make_scene(costs, start=start, goal=goal, c_min=1.0, c_max=4.0)


@st.composite
def partial_maps(draw):
    """A scene plus a map revealed by a few random footprints, always including the start."""
    scene = draw(scenes())
    map_ = PartialMap.for_scene(scene)
    footprint = SensorFootprint(draw(st.sampled_from([0.5, 1.0, 1.5])))
    observe(map_, scene, scene.start, footprint)
    for _ in range(draw(st.integers(0, 6))):
        pose = GridIndex(draw(st.integers(0, scene.width - 1)), draw(st.integers(0, scene.height - 1)))
        observe(map_, scene, pose, footprint)
    return scene, map_


@PROFILE
@given(scenes(), st.lists(st.tuples(st.integers(0, 13), st.integers(0, 13)), max_size=8))
def test_observation_is_monotone_and_exact(scene, poses):
    map_ = PartialMap.for_scene(scene)
    footprint = SensorFootprint(1.0)
    for col, row in poses:
        pose = GridIndex(min(col, scene.width - 1), min(row, scene.height - 1))
        before = map_.state.copy()
        fresh = observe(map_, scene, pose, footprint)
        assert not ((before != UNKNOWN) & (map_.state == UNKNOWN)).any()
        newly = {GridIndex(int(c), int(r)) for r, c in np.argwhere((before == UNKNOWN) & (map_.state != UNKNOWN))}
        assert fresh == newly
    known = map_.state != UNKNOWN
    np.testing.assert_array_equal(map_.cost[known], scene.follower_cost[known])
    assert map_.explored_count == int(known.sum())


@PROFILE
@given(partial_maps(), st.sampled_from([1.0, 2.5, 4.0]))
def test_completion_keeps_known_cells(data, fill):
    _, map_ = data
    costs = complete(map_, fill).costs
    known = map_.state != UNKNOWN
    np.testing.assert_array_equal(costs[known], map_.cost[known])
    assert (costs[~known] == fill).all()


@PROFILE
@given(partial_maps())
def test_bounds_bracket_the_optimum(data):
    scene, map_ = data
    optimum = oracle_optimum(scene)
    lower = plan_optimistic(map_, scene.c_f_min, scene.start, scene.goal)
    feasible = plan_feasible(map_, scene.start, scene.goal)
    if optimum is None:
        assert feasible is None
        return
    assert lower is not None and lower.total_cost <= optimum
    if feasible is not None:
        assert feasible.total_cost >= optimum


@PROFILE
@given(partial_maps())
def test_explored_optimistic_path_is_optimal(data):
    scene, map_ = data
    lower = plan_optimistic(map_, scene.c_f_min, scene.start, scene.goal)
    if lower is None or not is_path_explored(lower, map_):
        return
    feasible = plan_feasible(map_, scene.start, scene.goal)
    assert feasible is not None
    assert feasible.total_cost == lower.total_cost == oracle_optimum(scene)


@PROFILE
@given(partial_maps())
def test_lower_bound_grows_with_exploration(data):
    scene, map_ = data
    before = plan_optimistic(map_, scene.c_f_min, scene.start, scene.goal)
    observe(map_, scene, scene.goal, SensorFootprint(1.5))
    after = plan_optimistic(map_, scene.c_f_min, scene.start, scene.goal)
    if before is None:
        assert after is None
    elif after is not None:
        assert after.total_cost >= before.total_cost


@PROFILE
@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.integers(0, 3),
    st.integers(0, 2**32 - 1),
)
def test_window_sums_match_brute_force(width, height, half, seed):
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 5, size=(height, width)).astype(float)
    cols = rng.integers(0, width, size=6)
    rows = rng.integers(0, height, size=6)
    got = window_sums(values, cols, rows, half)
    for k, (c, r) in enumerate(zip(cols, rows)):
        window = values[max(r - half, 0) : r + half + 1, max(c - half, 0) : c + half + 1]
        assert got[k] == window.sum()


@PROFILE
@given(scenes())
def test_scene_round_trip(scene):
    assert parse_scene(scene_files(scene)).same_as(scene)


@PROFILE
@given(scenes(), st.lists(st.sampled_from([(dc, dr) for dc in (-1, 0, 1) for dr in (-1, 0, 1) if dc or dr]), max_size=20))
def test_path_cost_is_reversal_symmetric(scene, moves):
    costs = np.where(np.isinf(scene.follower_cost), 1.0, scene.follower_cost)
    cells = [scene.start]
    for dc, dr in moves:
        nxt = GridIndex(cells[-1].col + dc, cells[-1].row + dr)
        if 0 <= nxt.col < scene.width and 0 <= nxt.row < scene.height and step_is_open(costs, cells[-1], nxt):
            cells.append(nxt)
    forward = path_cost(cells, costs, scene.resolution)
    assert forward == path_cost(cells[::-1], costs, scene.resolution)
    assert forward >= 0.0
