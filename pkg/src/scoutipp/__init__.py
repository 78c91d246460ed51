"""Scout-follower informative path planning on grid cost maps."""

from .baselines import PLANNERS, make_planner
from .environments import SceneSpec, generate, make_closed_box, make_open_box
from .errors import (
    ConfigError,
    ContractError,
    GenerationError,
    InfeasiblePathError,
    MapBoundsError,
    ParameterError,
    SceneFormatError,
    ScoutError,
)
from .follower import FollowerPath, GridAStar, SamplingStar, is_path_explored, path_cost, plan_feasible, plan_optimistic
from .grid_map import (
    OBSTACLE,
    GridIndex,
    GroundTruthScene,
    OptimisticMap,
    PartialMap,
    SensorFootprint,
    complete,
    coverage,
    observe,
)
from .harness import MetricsRecord, RobotParams, RunConfig, campaign, run_scene, simulate
from .oracle import oracle_optimum, oracle_path
from .scene_io import load_scene, save_scene
from .scout import Mission, PathAwarePlanner, ScoutParams, ScoutTree, Termination, Waypoint

__version__ = "0.1.0"
