"""Batch simulator: motion and observation loop, per-step metrics, campaigns.

Simulated time is the scouting clock: the scout flies straight segments at
constant speed ``v_max`` and observes every half cell along the way. The
harness alone knows the ground-truth optimum and uses it to time-stamp when
the optimal follower path is first held.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import PLANNERS, make_planner
from .environments import SceneSpec, generate, make_closed_box, make_open_box
from .errors import ConfigError
from .follower import GridAStar, SamplingStar, plan_feasible, plan_optimistic
from .grid_map import (
    GroundTruthScene,
    PartialMap,
    SensorFootprint,
    coverage,
    free_space_coverage,
    observe_point,
)
from .oracle import oracle_optimum
from .scene_io import load_scene
from .scout import OPTIMAL, Mission, ScoutParams, Termination

STOPPED = "stopped"  # baseline halted by the harness, see RunConfig.baseline_stop
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class RobotParams:
    """Scout kinematics and camera. Defaults are full-scale; see :meth:`desk`."""

    v_max: float = 10.0
    flying_height: float = 20.0
    fov_deg: float = 90.0

    @property
    def half_extent(self) -> float:
        return self.flying_height * math.tan(math.radians(self.fov_deg) / 2.0)

    @property
    def footprint(self) -> SensorFootprint:
        return SensorFootprint(self.half_extent)

    @classmethod
    def desk(cls) -> RobotParams:
        """Camera scaled 1:10 to match the 64x48 desk-scale grid."""
        return cls(v_max=10.0, flying_height=2.0, fov_deg=90.0)


@dataclass
class RunConfig:
    scene_path: str | None = None
    scene_kind: str = "random"  # random | open_box | closed_box
    scene_spec: SceneSpec = field(default_factory=SceneSpec)
    scene_seeds: list[int] = field(default_factory=lambda: [0])
    planners: list[str] = field(default_factory=lambda: ["path_aware"])
    follower: str = "astar"  # astar | sampling
    rrt_iterations: int = 3000
    rrt_radius: float = 3.0
    robot: RobotParams = field(default_factory=RobotParams.desk)
    samples_per_step: int = 20
    max_edge_length: float | None = None
    retry_cap: int = 200
    budget: float | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    fill_min: float | None = None
    fill_max: float | None = None
    max_steps: int = 2000
    harness_stop: bool = True
    baseline_stop: str = "certified"  # certified | optimum
    curve_dt: float = 1.0
    jobs: int = 1
    out: str | None = None

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.scene_path is not None and not Path(self.scene_path).exists():
            raise ConfigError(f"scene {self.scene_path} does not exist")
        if self.scene_kind not in ("random", "open_box", "closed_box"):
            raise ConfigError(f"unknown scene kind {self.scene_kind!r}")
        for name in self.planners:
            if name not in PLANNERS:
                raise ConfigError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}")
        if not self.planners:
            raise ConfigError("planners must be non-empty")
        if self.baseline_stop not in ("certified", "optimum"):
            raise ConfigError(f"baseline_stop must be certified or optimum, got {self.baseline_stop!r}")
        if self.follower not in ("astar", "sampling"):
            raise ConfigError(f"follower must be astar or sampling, got {self.follower!r}")
        if self.max_steps <= 0 or self.samples_per_step <= 0 or self.rrt_iterations <= 0:
            raise ConfigError("max_steps, samples_per_step and rrt_iterations must be positive")
        if not (self.robot.v_max > 0 and self.robot.half_extent > 0 and self.curve_dt > 0):
            raise ConfigError("v_max, footprint and curve_dt must be positive")
        if self.budget is not None and self.budget < 0:
            raise ConfigError("budget must be >= 0")
        for name in ("fill_min", "fill_max"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive")

    def follower_kind(self, seed: int):
        if self.follower == "sampling":
            return SamplingStar(iterations=self.rrt_iterations, rewire_radius=self.rrt_radius, seed=seed)
        return GridAStar()

    def scout_params(self, seed: int) -> ScoutParams:
        return ScoutParams(
            footprint=self.robot.footprint,
            samples_per_step=self.samples_per_step,
            max_edge_length=self.max_edge_length,
            retry_cap=self.retry_cap,
            budget=self.budget,
            seed=seed,
        )

    def scenes(self) -> list[tuple[str, GroundTruthScene]]:
        """Named scenes this configuration runs on."""
        if self.scene_path is not None:
            return [(Path(self.scene_path).stem or "scene", load_scene(self.scene_path))]
        if self.scene_kind == "open_box":
            return [("open_box", make_open_box(self.scene_spec))]
        if self.scene_kind == "closed_box":
            return [("closed_box", make_closed_box(self.scene_spec))]
        return [(f"scene{s:04d}", generate(replace(self.scene_spec, seed=s))) for s in self.scene_seeds]


@dataclass
class StepRow:
    step: int
    time: float
    scout_cost: float
    coverage: float
    free_coverage: float
    feasible_cost: float | None
    bound_cost: float | None
    mode: str
    event: str


@dataclass
class MetricsRecord:
    planner: str
    seed: int
    rows: list[StepRow]
    outcome: str
    optimum: float | None
    final_cost: float | None
    tau_1: float | None
    tau_star: float | None
    tau_inf: float
    coverage_at_tau_star: float | None
    mode_switches: int = 0
    scene: str = ""

    @property
    def final_row(self) -> StepRow:
        return self.rows[-1]

    @property
    def normalized_final(self) -> float | None:
        if self.final_cost is None or not self.optimum:
            return None
        return self.final_cost / self.optimum


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


ROW_FIELDS = [
    "step", "time_s", "scout_cost", "coverage", "free_coverage",
    "feasible_cost", "bound_cost", "normalized_cost", "mode", "event",
]


def record_csv(record: MetricsRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for r in record.rows:
        normalized = (
            r.feasible_cost / record.optimum if r.feasible_cost is not None and record.optimum else None
        )
        writer.writerow(
            [_fmt(v) for v in (
                r.step, r.time, r.scout_cost, r.coverage, r.free_coverage,
                r.feasible_cost, r.bound_cost, normalized, r.mode, r.event,
            )]
        )
    return buf.getvalue()


def _segment_points(a, b, resolution: float):
    ax, ay = (a.col + 0.5) * resolution, (a.row + 0.5) * resolution
    bx, by = (b.col + 0.5) * resolution, (b.row + 0.5) * resolution
    n = max(1, math.ceil(math.hypot(bx - ax, by - ay) / (0.5 * resolution)))
    for k in range(1, n + 1):
        yield ax + (bx - ax) * k / n, ay + (by - ay) * k / n


def _baseline_done(row: StepRow, optimum: float | None, config: RunConfig) -> bool:
    """Harness-side stop for planners without their own optimality test."""
    if row.feasible_cost is None:
        return False
    if config.baseline_stop == "optimum":
        return row.feasible_cost == optimum
    # certified: the measured lower bound has met the feasible cost
    return row.feasible_cost == row.bound_cost


def run_scene(
    scene: GroundTruthScene,
    planner_name: str,
    seed: int,
    config: RunConfig,
    optimum: float | None | str = "compute",
    scene_name: str = "",
) -> MetricsRecord:
    """Simulate one scouting mission to termination."""
    if optimum == "compute":
        optimum = oracle_optimum(scene)
    mission = Mission.from_scene(scene, config.fill_min, config.fill_max)
    planner = make_planner(planner_name, mission, config.scout_params(seed), config.follower_kind(seed))
    footprint = config.robot.footprint
    map_ = PartialMap.for_scene(scene)
    res = scene.resolution
    observe_point(map_, scene, (scene.start.col + 0.5) * res, (scene.start.row + 0.5) * res, footprint)

    rows: list[StepRow] = []
    time = spent = 0.0

    def measure(step: int, event: str) -> StepRow:
        # measurement instrument: exact grid A*, independent of the follower planner
        feasible = plan_feasible(map_, scene.start, scene.goal)
        bound = plan_optimistic(map_, mission.c_f_min, scene.start, scene.goal)
        row = StepRow(
            step=step,
            time=time,
            scout_cost=spent,
            coverage=coverage(map_),
            free_coverage=free_space_coverage(map_, scene),
            feasible_cost=None if feasible is None else feasible.total_cost,
            bound_cost=None if bound is None else bound.total_cost,
            mode=getattr(planner, "mode", ""),
            event=event,
        )
        rows.append(row)
        return row

    row = measure(0, "start")
    pose = scene.start
    outcome, final_path = ITERATION_LIMIT, None
    for step in range(1, config.max_steps + 1):
        if config.harness_stop and planner_name != "path_aware" and _baseline_done(row, optimum, config):
            outcome = STOPPED
            break
        decision = planner.step(map_)
        if isinstance(decision, Termination):
            outcome, final_path = decision.kind, decision.path
            break
        for x, y in _segment_points(pose, decision.pose, res):
            observe_point(map_, scene, x, y, footprint)
        pose = decision.pose
        time += decision.length / config.robot.v_max
        spent += decision.edge_cost
        row = measure(step, "move")
    rows.append(replace(rows[-1], event=outcome, mode=getattr(planner, "mode", "")))

    final_cost = final_path.total_cost if final_path is not None else rows[-1].feasible_cost
    return MetricsRecord(
        planner=planner_name,
        seed=seed,
        rows=rows,
        outcome=outcome,
        optimum=optimum,
        final_cost=final_cost,
        tau_1=next((r.time for r in rows if r.feasible_cost is not None), None),
        tau_star=next(
            (r.time for r in rows if optimum is not None and r.feasible_cost == optimum), None
        ),
        tau_inf=rows[-1].time,
        coverage_at_tau_star=next(
            (r.coverage for r in rows if optimum is not None and r.feasible_cost == optimum), None
        ),
        mode_switches=getattr(planner, "mode_switches", 0),
        scene=scene_name,
    )


def simulate(config: RunConfig, seed: int) -> MetricsRecord:
    """Run the first configured planner on the first configured scene."""
    config.validate()
    name, scene = config.scenes()[0]
    return run_scene(scene, config.planners[0], seed, config, scene_name=name)


# --------------------------------------------------------------------------
# campaigns

METRICS = ("tau_1", "tau_star", "tau_inf")
RUN_FIELDS = [
    "scene", "planner", "seed", "outcome", "tau_1", "tau_star", "tau_inf",
    "final_cost", "optimum", "normalized_final", "coverage", "free_coverage",
    "coverage_at_tau_star", "scout_cost", "steps",
]


@dataclass
class CampaignResult:
    records: list[MetricsRecord]
    summary: list[dict]
    files: dict[str, str]

    def by_planner(self, planner: str) -> list[MetricsRecord]:
        return [r for r in self.records if r.planner == planner]


def _run_job(job):
    scene_name, scene, planner, seed, config, optimum = job
    return run_scene(scene, planner, seed, config, optimum, scene_name)


def summarize(records: list[MetricsRecord], planners: list[str]) -> list[dict]:
    """Mean and sample standard deviation of each timing metric per planner."""
    out = []
    for planner in planners:
        runs = [r for r in records if r.planner == planner]
        for metric in METRICS:
            values = [getattr(r, metric) for r in runs if getattr(r, metric) is not None]
            mean = statistics.fmean(values) if values else None
            std = statistics.stdev(values) if len(values) > 1 else (0.0 if values else None)
            out.append({"planner": planner, "metric": metric, "n": len(values), "runs": len(runs),
                        "mean": mean, "std": std})
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def runs_csv(records: list[MetricsRecord]) -> str:
    rows = []
    for r in records:
        last = r.final_row
        rows.append([
            r.scene, r.planner, r.seed, r.outcome, r.tau_1, r.tau_star, r.tau_inf,
            r.final_cost, r.optimum, r.normalized_final, last.coverage, last.free_coverage,
            r.coverage_at_tau_star, last.scout_cost, last.step,
        ])
    return _csv_text(RUN_FIELDS, rows)


def summary_csv(summary: list[dict]) -> str:
    return _csv_text(
        ["planner", "metric", "n", "runs", "mean", "std"],
        [[s["planner"], s["metric"], s["n"], s["runs"], s["mean"], s["std"]] for s in summary],
    )


TABLE_LABELS = {"tau_1": "tau_1 [s]", "tau_star": "tau_star [s]", "tau_inf": "tau_inf [s]"}


def table_csv(summary: list[dict], planners: list[str]) -> str:
    """Metrics as rows, planners as columns, cells ``mean ± std`` or ``N/A``."""
    lookup = {(s["planner"], s["metric"]): s for s in summary}
    rows = []
    for metric in METRICS:
        cells = [TABLE_LABELS[metric]]
        for planner in planners:
            s = lookup[(planner, metric)]
            cells.append("N/A" if s["mean"] is None else f"{s['mean']:.1f} ± {s['std']:.1f}")
        rows.append(cells)
    return _csv_text(["metric", *planners], rows)


def value_at(rows: list[StepRow], t: float, attr: str):
    """Step-function value of ``attr`` at time ``t`` (last row at or before t)."""
    value = None
    for r in rows:
        if r.time > t:
            break
        value = getattr(r, attr)
    return value


def curves_csv(records: list[MetricsRecord], planners: list[str], dt: float) -> str:
    """Mean normalized follower cost and coverage on a common time grid."""
    horizon = max((r.tau_inf for r in records), default=0.0)
    steps = int(math.floor(horizon / dt + 1e-9)) + 1
    grid = [k * dt for k in range(steps)]
    rows = []
    for planner in planners:
        runs = [r for r in records if r.planner == planner]
        for t in grid:
            norm, cov = [], []
            for r in runs:
                cov.append(value_at(r.rows, t, "coverage"))
                cost = value_at(r.rows, t, "feasible_cost")
                if cost is not None and r.optimum:
                    norm.append(cost / r.optimum)
            rows.append([
                planner, t, statistics.fmean(norm) if norm else None, len(norm),
                statistics.fmean(cov) if cov else None,
            ])
    return _csv_text(["planner", "time_s", "mean_normalized_cost", "n_defined", "mean_coverage"], rows)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def campaign(config: RunConfig) -> CampaignResult:
    """Every configured planner on every scene for every seed.

    With ``config.out`` set, writes ``runs.csv``, ``summary.csv``,
    ``table.csv``, ``curves.csv`` and one ``runs/<scene>__<planner>__<seed>.csv``
    per run.
    """
    config.validate()
    scenes = config.scenes()
    jobs = []
    for scene_name, scene in scenes:
        optimum = oracle_optimum(scene)
        for planner in config.planners:
            for seed in config.seeds:
                jobs.append((scene_name, scene, planner, seed, config, optimum))
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(job) for job in jobs]

    summary = summarize(records, config.planners)
    files = {
        "runs.csv": runs_csv(records),
        "summary.csv": summary_csv(summary),
        "table.csv": table_csv(summary, config.planners),
        "curves.csv": curves_csv(records, config.planners, config.curve_dt),
    }
    for r in records:
        files[f"runs/{r.scene}__{r.planner}__{r.seed}.csv"] = record_csv(r)
    if config.out is not None:
        out = Path(config.out)
        for name, text in files.items():
            _write_atomic(out / name, text)
    return CampaignResult(records, summary, files)
