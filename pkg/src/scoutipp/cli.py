"""Command line entry point: ``scoutipp {generate,run,campaign,oracle}``.

Every flag may also be given in a UTF-8 ``key=value`` config file
(``--config``), using the flag name without dashes, e.g. ``fill-min=1.5``.
Flags on the command line override the file.

Exit codes: 0 success, 2 invalid configuration, 3 scene error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .environments import SceneSpec, generate, make_closed_box, make_open_box
from .errors import ConfigError, GenerationError, ParameterError, SceneFormatError
from .grid_map import GridIndex
from .harness import RunConfig, campaign, record_csv, run_scene
from .oracle import oracle_path
from .scene_io import load_scene, save_scene

EXIT_OK, EXIT_CONFIG, EXIT_SCENE = 0, 2, 3


def parse_seeds(text: str) -> list[int]:
    """``"0-4"``, ``"1,3,7"`` or a mix such as ``"0-2,9"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(lo_i, hi_i + 1))
        else:
            seeds.append(int(part))
    return seeds


def parse_cell(text: str) -> GridIndex:
    col, row = (int(v) for v in text.split(","))
    return GridIndex(col, row)


def read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


# flag name -> (argparse dest, converter)
OPTIONS = {
    "scene": ("scene", str),
    "scene-kind": ("scene_kind", str),
    "planner": ("planner", str),
    "follower": ("follower", str),
    "seeds": ("seeds", parse_seeds),
    "scene-seeds": ("scene_seeds", parse_seeds),
    "budget": ("budget", float),
    "fill-min": ("fill_min", float),
    "fill-max": ("fill_max", float),
    "out": ("out", str),
    "width": ("width", int),
    "height": ("height", int),
    "resolution": ("resolution", float),
    "gradient": ("gradient", float),
    "soil-count": ("soil_count", int),
    "obstacle-fraction": ("obstacle_fraction", float),
    "seed": ("seed", int),
    "start": ("start", parse_cell),
    "goal": ("goal", parse_cell),
    "samples-per-step": ("samples_per_step", int),
    "max-edge": ("max_edge", float),
    "rrt-iterations": ("rrt_iterations", int),
    "max-steps": ("max_steps", int),
    "curve-dt": ("curve_dt", float),
    "jobs": ("jobs", int),
    "baseline-stop": ("baseline_stop", str),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scoutipp", description="Scout-follower path planning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, names: list[str]) -> None:
        p.add_argument("--config", help="key=value file; command-line flags override it")
        for name in names:
            dest, conv = OPTIONS[name]
            p.add_argument(f"--{name}", dest=dest, type=conv, default=None)

    scene_flags = ["scene-kind", "width", "height", "resolution", "gradient", "soil-count",
                   "obstacle-fraction", "seed", "start", "goal"]
    run_flags = ["scene", "planner", "follower", "seeds", "budget", "fill-min", "fill-max", "out",
                 "samples-per-step", "max-edge", "rrt-iterations", "max-steps", "baseline-stop", *scene_flags]

    p = sub.add_parser("generate", help="write a generated scene")
    add_common(p, [*scene_flags, "out"])
    p = sub.add_parser("run", help="simulate one planner on one scene")
    add_common(p, run_flags)
    p = sub.add_parser("campaign", help="every planner x scene x seed, with summary CSVs")
    add_common(p, [*run_flags, "scene-seeds", "curve-dt", "jobs"])
    p = sub.add_parser("oracle", help="print the optimal follower cost of a scene")
    add_common(p, ["scene", *scene_flags, "fill-min", "fill-max"])
    return parser


def merged_options(args: argparse.Namespace) -> dict:
    """Config file values overridden by explicit flags."""
    opts: dict = {}
    if args.config:
        for key, text in read_config_file(args.config).items():
            if key not in OPTIONS:
                raise ConfigError(f"unknown config key {key!r}")
            dest, conv = OPTIONS[key]
            if dest not in vars(args):
                raise ConfigError(f"config key {key!r} does not apply to {args.command}")
            try:
                opts[dest] = conv(text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
    for dest, value in vars(args).items():
        if value is not None and dest not in ("command", "config"):
            opts[dest] = value
    return opts


def scene_spec(opts: dict) -> SceneSpec:
    fields = ("width", "height", "resolution", "gradient", "soil_count", "obstacle_fraction", "seed", "start", "goal")
    kwargs = {k: opts[k] for k in fields if k in opts}
    try:
        return SceneSpec(**kwargs)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def run_config(opts: dict) -> RunConfig:
    planners = opts.get("planner", "path_aware").split(",")
    config = RunConfig(
        scene_path=opts.get("scene"),
        scene_kind=opts.get("scene_kind", "random"),
        scene_spec=scene_spec(opts),
        scene_seeds=opts.get("scene_seeds", [opts.get("seed", 0)]),
        planners=[p.strip() for p in planners if p.strip()],
        follower=opts.get("follower", "astar"),
        budget=opts.get("budget"),
        seeds=opts.get("seeds", [0]),
        fill_min=opts.get("fill_min"),
        fill_max=opts.get("fill_max"),
        out=opts.get("out"),
    )
    for key, attr in (("samples_per_step", "samples_per_step"), ("max_edge", "max_edge_length"),
                      ("rrt_iterations", "rrt_iterations"), ("max_steps", "max_steps"),
                      ("curve_dt", "curve_dt"), ("jobs", "jobs"), ("baseline_stop", "baseline_stop")):
        if key in opts:
            config = replace(config, **{attr: opts[key]})
    config.validate()
    return config


def _scene_from(opts: dict):
    if opts.get("scene"):
        return load_scene(opts["scene"])
    kind = opts.get("scene_kind", "random")
    spec = scene_spec(opts)
    if kind == "open_box":
        return make_open_box(spec)
    if kind == "closed_box":
        return make_closed_box(spec)
    if kind != "random":
        raise ConfigError(f"unknown scene kind {kind!r}")
    return generate(spec)


def cmd_generate(opts: dict) -> int:
    if "out" not in opts:
        raise ConfigError("generate needs --out (directory or .zip)")
    scene = _scene_from(opts)
    save_scene(scene, opts["out"])
    print(f"wrote {opts['out']} ({scene.width}x{scene.height}, start {tuple(scene.start)}, goal {tuple(scene.goal)})")
    return EXIT_OK


def cmd_run(opts: dict) -> int:
    config = run_config(opts)
    name, scene = config.scenes()[0]
    out = Path(config.out) if config.out else None
    for planner in config.planners:
        for seed in config.seeds:
            record = run_scene(scene, planner, seed, config, scene_name=name)
            print(
                f"{planner} seed={seed} outcome={record.outcome} tau_1={record.tau_1} "
                f"tau_star={record.tau_star} tau_inf={record.tau_inf} final_cost={record.final_cost} "
                f"optimum={record.optimum} coverage={record.final_row.coverage:.3f}"
            )
            if out is not None:
                out.mkdir(parents=True, exist_ok=True)
                (out / f"{name}__{planner}__{seed}.csv").write_text(record_csv(record), encoding="utf-8")
    return EXIT_OK


def cmd_campaign(opts: dict) -> int:
    config = run_config(opts)
    if len(config.seeds) < 2:
        raise ConfigError("a campaign needs at least 2 seeds")
    result = campaign(config)
    sys.stdout.write(result.files["table.csv"])
    if config.out:
        print(f"wrote {len(result.files)} files under {config.out}")
    return EXIT_OK


def cmd_oracle(opts: dict) -> int:
    scene = _scene_from(opts)
    path = oracle_path(scene)
    print("NoPath" if path is None else repr(path.total_cost))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "campaign": cmd_campaign, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = merged_options(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SceneFormatError, GenerationError, ParameterError, OSError) as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return EXIT_SCENE


if __name__ == "__main__":
    sys.exit(main())
