"""Scene files: a key=value header plus 16-bit PGM cost rasters.

A scene is a directory (or a ``.zip`` archive of the same files)::

    scene.txt          UTF-8 header, one key=value per line, '#' comments
    follower_cost.pgm  P5, maxval 65535; cost = value * cost_unit,
                       value == obstacle_value marks a follower obstacle
    scout_cost.pgm     optional; cost = value * scout_cost_unit, default 1

Raster row ``r`` is grid row ``r``. 16-bit PGM samples are big-endian as
required by the netpbm format.
"""

from __future__ import annotations

import os
import re
import zipfile
from pathlib import Path

import numpy as np

from .errors import SceneFormatError
from .grid_map import DEFAULT_COST_UNIT, GridIndex, GroundTruthScene

HEADER_NAME = "scene.txt"
FOLLOWER_NAME = "follower_cost.pgm"
SCOUT_NAME = "scout_cost.pgm"
FORMAT_TAG = "scout-scene/1"
OBSTACLE_VALUE = 65535

_REQUIRED = ("width", "height", "resolution", "c_f_min", "c_f_max", "start", "goal")


def write_pgm16(values: np.ndarray) -> bytes:
    values = np.asarray(values)
    h, w = values.shape
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + values.astype(">u2").tobytes()


def read_pgm16(data: bytes, name: str = "raster") -> np.ndarray:
    # header: magic, width, height, maxval separated by whitespace, comments allowed
    pos = 0
    tokens: list[bytes] = []
    token_re = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    for _ in range(4):
        m = token_re.match(data, pos)
        if not m:
            raise SceneFormatError(f"{name}: truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise SceneFormatError(f"{name}: expected binary PGM (P5), got {tokens[0]!r}")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise SceneFormatError(f"{name}: malformed PGM header") from exc
    if maxval != 65535:
        raise SceneFormatError(f"{name}: expected 16-bit PGM (maxval 65535), got {maxval}")
    pos += 1  # single whitespace byte after maxval
    body = data[pos:]
    if len(body) != 2 * w * h:
        raise SceneFormatError(f"{name}: expected {2 * w * h} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=">u2").reshape(h, w).astype(np.int64)


def _encode_costs(costs: np.ndarray, unit: float, what: str, allow_obstacle: bool) -> np.ndarray:
    finite = np.isfinite(costs)
    scaled = np.where(finite, costs / unit, 0.0)
    values = np.rint(scaled)
    off_grid = finite & ((values * unit != costs) | (values < 1) | (values >= OBSTACLE_VALUE))
    if off_grid.any():
        row, col = np.argwhere(off_grid)[0]
        raise SceneFormatError(
            f"{what} cost {costs[row, col]!r} at (col={col}, row={row}) is not a multiple "
            f"of {unit!r} in [1, {OBSTACLE_VALUE - 1}] units"
        )
    if not allow_obstacle and not finite.all():
        raise SceneFormatError(f"{what} cost layer cannot hold obstacles")
    return np.where(finite, values, OBSTACLE_VALUE).astype(np.uint16)


def _header_text(scene: GroundTruthScene, has_scout: bool) -> str:
    lines = [
        f"format={FORMAT_TAG}",
        f"width={scene.width}",
        f"height={scene.height}",
        f"resolution={scene.resolution!r}",
        f"c_f_min={scene.c_f_min!r}",
        f"c_f_max={scene.c_f_max!r}",
        f"start={scene.start.col},{scene.start.row}",
        f"goal={scene.goal.col},{scene.goal.row}",
        f"obstacle_value={OBSTACLE_VALUE}",
        f"cost_unit={scene.cost_unit!r}",
        f"follower_cost_file={FOLLOWER_NAME}",
    ]
    if has_scout:
        lines += [f"scout_cost_unit={scene.scout_cost_unit!r}", f"scout_cost_file={SCOUT_NAME}"]
    return "\n".join(lines) + "\n"


def scene_files(scene: GroundTruthScene) -> dict[str, bytes]:
    """Serialize a scene to ``{filename: bytes}``."""
    follower = _encode_costs(scene.follower_cost, scene.cost_unit, "follower", True)
    has_scout = not np.all(scene.scout_cost == 1.0)
    files = {FOLLOWER_NAME: write_pgm16(follower)}
    if has_scout:
        files[SCOUT_NAME] = write_pgm16(
            _encode_costs(scene.scout_cost, scene.scout_cost_unit, "scout", False)
        )
    files[HEADER_NAME] = _header_text(scene, has_scout).encode("utf-8")
    return files


def save_scene(scene: GroundTruthScene, path: str | os.PathLike) -> Path:
    """Write a scene directory, or a zip archive when ``path`` ends in ``.zip``."""
    path = Path(path)
    files = scene_files(scene)
    if path.suffix == ".zip":
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with zipfile.ZipFile(tmp, "w") as zf:
            for name in sorted(files):
                info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                zf.writestr(info, files[name])
        os.replace(tmp, path)
        return path
    path.mkdir(parents=True, exist_ok=True)
    for name, data in files.items():
        tmp = path / (name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path / name)
    stale = path / SCOUT_NAME
    if SCOUT_NAME not in files and stale.exists():
        stale.unlink()
    return path


def _parse_header(text: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SceneFormatError(f"{HEADER_NAME}:{lineno}: expected key=value, got {raw!r}")
        fields[key.strip()] = value.strip()
    missing = [k for k in _REQUIRED if k not in fields]
    if missing:
        raise SceneFormatError(f"{HEADER_NAME}: missing keys {', '.join(missing)}")
    tag = fields.get("format", FORMAT_TAG)
    if tag != FORMAT_TAG:
        raise SceneFormatError(f"{HEADER_NAME}: unsupported format {tag!r}")
    return fields


def _number(fields: dict[str, str], key: str, kind=float):
    try:
        return kind(fields[key])
    except ValueError as exc:
        raise SceneFormatError(f"{HEADER_NAME}: {key}={fields[key]!r} is not a valid {kind.__name__}") from exc


def _cell(fields: dict[str, str], key: str) -> GridIndex:
    parts = fields[key].split(",")
    try:
        col, row = (int(p) for p in parts)
    except ValueError as exc:
        raise SceneFormatError(f"{HEADER_NAME}: {key}={fields[key]!r}, expected col,row") from exc
    return GridIndex(col, row)


def _read_files(path: Path) -> dict[str, bytes]:
    if path.is_dir():
        return {p.name: p.read_bytes() for p in path.iterdir() if p.is_file()}
    if path.is_file() and zipfile.is_zipfile(path):
        with zipfile.ZipFile(path) as zf:
            return {os.path.basename(n): zf.read(n) for n in zf.namelist() if not n.endswith("/")}
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such scene")
    raise SceneFormatError(f"{path}: neither a scene directory nor a zip archive")


def load_scene(path: str | os.PathLike) -> GroundTruthScene:
    return parse_scene(_read_files(Path(path)), str(path))


def parse_scene(files: dict[str, bytes], path: str = "<memory>") -> GroundTruthScene:
    """Build a scene from ``{filename: bytes}`` as produced by :func:`scene_files`."""
    if HEADER_NAME not in files:
        raise SceneFormatError(f"{path}: no {HEADER_NAME}")
    try:
        fields = _parse_header(files[HEADER_NAME].decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise SceneFormatError(f"{HEADER_NAME}: not UTF-8") from exc

    width, height = _number(fields, "width", int), _number(fields, "height", int)
    obstacle_value = _number(fields, "obstacle_value", int) if "obstacle_value" in fields else OBSTACLE_VALUE
    unit = _number(fields, "cost_unit") if "cost_unit" in fields else DEFAULT_COST_UNIT
    c_min, c_max = _number(fields, "c_f_min"), _number(fields, "c_f_max")

    fname = fields.get("follower_cost_file", FOLLOWER_NAME)
    if fname not in files:
        raise SceneFormatError(f"{path}: missing follower raster {fname}")
    raw = read_pgm16(files[fname], fname)
    if raw.shape != (height, width):
        raise SceneFormatError(f"{fname}: raster is {raw.shape[1]}x{raw.shape[0]}, header says {width}x{height}")
    obstacles = raw == obstacle_value
    follower = np.where(obstacles, np.inf, raw * unit)
    out_of_range = ~obstacles & ((follower < c_min) | (follower > c_max))
    if out_of_range.any():
        row, col = np.argwhere(out_of_range)[0]
        raise SceneFormatError(
            f"{fname}: cost {follower[row, col]!r} at (col={col}, row={row}) outside [{c_min}, {c_max}]"
        )

    scout_unit = DEFAULT_COST_UNIT
    sname = fields.get("scout_cost_file")
    if sname:
        if sname not in files:
            raise SceneFormatError(f"{path}: missing scout raster {sname}")
        scout_unit = _number(fields, "scout_cost_unit") if "scout_cost_unit" in fields else DEFAULT_COST_UNIT
        sraw = read_pgm16(files[sname], sname)
        if sraw.shape != (height, width):
            raise SceneFormatError(f"{sname}: raster size disagrees with header")
        if (sraw == 0).any():
            row, col = np.argwhere(sraw == 0)[0]
            raise SceneFormatError(f"{sname}: zero scout cost at (col={col}, row={row})")
        scout = sraw * scout_unit
    else:
        scout = np.ones((height, width))

    return GroundTruthScene(
        follower_cost=follower,
        scout_cost=scout,
        resolution=_number(fields, "resolution"),
        c_f_min=c_min,
        c_f_max=c_max,
        start=_cell(fields, "start"),
        goal=_cell(fields, "goal"),
        cost_unit=unit,
        scout_cost_unit=scout_unit,
    )


def scene_from_text(header: str, follower_values: np.ndarray) -> GroundTruthScene:
    """Build a scene from a header string and raw raster values (for fixtures)."""
    return parse_scene({HEADER_NAME: header.encode("utf-8"), FOLLOWER_NAME: write_pgm16(follower_values)})
