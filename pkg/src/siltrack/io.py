"""On-disk artifacts: PGM images, background histograms, run configuration,
scene specs, and pose-track CSVs.

Formats are deliberately plain text or raw binary so every writer/reader pair
round-trips bit-exactly (images, histograms) or to the stated precision
(track CSV, 9 significant digits).  See the README format reference for
byte-level examples.
"""

from __future__ import annotations

import glob as _glob
import os
from dataclasses import dataclass

import numpy as np

from .appearance import validate_histogram
from .geometry import PoseParams, load_mesh
from .synth import SceneSpec


class PgmError(ValueError):
    """Raised for malformed PGM files."""


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration files."""


# ---------------------------------------------------------------------------
# PGM images (binary "P5", maxval 255)
# ---------------------------------------------------------------------------

def write_pgm(image: np.ndarray, path) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    if image.dtype != np.uint8:
        raise ValueError("PGM images must be uint8")
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a (H, W) uint8 array; bit-exact round-trip
    with write_pgm."""
    with open(path, "rb") as fh:
        data = fh.read()

    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmError(f"{path}: truncated header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise PgmError(f"{path}: expected P5 magic, got {magic!r}")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError:
        raise PgmError(f"{path}: non-numeric header field") from None
    if maxval != 255:
        raise PgmError(f"{path}: unsupported maxval {maxval} (only 255)")
    if width <= 0 or height <= 0:
        raise PgmError(f"{path}: invalid dimensions {width}x{height}")
    pos += 1  # exactly one whitespace byte separates header and raster
    raster = data[pos:pos + width * height]
    if len(raster) < width * height:
        raise PgmError(f"{path}: truncated payload "
                       f"({len(raster)} of {width * height} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


# ---------------------------------------------------------------------------
# Background histogram ("BGHIST v1")
# ---------------------------------------------------------------------------

HIST_HEADER = "BGHIST v1"


def write_histogram(hist: np.ndarray, path) -> None:
    validate_histogram(hist)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(HIST_HEADER + "\n")
        for start in range(0, 256, 8):
            row = hist[start:start + 8]
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_histogram(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if header != HIST_HEADER:
            raise ConfigError(f"{path}: expected '{HIST_HEADER}' header")
        values = fh.read().split()
    if len(values) != 256:
        raise ConfigError(f"{path}: expected 256 values, got {len(values)}")
    try:
        hist = np.array([float(v) for v in values])
    except ValueError:
        raise ConfigError(f"{path}: non-numeric histogram value") from None
    validate_histogram(hist)
    return hist


# ---------------------------------------------------------------------------
# key = value parsing
# ---------------------------------------------------------------------------

def parse_keyvalue_lines(path) -> list[tuple[int, str, str]]:
    """Parse flat ``key = value`` text; '#' starts a comment.

    Returns (line number, key, value) triples in file order; repeated keys
    are preserved for the caller to accept or reject.
    """
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            entries.append((lineno, key, value))
    return entries


def _parse_typed(path, lineno, key, raw, kind):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(
            f"{path}:{lineno}: {key} must be {kind.__name__}, got {raw!r}"
        ) from None
    return raw


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Tracking-run inputs, filter parameters, and output locations."""

    mesh_path: str
    frames: str
    background_histogram: str | None = None
    background_frames: str | None = None
    out_dir: str = "out"
    particle_count: int = 2000
    angle_std: float = 0.05
    translation_std: float = 2.0
    log_scale_std: float = 0.05
    articulation_std: float = 0.05
    seed: int = 0
    threads: int = 1
    track_csv: str = "track.csv"

    def validate(self) -> None:
        if self.particle_count < 1:
            raise ConfigError("particle_count must be >= 1")
        for name in ("angle_std", "translation_std", "log_scale_std",
                     "articulation_std"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if (self.background_histogram is None
                and self.background_frames is None):
            raise ConfigError(
                "config requires background_histogram or background_frames")


_CONFIG_SCHEMA = {
    "mesh": ("mesh_path", str),
    "frames": ("frames", str),
    "background_histogram": ("background_histogram", str),
    "background_frames": ("background_frames", str),
    "out_dir": ("out_dir", str),
    "particle_count": ("particle_count", int),
    "angle_std": ("angle_std", float),
    "translation_std": ("translation_std", float),
    "log_scale_std": ("log_scale_std", float),
    "articulation_std": ("articulation_std", float),
    "seed": ("seed", int),
    "threads": ("threads", int),
    "track_csv": ("track_csv", str),
}

_CONFIG_REQUIRED = ("mesh", "frames")
_CONFIG_PATH_KEYS = ("mesh", "frames", "background_histogram",
                     "background_frames", "out_dir")


def read_config(path) -> RunConfig:
    """Parse a tracking run config; unknown and duplicate keys are rejected,
    missing required keys are reported by name.  Relative paths resolve
    against the config file's directory."""
    base = os.path.dirname(os.path.abspath(path))
    values = {}
    seen = set()
    for lineno, key, raw in parse_keyvalue_lines(path):
        if key not in _CONFIG_SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        field_name, kind = _CONFIG_SCHEMA[key]
        value = _parse_typed(path, lineno, key, raw, kind)
        if key in _CONFIG_PATH_KEYS and not os.path.isabs(value):
            value = os.path.join(base, value)
        values[field_name] = value
    for key in _CONFIG_REQUIRED:
        if _CONFIG_SCHEMA[key][0] not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
    config = RunConfig(**values)
    config.validate()
    return config


def list_frames(frames: str) -> list[str]:
    """Resolve a frames directory or glob into lexicographic file order."""
    if os.path.isdir(frames):
        paths = sorted(
            os.path.join(frames, name) for name in os.listdir(frames)
            if name.lower().endswith(".pgm"))
    else:
        paths = sorted(_glob.glob(frames))
    return paths


# ---------------------------------------------------------------------------
# Scene specs
# ---------------------------------------------------------------------------

_SCENE_DEFAULTS = {
    "width": None,
    "height": None,
    "bg_mean": 30.0,
    "bg_std": 10.0,
    "fg_mean": 180.0,
    "fg_std": 10.0,
    "noise_seed": 0,
    "background_count": 10,
}


def read_scene_spec(path) -> SceneSpec:
    """Parse a synthetic scene spec file.

    Same ``key = value`` format as run configs, plus a repeatable
    ``pose = yaw pitch roll tx ty scale [artic]`` key giving the trajectory;
    a single pose may be replicated with ``frames = N``.
    """
    base = os.path.dirname(os.path.abspath(path))
    mesh_path = None
    frames_count = None
    poses: list[PoseParams] = []
    values = dict(_SCENE_DEFAULTS)
    int_keys = {"width", "height", "noise_seed", "background_count"}

    for lineno, key, raw in parse_keyvalue_lines(path):
        if key == "mesh":
            mesh_path = raw if os.path.isabs(raw) else os.path.join(base, raw)
        elif key == "frames":
            frames_count = _parse_typed(path, lineno, key, raw, int)
        elif key == "pose":
            parts = raw.split()
            if len(parts) not in (6, 7):
                raise ConfigError(
                    f"{path}:{lineno}: pose needs 6 or 7 numbers")
            try:
                numbers = [float(p) for p in parts]
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: non-numeric pose value") from None
            poses.append(PoseParams(*numbers))
        elif key in values:
            kind = int if key in int_keys else float
            values[key] = _parse_typed(path, lineno, key, raw, kind)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")

    if mesh_path is None:
        raise ConfigError(f"{path}: missing required key 'mesh'")
    if values["width"] is None or values["height"] is None:
        raise ConfigError(f"{path}: missing required key 'width'/'height'")
    if not poses:
        raise ConfigError(f"{path}: at least one 'pose' line is required")
    if frames_count is not None:
        if len(poses) == 1:
            poses = poses * frames_count
        elif frames_count != len(poses):
            raise ConfigError(
                f"{path}: frames = {frames_count} conflicts with "
                f"{len(poses)} pose lines")
    for pose in poses:
        try:
            pose.validate()
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid pose: {exc}") from None

    spec = SceneSpec(
        mesh=load_mesh(mesh_path),
        trajectory=poses,
        width=values["width"],
        height=values["height"],
        background_mean=values["bg_mean"],
        background_std=values["bg_std"],
        foreground_mean=values["fg_mean"],
        foreground_std=values["fg_std"],
        noise_seed=values["noise_seed"],
        background_count=values["background_count"],
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return spec


# ---------------------------------------------------------------------------
# Ground-truth and track files
# ---------------------------------------------------------------------------

def write_ground_truth(trajectory: list[PoseParams], path) -> None:
    """One line per frame: ``k yaw pitch roll tx ty scale articulation``."""
    with open(path, "w", encoding="ascii") as fh:
        for k, pose in enumerate(trajectory):
            fields = " ".join(repr(float(v)) for v in pose.as_array())
            fh.write(f"{k} {fields}\n")


def read_ground_truth(path) -> list[PoseParams]:
    poses = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ConfigError(f"{path}:{lineno}: expected 8 fields")
            poses.append(PoseParams.from_array([float(p) for p in parts[1:]]))
    return poses


TRACK_HEADER = ("frame,yaw,pitch,roll,tx,ty,scale,artic,"
                "map_yaw,map_pitch,map_roll,map_tx,map_ty,map_scale,"
                "map_artic,map_loglik")


def write_track(estimates, path) -> None:
    """Track CSV: per frame the expected pose, the MAP pose, and the MAP
    log-likelihood, at 9 significant digits."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("no estimates to write")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(TRACK_HEADER + "\n")
        for frame, mean_pose, map_pose, map_ll in estimates:
            cells = [str(int(frame))]
            cells += [f"{v:.9g}" for v in mean_pose.as_array()]
            cells += [f"{v:.9g}" for v in map_pose.as_array()]
            cells.append(f"{map_ll:.9g}")
            fh.write(",".join(cells) + "\n")


def read_track(path):
    """Parse a track CSV back into (frame, mean pose, MAP pose, MAP ll) rows."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRACK_HEADER:
            raise ConfigError(f"{path}: unexpected track header")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 16:
                raise ConfigError(f"{path}:{lineno}: expected 16 columns")
            frame = int(cells[0])
            mean_pose = PoseParams.from_array([float(c) for c in cells[1:8]])
            map_pose = PoseParams.from_array([float(c) for c in cells[8:15]])
            rows.append((frame, mean_pose, map_pose, float(cells[15])))
    return rows
