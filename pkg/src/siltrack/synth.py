"""Synthetic scene generation with exact ground truth.

Frames composite the rasterized model silhouette over Gaussian pixel noise:
foreground pixels draw from N(fg_mean, fg_std), background pixels from
N(bg_mean, bg_std), rounded and clamped to 8 bits.  Every frame is a pure
function of (spec, frame index), so sequences regenerate bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PoseParams, TriangleMesh, apply_pose, rasterize_silhouette


@dataclass
class SceneSpec:
    """Everything needed to render a deterministic synthetic sequence."""

    mesh: TriangleMesh
    trajectory: list[PoseParams]
    width: int
    height: int
    background_mean: float = 30.0
    background_std: float = 10.0
    foreground_mean: float = 180.0
    foreground_std: float = 10.0
    noise_seed: int = 0
    background_count: int = 10

    def validate(self) -> None:
        if not self.trajectory:
            raise ValueError("trajectory must contain at least one pose")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        for name in ("background_mean", "foreground_mean"):
            v = getattr(self, name)
            if not 0.0 <= v <= 255.0:
                raise ValueError(f"{name} must lie in [0, 255]")
        if self.background_std < 0.0 or self.foreground_std < 0.0:
            raise ValueError("noise stds must be >= 0")
        if self.foreground_mean == self.background_mean:
            raise ValueError(
                "foreground_mean must differ from background_mean")
        if self.background_count < 1:
            raise ValueError("background_count must be >= 1")


def _noise_field(rng: np.random.Generator, mean: float, std: float,
                 height: int, width: int) -> np.ndarray:
    values = rng.normal(mean, std, (height, width))
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)


def ground_truth_mask(spec: SceneSpec, frame_index: int) -> np.ndarray:
    """Exact silhouette of the trajectory pose for one frame."""
    pose = spec.trajectory[frame_index]
    tris = apply_pose(spec.mesh, pose)
    return rasterize_silhouette(tris, spec.width, spec.height)


def render_frame(spec: SceneSpec, frame_index: int) -> np.ndarray:
    """Render one observation frame: noisy foreground over noisy background.

    Deterministic under (noise_seed, frame_index); the two noise fields are
    drawn in a fixed order so regeneration is bit-exact.
    """
    spec.validate()
    if not 0 <= frame_index < len(spec.trajectory):
        raise IndexError(f"frame index {frame_index} out of range")
    rng = np.random.default_rng(
        np.random.SeedSequence((spec.noise_seed, 0, frame_index)))
    background = _noise_field(rng, spec.background_mean, spec.background_std,
                              spec.height, spec.width)
    foreground = _noise_field(rng, spec.foreground_mean, spec.foreground_std,
                              spec.height, spec.width)
    mask = ground_truth_mask(spec, frame_index)
    return np.where(mask, foreground, background)


def render_background_frames(spec: SceneSpec, count: int) -> list[np.ndarray]:
    """Pure background-noise frames for training the background histogram.

    Independent of the trajectory; deterministic per (noise_seed, index).
    """
    spec.validate()
    if count < 1:
        raise ValueError("count must be >= 1")
    frames = []
    for k in range(count):
        rng = np.random.default_rng(
            np.random.SeedSequence((spec.noise_seed, 1, k)))
        frames.append(_noise_field(rng, spec.background_mean,
                                   spec.background_std,
                                   spec.height, spec.width))
    return frames
