"""Particle filter over silhouette poses.

One update step: resample from the previous posterior, jitter every particle
with the motion model, build the frame's log-ratio cache once, score each
particle's rendered silhouette against it, and renormalize the weights.
Per-particle evaluation is a pure function of (state, mesh, cache), so it can
be farmed out to worker processes without changing any output.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np

from .appearance import AppearanceModel, LogRatioCache, build_cache
from .geometry import (
    PoseParams,
    TriangleMesh,
    apply_pose,
    project_vertices,
    rasterize_silhouette,
    wrap_angle,
)

# states array column layout (see geometry.POSE_FIELDS)
_YAW, _PITCH, _ROLL, _TX, _TY, _SCALE, _ARTIC = range(7)


@dataclass
class FilterConfig:
    """Particle count, motion-model jitter, and scale guardrails.

    Angle and articulation jitter are additive Gaussians in radians,
    translation jitter additive in pixels, scale jitter multiplicative
    (log-normal) so scale stays positive.  scale_bounds, when set, clamp the
    jittered scale; use for_scene() to derive them from the mesh and image.
    """

    particle_count: int = 2000
    angle_std: float = 0.05
    translation_std: float = 2.0
    log_scale_std: float = 0.05
    articulation_std: float = 0.05
    rng_seed: int = 0
    scale_bounds: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.particle_count < 1:
            raise ValueError("particle_count must be >= 1")
        for name in ("angle_std", "translation_std", "log_scale_std",
                     "articulation_std"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.scale_bounds is not None:
            lo, hi = self.scale_bounds
            if not (0.0 < lo < hi):
                raise ValueError("scale_bounds must satisfy 0 < lo < hi")

    @classmethod
    def for_scene(cls, mesh: TriangleMesh, image_w: int, image_h: int,
                  **overrides) -> "FilterConfig":
        """Config with scale guardrails derived from the mesh and image size.

        The bounds strictly contain every scale the initializer can draw
        (projected diagonal between a tenth of and the full short image side),
        so clamping only ever stops runaway jitter.
        """
        extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
        diag = float(np.linalg.norm(extent))
        if diag <= 0.0:
            raise ValueError("mesh has zero spatial extent")
        m = min(image_w, image_h)
        config = cls(scale_bounds=(0.05 * m / diag, 20.0 * m / diag), **overrides)
        if mesh.joint is None:
            config.articulation_std = 0.0
        config.validate()
        return config


@dataclass
class Particle:
    """One pose hypothesis with its probability weight."""

    state: PoseParams
    weight: float


@dataclass
class ParticleSet:
    """Particle population as parallel arrays.

    states: (N, 7) float64, rows are [yaw, pitch, roll, tx, ty, scale, artic].
    weights: (N,) float64, normalized after every update.
    log_liks holds the raw per-particle log-likelihoods from the most recent
    weight normalization (None before the first evaluation).
    """

    states: np.ndarray
    weights: np.ndarray
    iteration: int = 0
    log_liks: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.states.ndim != 2 or self.states.shape[1] != 7:
            raise ValueError("states must be an (N, 7) array")
        if self.weights.shape != (len(self.states),):
            raise ValueError("weights must be an (N,) array matching states")
        if len(self.states) == 0:
            raise ValueError("particle set must be non-empty")
        if self.weights.min() < 0.0 or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.states)

    def particle(self, i: int) -> Particle:
        return Particle(PoseParams.from_array(self.states[i]),
                        float(self.weights[i]))


def _projected_bbox(mesh: TriangleMesh, yaw, pitch, roll, articulation):
    """Bounding box (x0, y0, w, h) of the unit-scale, untranslated projection."""
    pts = project_vertices(
        mesh, PoseParams(yaw, pitch, roll, 0.0, 0.0, 1.0, articulation))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return lo[0], lo[1], hi[0] - lo[0], hi[1] - lo[1]


def _overlap_fraction(left, top, bw, bh, image_w, image_h):
    """Fraction of a (bw x bh) box at (left, top) inside the image rectangle."""
    ox = max(0.0, min(left + bw, image_w) - max(left, 0.0))
    oy = max(0.0, min(top + bh, image_h) - max(top, 0.0))
    if bw > 0.0 and bh > 0.0:
        return (ox * oy) / (bw * bh)
    if bw > 0.0:
        return ox / bw if min(top, image_h - top) >= 0 else 0.0
    if bh > 0.0:
        return oy / bh
    return 0.0


def init_particles(config: FilterConfig, image_w: int, image_h: int,
                   mesh: TriangleMesh) -> ParticleSet:
    """Bounded uniform prior over poses.

    Angles (and articulation, when the mesh has a joint) are uniform on
    [-pi, pi).  Scale is drawn so the projected bounding-box diagonal lies in
    [0.1 * min(w, h), min(w, h)].  Translation is drawn uniformly over
    placements where at least half of the projected bounding-box area overlaps
    the image (rejection sampling).  Weights start uniform at 1/N.
    """
    config.validate()
    if image_w <= 0 or image_h <= 0:
        raise ValueError("image dimensions must be positive")
    rng = np.random.default_rng(config.rng_seed)
    m = float(min(image_w, image_h))
    n = config.particle_count
    has_joint = mesh.joint is not None

    states = np.empty((n, 7), dtype=np.float64)
    for i in range(n):
        yaw, pitch, roll = rng.uniform(-math.pi, math.pi, 3)
        artic = rng.uniform(-math.pi, math.pi) if has_joint else 0.0
        x0, y0, w0, h0 = _projected_bbox(mesh, yaw, pitch, roll, artic)
        d1 = math.hypot(w0, h0)
        if d1 <= 0.0:
            raise ValueError("mesh projects to a single point")
        scale = rng.uniform(0.1 * m / d1, m / d1)
        bx0, by0 = x0 * scale, y0 * scale
        bw, bh = w0 * scale, h0 * scale
        for _ in range(10_000):
            tx = rng.uniform(-bw - bx0, image_w - bx0)
            ty = rng.uniform(-bh - by0, image_h - by0)
            if _overlap_fraction(bx0 + tx, by0 + ty, bw, bh,
                                 image_w, image_h) >= 0.5:
                break
        else:  # pragma: no cover - box fits inside the image by construction
            tx = image_w / 2.0 - (bx0 + bw / 2.0)
            ty = image_h / 2.0 - (by0 + bh / 2.0)
        states[i] = (yaw, pitch, roll, tx, ty, scale, artic)

    weights = np.full(n, 1.0 / n)
    return ParticleSet(states=states, weights=weights, iteration=0)


def motion_step(pset: ParticleSet, config: FilterConfig,
                rng: np.random.Generator) -> ParticleSet:
    """Jitter every particle state independently; weights are untouched.

    Angles and articulation get additive Gaussian noise wrapped to [-pi, pi),
    translation additive Gaussian noise, scale a log-normal factor followed by
    the config's scale clamp.  Zero stds leave states unchanged.
    """
    config.validate()
    states = pset.states.copy()
    n = len(states)
    states[:, _YAW:_ROLL + 1] += rng.normal(0.0, config.angle_std, (n, 3))
    states[:, _TX:_TY + 1] += rng.normal(0.0, config.translation_std, (n, 2))
    states[:, _SCALE] *= np.exp(rng.normal(0.0, config.log_scale_std, n))
    states[:, _ARTIC] += rng.normal(0.0, config.articulation_std, n)
    states[:, _YAW:_ROLL + 1] = wrap_angle(states[:, _YAW:_ROLL + 1])
    states[:, _ARTIC] = wrap_angle(states[:, _ARTIC])
    if config.scale_bounds is not None:
        lo, hi = config.scale_bounds
        np.clip(states[:, _SCALE], lo, hi, out=states[:, _SCALE])
    return ParticleSet(states=states, weights=pset.weights.copy(),
                       iteration=pset.iteration)


def log_likelihood(mask: np.ndarray, cache: LogRatioCache) -> float:
    """Cached measurement log-likelihood of a silhouette.

    Equals the all-background log factor plus the sum of the cached
    foreground/background log-ratios over the silhouette's foreground pixels.
    An all-background mask therefore scores exactly the all-background factor.
    """
    mask = np.asarray(mask)
    if mask.shape != cache.ratio_image.shape:
        raise ValueError(
            f"mask shape {mask.shape} does not match cache {cache.ratio_image.shape}"
        )
    return float(cache.log_bg_minus_total_sum + cache.ratio_image[mask].sum())


def normalize_weights(pset: ParticleSet, log_liks) -> ParticleSet:
    """Turn per-particle log-likelihoods into normalized weights.

    Uses the log-sum-exp shift so arbitrarily small likelihoods normalize
    without under- or overflow; the result is invariant to any constant shift
    of the inputs.
    """
    lls = np.asarray(log_liks, dtype=np.float64)
    if lls.shape != (len(pset),):
        raise ValueError("need exactly one log-likelihood per particle")
    peak = lls.max()
    if not np.isfinite(peak):
        raise ArithmeticError("all log-likelihoods are -inf")
    w = np.exp(lls - peak)
    w /= w.sum()
    return ParticleSet(states=pset.states, weights=w,
                       iteration=pset.iteration, log_liks=lls)


def resample_indices(weights, rng: np.random.Generator,
                     n: int | None = None) -> np.ndarray:
    """Cumulative-probability resampling: indices of the selected particles.

    Builds the discrete CDF c_i of the normalized weights, then for each of n
    draws picks the smallest index j with c_j >= r, r uniform on [0, 1).
    """
    weights = np.asarray(weights, dtype=np.float64)
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("weights sum to zero")
    cum = np.cumsum(weights / total)
    cum[-1] = 1.0  # guard against round-off at the top end
    if n is None:
        n = len(weights)
    return np.searchsorted(cum, rng.random(n), side="left")


def resample(pset: ParticleSet, rng: np.random.Generator) -> ParticleSet:
    """Draw a new population with replacement, probability proportional to
    weight; output weights reset to 1/N."""
    idx = resample_indices(pset.weights, rng)
    n = len(idx)
    return ParticleSet(states=pset.states[idx].copy(),
                       weights=np.full(n, 1.0 / n),
                       iteration=pset.iteration)


def expected_state(pset: ParticleSet) -> PoseParams:
    """Weight-averaged state, applied literally to every field.

    The arithmetic mean of angles is ill-defined near the +/-pi wrap; prefer
    map_particle() as the summary when estimates sit near the boundary.
    """
    total = float(pset.weights.sum())
    if total <= 0.0:
        raise ValueError("total weight is zero")
    mean = pset.weights @ pset.states / total
    return PoseParams.from_array(mean)


def map_particle(pset: ParticleSet) -> Particle:
    """Highest-weight particle; ties broken by lowest index."""
    i = int(np.argmax(pset.weights))
    return pset.particle(i)


# ---------------------------------------------------------------------------
# Per-particle evaluation, optionally across worker processes.
# ---------------------------------------------------------------------------

_WORKER_CTX: dict = {}


def _state_log_likelihood(row, mesh: TriangleMesh,
                          cache: LogRatioCache) -> float:
    height, width = cache.ratio_image.shape
    pose = PoseParams(*row)  # rows are pre-validated by init/motion
    tris = apply_pose(mesh, pose)
    mask = rasterize_silhouette(tris, width, height)
    return log_likelihood(mask, cache)


def _init_worker(mesh, cache):
    _WORKER_CTX["mesh"] = mesh
    _WORKER_CTX["cache"] = cache


def _eval_in_worker(row):
    return _state_log_likelihood(row, _WORKER_CTX["mesh"], _WORKER_CTX["cache"])


def evaluate_states(states, mesh: TriangleMesh, cache: LogRatioCache,
                    workers: int = 1) -> np.ndarray:
    """Log-likelihood of every state row against one frame's cache.

    Evaluation order never affects results: each state is scored
    independently and results are gathered in input order, so any worker
    count produces identical output.
    """
    states = np.asarray(states, dtype=np.float64)
    if workers <= 1 or len(states) < 2 * workers:
        return np.array(
            [_state_log_likelihood(row, mesh, cache) for row in states])
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:  # pragma: no cover - non-POSIX fallback
        ctx = multiprocessing.get_context("spawn")
    chunk = max(1, math.ceil(len(states) / (workers * 4)))
    with ctx.Pool(workers, initializer=_init_worker,
                  initargs=(mesh, cache)) as pool:
        lls = pool.map(_eval_in_worker, list(states), chunksize=chunk)
    return np.array(lls)


def filter_update(pset: ParticleSet, observed, mesh: TriangleMesh,
                  model: AppearanceModel, config: FilterConfig,
                  rng: np.random.Generator, workers: int = 1) -> ParticleSet:
    """One full update: resample -> motion -> evaluate -> normalize.

    Resampling uses the previous posterior weights, then the motion model
    perturbs the survivors; the frame cache is built once and every particle's
    silhouette is scored against it.  The returned set has normalized weights
    and an incremented iteration counter.
    """
    resampled = resample(pset, rng)
    moved = motion_step(resampled, config, rng)
    cache = build_cache(model, observed)
    lls = evaluate_states(moved.states, mesh, cache, workers=workers)
    updated = normalize_weights(moved, lls)
    updated.iteration = pset.iteration + 1
    return updated
