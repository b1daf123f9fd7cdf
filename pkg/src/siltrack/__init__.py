"""Silhouette-based 3D pose estimation of known mesh models via particle
filtering: pose a triangle mesh under an affine camera, rasterize its
silhouette, score it against a foreground/background intensity model, and
track the posterior over poses with sequential importance resampling.
"""

from .appearance import (
    AppearanceModel,
    LogRatioCache,
    build_cache,
    frame_model,
    learn_background,
    total_histogram,
    uniform_foreground,
)
from .filtering import (
    FilterConfig,
    Particle,
    ParticleSet,
    evaluate_states,
    expected_state,
    filter_update,
    init_particles,
    log_likelihood,
    map_particle,
    motion_step,
    normalize_weights,
    resample,
    resample_indices,
)
from .geometry import (
    Joint,
    MeshError,
    PoseParams,
    TriangleMesh,
    apply_pose,
    load_mesh,
    project_vertices,
    rasterize_silhouette,
    rotation_matrix,
    wrap_angle,
)
from .synth import (
    SceneSpec,
    ground_truth_mask,
    render_background_frames,
    render_frame,
)

__version__ = "0.1.0"

__all__ = [
    "AppearanceModel",
    "FilterConfig",
    "Joint",
    "LogRatioCache",
    "MeshError",
    "Particle",
    "ParticleSet",
    "PoseParams",
    "SceneSpec",
    "TriangleMesh",
    "apply_pose",
    "build_cache",
    "evaluate_states",
    "expected_state",
    "filter_update",
    "frame_model",
    "ground_truth_mask",
    "init_particles",
    "learn_background",
    "load_mesh",
    "log_likelihood",
    "map_particle",
    "motion_step",
    "normalize_weights",
    "project_vertices",
    "rasterize_silhouette",
    "render_background_frames",
    "render_frame",
    "resample",
    "resample_indices",
    "rotation_matrix",
    "total_histogram",
    "uniform_foreground",
    "wrap_angle",
]
