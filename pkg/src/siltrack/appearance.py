"""Intensity appearance model: empirical background, uniform foreground,
whole-image total histogram, and the per-frame log-ratio cache.

All probability arithmetic is done in log space; literal per-pixel probability
products underflow float64 for any realistic frame size.  Histograms carry an
additive floor so no intensity ever maps to a zero probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BINS = 256

# Fraction of total mass spread uniformly over the bins so unseen intensities
# never produce -inf logs.
SMOOTHING_EPS = 1e-6


def _as_gray(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("expected a 2-D single-channel image")
    if img.size == 0:
        raise ValueError("image is empty")
    if img.dtype != np.uint8:
        if img.min() < 0 or img.max() > 255:
            raise ValueError("intensities must lie in [0, 255]")
        img = img.astype(np.uint8)
    return img


def luminance(rgb) -> np.ndarray:
    """Reduce an (H, W, 3) image to 8-bit luminance: 0.299R + 0.587G + 0.114B."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) image")
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.rint(gray), 0, 255).astype(np.uint8)


def validate_histogram(hist: np.ndarray) -> None:
    hist = np.asarray(hist)
    if hist.shape != (N_BINS,):
        raise ValueError(f"histogram must have {N_BINS} bins")
    if hist.min() <= 0.0:
        raise ValueError("histogram bins must be strictly positive")
    if abs(float(hist.sum()) - 1.0) > 1e-9:
        raise ValueError("histogram must sum to 1")


def _smoothed(counts: np.ndarray, total: int, eps: float) -> np.ndarray:
    # bin[v] = (count_v + eps*N/256) / (N + eps*N): sums to 1, floor > 0.
    return (counts + eps * total / N_BINS) / (total * (1.0 + eps))


def learn_background(frames, eps: float = SMOOTHING_EPS) -> np.ndarray:
    """Empirical background intensity distribution from empty-sky frames.

    Pools pixel counts over all frames, then applies the additive floor:
    bin[v] = (count_v + eps*N/256) / (N + eps*N) with N the pooled pixel count.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one background frame")
    counts = np.zeros(N_BINS, dtype=np.float64)
    total = 0
    for frame in frames:
        img = _as_gray(frame)
        counts += np.bincount(img.ravel(), minlength=N_BINS)
        total += img.size
    return _smoothed(counts, total, eps)


def uniform_foreground() -> np.ndarray:
    """Uniform foreground distribution: every bin 1/256."""
    return np.full(N_BINS, 1.0 / N_BINS)


def total_histogram(observed, eps: float = SMOOTHING_EPS) -> np.ndarray:
    """Smoothed histogram of the whole observed frame, no segmentation."""
    img = _as_gray(observed)
    counts = np.bincount(img.ravel(), minlength=N_BINS).astype(np.float64)
    return _smoothed(counts, img.size, eps)


@dataclass(frozen=True)
class AppearanceModel:
    """The three intensity distributions entering the measurement likelihood."""

    background: np.ndarray
    foreground: np.ndarray
    total: np.ndarray

    def validate(self) -> None:
        for hist in (self.background, self.foreground, self.total):
            validate_histogram(hist)


def frame_model(background: np.ndarray, observed,
                foreground: np.ndarray | None = None) -> AppearanceModel:
    """Appearance model for one observed frame.

    The total histogram is recomputed per frame; the foreground defaults to
    uniform but a learned histogram can be substituted.
    """
    if foreground is None:
        foreground = uniform_foreground()
    return AppearanceModel(
        background=background,
        foreground=foreground,
        total=total_histogram(observed),
    )


@dataclass(frozen=True)
class LogRatioCache:
    """Per-frame cache that makes particle likelihoods cheap.

    log_bg_minus_total_sum is the log of the all-background factor:
    sum_x [log bg(D(x)) - log total(D(x))].  ratio_image holds the per-pixel
    log(fg(D(x)) / bg(D(x))); a particle's log-likelihood is the constant plus
    the ratio sum over its silhouette pixels.
    """

    log_bg_minus_total_sum: float
    ratio_image: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.ratio_image.shape


def build_cache(model: AppearanceModel, observed) -> LogRatioCache:
    """Build the log-ratio cache for one observed frame.

    Both components are computed by 256-entry lookup tables, so construction
    is O(pixels) regardless of particle count.
    """
    model.validate()
    img = _as_gray(observed)
    log_bg = np.log(model.background)
    log_fg = np.log(model.foreground)
    log_total = np.log(model.total)
    const = float((log_bg - log_total)[img].sum())
    ratio_image = (log_fg - log_bg)[img]
    return LogRatioCache(log_bg_minus_total_sum=const, ratio_image=ratio_image)
