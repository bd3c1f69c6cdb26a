"""Windowed mean structural similarity between grayscale frames.

Scores are the mean of the per-window SSIM map over every fully-valid
7x7 sliding window, computed on float64 with the usual stabilizers
C1 = (0.01 * 255)^2 and C2 = (0.03 * 255)^2 and unbiased window
(co)variance. Only the mean and the uniform window are supported; that
is the convention the frame-cleaning pass is tuned for.

The one-vs-many variant scores a single frame against a stack of
candidate frames in one vectorized sweep; per-frame window statistics
can be precomputed once and reused across sweeps.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .model import ValidationError

WINDOW = 7
_PAD = WINDOW // 2
C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2
_COV_NORM = (WINDOW * WINDOW) / (WINDOW * WINDOW - 1.0)  # unbiased estimator

MIN_SIDE = 8  # frames must be at least 8x8 so the 7x7 window fits


def _as_float_image(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise ValidationError(
            f"image {arr.shape[1]}x{arr.shape[0]} is smaller than the minimum "
            f"{MIN_SIDE}x{MIN_SIDE} the SSIM window needs"
        )
    return arr


def window_stats(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-window mean and unbiased variance of one frame, valid windows only."""
    img = _as_float_image(image)
    mean = uniform_filter(img, WINDOW)[_PAD:-_PAD, _PAD:-_PAD]
    sq_mean = uniform_filter(img * img, WINDOW)[_PAD:-_PAD, _PAD:-_PAD]
    var = _COV_NORM * (sq_mean - mean * mean)
    return mean, var


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM between two equally sized grayscale frames, in [-1, 1]."""
    img_a = _as_float_image(a)
    img_b = _as_float_image(b)
    if img_a.shape != img_b.shape:
        raise ValidationError(
            f"image dimensions differ: {img_a.shape} vs {img_b.shape}"
        )
    mean_a, var_a = window_stats(img_a)
    mean_b, var_b = window_stats(img_b)
    cross = uniform_filter(img_a * img_b, WINDOW)[_PAD:-_PAD, _PAD:-_PAD]
    cov = _COV_NORM * (cross - mean_a * mean_b)
    ssim_map = ((2.0 * mean_a * mean_b + C1) * (2.0 * cov + C2)) / (
        (mean_a * mean_a + mean_b * mean_b + C1) * (var_a + var_b + C2)
    )
    return float(ssim_map.mean())


def ssim_one_to_many(
    a: np.ndarray,
    stack: np.ndarray,
    a_stats: tuple[np.ndarray, np.ndarray] | None = None,
    stack_stats: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Mean SSIM of frame ``a`` against each frame of ``stack`` (n, h, w).

    ``a_stats`` / ``stack_stats`` are the outputs of :func:`window_stats`
    (stacked along axis 0 for the candidates); passing them skips the
    per-frame statistics recomputation in repeated sweeps.
    """
    img_a = _as_float_image(a)
    cube = np.asarray(stack, dtype=np.float64)
    if cube.ndim != 3 or cube.shape[1:] != img_a.shape:
        raise ValidationError(
            f"candidate stack shape {cube.shape} does not match frame {img_a.shape}"
        )
    if cube.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    mean_a, var_a = a_stats if a_stats is not None else window_stats(img_a)
    if stack_stats is not None:
        mean_s, var_s = stack_stats
    else:
        mean_s = uniform_filter(cube, (1, WINDOW, WINDOW))[:, _PAD:-_PAD, _PAD:-_PAD]
        sq = uniform_filter(cube * cube, (1, WINDOW, WINDOW))[:, _PAD:-_PAD, _PAD:-_PAD]
        var_s = _COV_NORM * (sq - mean_s * mean_s)
    cross = uniform_filter(img_a[None, :, :] * cube, (1, WINDOW, WINDOW))
    cross = cross[:, _PAD:-_PAD, _PAD:-_PAD]
    cov = _COV_NORM * (cross - mean_a[None] * mean_s)
    ssim_map = ((2.0 * mean_a[None] * mean_s + C1) * (2.0 * cov + C2)) / (
        (mean_a[None] ** 2 + mean_s**2 + C1) * (var_a[None] + var_s + C2)
    )
    return ssim_map.mean(axis=(1, 2))


def stack_window_stats(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """:func:`window_stats` for every frame of a (n, h, w) stack at once."""
    cube = np.asarray(stack, dtype=np.float64)
    if cube.ndim != 3:
        raise ValidationError(f"expected a (n, h, w) stack, got shape {cube.shape}")
    mean = uniform_filter(cube, (1, WINDOW, WINDOW))[:, _PAD:-_PAD, _PAD:-_PAD]
    sq = uniform_filter(cube * cube, (1, WINDOW, WINDOW))[:, _PAD:-_PAD, _PAD:-_PAD]
    var = _COV_NORM * (sq - mean * mean)
    return mean, var


def ssim_pairwise(stack_a: np.ndarray, stack_b: np.ndarray) -> np.ndarray:
    """Mean SSIM of each aligned frame pair between two (n, h, w) stacks.

    Entry ``i`` scores ``stack_a[i]`` against ``stack_b[i]``; the whole
    sweep runs in one filtering pass. Intermediate maps are several times
    the input size, so chunk very large stacks at the call site.
    """
    a = np.asarray(stack_a, dtype=np.float64)
    b = np.asarray(stack_b, dtype=np.float64)
    if a.ndim != 3 or a.shape != b.shape:
        raise ValidationError(
            f"stacks must share one (n, h, w) shape: {a.shape} vs {b.shape}"
        )
    if a.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if a.shape[1] < MIN_SIDE or a.shape[2] < MIN_SIDE:
        raise ValidationError(
            f"frames {a.shape[2]}x{a.shape[1]} are smaller than the minimum "
            f"{MIN_SIDE}x{MIN_SIDE} the SSIM window needs"
        )
    mean_a, var_a = stack_window_stats(a)
    mean_b, var_b = stack_window_stats(b)
    cross = uniform_filter(a * b, (1, WINDOW, WINDOW))[:, _PAD:-_PAD, _PAD:-_PAD]
    cov = _COV_NORM * (cross - mean_a * mean_b)
    ssim_map = ((2.0 * mean_a * mean_b + C1) * (2.0 * cov + C2)) / (
        (mean_a**2 + mean_b**2 + C1) * (var_a + var_b + C2)
    )
    return ssim_map.mean(axis=(1, 2))
