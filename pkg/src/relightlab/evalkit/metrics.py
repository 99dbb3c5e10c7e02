"""Image similarity metrics: pixel MSE, windowed LMSE, Fréchet set distance.

All metrics compute in float64 regardless of input dtype and are pure
functions, safe to call from multiple threads.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

WINDOW = 20
STRIDE = 10


class EvalError(RuntimeError):
    pass


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a64 = np.asarray(a, dtype=np.float64)
    b64 = np.asarray(b, dtype=np.float64)
    if a64.shape != b64.shape:
        raise EvalError(f"image shapes differ: {a64.shape} vs {b64.shape}")
    return a64, b64


def mse(a, b) -> float:
    """Mean over all pixels and channels of the squared difference."""
    a64, b64 = _as_pair(a, b)
    return float(np.mean((a64 - b64) ** 2))


def lmse(a, b) -> float:
    """Mean per-window MSE over 20x20 windows at stride 10.

    Only windows lying fully inside the image participate. Works for
    (H, W) and (H, W, C) images alike.
    """
    a64, b64 = _as_pair(a, b)
    h, w = a64.shape[:2]
    if h < WINDOW or w < WINDOW:
        raise EvalError(f"images must be at least {WINDOW}x{WINDOW}, got {h}x{w}")
    sq = (a64 - b64) ** 2
    wins = sliding_window_view(sq, (WINDOW, WINDOW), axis=(0, 1))[::STRIDE, ::STRIDE]
    per_window = wins.reshape(wins.shape[0] * wins.shape[1], -1).mean(axis=1)
    return float(per_window.mean())


def lmse_window_count(h: int, w: int) -> tuple[int, int]:
    """Windows per axis for an h x w image."""
    return (h - WINDOW) // STRIDE + 1, (w - WINDOW) // STRIDE + 1


def _covariance(f: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.cov(f, rowvar=False))


def frechet_distance(features_a, features_b) -> float:
    """Fréchet distance between Gaussian fits of two feature sets.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The result is
    non-negative up to numerical tolerance of the matrix square root; tiny
    negative values are not clamped.
    """
    fa = np.asarray(features_a, dtype=np.float64)
    fb = np.asarray(features_b, dtype=np.float64)
    if fa.ndim != 2 or fb.ndim != 2:
        raise EvalError("feature sets must be 2-D (samples x dim)")
    if fa.shape[1] != fb.shape[1]:
        raise EvalError(f"feature dims differ: {fa.shape[1]} vs {fb.shape[1]}")
    if fa.shape[0] < 2 or fb.shape[0] < 2:
        raise EvalError("each feature set needs at least 2 samples")

    mu_a, mu_b = fa.mean(axis=0), fb.mean(axis=0)
    cov_a, cov_b = _covariance(fa), _covariance(fb)

    covmean, err = linalg.sqrtm(cov_a @ cov_b, disp=False)
    if not np.isfinite(covmean).all() or (np.isfinite(err) and err > 1e-2):
        # retry on a slightly regularized product before giving up
        eps = 1e-10 * np.eye(cov_a.shape[0])
        covmean, err = linalg.sqrtm((cov_a + eps) @ (cov_b + eps), disp=False)
        if not np.isfinite(covmean).all() or (np.isfinite(err) and err > 1e-2):
            raise EvalError(
                "matrix square root did not converge: "
                f"residual {err:.3g}, cond(cov_a)={np.linalg.cond(cov_a):.3g}, "
                f"cond(cov_b)={np.linalg.cond(cov_b):.3g}"
            )
    if np.iscomplexobj(covmean):
        imag = float(np.abs(covmean.imag).max())
        if imag > 1e-6 * max(1.0, float(np.abs(covmean.real).max())):
            raise EvalError(
                f"matrix square root has imaginary part {imag:.3g}; "
                f"cond(cov_a)={np.linalg.cond(cov_a):.3g}, "
                f"cond(cov_b)={np.linalg.cond(cov_b):.3g}"
            )
        covmean = covmean.real

    diff = mu_a - mu_b
    return float(
        diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(covmean)
    )
