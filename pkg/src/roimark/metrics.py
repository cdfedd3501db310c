"""Fidelity metrics: peak signal-to-noise ratio and mean structural similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionMismatch, TooSmall

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_L = 255.0
_C1 = (0.01 * _L) ** 2
_C2 = (0.03 * _L) ** 2


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


_KERNEL = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)


@dataclass(frozen=True)
class QualityScore:
    psnr_db: float
    mssim: float


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a.pixels if hasattr(a, "pixels") else a, dtype=np.float64)
    y = np.asarray(b.pixels if hasattr(b, "pixels") else b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"image shapes differ: {x.shape} vs {y.shape}")
    return x, y


def psnr(a, b) -> float:
    """10 * log10(255^2 / MSE); infinity for identical images."""
    x, y = _paired(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(_L * _L / mse)


def mssim(a, b) -> float:
    """Mean local structural similarity over Gaussian-weighted 11x11 windows.

    Uses the standard construction: sigma 1.5, C1 = (0.01*255)^2 and
    C2 = (0.03*255)^2, window means and (co)variances taken with the
    Gaussian weights, averaged over all fully-interior windows.
    """
    x, y = _paired(a, b)
    if min(x.shape) < SSIM_WINDOW:
        raise TooSmall(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for MSSIM")

    def win(img):
        return convolve2d(img, _KERNEL, mode="valid")

    mu_x = win(x)
    mu_y = win(y)
    var_x = win(x * x) - mu_x * mu_x
    var_y = win(y * y) - mu_y * mu_y
    cov = win(x * y) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + _C1) * (2.0 * cov + _C2)
    den = (mu_x * mu_x + mu_y * mu_y + _C1) * (var_x + var_y + _C2)
    return float(np.mean(num / den))


def measure(a, b) -> QualityScore:
    return QualityScore(psnr_db=psnr(a, b), mssim=mssim(a, b))
