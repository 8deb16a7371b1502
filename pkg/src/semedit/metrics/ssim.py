"""Structural similarity restricted to an edited region.

The SSIM map is computed over the whole image with a uniform window; the
score averages only the windows whose center pixel lies inside the mask, so
it measures exactly the synthesized content while still letting windows see
their untouched surroundings.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from ..errors import MetricError

DEFAULT_WINDOW = 7


def _ssim_map(x: np.ndarray, y: np.ndarray, window: int, c1: float, c2: float):
    """Per-center SSIM for one channel, valid windows only."""
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    mu_x = uniform_filter(x, window)
    mu_y = uniform_filter(y, window)
    sigma_x = uniform_filter(x * x, window) - mu_x * mu_x
    sigma_y = uniform_filter(y * y, window) - mu_y * mu_y
    sigma_xy = uniform_filter(x * y, window) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sigma_x + sigma_y + c2)
    ssim = num / den
    half = window // 2
    return ssim[half : x.shape[0] - half, half : x.shape[1] - half]


def masked_ssim(image_real: np.ndarray, image_out: np.ndarray, mask,
                window: int = DEFAULT_WINDOW, data_range: float = 2.0,
                c1: float = None, c2: float = None) -> float:
    """Mean SSIM over in-mask window centers, averaged across channels.

    Images are 3xHxW; `mask` is an EditMask or an HxW / 1xHxW binary array.
    `data_range` is the value span L (2.0 for [-1,1] images);
    C1=(0.01L)^2 and C2=(0.03L)^2 unless overridden explicitly.
    """
    if image_real.shape != image_out.shape:
        raise ValueError("image shapes differ")
    if window % 2 == 0:
        raise ValueError("window must be odd")
    m = np.asarray(getattr(mask, "mask", mask))
    if m.ndim == 3:
        m = m[0]
    if not m.any():
        raise MetricError("mask is empty: masked SSIM is undefined")
    half = window // 2
    h, w = image_real.shape[1:]
    centers = m[half : h - half, half : w - half].astype(bool)
    if not centers.any():
        raise MetricError("no full window has its center inside the mask")
    if c1 is None:
        c1 = (0.01 * data_range) ** 2
    if c2 is None:
        c2 = (0.03 * data_range) ** 2
    per_channel = [
        _ssim_map(image_real[c], image_out[c], window, c1, c2)[centers].mean()
        for c in range(image_real.shape[0])
    ]
    return float(np.mean(per_channel))
