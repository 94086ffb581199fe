"""First-order density statistics and Laplacian-of-Gaussian response stats."""

from __future__ import annotations

import numpy as np
from scipy import stats as sstats

DENSITY_HISTOGRAM_BINS = 32
LOG_SIGMA = 2.0


def _histogram_probs(vals: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = vals.min(), vals.max()
    if hi == lo:
        return np.array([1.0])
    counts, _ = np.histogram(vals, bins=bins, range=(lo, hi))
    return counts / counts.sum()


def density_features(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """21 distribution statistics of the in-mask values.

    Conventions: population std/variance; skewness/excess kurtosis are 0 for a
    constant region; entropy/uniformity use a 32-bin histogram over
    [min, max]; CV is 0 when the mean is 0; the trimmed mean drops 10% from
    each tail.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty ROI")
    v = np.asarray(image, dtype=np.float64)[mask]
    mean = v.mean()
    var = v.var()
    std = np.sqrt(var)
    if var > 0:
        centered = v - mean
        skew = (centered**3).mean() / var**1.5
        kurt = (centered**4).mean() / var**2 - 3.0
    else:
        skew = 0.0
        kurt = 0.0
    probs = _histogram_probs(v, DENSITY_HISTOGRAM_BINS)
    nz = probs[probs > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    uniformity = float((probs**2).sum())
    p10, p25, p75, p90 = np.percentile(v, [10, 25, 75, 90])
    median = np.median(v)
    return np.array(
        [
            mean,
            median,
            std,
            var,
            skew,
            kurt,
            float((v**2).sum()),  # energy
            entropy,
            v.min(),
            v.max(),
            v.max() - v.min(),  # range
            p10,
            p25,
            p75,
            p90,
            p75 - p25,  # iqr
            np.median(np.abs(v - median)),  # mad
            np.sqrt((v**2).mean()),  # rms
            uniformity,
            std / mean if mean != 0 else 0.0,  # cv
            sstats.trim_mean(v, 0.1),
        ]
    )


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian with radius ceil(3*sigma)."""
    radius = int(np.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma**2))
    return k / k.sum()


def _convolve_symmetric(image: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = (len(kernel) - 1) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(image, pad, mode="symmetric")
    out = np.zeros_like(image, dtype=np.float64)
    for i, w in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + image.shape[axis])
        out += w * padded[tuple(sl)]
    return out


def log_response(image: np.ndarray, sigma: float = LOG_SIGMA) -> np.ndarray:
    """Gaussian smoothing (symmetric borders) followed by the 4-neighbour Laplacian."""
    k = gaussian_kernel(sigma)
    sm = _convolve_symmetric(np.asarray(image, dtype=np.float64), k, axis=0)
    sm = _convolve_symmetric(sm, k, axis=1)
    padded = np.pad(sm, 1, mode="symmetric")
    return (
        padded[:-2, 1:-1]
        + padded[2:, 1:-1]
        + padded[1:-1, :-2]
        + padded[1:-1, 2:]
        - 4.0 * sm
    )


def log_features(image: np.ndarray, mask: np.ndarray, sigma: float = LOG_SIGMA) -> np.ndarray:
    """Mean / median / population std of the LoG response over the mask."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty ROI")
    resp = log_response(image, sigma)[mask]
    return np.array([resp.mean(), np.median(resp), resp.std()])
