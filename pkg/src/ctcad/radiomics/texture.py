"""Gray-level quantization and the run-length / difference / co-occurrence stacks.

All three operate on a QuantizedRoi: the mask's bounding box with integer
levels in [1, G] inside the mask and 0 outside.  Out-of-mask pixels break runs
and never pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# direction tags -> (dr, dc); 0/45/90/135 degrees in image coordinates
DIRECTION_OFFSETS = {
    "h": (0, 1),
    "a": (-1, 1),
    "v": (1, 0),
    "d": (1, 1),
}

GLRLM_DIRECTION_ORDER = ("h", "a", "v", "d")
GLDM_DISPLACEMENT_ORDER = ("h", "v", "d", "a")  # (0,1) (1,0) (1,1) (1,-1)
GLCM_DIRECTION_ORDER = ("h", "a", "v", "d")


@dataclass
class QuantizedRoi:
    """Masked 2D region with integer levels in [1, n_levels] (0 outside)."""

    levels: np.ndarray  # int, bounding-box shaped, 0 where out of mask
    mask: np.ndarray  # bool, same shape
    n_levels: int

    @property
    def pixel_count(self) -> int:
        return int(self.mask.sum())


def quantize(image: np.ndarray, mask: np.ndarray, levels: int = 32) -> QuantizedRoi:
    """Linear min-max binning of the in-mask values into ``levels`` levels.

    level = 1 + floor((v - min) / (max - min) * levels), clipped to [1,
    levels]; a constant region maps to level 1.  Works on the mask's bounding
    box.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty ROI")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    ys, xs = np.nonzero(mask)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    img = np.asarray(image, dtype=np.float64)[y0:y1, x0:x1]
    m = mask[y0:y1, x0:x1]
    vals = img[m]
    lo, hi = vals.min(), vals.max()
    out = np.zeros(img.shape, dtype=np.int64)
    if hi == lo:
        out[m] = 1
    else:
        lvl = 1 + np.floor((img[m] - lo) / (hi - lo) * levels)
        out[m] = np.clip(lvl, 1, levels).astype(np.int64)
    return QuantizedRoi(levels=out, mask=m, n_levels=levels)


# ---------------------------------------------------------------------------
# GLRLM


def _direction_lines(arr: np.ndarray, tag: str) -> list[np.ndarray]:
    """All maximal 1D traversals of ``arr`` along a direction."""
    if tag == "h":
        return [arr[r, :] for r in range(arr.shape[0])]
    if tag == "v":
        return [arr[:, c] for c in range(arr.shape[1])]
    if tag == "d":  # (1, 1): main diagonals
        h, w = arr.shape
        return [np.diagonal(arr, offset=k) for k in range(-h + 1, w)]
    if tag == "a":  # (-1, 1): anti-diagonals
        return _direction_lines(np.fliplr(arr), "d")
    raise ValueError(f"unknown direction {tag!r}")


def run_length_matrix(roi: QuantizedRoi, direction: str) -> np.ndarray:
    """Counts R[g, l] of maximal constant-level runs (1-indexed on both axes).

    Index 0 rows/columns are unused padding so R[g, l] reads naturally.
    """
    g_max = roi.n_levels
    l_max = max(roi.levels.shape)
    r = np.zeros((g_max + 1, l_max + 1), dtype=np.int64)
    for line in _direction_lines(roi.levels, direction):
        n = len(line)
        i = 0
        while i < n:
            level = line[i]
            j = i + 1
            while j < n and line[j] == level:
                j += 1
            if level != 0:
                r[level, j - i] += 1
            i = j
    return r


def glrlm_stats(roi: QuantizedRoi, direction: str) -> np.ndarray:
    """The 11 run-length statistics for one direction."""
    r = run_length_matrix(roi, direction)
    n_runs = r.sum()
    if n_runs == 0:  # cannot happen for a non-empty ROI
        return np.zeros(11)
    g = np.arange(r.shape[0], dtype=np.float64)
    l = np.arange(r.shape[1], dtype=np.float64)
    g[0] = 1.0  # row 0 is empty padding; avoid 0-division in g**-2 terms
    l[0] = 1.0
    gg = g[:, None] ** 2
    ll = l[None, :] ** 2
    rf = r.astype(np.float64)
    n_px = roi.pixel_count
    run_sum = rf.sum(axis=0)  # runs per length
    level_sum = rf.sum(axis=1)  # runs per level
    return np.array(
        [
            (rf / ll).sum() / n_runs,  # sre
            (rf * ll).sum() / n_runs,  # lre
            (level_sum**2).sum() / n_runs,  # gln
            (run_sum**2).sum() / n_runs,  # rln
            n_runs / n_px,  # rp
            (rf / gg).sum() / n_runs,  # lgre
            (rf * gg).sum() / n_runs,  # hgre
            (rf / (gg * ll)).sum() / n_runs,  # srlge
            (rf * gg / ll).sum() / n_runs,  # srhge
            (rf * ll / gg).sum() / n_runs,  # lrlge
            (rf * gg * ll).sum() / n_runs,  # lrhge
        ]
    )


def glrlm_features(roi: QuantizedRoi) -> np.ndarray:
    """44 values, direction-major over (0, 45, 90, 135) degrees."""
    return np.concatenate([glrlm_stats(roi, d) for d in GLRLM_DIRECTION_ORDER])


# ---------------------------------------------------------------------------
# GLDM


def _pair_views(roi: QuantizedRoi, dr: int, dc: int):
    """Aligned (base, shifted, valid) views for displacement (dr, dc)."""
    lv = roi.levels
    m = roi.mask
    h, w = lv.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    if r0 >= r1 or c0 >= c1:
        empty = np.zeros((0,), dtype=lv.dtype)
        return empty, empty, np.zeros((0,), dtype=bool)
    a = lv[r0:r1, c0:c1]
    b = lv[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    valid = m[r0:r1, c0:c1] & m[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    return a, b, valid


def level_differences(roi: QuantizedRoi, displacement: str) -> np.ndarray:
    """|level(p) - level(p + delta)| over in-mask pairs (each pair once)."""
    dr, dc = DIRECTION_OFFSETS[displacement]
    a, b, valid = _pair_views(roi, dr, dc)
    if valid.size == 0 or not valid.any():
        return np.zeros((0,), dtype=np.int64)
    return np.abs(a[valid] - b[valid])


def gldm_stats(roi: QuantizedRoi, displacement: str) -> np.ndarray:
    """mean / median / population std / variance of the difference density."""
    d = level_differences(roi, displacement).astype(np.float64)
    if d.size == 0:
        return np.zeros(4)
    var = d.var()
    return np.array([d.mean(), np.median(d), np.sqrt(var), var])


def gldm_features(roi: QuantizedRoi) -> np.ndarray:
    """16 values, displacement-major over (0,1) (1,0) (1,1) (1,-1)."""
    return np.concatenate([gldm_stats(roi, d) for d in GLDM_DISPLACEMENT_ORDER])


# ---------------------------------------------------------------------------
# GLCM


def cooccurrence_counts(roi: QuantizedRoi, direction: str, distance: int) -> np.ndarray:
    """Symmetric raw pair counts (G x G) for one direction at ``distance``."""
    dr, dc = DIRECTION_OFFSETS[direction]
    a, b, valid = _pair_views(roi, dr * distance, dc * distance)
    g = roi.n_levels
    counts = np.zeros((g, g), dtype=np.int64)
    if valid.size and valid.any():
        i = a[valid] - 1
        j = b[valid] - 1
        np.add.at(counts, (i, j), 1)
        np.add.at(counts, (j, i), 1)
    return counts


def cooccurrence_matrix(roi: QuantizedRoi, distance: int) -> np.ndarray:
    """Mean of the per-direction normalized symmetric matrices.

    Directions with no valid pairs are excluded from the mean; if no direction
    has pairs the zero matrix is returned.
    """
    mats = []
    for d in GLCM_DIRECTION_ORDER:
        counts = cooccurrence_counts(roi, d, distance)
        total = counts.sum()
        if total > 0:
            mats.append(counts / total)
    if not mats:
        return np.zeros((roi.n_levels, roi.n_levels))
    return np.mean(mats, axis=0)


def _entropy2(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def haralick_stats(p: np.ndarray) -> np.ndarray:
    """The 13 co-occurrence statistics (base-2 logs, 0*log0 = 0).

    Degenerate conventions: an all-zero matrix gives 13 zeros; correlation is
    1.0 when a marginal variance vanishes; imc1 is 0 when max(HX, HY) = 0.
    """
    total = p.sum()
    if total == 0:
        return np.zeros(13)
    g = p.shape[0]
    levels = np.arange(1, g + 1, dtype=np.float64)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(levels @ px)
    mu_y = float(levels @ py)
    var_x = float(((levels - mu_x) ** 2) @ px)
    var_y = float(((levels - mu_y) ** 2) @ py)

    ii = levels[:, None]
    jj = levels[None, :]
    energy = float((p**2).sum())
    contrast = float(((ii - jj) ** 2 * p).sum())
    if var_x > 0 and var_y > 0:
        correlation = float(((ii * jj * p).sum() - mu_x * mu_y) / np.sqrt(var_x * var_y))
    else:
        correlation = 1.0
    variance = float(((ii - mu_x) ** 2 * p).sum())
    idm = float((p / (1.0 + (ii - jj) ** 2)).sum())

    # p_{x+y}: k = 2..2G ; p_{x-y}: k = 0..G-1
    ks_sum = np.arange(2, 2 * g + 1, dtype=np.float64)
    p_sum = np.zeros(2 * g - 1)
    ks_diff = np.arange(0, g, dtype=np.float64)
    p_diff = np.zeros(g)
    idx_sum = (np.arange(g)[:, None] + np.arange(g)[None, :]).ravel()
    idx_diff = np.abs(np.arange(g)[:, None] - np.arange(g)[None, :]).ravel()
    np.add.at(p_sum, idx_sum, p.ravel())
    np.add.at(p_diff, idx_diff, p.ravel())

    sum_average = float(ks_sum @ p_sum)
    sum_variance = float(((ks_sum - sum_average) ** 2) @ p_sum)
    sum_entropy = _entropy2(p_sum)
    entropy = _entropy2(p.ravel())
    mu_diff = float(ks_diff @ p_diff)
    diff_variance = float(((ks_diff - mu_diff) ** 2) @ p_diff)
    diff_entropy = _entropy2(p_diff)

    hx = _entropy2(px)
    hy = _entropy2(py)
    pxy = px[:, None] * py[None, :]
    nz = (p > 0) & (pxy > 0)
    hxy1 = float(-(p[nz] * np.log2(pxy[nz])).sum())
    nz2 = pxy > 0
    hxy2 = float(-(pxy[nz2] * np.log2(pxy[nz2])).sum())
    denom = max(hx, hy)
    imc1 = float((entropy - hxy1) / denom) if denom > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - entropy)))))

    return np.array(
        [
            energy, contrast, correlation, variance, idm,
            sum_average, sum_variance, sum_entropy, entropy,
            diff_variance, diff_entropy, imc1, imc2,
        ]
    )


def glcm_features(roi: QuantizedRoi, distance: int) -> np.ndarray:
    """13 co-occurrence statistics at one pair distance."""
    if distance < 1:
        raise ValueError("distance must be >= 1")
    return haralick_stats(cooccurrence_matrix(roi, distance))
