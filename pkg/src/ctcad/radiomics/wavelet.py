"""One-level orthonormal Haar decomposition of a masked ROI.

The transform runs on the mask's bounding box; odd edges are padded by
symmetric reflection (edge value repeated).  Orthonormal filters
(1/sqrt(2))[1, 1] and (1/sqrt(2))[1, -1] preserve total energy exactly when no
padding is needed.
"""

from __future__ import annotations

import numpy as np

BAND_ORDER = ("ll", "lh", "hl", "hh")

_SQRT2 = np.sqrt(2.0)


def _haar_pairs(arr: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.moveaxis(arr, axis, 0)
    low = (a[0::2] + a[1::2]) / _SQRT2
    high = (a[0::2] - a[1::2]) / _SQRT2
    return np.moveaxis(low, 0, axis), np.moveaxis(high, 0, axis)


def haar_subbands(
    image: np.ndarray, mask: np.ndarray
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Decompose the ROI bounding box into ll/lh/hl/hh plus a subband mask.

    Band naming: first letter = x (column) filter, second = y (row) filter, so
    ``lh`` is low-pass along x and high-pass along y.  The subband mask is the
    AND over each 2x2 source block (padded edges reuse the reflected source
    pixel's mask), so a subband pixel is valid only when every contributing
    source pixel is in-mask -- which can empty the mask for thin ROIs.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty ROI")
    ys, xs = np.nonzero(mask)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    img = np.asarray(image, dtype=np.float64)[y0:y1, x0:x1]
    m = mask[y0:y1, x0:x1]

    pad_y = img.shape[0] % 2
    pad_x = img.shape[1] % 2
    if pad_y or pad_x:
        img = np.pad(img, ((0, pad_y), (0, pad_x)), mode="symmetric")
        m = np.pad(m, ((0, pad_y), (0, pad_x)), mode="symmetric")

    lx, hx = _haar_pairs(img, axis=1)
    ll, lh = _haar_pairs(lx, axis=0)
    hl, hh = _haar_pairs(hx, axis=0)

    band_mask = m[0::2, 0::2] & m[1::2, 0::2] & m[0::2, 1::2] & m[1::2, 1::2]
    return {"ll": ll, "lh": lh, "hl": hl, "hh": hh}, band_mask
