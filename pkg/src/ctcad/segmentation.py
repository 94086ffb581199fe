"""Seeded 2D lesion growing and 3D propagation.

Per-slice chain: adaptive (Wiener) noise filtering, seed refinement to the
local minimum, contrast-derived initial threshold, multi-layer region growing
with a leakage stop, and a two-phase region-based contour refinement.  3D
masks are produced by propagating seeds to adjacent slices in both z
directions under a dilation bound.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

# 8-connected structuring element; used for growing, boundary rings, dilation
_STRUCT8 = np.ones((3, 3), dtype=bool)


class GrowthError(RuntimeError):
    """Seeded growth produced no pixels (seed above threshold / outside bound)."""


@dataclass(frozen=True)
class Seed:
    """A voxel position; ``x`` indexes columns, ``y`` rows, ``z`` slices."""

    z: int
    x: int
    y: int


@dataclass
class LayerTrace:
    """Audit record of one multi-layer growth: accepted layers only."""

    layers: list[dict]  # each {"threshold", "area_px", "contrast"}
    beta: float
    dmax: float
    vc: float
    stop_reason: str  # "ratio_exceeded" | "no_growth" | "max_layers"

    def to_dict(self) -> dict:
        return {
            "layers": [dict(l) for l in self.layers],
            "beta": self.beta,
            "dmax": self.dmax,
            "vc": self.vc,
            "stop_reason": self.stop_reason,
        }


@dataclass
class SegmentationParams:
    """Knobs for the per-slice chain and 3D propagation."""

    wiener_window: int = 5
    seed_window: int = 5
    beta: float = 0.5
    max_layers: int = 20
    contour_iterations: int = 50
    propagation_dilation_px: int = 5
    min_area_px: int = 5
    run_seed: int = 0

    def __post_init__(self):
        if self.wiener_window < 1 or self.wiener_window % 2 == 0:
            raise ValueError("wiener_window must be odd and >= 1")
        if self.seed_window < 1 or self.seed_window % 2 == 0:
            raise ValueError("seed_window must be odd and >= 1")
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.contour_iterations < 0:
            raise ValueError("contour_iterations must be >= 0")


@dataclass
class SegmentationResult:
    """3D mask plus per-slice audit data."""

    mask: np.ndarray  # bool (nz, ny, nx)
    per_slice: dict[int, dict] = field(default_factory=dict)
    seed_used: Seed | None = None


def _local_moments(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    # windows are clipped at the borders: statistics over the in-image part only
    kernel = np.ones((window, window))
    counts = ndimage.correlate(np.ones_like(x), kernel, mode="constant", cval=0.0)
    s1 = ndimage.correlate(x, kernel, mode="constant", cval=0.0)
    s2 = ndimage.correlate(x * x, kernel, mode="constant", cval=0.0)
    mu = s1 / counts
    var = np.maximum(s2 / counts - mu * mu, 0.0)
    return mu, var


def _check_window(window: int) -> None:
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")


def estimate_noise_variance(image: np.ndarray, window: int = 5) -> float:
    """Mean of local window variances: the adaptive filter's noise track."""
    _check_window(window)
    _, var = _local_moments(np.asarray(image, dtype=np.float64), window)
    return float(var.mean())


def wiener_filter(image: np.ndarray, window: int = 5) -> np.ndarray:
    """Adaptive local-statistics filter.

    out = mu + max(var - noise, 0) / max(var, noise) * (x - mu), where mu/var
    are the local window mean/variance (windows clipped at the borders, i.e.
    statistics over the in-image part only) and noise is the mean of all local
    variances.  Where both var and noise are 0 the output is mu.
    """
    _check_window(window)
    x = np.asarray(image, dtype=np.float64)
    mu, var = _local_moments(x, window)
    noise = var.mean()
    denom = np.maximum(var, noise)
    gain = np.divide(
        np.maximum(var - noise, 0.0),
        denom,
        out=np.zeros_like(var),
        where=denom > 0,
    )
    return mu + gain * (x - mu)


def refine_seed(image: np.ndarray, x: int, y: int, window: int = 5) -> tuple[int, int]:
    """Move (x, y) to the minimum-value pixel in its window (clipped at borders).

    Ties resolve to the smallest row-major index, matching C-order argmin.
    """
    h, w = image.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"seed ({x}, {y}) outside image {w}x{h}")
    r = window // 2
    y0, y1 = max(0, y - r), min(h, y + r + 1)
    x0, x1 = max(0, x - r), min(w, x + r + 1)
    win = image[y0:y1, x0:x1]
    flat = int(np.argmin(win))
    dy, dx = divmod(flat, win.shape[1])
    return x0 + dx, y0 + dy


def initial_threshold(image: np.ndarray, x: int, y: int, window: int = 5) -> tuple[float, float, float]:
    """T1 = Vc + 0.25 * Dmax over the window's boundary ring.

    Vc is the (refined) seed value; Dmax the maximum of (ring value - Vc) over
    in-bounds pixels at Chebyshev distance window//2.  Returns (T1, Vc, Dmax);
    an entirely clipped ring gives Dmax = 0.
    """
    h, w = image.shape
    vc = float(image[y, x])
    r = window // 2
    dmax = 0.0
    have_ring = False
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if max(abs(dx), abs(dy)) != r:
                continue
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                d = float(image[yy, xx]) - vc
                dmax = d if not have_ring else max(dmax, d)
                have_ring = True
    return vc + 0.25 * dmax, vc, dmax


def grow_region(
    image: np.ndarray,
    x: int,
    y: int,
    threshold: float,
    bound: np.ndarray | None = None,
) -> np.ndarray:
    """8-connected component of {value <= threshold} containing the seed.

    ``bound`` restricts the admissible set before growing, so the result is
    connected to the seed through the bound.  Raises GrowthError when the seed
    itself is above the threshold or outside the bound.
    """
    h, w = image.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"seed ({x}, {y}) outside image {w}x{h}")
    admissible = np.asarray(image) <= threshold
    if bound is not None:
        admissible &= np.asarray(bound, dtype=bool)
    if not admissible[y, x]:
        raise GrowthError(f"seed ({x}, {y}) not admissible at threshold {threshold}")
    labels, _ = ndimage.label(admissible, structure=_STRUCT8)
    return labels == labels[y, x]


def exterior_ring(mask: np.ndarray) -> np.ndarray:
    """1-pixel exterior boundary: dilate(mask, 1) minus mask (clipped at edges)."""
    dilated = ndimage.binary_dilation(mask, structure=_STRUCT8)
    return dilated & ~mask


def layer_contrast(image: np.ndarray, mask: np.ndarray) -> float:
    """Mean over the exterior 1-px ring minus mean inside; 0 if the ring is empty."""
    ring = exterior_ring(mask)
    if not ring.any():
        return 0.0
    return float(image[ring].mean() - image[mask].mean())


def multilayer_grow(
    image: np.ndarray,
    x: int,
    y: int,
    beta: float = 0.5,
    max_layers: int = 20,
    bound: np.ndarray | None = None,
) -> tuple[np.ndarray, LayerTrace]:
    """Threshold-escalating region growing: T_{n+1} = T_n + beta * C_n.

    C_n is the accepted layer's exterior-ring contrast.  Stops (discarding the
    offending layer) when a layer exceeds twice the previous layer's area,
    when a layer adds no pixels, or after max_layers accepted layers.  The
    first layer failing to grow at all raises GrowthError.
    """
    t1, vc, dmax = initial_threshold(image, x, y)
    mask = grow_region(image, x, y, t1, bound=bound)  # raises on empty first layer
    threshold = t1
    layers: list[dict] = []
    stop_reason = "max_layers"
    for _n in range(max_layers):
        contrast = layer_contrast(image, mask)
        layers.append(
            {"threshold": float(threshold), "area_px": int(mask.sum()), "contrast": contrast}
        )
        if len(layers) == max_layers:
            break
        threshold = threshold + beta * contrast
        try:
            grown = grow_region(image, x, y, threshold, bound=bound)
        except GrowthError:
            stop_reason = "no_growth"
            break
        if grown.sum() <= mask.sum():
            stop_reason = "no_growth"
            break
        if grown.sum() > 2 * mask.sum():
            stop_reason = "ratio_exceeded"
            break
        mask = grown
    trace = LayerTrace(layers=layers, beta=beta, dmax=dmax, vc=vc, stop_reason=stop_reason)
    return mask, trace


def dilate_mask(mask: np.ndarray, px: int) -> np.ndarray:
    """Dilate by ``px`` pixels with the 8-connected element (Chebyshev ball)."""
    if px <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=_STRUCT8, iterations=px)


_CONTOUR_DT = 1.0
_CONTOUR_CURVATURE = 0.2
_CONTOUR_BOUND_PX = 10


def _curvature(phi: np.ndarray) -> np.ndarray:
    # div(grad phi / |grad phi|) via central differences
    gy, gx = np.gradient(phi)
    norm = np.sqrt(gx * gx + gy * gy) + 1e-12
    nyy, _ = np.gradient(gy / norm)
    _, nxx = np.gradient(gx / norm)
    return nxx + nyy


def active_contour_refine(
    image: np.ndarray, mask: np.ndarray, iterations: int = 50
) -> np.ndarray:
    """Two-phase region-based contour evolution initialized at the mask boundary.

    The level set is driven by (I - c2)^2 - (I - c1)^2 (c1/c2 the current
    inside/outside means over the evolution window) normalized by its max,
    plus a curvature term.  Evolution runs on the bounding box of the input
    mask dilated by 10 px (plus margin) and the output is confined to that
    dilation.  iterations = 0 returns the input; an evolution that empties the
    mask also returns the input unchanged.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("input mask is empty")
    if iterations == 0:
        return mask.copy()
    allowed = dilate_mask(mask, _CONTOUR_BOUND_PX)
    ys, xs = np.nonzero(allowed)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    img = np.asarray(image, dtype=np.float64)[y0:y1, x0:x1]
    m = mask[y0:y1, x0:x1]
    ok = allowed[y0:y1, x0:x1]

    inside_dist = ndimage.distance_transform_edt(m)
    outside_dist = ndimage.distance_transform_edt(~m)
    phi = inside_dist - outside_dist + m - 0.5  # > 0 inside

    # no early mask-equality exit: the level set can pause for a sweep while
    # phi builds up, so a stable mask is not yet a fixed point
    for _ in range(iterations):
        inside = phi > 0
        if not inside.any() or inside.all():
            break
        c1 = img[inside].mean()
        c2 = img[~inside].mean()
        force = (img - c2) ** 2 - (img - c1) ** 2
        peak = np.abs(force).max()
        if peak > 0:
            force = force / peak
        phi = phi + _CONTOUR_DT * force + _CONTOUR_CURVATURE * _curvature(phi)
        phi[~ok] = np.minimum(phi[~ok], -0.5)

    result_crop = (phi > 0) & ok
    if not result_crop.any():
        return mask.copy()
    result = np.zeros_like(mask)
    result[y0:y1, x0:x1] = result_crop
    return result


def _grow_slice(
    filtered: np.ndarray,
    seeds: list[tuple[int, int]],
    params: SegmentationParams,
    bound: np.ndarray | None,
) -> tuple[np.ndarray | None, list[LayerTrace]]:
    """Union of multilayer growths from each viable seed, contour-refined.

    Seeds whose growth ends with non-positive boundary contrast are dropped:
    a detected hypodense region always leaves a brighter exterior ring, while
    a flood over flat background has contrast exactly 0.
    """
    union = np.zeros(filtered.shape, dtype=bool)
    traces = []
    for sx, sy in seeds:
        try:
            grown, trace = multilayer_grow(
                filtered, sx, sy, beta=params.beta, max_layers=params.max_layers, bound=bound
            )
        except GrowthError:
            continue
        if trace.layers[-1]["contrast"] <= 0:
            continue
        union |= grown
        traces.append(trace)
    if not traces:
        return None, []
    refined = active_contour_refine(filtered, union, params.contour_iterations)
    if bound is not None:
        refined &= bound
    return refined, traces


def _centroid(mask: np.ndarray) -> tuple[int, int]:
    ys, xs = np.nonzero(mask)
    return int(round(xs.mean())), int(round(ys.mean()))


def propagate_volume(
    volume,
    seed: Seed,
    params: SegmentationParams | None = None,
) -> SegmentationResult:
    """Segment a lesion in 3D from a single-slice seed.

    The seed slice is filtered, seed-refined, grown and contour-refined; the
    mask is then propagated slice by slice in both z directions.  Each
    adjacent slice is grown from three seeds (the previous mask's centroid
    plus two points drawn uniformly from the 5x5 window around it, using
    per-direction generators spawned from ``run_seed``) under a bound of the
    previous mask dilated by 5 px.  A direction stops when every seed fails to
    grow (or detects nothing, i.e. non-positive boundary contrast), when the
    refined mask's boundary contrast does not beat the slice's estimated
    noise standard deviation, or when it falls below ``min_area_px``.
    """
    params = params or SegmentationParams()
    vox = volume.voxels.astype(np.float64)
    nz, ny, nx = vox.shape
    if not (0 <= seed.z < nz and 0 <= seed.x < nx and 0 <= seed.y < ny):
        raise IndexError(f"seed {seed} outside volume dims {volume.dims}")

    filtered_cache: dict[int, np.ndarray] = {}

    def filtered(z: int) -> np.ndarray:
        if z not in filtered_cache:
            filtered_cache[z] = wiener_filter(vox[z], params.wiener_window)
        return filtered_cache[z]

    f0 = filtered(seed.z)
    sx, sy = refine_seed(f0, seed.x, seed.y, params.seed_window)
    grown, trace = multilayer_grow(
        f0, sx, sy, beta=params.beta, max_layers=params.max_layers
    )  # GrowthError on the seed slice aborts
    if trace.layers[-1]["contrast"] <= 0:
        raise GrowthError(
            f"no hypodense region at seed ({sx}, {sy}): boundary contrast <= 0"
        )
    mask0 = active_contour_refine(f0, grown, params.contour_iterations)

    out = np.zeros((nz, ny, nx), dtype=bool)
    out[seed.z] = mask0
    per_slice: dict[int, dict] = {
        seed.z: {"area_px": int(mask0.sum()), "trace": trace.to_dict()}
    }

    ss = np.random.SeedSequence(params.run_seed)
    rng_up, rng_down = (np.random.default_rng(c) for c in ss.spawn(2))
    jitter = params.seed_window // 2

    for step, rng in ((1, rng_up), (-1, rng_down)):
        prev = mask0
        z = seed.z + step
        while 0 <= z < nz:
            bound = dilate_mask(prev, params.propagation_dilation_px)
            cx, cy = _centroid(prev)
            candidates = [(cx, cy)]
            for _ in range(2):
                dx = int(rng.integers(-jitter, jitter + 1))
                dy = int(rng.integers(-jitter, jitter + 1))
                candidates.append(
                    (min(max(cx + dx, 0), nx - 1), min(max(cy + dy, 0), ny - 1))
                )
            fz = filtered(z)
            seeds = [refine_seed(fz, px, py, params.seed_window) for px, py in candidates]
            refined, traces = _grow_slice(fz, seeds, params, bound)
            if refined is None:
                logger.debug("propagation stopped at z=%d: no seed grew", z)
                break
            # propagated slices must justify themselves: the refined mask's
            # boundary contrast has to beat the slice's raw noise floor, or we
            # are growing into noise pockets beyond the lesion
            strength = layer_contrast(fz, refined) if refined.any() else 0.0
            floor = np.sqrt(estimate_noise_variance(vox[z], params.wiener_window))
            if strength <= floor:
                logger.debug(
                    "propagation stopped at z=%d: contrast %.3f <= noise %.3f",
                    z, strength, floor,
                )
                break
            area = int(refined.sum())
            if area < params.min_area_px:
                logger.debug("propagation stopped at z=%d: area %d < %d", z, area, params.min_area_px)
                break
            out[z] = refined
            per_slice[z] = {"area_px": area, "trace": "propagated"}
            prev = refined
            z += step

    return SegmentationResult(mask=out, per_slice=per_slice, seed_used=Seed(seed.z, sx, sy))
