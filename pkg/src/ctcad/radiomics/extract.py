"""Slice- and volume-level feature extraction plus min-max normalization."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .firstorder import density_features, log_features
from .manifest import FEATURE_COUNT, FEATURE_NAMES, WAVELET_BANDS
from .texture import gldm_features, glcm_features, glrlm_features, quantize
from .wavelet import haar_subbands

logger = logging.getLogger(__name__)

_PER_BAND = 13 + 13 + 21 + 16  # glcm d1 + glcm d2 + density + gldm


@dataclass
class FeatureVector:
    """One case's feature values in manifest order."""

    case_id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (FEATURE_COUNT,):
            raise ValueError(f"expected {FEATURE_COUNT} values, got {v.shape}")
        self.values = v


def extract_slice_features(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """All 315 features of one masked slice, in manifest order.

    A subband whose mask empties under downsampling contributes zeros for its
    63 entries (flagged via the module logger).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty ROI")
    roi = quantize(image, mask)
    parts = [glrlm_features(roi), gldm_features(roi)]
    bands, band_mask = haar_subbands(image, mask)
    for name in WAVELET_BANDS:
        if not band_mask.any():
            logger.warning("wavelet subband %s emptied by downsampling; zero-filled", name)
            parts.append(np.zeros(_PER_BAND))
            continue
        band = bands[name]
        broi = quantize(band, band_mask)
        parts.append(glcm_features(broi, 1))
        parts.append(glcm_features(broi, 2))
        parts.append(density_features(band, band_mask))
        parts.append(gldm_features(broi))
    parts.append(log_features(image, mask))
    out = np.concatenate(parts)
    assert out.shape == (FEATURE_COUNT,)
    return out


def aggregate_volume_features(
    slice_features: list[tuple[np.ndarray, int]],
    spacing_mm: tuple[float, float, float],
) -> np.ndarray:
    """Volume-weighted mean of per-slice vectors.

    Weight_i = area_i * sx * sy * sz / sum_j(area_j * sx * sy * sz); with the
    uniform voxel volume the weights reduce to area fractions, but the
    physical volumes are kept explicit.
    """
    if not slice_features:
        raise ValueError("no slices to aggregate")
    sx, sy, sz = spacing_mm
    voxel_mm3 = sx * sy * sz
    volumes = np.array([area * voxel_mm3 for _, area in slice_features], dtype=np.float64)
    if volumes.sum() <= 0:
        raise ValueError("total masked volume is zero")
    weights = volumes / volumes.sum()
    stacked = np.stack([values for values, _ in slice_features])
    return weights @ stacked


FEATURE_MODE_3D = "features_3d"
FEATURE_MODE_2D = "features_2d_largest_slice"


def extract_volume_features(volume, mask_bits: np.ndarray, mode: str = FEATURE_MODE_3D) -> np.ndarray:
    """Per-case features: volume-weighted 3D aggregate or the largest slice only."""
    mask_bits = np.asarray(mask_bits, dtype=bool)
    areas = mask_bits.sum(axis=(1, 2))
    nonempty = np.nonzero(areas)[0]
    if nonempty.size == 0:
        raise ValueError("mask is empty")
    vox = volume.voxels.astype(np.float64)
    if mode == FEATURE_MODE_2D:
        z = int(nonempty[np.argmax(areas[nonempty])])
        return extract_slice_features(vox[z], mask_bits[z])
    if mode != FEATURE_MODE_3D:
        raise ValueError(f"unknown feature mode {mode!r}")
    per_slice = [
        (extract_slice_features(vox[z], mask_bits[z]), int(areas[z])) for z in nonempty
    ]
    return aggregate_volume_features(per_slice, volume.spacing_mm)


@dataclass
class NormalizerParams:
    """Per-feature min/max learned from a training matrix."""

    minima: np.ndarray
    maxima: np.ndarray


def fit_normalizer(matrix: np.ndarray) -> NormalizerParams:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValueError("need a non-empty 2D matrix")
    return NormalizerParams(minima=m.min(axis=0), maxima=m.max(axis=0))


def apply_normalizer(params: NormalizerParams, values: np.ndarray) -> np.ndarray:
    """Clamped min-max scaling to [0, 1]; constant features map to 0."""
    v = np.asarray(values, dtype=np.float64)
    span = params.maxima - params.minima
    safe = np.where(span > 0, span, 1.0)
    scaled = np.clip((v - params.minima) / safe, 0.0, 1.0)
    return np.where(span > 0, scaled, 0.0)


def write_feature_csv(path, case_ids, labels, matrix) -> None:
    """CSV: case_id, label, then the 315 manifest columns at 9 significant digits."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("case_id,label," + ",".join(FEATURE_NAMES) + "\n")
        for cid, label, row in zip(case_ids, labels, matrix, strict=True):
            vals = ",".join(f"{v:.9g}" for v in row)
            fh.write(f"{cid},{int(label)},{vals}\n")


def read_feature_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Returns (case_ids, labels, matrix); validates the header columns."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        expected = ["case_id", "label", *FEATURE_NAMES]
        if header != expected:
            raise ValueError("feature CSV header does not match the manifest")
        case_ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            case_ids.append(parts[0])
            labels.append(int(parts[1]))
            rows.append([float(x) for x in parts[2:]])
    return case_ids, np.asarray(labels, dtype=np.int64), np.asarray(rows, dtype=np.float64)
