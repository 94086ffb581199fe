"""Texture / first-order feature stack (315 features per masked slice)."""

from .extract import (
    FEATURE_MODE_2D,
    FEATURE_MODE_3D,
    FeatureVector,
    NormalizerParams,
    aggregate_volume_features,
    apply_normalizer,
    extract_slice_features,
    extract_volume_features,
    fit_normalizer,
    read_feature_csv,
    write_feature_csv,
)
from .firstorder import density_features, log_features, log_response
from .manifest import FEATURE_COUNT, FEATURE_NAMES, MANIFEST, FeatureName, build_manifest
from .texture import (
    QuantizedRoi,
    cooccurrence_counts,
    cooccurrence_matrix,
    gldm_features,
    gldm_stats,
    glcm_features,
    glrlm_features,
    glrlm_stats,
    haralick_stats,
    level_differences,
    quantize,
    run_length_matrix,
)
from .wavelet import BAND_ORDER, haar_subbands

__all__ = [
    "BAND_ORDER",
    "FEATURE_COUNT",
    "FEATURE_MODE_2D",
    "FEATURE_MODE_3D",
    "FEATURE_NAMES",
    "MANIFEST",
    "FeatureName",
    "FeatureVector",
    "NormalizerParams",
    "QuantizedRoi",
    "aggregate_volume_features",
    "apply_normalizer",
    "build_manifest",
    "cooccurrence_counts",
    "cooccurrence_matrix",
    "density_features",
    "extract_slice_features",
    "extract_volume_features",
    "fit_normalizer",
    "gldm_features",
    "gldm_stats",
    "glcm_features",
    "glrlm_features",
    "glrlm_stats",
    "haar_subbands",
    "haralick_stats",
    "level_differences",
    "log_features",
    "log_response",
    "quantize",
    "read_feature_csv",
    "run_length_matrix",
    "write_feature_csv",
]
