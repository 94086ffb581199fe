"""The frozen 315-entry feature manifest.

Order is load-bearing: CSV columns, reduction inputs, and the golden file in
the test suite all assume it.  Never reorder; append-only changes would change
the feature count and are therefore also out.
"""

from __future__ import annotations

from dataclasses import dataclass

GLRLM_DIRECTIONS = ("h", "a", "v", "d")  # 0, 45, 90, 135 degrees
GLRLM_STATS = (
    "sre", "lre", "gln", "rln", "rp",
    "lgre", "hgre", "srlge", "srhge", "lrlge", "lrhge",
)

# displacement order matches the pair-difference definitions: (0,1) (1,0) (1,1) (1,-1)
GLDM_DISPLACEMENTS = ("h", "v", "d", "a")
GLDM_STATS = ("mean", "median", "std", "variance")

GLCM_STATS = (
    "energy", "contrast", "correlation", "variance", "idm",
    "sum_average", "sum_variance", "sum_entropy", "entropy",
    "diff_variance", "diff_entropy", "imc1", "imc2",
)

WAVELET_BANDS = ("ll", "lh", "hl", "hh")

DENSITY_STATS = (
    "mean", "median", "std", "variance", "skewness", "kurtosis",
    "energy", "entropy", "min", "max", "range",
    "p10", "p25", "p75", "p90", "iqr", "mad", "rms",
    "uniformity", "cv", "trimmed_mean",
)

LOG_STATS = ("mean", "median", "std")


@dataclass(frozen=True)
class FeatureName:
    name: str
    group: str


def build_manifest() -> tuple[FeatureName, ...]:
    entries: list[FeatureName] = []
    for d in GLRLM_DIRECTIONS:
        for s in GLRLM_STATS:
            entries.append(FeatureName(f"glrlm_{d}_{s}", "glrlm"))
    for d in GLDM_DISPLACEMENTS:
        for s in GLDM_STATS:
            entries.append(FeatureName(f"gldm_{d}_{s}", "gldm"))
    for band in WAVELET_BANDS:
        for dist in (1, 2):
            for s in GLCM_STATS:
                entries.append(FeatureName(f"wav_{band}_glcm_d{dist}_{s}", "wavelet_glcm"))
        for s in DENSITY_STATS:
            entries.append(FeatureName(f"wav_{band}_density_{s}", "wavelet_density"))
        for d in GLDM_DISPLACEMENTS:
            for s in GLDM_STATS:
                entries.append(FeatureName(f"wav_{band}_gldm_{d}_{s}", "wavelet_gldm"))
    for s in LOG_STATS:
        entries.append(FeatureName(f"log_{s}", "log"))
    return tuple(entries)


MANIFEST: tuple[FeatureName, ...] = build_manifest()
FEATURE_COUNT = len(MANIFEST)  # 315
FEATURE_NAMES: tuple[str, ...] = tuple(e.name for e in MANIFEST)
