"""315-value texture fingerprint of one segmented lesion.

The feature vector layout:
    44  run-length stats          (4 directions x 11)
    16  level-difference stats    (4 displacements x 4)
   252  Haar subband stats        (4 subbands x (2x13 co-occurrence + 21 density + 16 diff))
     3  Laplacian-of-Gaussian response stats
"""

from collections import Counter

import numpy as np

from ctcad.phantom import PhantomSpec, generate_case
from ctcad.radiomics.extract import extract_slice_features, extract_volume_features
from ctcad.radiomics.manifest import FEATURE_NAMES, build_manifest
from ctcad.segmentation import SegmentationParams, propagate_volume

case = generate_case(PhantomSpec(), label=1, case_seed=99, case_id="demo")
result = propagate_volume(case.volume, case.suggested_seed, SegmentationParams())

groups = Counter(f.group for f in build_manifest())
print(f"{len(FEATURE_NAMES)} features:", dict(groups))

# single-slice vector on the seeded slice
z = case.suggested_seed.z
vec = extract_slice_features(case.volume.voxels[z].astype(float), result.mask[z])
print(f"\nslice z={z}: {vec.shape[0]} values")
for idx in (0, 43, 44, 60, 312):
    print(f"  [{idx:3d}] {FEATURE_NAMES[idx]:28s} = {vec[idx]:.6g}")

# volume-weighted 3D aggregate vs the largest-slice 2D shortcut
agg3d = extract_volume_features(case.volume, result.mask, "features_3d")
agg2d = extract_volume_features(case.volume, result.mask, "features_2d_largest_slice")
delta = np.abs(agg3d - agg2d)
print(f"\n3D aggregate vs largest-slice: mean |delta| {delta.mean():.4g}, max {delta.max():.4g}")
print("(the 3D vector is the area-volume-weighted mean over in-mask slices)")
