"""Synthetic ellipsoid-lesion volumes with class-dependent texture.

Two classes share the same geometry family but differ in in-lesion texture:
the positive class gets strong, mildly smoothed noise; the negative class
weak, heavily smoothed noise.  Ground-truth masks are the exact (strictly
interior) ellipsoids, so segmentation and classification can both be scored
against construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .seeding import derive_seed
from .segmentation import Seed
from .volume_io import CtVolume, SegmentationMask, save_mask, save_volume

LABEL_POSITIVE = 1  # heterogeneous-texture class
LABEL_NEGATIVE = 0

_MARGIN_VOXELS = 2


@dataclass
class PhantomSpec:
    """Geometry, contrast and texture parameters for generated cases."""

    dims: tuple[int, int, int] = (64, 64, 16)  # (nx, ny, nz)
    spacing_mm: tuple[float, float, float] = (0.8, 0.8, 2.5)
    background_hu: float = 120.0
    lesion_hu: float = 40.0
    lesion_radii: tuple[float, float, float] = (8.0, 7.0, 4.0)  # voxels (rx, ry, rz)
    noise_std: dict = field(default_factory=lambda: {"positive": 18.0, "negative": 6.0})
    smoothing_sigma: dict = field(default_factory=lambda: {"positive": 0.5, "negative": 1.5})
    global_noise_std: float = 2.0
    seed: int = 1234

    def __post_init__(self):
        nx, ny, nz = self.dims
        rx, ry, rz = self.lesion_radii
        if min(nx, ny, nz) < 4:
            raise ValueError("dims too small")
        if min(rx, ry, rz) <= 0:
            raise ValueError("lesion radii must be positive")
        # centre jitter is +/-1 voxel in x/y, so reserve one extra voxel there
        if (
            rx + _MARGIN_VOXELS + 1 > nx / 2
            or ry + _MARGIN_VOXELS + 1 > ny / 2
            or rz + _MARGIN_VOXELS > nz / 2
        ):
            raise ValueError("lesion does not fit inside the volume with a 2-voxel margin")


@dataclass
class PhantomCase:
    volume: CtVolume
    truth: SegmentationMask
    label: int
    suggested_seed: Seed


def _class_key(label: int) -> str:
    return "positive" if label == LABEL_POSITIVE else "negative"


def generate_case(spec: PhantomSpec, label: int, case_seed: int, case_id: str) -> PhantomCase:
    """One deterministic case; identical (spec, label, case_seed) reproduce it."""
    rng = np.random.default_rng(case_seed)
    nx, ny, nz = spec.dims
    # fixed draw order keeps cases reproducible regardless of parameter values
    jx = int(rng.integers(-1, 2))
    jy = int(rng.integers(-1, 2))
    radius_scale = rng.uniform(0.85, 1.0, size=3)
    noise_field = rng.standard_normal((nz, ny, nx))
    global_field = rng.standard_normal((nz, ny, nx))

    cx, cy, cz = nx / 2 + jx, ny / 2 + jy, nz / 2
    rx, ry, rz = (r * s for r, s in zip(spec.lesion_radii, radius_scale))

    zz, yy, xx = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    ellipsoid = (
        ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 + ((zz - cz) / rz) ** 2
    ) < 1.0
    if not ellipsoid.any():
        raise ValueError("degenerate lesion: no interior voxels")

    vol = np.full((nz, ny, nx), spec.background_hu, dtype=np.float64)
    vol[ellipsoid] = spec.lesion_hu

    key = _class_key(label)
    texture = noise_field * spec.noise_std[key]
    sigma = spec.smoothing_sigma[key]
    if sigma > 0:
        texture = ndimage.gaussian_filter(texture, sigma)
    vol[ellipsoid] += texture[ellipsoid]
    vol += global_field * spec.global_noise_std

    voxels = np.clip(np.rint(vol), -32768, 32767).astype(np.int16)
    volume = CtVolume(case_id=case_id, voxels=voxels, spacing_mm=spec.spacing_mm)
    truth = SegmentationMask(case_id=case_id, bits=ellipsoid)

    areas = ellipsoid.sum(axis=(1, 2))
    z_star = int(np.argmax(areas))
    ys, xs = np.nonzero(ellipsoid[z_star])
    suggested = Seed(z=z_star, x=int(round(xs.mean())), y=int(round(ys.mean())))
    return PhantomCase(volume=volume, truth=truth, label=label, suggested_seed=suggested)


@dataclass
class ManifestRecord:
    case_id: str
    label: int
    seed: Seed
    volume_path: Path
    truth_mask_path: Path


MANIFEST_COLUMNS = [
    "case_id",
    "label",
    "seed_z",
    "seed_x",
    "seed_y",
    "volume_path",
    "truth_mask_path",
]


def generate_dataset(
    spec: PhantomSpec,
    n_positive: int,
    n_negative: int,
    seed: int,
    out_dir,
) -> Path:
    """Write volumes, truth masks, and a manifest CSV; returns the manifest path.

    Per-case seeds derive from (seed, case index); positives come first.
    Paths inside the manifest are relative to the manifest's directory.
    """
    out_dir = Path(out_dir)
    (out_dir / "volumes").mkdir(parents=True, exist_ok=True)
    (out_dir / "truth").mkdir(parents=True, exist_ok=True)
    rows = []
    labels = [LABEL_POSITIVE] * n_positive + [LABEL_NEGATIVE] * n_negative
    for index, label in enumerate(labels):
        tag = "pos" if label == LABEL_POSITIVE else "neg"
        rank = index if label == LABEL_POSITIVE else index - n_positive
        case_id = f"{tag}_{rank:03d}"
        case = generate_case(spec, label, derive_seed(seed, index), case_id)
        vol_rel = Path("volumes") / f"{case_id}.ptv"
        truth_rel = Path("truth") / f"{case_id}.ptv"
        save_volume(case.volume, out_dir / vol_rel)
        save_mask(case.truth, out_dir / truth_rel)
        s = case.suggested_seed
        rows.append([case_id, label, s.z, s.x, s.y, str(vol_rel), str(truth_rel)])
    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)
    return manifest_path


def load_manifest(path) -> list[ManifestRecord]:
    path = Path(path)
    base = path.parent
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_COLUMNS:
            raise ValueError("manifest header does not match the expected columns")
        for row in reader:
            records.append(
                ManifestRecord(
                    case_id=row["case_id"],
                    label=int(row["label"]),
                    seed=Seed(z=int(row["seed_z"]), x=int(row["seed_x"]), y=int(row["seed_y"])),
                    volume_path=base / row["volume_path"],
                    truth_mask_path=base / row["truth_mask_path"],
                )
            )
    return records
