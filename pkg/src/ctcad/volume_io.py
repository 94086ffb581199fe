"""Volume and mask containers plus their on-disk format.

Centralizes all file handling so other modules never touch raw bytes: a
single-line UTF-8 JSON header (terminated by ``\\n``) followed by the raw
voxel payload.  Volumes store little-endian int16 scalars, masks one byte
per voxel (0/1), both row-major with x fastest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

MAGIC = "PTV1"

_HU_MIN = -32768
_HU_MAX = 32767


class VolumeFormatError(ValueError):
    """Malformed container; ``field`` names the offending header/payload part."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class DisplayWindow:
    """Level/width mapping from stored values to display gray levels."""

    level: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("display window width must be > 0")


@dataclass(eq=False)
class CtVolume:
    """A 3D scalar volume; ``voxels`` is int16 with shape (nz, ny, nx)."""

    case_id: str
    voxels: np.ndarray
    spacing_mm: tuple[float, float, float]

    def __post_init__(self):
        v = np.asarray(self.voxels)
        if v.ndim != 3 or v.size == 0:
            raise ValueError("voxels must be a non-empty 3D array")
        if v.dtype != np.int16:
            raise ValueError("voxels must be int16")
        self.voxels = v
        sx, sy, sz = self.spacing_mm
        if not (sx > 0 and sy > 0 and sz > 0):
            raise ValueError("spacing_mm must be positive")
        self.spacing_mm = (float(sx), float(sy), float(sz))

    @property
    def dims(self) -> tuple[int, int, int]:
        """(nx, ny, nz)"""
        nz, ny, nx = self.voxels.shape
        return nx, ny, nz

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CtVolume)
            and self.case_id == other.case_id
            and self.spacing_mm == other.spacing_mm
            and np.array_equal(self.voxels, other.voxels)
        )


@dataclass(eq=False)
class SegmentationMask:
    """A binary mask aligned with a volume; ``bits`` is bool (nz, ny, nx)."""

    case_id: str
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 3 or b.size == 0:
            raise ValueError("bits must be a non-empty 3D array")
        self.bits = b.astype(bool)

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.bits.shape
        return nx, ny, nz

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SegmentationMask)
            and self.case_id == other.case_id
            and np.array_equal(self.bits, other.bits)
        )


def _write_container(path, kind: str, case_id: str, dims, spacing_mm, payload: bytes):
    header = {
        "magic": MAGIC,
        "kind": kind,
        "case_id": case_id,
        "dims": list(dims),
        "spacing_mm": [float(s) for s in spacing_mm],
    }
    data = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + payload
    Path(path).write_bytes(data)


def _read_container(path, kind: str):
    raw = Path(path).read_bytes()  # raises FileNotFoundError naturally
    nl = raw.find(b"\n")
    if nl < 0:
        raise VolumeFormatError("header", "missing newline-terminated header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VolumeFormatError("header", f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise VolumeFormatError("magic", f"expected magic {MAGIC!r}")
    if header.get("kind") != kind:
        raise VolumeFormatError("kind", f"expected kind {kind!r}, got {header.get('kind')!r}")
    case_id = header.get("case_id")
    if not isinstance(case_id, str):
        raise VolumeFormatError("case_id", "case_id must be a string")
    dims = header.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 3
        or not all(isinstance(d, int) and d >= 1 for d in dims)
    ):
        raise VolumeFormatError("dims", "dims must be three integers >= 1")
    spacing = header.get("spacing_mm")
    if (
        not isinstance(spacing, list)
        or len(spacing) != 3
        or not all(isinstance(s, (int, float)) and s > 0 for s in spacing)
    ):
        raise VolumeFormatError("spacing_mm", "spacing_mm must be three positive numbers")
    return case_id, tuple(dims), tuple(float(s) for s in spacing), raw[nl + 1 :]


def save_volume(volume: CtVolume, path) -> None:
    payload = volume.voxels.astype("<i2").tobytes()
    _write_container(path, "volume", volume.case_id, volume.dims, volume.spacing_mm, payload)


def load_volume(path) -> CtVolume:
    case_id, (nx, ny, nz), spacing, payload = _read_container(path, "volume")
    expected = nx * ny * nz * 2
    if len(payload) != expected:
        raise VolumeFormatError(
            "payload", f"expected {expected} payload bytes, got {len(payload)}"
        )
    voxels = np.frombuffer(payload, dtype="<i2").reshape(nz, ny, nx).astype(np.int16)
    return CtVolume(case_id=case_id, voxels=voxels, spacing_mm=spacing)


def save_mask(mask: SegmentationMask, path) -> None:
    payload = mask.bits.astype(np.uint8).tobytes()
    # masks carry no spacing of their own; the header schema still wants the field
    _write_container(path, "mask", mask.case_id, mask.dims, (1.0, 1.0, 1.0), payload)


def load_mask(path) -> SegmentationMask:
    case_id, (nx, ny, nz), _spacing, payload = _read_container(path, "mask")
    expected = nx * ny * nz
    if len(payload) != expected:
        raise VolumeFormatError(
            "payload", f"expected {expected} payload bytes, got {len(payload)}"
        )
    bits = np.frombuffer(payload, dtype=np.uint8)
    if not np.all((bits == 0) | (bits == 1)):
        raise VolumeFormatError("payload", "mask payload bytes must be 0 or 1")
    return SegmentationMask(case_id=case_id, bits=bits.reshape(nz, ny, nx).astype(bool))


def window_slice(values: np.ndarray, window: DisplayWindow) -> np.ndarray:
    """Map scalar values to 8-bit gray: round(255 * clamp((v - level + w/2) / w)).

    Rounding is half-away-from-zero (the mapped values are non-negative, so
    floor(x + 0.5) implements it exactly).
    """
    v = np.asarray(values, dtype=np.float64)
    frac = np.clip((v - (window.level - window.width / 2.0)) / window.width, 0.0, 1.0)
    return np.floor(255.0 * frac + 0.5).astype(np.uint8)


def export_slice_image(volume: CtVolume, z: int, window: DisplayWindow) -> np.ndarray:
    """Render slice ``z`` as an (ny, nx) uint8 gray image."""
    nz = volume.voxels.shape[0]
    if not 0 <= z < nz:
        raise IndexError(f"slice index {z} out of range [0, {nz})")
    return window_slice(volume.voxels[z], window)


def encode_png(gray: np.ndarray) -> bytes:
    """Encode a 2D uint8 array as PNG bytes."""
    import io

    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(gray), mode="L").save(buf, format="PNG")
    return buf.getvalue()
