import numpy as np
import pytest

from ctcad.phantom import (
    LABEL_NEGATIVE,
    LABEL_POSITIVE,
    MANIFEST_COLUMNS,
    PhantomSpec,
    generate_case,
    generate_dataset,
    load_manifest,
)
from ctcad.seeding import derive_seed
from ctcad.volume_io import load_mask, load_volume


def test_case_is_deterministic():
    spec = PhantomSpec()
    a = generate_case(spec, LABEL_POSITIVE, 777, "p0")
    b = generate_case(spec, LABEL_POSITIVE, 777, "p0")
    assert np.array_equal(a.volume.voxels, b.volume.voxels)
    assert np.array_equal(a.truth.bits, b.truth.bits)
    assert a.suggested_seed == b.suggested_seed


def test_case_seed_changes_volume():
    spec = PhantomSpec()
    a = generate_case(spec, LABEL_POSITIVE, 1, "p0")
    b = generate_case(spec, LABEL_POSITIVE, 2, "p0")
    assert not np.array_equal(a.volume.voxels, b.volume.voxels)


def test_classes_share_geometry_but_differ_in_texture():
    spec = PhantomSpec()
    pos = generate_case(spec, LABEL_POSITIVE, 5, "p")
    neg = generate_case(spec, LABEL_NEGATIVE, 5, "n")
    # same case seed -> identical jitter/radius draws -> identical truth mask
    assert np.array_equal(pos.truth.bits, neg.truth.bits)
    inside = pos.truth.bits
    assert pos.volume.voxels[inside].std() > neg.volume.voxels[inside].std()


def test_truth_mask_matches_lesion_darkening():
    spec = PhantomSpec()
    case = generate_case(spec, LABEL_NEGATIVE, 9, "n0")
    inside = case.truth.bits
    vox = case.volume.voxels.astype(float)
    assert inside.any()
    # lesion HU 40 vs background 120; noise is far smaller than the gap
    assert vox[inside].mean() < 70
    assert vox[~inside].mean() > 110


def test_truth_mask_keeps_margin():
    spec = PhantomSpec()
    case = generate_case(spec, LABEL_POSITIVE, 3, "p0")
    bits = case.truth.bits
    assert not bits[0].any() and not bits[-1].any()
    assert not bits[:, 0, :].any() and not bits[:, -1, :].any()
    assert not bits[:, :, 0].any() and not bits[:, :, -1].any()


def test_suggested_seed_inside_largest_slice():
    spec = PhantomSpec()
    case = generate_case(spec, LABEL_POSITIVE, 4, "p0")
    s = case.suggested_seed
    areas = case.truth.bits.sum(axis=(1, 2))
    assert s.z == int(np.argmax(areas))
    assert case.truth.bits[s.z, s.y, s.x]


def test_spec_validation():
    with pytest.raises(ValueError):
        PhantomSpec(dims=(8, 8, 3))
    with pytest.raises(ValueError):
        PhantomSpec(lesion_radii=(0.0, 4.0, 2.0))
    with pytest.raises(ValueError):
        PhantomSpec(dims=(16, 16, 8), lesion_radii=(8.0, 7.0, 4.0))  # no margin left


def test_dataset_layout_and_manifest(tmp_path):
    spec = PhantomSpec(dims=(32, 32, 8), lesion_radii=(5.0, 4.0, 2.0))
    manifest = generate_dataset(spec, 2, 3, seed=42, out_dir=tmp_path / "data")
    assert manifest == tmp_path / "data" / "manifest.csv"
    header = manifest.read_text().splitlines()[0]
    assert header == ",".join(MANIFEST_COLUMNS)
    records = load_manifest(manifest)
    assert [r.case_id for r in records] == ["pos_000", "pos_001", "neg_000", "neg_001", "neg_002"]
    assert [r.label for r in records] == [1, 1, 0, 0, 0]
    for r in records:
        # manifest stores relative paths; loading resolves them against its directory
        assert r.volume_path == tmp_path / "data" / "volumes" / f"{r.case_id}.ptv"
        assert r.volume_path.exists() and r.truth_mask_path.exists()
        vol = load_volume(r.volume_path)
        truth = load_mask(r.truth_mask_path)
        assert vol.case_id == r.case_id == truth.case_id
        assert vol.voxels.shape == truth.bits.shape == (8, 32, 32)
        assert truth.bits[r.seed.z, r.seed.y, r.seed.x]


def test_dataset_per_case_seeds_derive_from_index(tmp_path):
    spec = PhantomSpec(dims=(32, 32, 8), lesion_radii=(5.0, 4.0, 2.0))
    manifest = generate_dataset(spec, 1, 1, seed=42, out_dir=tmp_path / "data")
    records = load_manifest(manifest)
    for index, record in enumerate(records):
        expected = generate_case(
            spec, record.label, derive_seed(42, index), record.case_id
        )
        assert np.array_equal(load_volume(record.volume_path).voxels, expected.volume.voxels)


def test_dataset_files_byte_identical_across_runs(tmp_path):
    spec = PhantomSpec(dims=(32, 32, 8), lesion_radii=(5.0, 4.0, 2.0))
    m1 = generate_dataset(spec, 1, 2, seed=7, out_dir=tmp_path / "a")
    m2 = generate_dataset(spec, 1, 2, seed=7, out_dir=tmp_path / "b")
    assert m1.read_text() == m2.read_text()
    for rel in ["volumes/pos_000.ptv", "volumes/neg_001.ptv", "truth/neg_000.ptv"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_load_manifest_rejects_wrong_header(tmp_path):
    bad = tmp_path / "manifest.csv"
    bad.write_text("case_id,label\nx,1\n")
    with pytest.raises(ValueError):
        load_manifest(bad)
