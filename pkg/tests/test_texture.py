import math

import numpy as np
import pytest

import oracles as O
from ctcad.radiomics.texture import (
    DIRECTION_OFFSETS,
    QuantizedRoi,
    cooccurrence_counts,
    cooccurrence_matrix,
    glcm_features,
    gldm_features,
    gldm_stats,
    glrlm_features,
    glrlm_stats,
    haralick_stats,
    level_differences,
    quantize,
    run_length_matrix,
)


def _random_roi(rng, max_side=8):
    h, w = rng.integers(2, max_side + 1, size=2)
    img = rng.normal(75, 20, size=(h, w))
    mask = rng.random((h, w)) < 0.75
    if mask.sum() < 2:
        mask[0, 0] = mask[h - 1, w - 1] = True
    return img, mask


# ---------------------------------------------------------------------------
# quantization


def test_quantize_range_and_crop():
    rng = np.random.default_rng(0)
    img = rng.normal(0, 50, size=(10, 12))
    mask = np.zeros((10, 12), dtype=bool)
    mask[3:7, 4:9] = True
    q = quantize(img, mask)
    assert q.levels.shape == (4, 5)
    assert q.mask.all()
    assert q.levels.min() >= 1 and q.levels.max() <= 32
    assert q.n_levels == 32


def test_quantize_extremes_hit_first_and_last_level():
    img = np.arange(64, dtype=float).reshape(8, 8)
    mask = np.ones((8, 8), dtype=bool)
    q = quantize(img, mask)
    assert q.levels[0, 0] == 1
    assert q.levels[-1, -1] == 32


def test_quantize_constant_region_is_level_one():
    q = quantize(np.full((4, 4), 7.0), np.ones((4, 4), dtype=bool))
    assert (q.levels == 1).all()


def test_quantize_zero_is_reserved_for_outside():
    rng = np.random.default_rng(1)
    img = rng.normal(size=(6, 6))
    mask = rng.random((6, 6)) < 0.5
    mask[0, 0] = mask[5, 5] = True
    q = quantize(img, mask)
    assert (q.levels[~q.mask] == 0).all()
    assert (q.levels[q.mask] >= 1).all()


def test_quantize_empty_mask_raises():
    with pytest.raises(ValueError):
        quantize(np.zeros((3, 3)), np.zeros((3, 3), dtype=bool))


# ---------------------------------------------------------------------------
# GLRLM


def test_run_length_matrix_hand_case():
    levels = np.array([[1, 1, 2], [0, 2, 2]])
    roi = QuantizedRoi(levels=levels, mask=levels > 0, n_levels=2)
    h = run_length_matrix(roi, "h")
    assert h[1, 2] == 1  # run "1 1"
    assert h[2, 1] == 1  # lone 2 in row 0
    assert h[2, 2] == 1  # run "2 2" after the 0 break
    assert h.sum() == 3
    v = run_length_matrix(roi, "v")
    # columns: [1,0] -> one run of 1; [1,2] -> two runs; [2,2] -> one run of 2
    assert v[1, 1] == 2 and v[2, 1] == 1 and v[2, 2] == 1
    d = run_length_matrix(roi, "d")  # (1, 1) diagonals: [1,2], [1,2], [2], [0]
    assert d[1, 1] == 2 and d[2, 1] == 3
    a = run_length_matrix(roi, "a")  # (-1, 1) anti-diagonals
    assert a[1, 1] == 2 and a[2, 1] == 1 and a[2, 2] == 1


def test_glrlm_direction_order_and_oracle_fuzz():
    rng = np.random.default_rng(21)
    for _ in range(40):
        img, mask = _random_roi(rng)
        q = quantize(img, mask)
        n_px = int(q.mask.sum())
        full = glrlm_features(q)
        assert full.shape == (44,)
        for k, d in enumerate(("h", "a", "v", "d")):
            got_m = run_length_matrix(q, d)
            want_m = O.glrlm_oracle(q.levels, q.n_levels, d)
            assert np.array_equal(got_m, want_m)
            want_s = O.glrlm_stats_oracle(want_m, n_px)
            assert np.allclose(glrlm_stats(q, d), want_s, rtol=1e-10, atol=1e-12)
            assert np.allclose(full[11 * k : 11 * (k + 1)], want_s, rtol=1e-10, atol=1e-12)


def test_glrlm_single_pixel():
    roi = QuantizedRoi(levels=np.array([[1]]), mask=np.ones((1, 1), bool), n_levels=32)
    stats = glrlm_stats(roi, "h")
    assert stats[0] == 1.0  # sre: one run of length 1
    assert stats[4] == 1.0  # run percentage


# ---------------------------------------------------------------------------
# GLDM


def test_level_differences_hand_case():
    levels = np.array([[1, 3], [0, 2]])
    roi = QuantizedRoi(levels=levels, mask=levels > 0, n_levels=3)
    assert sorted(level_differences(roi, "h").tolist()) == [2]  # |1-3|; the 0 pair is skipped
    assert sorted(level_differences(roi, "v").tolist()) == [1]  # (3,2); (1,0) skipped
    assert sorted(level_differences(roi, "d").tolist()) == [1]  # (1,2)
    assert sorted(level_differences(roi, "a").tolist()) == []  # (0,3) pair skipped


def test_gldm_stats_population_conventions():
    levels = np.array([[1, 2, 4]])
    roi = QuantizedRoi(levels=levels, mask=levels > 0, n_levels=4)
    stats = gldm_stats(roi, "h")  # diffs [1, 2]
    assert stats.tolist() == [1.5, 1.5, 0.5, 0.25]


def test_gldm_no_pairs_returns_zeros():
    levels = np.array([[1]])
    roi = QuantizedRoi(levels=levels, mask=levels > 0, n_levels=1)
    for d in ("h", "v", "d", "a"):
        assert gldm_stats(roi, d).tolist() == [0.0, 0.0, 0.0, 0.0]


def test_gldm_oracle_fuzz_and_order():
    rng = np.random.default_rng(22)
    for _ in range(30):
        img, mask = _random_roi(rng)
        q = quantize(img, mask)
        full = gldm_features(q)
        assert full.shape == (16,)
        for k, d in enumerate(("h", "v", "d", "a")):  # displacement order
            want = O.gldm_stats_oracle(O.level_differences_oracle(q.levels, d))
            assert np.allclose(full[4 * k : 4 * (k + 1)], want, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------------------
# GLCM


def test_cooccurrence_counts_symmetric():
    rng = np.random.default_rng(23)
    img, mask = _random_roi(rng)
    q = quantize(img, mask)
    for d in ("h", "a", "v", "d"):
        counts = cooccurrence_counts(q, d, 1)
        assert np.array_equal(counts, counts.T)
        assert np.array_equal(counts, np.array(O.glcm_counts_oracle(q.levels, q.n_levels, d, 1)))


def test_cooccurrence_matrix_excludes_empty_directions():
    levels = np.array([[1, 2]])  # only horizontal pairs exist
    roi = QuantizedRoi(levels=levels, mask=levels > 0, n_levels=2)
    p = cooccurrence_matrix(roi, 1)
    assert np.isclose(p.sum(), 1.0)
    assert np.isclose(p[0, 1], 0.5) and np.isclose(p[1, 0], 0.5)


def test_haralick_hand_values_anticorrelated():
    # perfectly anti-correlated 2-level matrix
    p = np.array([[0.0, 0.5], [0.5, 0.0]])
    stats = haralick_stats(p)
    want = [
        0.5,  # energy
        1.0,  # contrast
        -1.0,  # correlation
        0.25,  # variance
        0.5,  # idm
        3.0,  # sum average
        0.0,  # sum variance
        0.0,  # sum entropy
        1.0,  # entropy
        0.0,  # difference variance
        0.0,  # difference entropy
        -1.0,  # imc1
        math.sqrt(1.0 - math.exp(-2.0)),  # imc2
    ]
    assert np.allclose(stats, want, rtol=0, atol=1e-12)


def test_haralick_hand_values_independent():
    p = np.full((2, 2), 0.25)
    stats = haralick_stats(p)
    assert np.isclose(stats[2], 0.0)  # correlation of independent marginals
    assert np.isclose(stats[0], 0.25)
    assert np.isclose(stats[8], 2.0)  # entropy of four equal cells


def test_haralick_degenerate_conventions():
    assert haralick_stats(np.zeros((3, 3))).tolist() == [0.0] * 13
    stats = haralick_stats(np.array([[1.0]]))
    assert stats[2] == 1.0  # correlation with zero marginal variance
    assert stats[11] == 0.0  # imc1 with zero marginal entropies
    assert stats[12] == 0.0  # imc2 at hxy2 == entropy == 0
    assert stats[0] == 1.0 and stats[8] == 0.0


def test_glcm_features_oracle_fuzz():
    rng = np.random.default_rng(24)
    for _ in range(25):
        img, mask = _random_roi(rng)
        q = quantize(img, mask)
        for dist in (1, 2):
            got = glcm_features(q, dist)
            want = O.glcm_features_oracle(q.levels, q.n_levels, dist)
            assert np.allclose(got, want, rtol=1e-10, atol=1e-10)


def test_glcm_distance_validation():
    roi = QuantizedRoi(levels=np.array([[1, 2]]), mask=np.ones((1, 2), bool), n_levels=2)
    with pytest.raises(ValueError):
        glcm_features(roi, 0)


def test_direction_offsets_frozen():
    assert DIRECTION_OFFSETS == {"h": (0, 1), "a": (-1, 1), "v": (1, 0), "d": (1, 1)}
