"""Gaussian random projection with a distance-preservation audit, plus PCA.

The projection target dimension comes from the Johnson-Lindenstrauss bound
d >= 4 ln(t) / (eps^2/2 - eps^3/3); the audit measures how many point pairs
actually keep their squared distances within (1 +/- eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist


def jl_min_dim(n_points: int, epsilon: float) -> int:
    """Smallest integer dimension satisfying the JL bound for n_points pairs."""
    if n_points < 2:
        raise ValueError("need at least 2 points")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    denom = epsilon**2 / 2.0 - epsilon**3 / 3.0
    return int(math.ceil(4.0 * math.log(n_points) / denom))


@dataclass
class RandomProjection:
    """A dense Gaussian projection; entries are i.i.d. N(0, 1/d_out)."""

    matrix: np.ndarray  # (d_out, k_in)
    seed: int

    @property
    def d_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def k_in(self) -> int:
        return self.matrix.shape[1]


def rp_generate(k_in: int, d_out: int, seed: int) -> RandomProjection:
    if k_in < 1 or d_out < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((d_out, k_in)) / np.sqrt(d_out)
    return RandomProjection(matrix=matrix, seed=int(seed))


def rp_project(rp: RandomProjection, x: np.ndarray) -> np.ndarray:
    """Project one vector or a (n, k_in) batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return rp.matrix @ x
    return x @ rp.matrix.T


@dataclass
class DistortionReport:
    epsilon: float
    n_pairs: int
    fraction_within: float
    worst_ratio: float  # squared-distance ratio farthest from 1 (1.0 if all pairs degenerate)


def distortion_audit(original: np.ndarray, projected: np.ndarray, epsilon: float) -> DistortionReport:
    """Fraction of point pairs with (1-eps) <= ||f(z)-f(w)||^2 / ||z-w||^2 <= (1+eps).

    Zero-distance pairs count as within bounds (a linear map keeps them at 0).
    """
    x = np.asarray(original, dtype=np.float64)
    y = np.asarray(projected, dtype=np.float64)
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise ValueError("need matching point counts >= 2")
    d2x = pdist(x, "sqeuclidean")
    d2y = pdist(y, "sqeuclidean")
    nonzero = d2x > 0
    n_pairs = d2x.size
    if not nonzero.any():
        return DistortionReport(epsilon, n_pairs, 1.0, 1.0)
    ratios = d2y[nonzero] / d2x[nonzero]
    within = int(((ratios >= 1.0 - epsilon) & (ratios <= 1.0 + epsilon)).sum())
    within += int(n_pairs - nonzero.sum())  # zero-distance pairs
    worst = float(ratios[np.argmax(np.abs(ratios - 1.0))])
    return DistortionReport(epsilon, n_pairs, within / n_pairs, worst)


def mean_distortion(original: np.ndarray, projected: np.ndarray) -> float:
    """Mean |squared-distance ratio - 1| over non-degenerate pairs."""
    d2x = pdist(np.asarray(original, dtype=np.float64), "sqeuclidean")
    d2y = pdist(np.asarray(projected, dtype=np.float64), "sqeuclidean")
    nonzero = d2x > 0
    if not nonzero.any():
        return 0.0
    return float(np.abs(d2y[nonzero] / d2x[nonzero] - 1.0).mean())


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (d_out, k) rows, descending eigenvalue order
    explained_variance: np.ndarray


def pca_fit(matrix: np.ndarray, d_out: int) -> PcaModel:
    """PCA via eigendecomposition of the sample covariance.

    Components are ordered by descending eigenvalue; each is sign-fixed so its
    largest-magnitude entry is positive (first such entry on magnitude ties).
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    n, k = x.shape
    if not 1 <= d_out <= min(n, k):
        raise ValueError(f"d_out must be in [1, {min(n, k)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:d_out]
    components = eigvecs[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=eigvals[order].copy(),
    )


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return model.components @ (x - model.mean)
    return (x - model.mean) @ model.components.T
