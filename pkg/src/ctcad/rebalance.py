"""Synthetic minority oversampling (interpolation between nearest neighbours)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AugmentedDataset:
    """Real rows (original order) followed by synthetic rows, with provenance.

    ``base_indices`` / ``neighbor_indices`` / ``gains`` record, per synthetic
    row, the two real rows it interpolates and the interpolation factor r --
    enough to audit collinearity after the fact.
    """

    rows: np.ndarray
    labels: np.ndarray
    synthetic_flags: np.ndarray
    base_indices: np.ndarray
    neighbor_indices: np.ndarray
    gains: np.ndarray


def smote(
    rows: np.ndarray,
    labels: np.ndarray,
    k_neighbors: int = 5,
    seed: int = 0,
) -> AugmentedDataset:
    """Balance a binary dataset by synthesizing minority rows.

    Each synthetic row is v = u + r * (u_nn - u): u a uniformly drawn minority
    row, u_nn one of its min(k_neighbors, minority-1) nearest same-class
    neighbours (brute-force Euclidean, stable-sorted so distance ties resolve
    by row order), r uniform in [0, 1].  Draw order per synthetic row: base
    index, neighbour slot, r.  An already balanced dataset passes through
    unchanged.
    """
    x = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("rows and labels must align")
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError("need exactly two classes")
    counts = {c: int((y == c).sum()) for c in classes}
    minority = min(classes, key=lambda c: (counts[c], list(classes).index(c)))
    majority = max(classes, key=lambda c: (counts[c], -list(classes).index(c)))
    n_synth = counts[majority] - counts[minority]
    if n_synth == 0:
        empty = np.zeros(0, dtype=np.int64)
        return AugmentedDataset(
            rows=x.copy(),
            labels=y.copy(),
            synthetic_flags=np.zeros(len(y), dtype=bool),
            base_indices=empty,
            neighbor_indices=empty,
            gains=np.zeros(0),
        )
    minority_idx = np.nonzero(y == minority)[0]
    if minority_idx.size < 2:
        raise ValueError("minority class must have at least 2 rows")
    mx = x[minority_idx]
    k = min(k_neighbors, minority_idx.size - 1)

    # neighbour table: k nearest same-class rows per minority row (self excluded)
    d2 = ((mx[:, None, :] - mx[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbor_table = np.argsort(d2, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(seed)
    synth = np.empty((n_synth, x.shape[1]))
    base_ids = np.empty(n_synth, dtype=np.int64)
    nn_ids = np.empty(n_synth, dtype=np.int64)
    rs = np.empty(n_synth)
    for i in range(n_synth):
        b = int(rng.integers(0, minority_idx.size))
        slot = int(rng.integers(0, k))
        r = float(rng.random())
        nb = int(neighbor_table[b, slot])
        u = mx[b]
        synth[i] = u + r * (mx[nb] - u)
        base_ids[i] = minority_idx[b]
        nn_ids[i] = minority_idx[nb]
        rs[i] = r

    return AugmentedDataset(
        rows=np.vstack([x, synth]),
        labels=np.concatenate([y, np.full(n_synth, minority, dtype=y.dtype)]),
        synthetic_flags=np.concatenate(
            [np.zeros(len(y), dtype=bool), np.ones(n_synth, dtype=bool)]
        ),
        base_indices=base_ids,
        neighbor_indices=nn_ids,
        gains=rs,
    )
