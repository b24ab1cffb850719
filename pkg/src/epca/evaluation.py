"""Occlusion benchmark protocol: corruption, reconstruction error, clustering.

The protocol corrupts a fixed fraction of samples by resetting a fixed
fraction of their features to uniform draws from each feature's observed
range, fits every method on the corrupted matrix, and scores them by (a)
squared reconstruction error against the clean matrix and (b) k-means
clustering accuracy on the low-dimensional coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DataMatrix, RngHandle
from .errors import DimensionError, ValidationError

_VALUE_LAW = "uniform-feature-range"


@dataclass(frozen=True)
class CorruptionSpec:
    """How much to occlude and with which stream.

    ``sample_fraction`` of the samples get ``feature_fraction`` of their
    features reset; counts are exact floors of fraction times count.  Each
    corrupted sample draws its own feature subset unless ``shared_features``
    is set, in which case one subset is drawn and reused for all corrupted
    samples.  Replacement values are uniform over the observed [min, max] of
    the feature in the clean matrix (the only supported ``value_law``).
    """

    sample_fraction: float
    feature_fraction: float
    seed: int
    shared_features: bool = False
    value_law: str = _VALUE_LAW

    def __post_init__(self):
        if not (0.0 <= self.sample_fraction <= 1.0):
            raise ValidationError(f"sample_fraction {self.sample_fraction} not in [0, 1]")
        if not (0.0 <= self.feature_fraction <= 1.0):
            raise ValidationError(f"feature_fraction {self.feature_fraction} not in [0, 1]")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if self.value_law != _VALUE_LAW:
            raise ValidationError(f"unsupported value_law {self.value_law!r}")


@dataclass
class LabelVector:
    """Ground-truth class ids in [0, class_count)."""

    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=int)
        if lab.ndim != 1:
            raise DimensionError("labels must be a 1-D vector")
        if lab.size and (lab.min() < 0 or lab.max() >= self.class_count):
            raise ValidationError(
                f"labels must lie in [0, {self.class_count}), got range "
                f"[{lab.min()}, {lab.max()}]"
            )
        self.labels = lab

    @classmethod
    def from_raw(cls, raw) -> "LabelVector":
        """Build from arbitrary integer ids, remapped to 0..K-1 in sorted order."""
        raw = np.asarray(raw, dtype=int)
        classes, remapped = np.unique(raw, return_inverse=True)
        return cls(remapped, len(classes))


def corrupt(X: DataMatrix, spec: CorruptionSpec):
    """Occlude the matrix per the spec.

    Returns ``(corrupted, sample_indices, feature_indices)`` where
    ``feature_indices[j]`` lists the features reset in corrupted sample
    ``sample_indices[j]``.  Untouched entries are bit-identical to the input
    and the whole draw is reproducible from the spec's seed.
    """
    X = X if isinstance(X, DataMatrix) else DataMatrix(X)
    d, n = X.feature_count, X.sample_count
    n_samples = int(spec.sample_fraction * n)
    n_features = int(spec.feature_fraction * d)

    out = X.values.copy()
    if n_samples == 0 or n_features == 0:
        return DataMatrix(out), np.array([], dtype=int), []

    gen = RngHandle(spec.seed).derive("corrupt").generator()
    sample_idx = np.sort(gen.choice(n, size=n_samples, replace=False))
    lo = X.values.min(axis=1)
    hi = X.values.max(axis=1)

    shared = np.sort(gen.choice(d, size=n_features, replace=False)) if spec.shared_features else None
    feature_idx = []
    for j in sample_idx:
        feats = shared if shared is not None else np.sort(gen.choice(d, size=n_features, replace=False))
        out[feats, j] = gen.uniform(lo[feats], hi[feats])
        feature_idx.append(feats.copy())
    return DataMatrix(out), sample_idx, feature_idx


def reconstruction_error(X_clean: DataMatrix, X_occ: DataMatrix, basis,
                         translation) -> float:
    """Squared error ||(X - m 1') - W W' (X_occ - m 1')||_F^2.

    The model (W, m) is fitted on the occluded matrix but the error is
    measured against the clean one, so it quantifies how well the subspace
    found under corruption explains the uncorrupted data.
    """
    Xc = X_clean.values if isinstance(X_clean, DataMatrix) else np.asarray(X_clean, dtype=float)
    Xo = X_occ.values if isinstance(X_occ, DataMatrix) else np.asarray(X_occ, dtype=float)
    W = np.asarray(basis, dtype=float)
    m = np.asarray(translation, dtype=float)
    if Xc.shape != Xo.shape:
        raise DimensionError(f"clean shape {Xc.shape} != occluded shape {Xo.shape}")
    if W.ndim != 2 or W.shape[0] != Xc.shape[0] or W.shape[1] < 1:
        raise DimensionError(f"basis shape {W.shape} incompatible with data {Xc.shape}")
    if m.shape != (Xc.shape[0],):
        raise DimensionError(f"translation shape {m.shape} != ({Xc.shape[0]},)")
    if np.max(np.abs(W.T @ W - np.eye(W.shape[1]))) > 1e-8:
        raise ValidationError("basis columns are not orthonormal")
    diff = (Xc - m[:, None]) - W @ (W.T @ (Xo - m[:, None]))
    return float(np.sum(diff * diff))


def _kmeans_once(P, k, gen):
    """One k-means++ seeded Lloyd run on points P (columns). Returns (labels, wcss)."""
    dim, n = P.shape
    centers = np.empty((dim, k))
    centers[:, 0] = P[:, gen.integers(n)]
    d2 = np.sum((P - centers[:, [0]]) ** 2, axis=0)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            pick = gen.choice(n, p=d2 / total)
        else:
            pick = gen.integers(n)
        centers[:, j] = P[:, pick]
        d2 = np.minimum(d2, np.sum((P - centers[:, [j]]) ** 2, axis=0))

    labels = np.full(n, -1)
    for _ in range(300):
        dists = (
            np.sum(P * P, axis=0)[None, :]
            - 2.0 * centers.T @ P
            + np.sum(centers * centers, axis=0)[:, None]
        )
        new_labels = np.argmin(dists, axis=0)
        # Re-seed empty clusters at the point currently worst-served.
        for j in range(k):
            if not np.any(new_labels == j):
                worst = np.argmax(dists[new_labels, np.arange(n)])
                centers[:, j] = P[:, worst]
                new_labels[worst] = j
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if np.any(members):
                centers[:, j] = P[:, members].mean(axis=1)
    dists = (
        np.sum(P * P, axis=0)[None, :]
        - 2.0 * centers.T @ P
        + np.sum(centers * centers, axis=0)[:, None]
    )
    wcss = float(np.sum(np.maximum(dists[labels, np.arange(P.shape[1])], 0.0)))
    return labels, wcss


def kmeans(V, k: int, restarts: int, rng: RngHandle) -> np.ndarray:
    """Best-of-``restarts`` k-means labels (lowest within-cluster sum of squares).

    Every restart runs from its own derived stream, so the result does not
    depend on scheduling and is reproducible from ``rng`` alone.
    """
    P = np.asarray(V, dtype=float)
    if P.ndim != 2:
        raise DimensionError("coordinates must be a 2-D matrix (columns = points)")
    n = P.shape[1]
    if not (1 <= k <= n):
        raise DimensionError(f"need 1 <= k <= {n}, got k={k}")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    best_labels, best_wcss = None, np.inf
    for r in range(restarts):
        labels, wcss = _kmeans_once(P, k, rng.derive("kmeans", r).generator())
        if wcss < best_wcss:
            best_labels, best_wcss = labels, wcss
    return best_labels


def clustering_accuracy(predicted, truth: LabelVector) -> float:
    """Best label-agreement fraction over one-to-one cluster/class mappings."""
    pred = np.asarray(predicted, dtype=int)
    if pred.shape != truth.labels.shape:
        raise DimensionError(
            f"predicted length {pred.size} != truth length {truth.labels.size}"
        )
    _, pred_ids = np.unique(pred, return_inverse=True)
    k = max(pred_ids.max() + 1, truth.class_count)
    confusion = np.zeros((k, k))
    np.add.at(confusion, (pred_ids, truth.labels), 1.0)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum() / pred.size)


def mean_clustering_accuracy(V, truth: LabelVector, restarts: int,
                             rng: RngHandle) -> float:
    """Mean accuracy over independent k-means restarts (the reporting protocol).

    Each restart is scored separately and the scores are averaged — this is
    deliberately not best-of-restarts, so the number reflects typical rather
    than best-case clustering behavior.
    """
    P = np.asarray(V, dtype=float)
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    accs = []
    for r in range(restarts):
        labels, _ = _kmeans_once(P, truth.class_count, rng.derive("kmeans", r).generator())
        accs.append(clustering_accuracy(labels, truth))
    return float(np.mean(accs))
