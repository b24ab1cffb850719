"""Shared containers: data matrices, seeded RNG streams, and the deterministic
symmetric eigendecomposition used by every subspace method in the package."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeightsError, DimensionError, ValidationError

_SYMMETRY_RTOL = 1e-10


@dataclass
class DataMatrix:
    """Dense real matrix whose columns are samples.

    ``values`` has shape (d, n): d features (rows) by n samples (columns).
    Entries must be finite and there must be at least two samples.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got ndim={arr.ndim}")
        d, n = arr.shape
        if d < 1:
            raise DimensionError("need at least one feature row")
        if n < 2:
            raise DimensionError(f"need at least two sample columns, got {n}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("matrix entries must be finite (no NaN/Inf)")
        self.values = arr

    @property
    def feature_count(self) -> int:
        return self.values.shape[0]

    @property
    def sample_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RngHandle:
    """Deterministic random stream identified by a seed plus a derivation path.

    The same (seed, path) pair always yields the same draw sequence, on any
    platform.  Child streams created with :meth:`derive` are statistically
    independent of the parent and of each other, which lets callers fan work
    out (grid cells, k-means restarts) without the execution order changing
    any result.
    """

    seed: int
    path: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in an unsigned 64-bit integer")

    def derive(self, *keys) -> "RngHandle":
        """Child handle for a sub-task; keys may be ints or short strings."""
        coerced = []
        for key in keys:
            if isinstance(key, str):
                coerced.append(zlib.crc32(key.encode("utf-8")))
            elif 0 <= int(key) < 2**32:
                coerced.append(int(key))
            else:
                raise ValidationError(
                    f"integer derivation keys must fit in 32 bits, got {key!r}"
                )
        return RngHandle(self.seed, self.path + tuple(coerced))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this handle's stream."""
        # The entropy layout (two fixed seed words, the path length, then the
        # 32-bit path words) maps distinct handles to distinct sequences even
        # though SeedSequence ignores trailing zero words: the length word
        # pins how many path entries follow.
        seed = int(self.seed)
        entropy = [seed & 0xFFFFFFFF, seed >> 32, len(self.path), *self.path]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def top_eigenpairs(S: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenpairs of a symmetric matrix under a fixed gauge.

    Returns ``(eigenvalues, eigenvectors)`` with the c largest eigenvalues in
    descending order and eigenvectors as the columns of a d-by-c orthonormal
    matrix.  The gauge convention makes the output reproducible:

    * each eigenvector is flipped so its largest-magnitude entry is positive
      (ties broken by the lowest index);
    * eigenvectors belonging to exactly equal eigenvalues are ordered by
      descending lexicographic comparison of their entries.

    The convention matters because downstream invariance checks compare bases
    between runs; an arbitrary eigenvector sign would break them.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    d = S.shape[0]
    if not (1 <= c <= d):
        raise DimensionError(f"need 1 <= c <= {d}, got c={c}")
    if not np.all(np.isfinite(S)):
        raise ValidationError("matrix entries must be finite")
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > _SYMMETRY_RTOL * max(scale, 1.0):
        raise ValidationError("matrix is not symmetric within tolerance")

    evals, evecs = np.linalg.eigh((S + S.T) / 2.0)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    evecs = evecs[:, order]

    # Sign gauge: largest-|entry| positive, ties resolved at the lowest index.
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.where(evecs[pivot, np.arange(evecs.shape[1])] < 0, -1.0, 1.0)
    evecs = evecs * signs

    # Within a run of exactly equal eigenvalues, order the (sign-fixed)
    # vectors descending-lexicographically so e.g. the identity yields e1, e2.
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and evals[stop] == evals[start]:
            stop += 1
        if stop - start > 1:
            block = sorted(
                (tuple(evecs[:, j]) for j in range(start, stop)), reverse=True
            )
            evecs[:, start:stop] = np.array(block).T
        start = stop

    return evals[:c].copy(), evecs[:, :c].copy()


def column_centroid(X: DataMatrix, weights) -> np.ndarray:
    """Weighted mean of the sample columns: sum_i w_i x_i / sum_i w_i."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != X.sample_count:
        raise DimensionError(
            f"weights length {w.size} != sample count {X.sample_count}"
        )
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("weights must be finite and nonnegative")
    total = w.sum()
    if total == 0.0:
        raise DegenerateWeightsError("all weights are zero")
    return (X.values * w).sum(axis=1) / total
