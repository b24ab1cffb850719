"""Enhanced PCA: alternating minimization of a weighted sigma-loss subspace fit.

The model approximates each sample x_i by W v_i + m with a column-orthonormal
basis W (d x c) and a translation m learned jointly.  The training objective

    sum_i 1/(1 - alpha_i) * sigma_loss(x_i - m - W v_i)

couples a robust per-sample loss with collaboratively learned simplex
weights alpha: the sigma-loss caps the influence of gross outliers while the
weights amplify the samples the current subspace explains best.

One outer iteration updates, in order: the IRLS coefficients d_i from the
current residual norms, the coordinates v_i = W^T (x_i - m), the translation
m = sum_i eta_i x_i / sum_i eta_i with eta_i = d_i / (1 - alpha_i), the basis
W as the top eigenvectors of the eta-weighted scatter, and finally alpha from
the per-sample losses of the refreshed residuals.  Each step minimizes the
(surrogate of the) objective in its own block, so the recorded objective
trace is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataMatrix, RngHandle, top_eigenpairs
from .corobust import WeightVector, solve_weights
from .errors import DimensionError, InternalInvariantError
from .sigmaloss import SigmaLossParams

_EPS = np.finfo(float).eps


@dataclass
class SubspaceModel:
    """Fitted affine subspace: basis W (d x c), translation m, coordinates V (c x n)."""

    basis: np.ndarray
    translation: np.ndarray
    target_rank: int
    coordinates: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.basis, dtype=float)
        m = np.asarray(self.translation, dtype=float)
        V = np.asarray(self.coordinates, dtype=float)
        d, c = W.shape
        if not (1 <= c < d):
            raise DimensionError(f"need 1 <= c < d, got c={c}, d={d}")
        if int(self.target_rank) != c:
            raise DimensionError(f"target_rank {self.target_rank} != basis columns {c}")
        if m.shape != (d,):
            raise DimensionError(f"translation shape {m.shape} != ({d},)")
        if V.ndim != 2 or V.shape[0] != c:
            raise DimensionError(f"coordinates must have {c} rows, got shape {V.shape}")
        gram_err = np.max(np.abs(W.T @ W - np.eye(c)))
        if gram_err > 1e-10:
            raise DimensionError(f"basis is not orthonormal (max |W'W - I| = {gram_err:.2e})")
        self.basis, self.translation, self.coordinates = W, m, V


@dataclass
class EpcaFitState:
    """Everything the alternating fit produced.

    ``eta`` is stored exactly as ``irls_coeffs / alpha.complements`` — the
    division is performed on the exact complement form of 1 - alpha_i, since
    near-converged fits can drive weights so close to 1 that the rounded
    subtraction would be pure noise.  ``objective_trace[0]`` is the objective
    at the initialization; one entry follows per outer iteration.
    ``active_count_trace`` records the weight activation count k per
    iteration.
    """

    model: SubspaceModel
    alpha: WeightVector
    irls_coeffs: np.ndarray
    eta: np.ndarray
    objective_trace: np.ndarray
    active_count_trace: np.ndarray
    iterations: int


def _point_losses(residual_norms, sigma):
    r = residual_norms
    return (1.0 + sigma) * r * r / (r + sigma)


def _coefficients(residual_norms, sigma):
    # At sigma below 1e-12 the d_i formula approaches 0/0 at r = 0; clamp the
    # norms there.  For the supported range the formula is already finite.
    r = residual_norms
    if sigma < 1e-12:
        r = np.maximum(r, 1e-14)
    return (1.0 + sigma) * (r + 2.0 * sigma) / (2.0 * (r + sigma) ** 2)


def _alternate(X, c, sigma, tol, max_iter, learn_alpha):
    """Shared alternating engine.

    With ``learn_alpha`` the full weighted fit runs (alpha initialized
    uniform at 1/n); without it alpha stays frozen at 0, which is the
    optimal-mean robust-PCA specialization the baselines reuse.

    Returns a dict with the final W, m, V, residual norms, weight state,
    the objective and activation-count traces, and the iteration count.
    """
    d, n = X.shape
    comp = np.full(n, (n - 1.0) / n) if learn_alpha else np.ones(n)
    alpha_wv = None

    m = X.mean(axis=1)
    Xc = X - m[:, None]
    _, W = top_eigenpairs(Xc @ Xc.T, c)
    V = W.T @ Xc
    rn = np.linalg.norm(Xc - W @ V, axis=0)

    obj = float(np.sum(_point_losses(rn, sigma) / comp))
    trace = [obj]
    ks = []
    noise_floor = _EPS * max(1.0, abs(obj))
    prev_floor_corr = 0.0

    iterations = 0
    for _ in range(max_iter):
        coeffs = _coefficients(rn, sigma)
        eta = coeffs / comp
        m = (X * eta).sum(axis=1) / eta.sum()
        Xc = X - m[:, None]
        Q = (Xc * eta) @ Xc.T
        _, W = top_eigenpairs(Q, c)
        V = W.T @ Xc
        rn = np.linalg.norm(Xc - W @ V, axis=0)
        losses = _point_losses(rn, sigma)

        floor_corr = 0.0
        if learn_alpha:
            alpha_wv = solve_weights(losses)
            comp = alpha_wv.complements
            ks.append(alpha_wv.active_count)
            floor_corr = alpha_wv.floor_correction

        iterations += 1
        prev = trace[-1]
        obj = float(np.sum(losses / comp))
        trace.append(obj)
        # Descent guard.  Beyond the relative slack, two benign effects are
        # allowed for: the float resolution of the objective itself, and the
        # bookkeeping gap of the zero-loss floor (the weight step then solves
        # a floored problem because the exact one has no attained minimum).
        if obj > prev + 1e-9 * abs(prev) + noise_floor + floor_corr + prev_floor_corr:
            raise InternalInvariantError(
                f"objective rose from {prev!r} to {obj!r} at iteration {iterations}"
            )
        prev_floor_corr = floor_corr
        if prev - obj <= tol * max(abs(prev), noise_floor):
            break

    # Refresh the coefficients so the reported d/eta are consistent with the
    # final weights (during the loop eta always pairs with the previous alpha).
    coeffs = _coefficients(rn, sigma)
    eta = coeffs / comp
    return {
        "W": W, "m": m, "V": V, "residual_norms": rn, "alpha": alpha_wv,
        "complements": comp, "irls_coeffs": coeffs, "eta": eta,
        "objective_trace": np.array(trace), "active_count_trace": np.array(ks, dtype=int),
        "iterations": iterations,
    }


def epca_fit(X: DataMatrix, c: int, p: SigmaLossParams, tol: float = 1e-8,
             max_iter: int = 100, rng: RngHandle | None = None) -> EpcaFitState:
    """Fit the weighted robust subspace model to the columns of X.

    Initialization is deterministic (uniform weights, sample mean, classical
    PCA basis), so identical inputs always produce bitwise-identical states;
    ``rng`` is accepted for interface stability but the reference
    initialization draws nothing from it.
    """
    X = X if isinstance(X, DataMatrix) else DataMatrix(X)
    d = X.feature_count
    if not (1 <= c < d):
        raise DimensionError(f"need 1 <= c < d={d}, got c={c}")
    out = _alternate(X.values, c, p.sigma, tol, max_iter, learn_alpha=True)
    model = SubspaceModel(out["W"], out["m"], c, out["V"])
    return EpcaFitState(
        model=model,
        alpha=out["alpha"],
        irls_coeffs=out["irls_coeffs"],
        eta=out["eta"],
        objective_trace=out["objective_trace"],
        active_count_trace=out["active_count_trace"],
        iterations=out["iterations"],
    )


def transform(model: SubspaceModel, Y) -> np.ndarray:
    """Project samples (columns of Y) onto the model: W^T (Y - m 1^T)."""
    Yv = Y.values if isinstance(Y, DataMatrix) else np.asarray(Y, dtype=float)
    if Yv.ndim != 2 or Yv.shape[0] != model.basis.shape[0]:
        raise DimensionError(
            f"expected {model.basis.shape[0]} feature rows, got shape {Yv.shape}"
        )
    return model.basis.T @ (Yv - model.translation[:, None])


def reconstruct(model: SubspaceModel, V) -> np.ndarray:
    """Map coordinates back to feature space: W V + m 1^T."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != model.target_rank:
        raise DimensionError(
            f"expected {model.target_rank} coordinate rows, got shape {V.shape}"
        )
    return model.basis @ V + model.translation[:, None]


def epca_objective(X: DataMatrix, state: EpcaFitState, p: SigmaLossParams) -> float:
    """Evaluate sum_i 1/(1-alpha_i) * sigma_loss(x_i - m - W v_i) at the state."""
    Xv = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    model = state.model
    if Xv.shape[0] != model.basis.shape[0]:
        raise DimensionError("feature count mismatch between X and the model")
    if Xv.shape[1] != model.coordinates.shape[1]:
        raise DimensionError("sample count mismatch between X and the stored coordinates")
    res = Xv - model.translation[:, None] - model.basis @ model.coordinates
    rn = np.linalg.norm(res, axis=0)
    return float(np.sum(_point_losses(rn, p.sigma) / state.alpha.complements))
