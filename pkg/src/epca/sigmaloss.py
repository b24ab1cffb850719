"""The sigma-loss and its iteratively-reweighted least-squares machinery.

For a vector a the loss is

    (1 + sigma) * ||a||^2 / (||a|| + sigma),

which behaves like the l2,1 norm as sigma -> 0 (robust, linear in large
residuals) and like the squared Frobenius norm as sigma -> infinity.  It is
smooth at zero for every sigma > 0, unlike the l2,1 norm, and it is not a
norm (it is not positively homogeneous).

Minimizing a sum of such losses is done by repeatedly solving weighted
least-squares surrogates: with r = ||a|| the coefficient

    d = (1 + sigma) * (r + 2*sigma) / (2 * (r + sigma)^2)

satisfies grad ||a||_sigma = 2*d*a, and the surrogate sum_i s_i d_i ||r_i||^2
majorizes the shifted objective, so alternating (compute d, minimize the
surrogate) descends monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalInvariantError, ValidationError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SigmaLossParams:
    """Robustness knob sigma; must be strictly positive and finite.

    sigma = 0 is rejected because the IRLS coefficient is undefined at
    zero residual there; callers wanting l2,1 behavior use sigma = 1e-8.
    """

    sigma: float

    def __post_init__(self):
        s = float(self.sigma)
        if not (np.isfinite(s) and s > 0):
            raise ValidationError(f"sigma must be a positive finite real, got {self.sigma!r}")
        object.__setattr__(self, "sigma", s)


def sigma_norm_vector(a, p: SigmaLossParams) -> float:
    """Point-wise loss (1+sigma)*||a||^2 / (||a|| + sigma); zero vector -> 0."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValidationError("vector entries must be finite")
    r = float(np.linalg.norm(a))
    return (1.0 + p.sigma) * r * r / (r + p.sigma)


def sigma_norm_matrix(A, p: SigmaLossParams) -> float:
    """Sum of the point-wise loss over the columns of A."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix entries must be finite")
    r = np.linalg.norm(np.atleast_2d(A), axis=0)
    return float(np.sum((1.0 + p.sigma) * r * r / (r + p.sigma)))


def irls_coefficient(residual_norm, p: SigmaLossParams):
    """Surrogate weight d = (1+sigma)(r + 2 sigma) / (2 (r + sigma)^2).

    Accepts a scalar or an array of residual norms; strictly positive and
    finite for every r >= 0 when sigma > 0.
    """
    r = np.asarray(residual_norm, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise ValidationError("residual norms must be finite and nonnegative")
    d = (1.0 + p.sigma) * (r + 2.0 * p.sigma) / (2.0 * (r + p.sigma) ** 2)
    return float(d) if np.isscalar(residual_norm) else d


@dataclass
class IrlsResult:
    """Outcome of :func:`irls_solve`.

    ``objective_trace[0]`` is the objective at the initial parameters and
    each subsequent entry follows one surrogate solve; ``iterations`` counts
    the surrogate solves performed.
    """

    parameters: object
    objective_trace: np.ndarray
    iterations: int


def irls_solve(residual_fn, wls_solver, s, p: SigmaLossParams, params0,
               tol: float = 1e-9, max_iter: int = 100) -> IrlsResult:
    """Minimize sum_i s_i * sigma_loss(r_i(params)) by iterated reweighting.

    ``residual_fn(params)`` returns the per-sample residuals as the columns
    of a matrix; ``wls_solver(weights)`` must return the exact minimizer of
    sum_i weights_i * ||r_i(params)||^2 for the weights it is given (the
    product s_i * d_i is passed).  ``s`` holds fixed nonnegative per-sample
    multipliers.

    Stops when the relative objective decrease falls below ``tol`` or after
    ``max_iter`` surrogate solves.  The objective is non-increasing along the
    way; an increase beyond the documented slack (1e-9 relative, plus an
    absolute floor at the float resolution of the initial objective) raises
    :class:`InternalInvariantError` — it would mean ``wls_solver`` is not
    actually solving its subproblem.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValidationError("sample multipliers must be finite and nonnegative")

    def objective(params):
        res = np.atleast_2d(np.asarray(residual_fn(params), dtype=float))
        rnorm = np.linalg.norm(res, axis=0)
        if rnorm.shape != s.shape:
            raise ValidationError(
                f"residual_fn produced {rnorm.size} samples, expected {s.size}"
            )
        losses = (1.0 + p.sigma) * rnorm * rnorm / (rnorm + p.sigma)
        return float(np.sum(s * losses)), rnorm

    params = params0
    obj, rnorm = objective(params)
    trace = [obj]
    noise_floor = _EPS * max(1.0, abs(obj))
    iterations = 0
    for _ in range(max_iter):
        d = irls_coefficient(rnorm, p)
        params = wls_solver(s * d)
        iterations += 1
        prev = trace[-1]
        obj, rnorm = objective(params)
        trace.append(obj)
        if obj > prev + 1e-9 * abs(prev) + noise_floor:
            raise InternalInvariantError(
                f"objective rose from {prev!r} to {obj!r} at iteration {iterations}"
            )
        if prev - obj <= tol * max(abs(prev), noise_floor):
            break
    return IrlsResult(params, np.array(trace), iterations)
