"""Penalized simplex-constrained least squares via away-step Frank-Wolfe.

For one treated unit with pre-period series y (length T0) and donor
pre-period matrix X (T0 x n_donors), the fitted weights minimize

    || y - X w ||^2  +  gamma * sum_j w_j * || y - X[:, j] ||^2

over the probability simplex. The penalty term is linear in w, so the whole
objective is a convex quadratic and the conditional-gradient duality gap is
a valid optimality certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

GAP_RTOL = 1e-10
MAX_ITER = 50_000


class SolverError(ValueError):
    """Raised on malformed solver inputs (dimensions, non-finite data)."""


@dataclass(frozen=True)
class SolverResult:
    weights: np.ndarray
    objective: float
    gap: float
    n_iter: int
    converged: bool


@dataclass(frozen=True)
class WeightMatrix:
    """Per-treated-unit simplex weights over the donor pool."""

    weights: np.ndarray  # n_treated x n_donors
    gamma: float
    converged: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if (w < -1e-12).any():
            raise ValueError("weight entries must be nonnegative")
        if np.abs(w.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("weight rows must sum to 1")
        w = np.where(w < 0.0, 0.0, w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def penalized_objective(w, treated_pre, donors_pre, gamma) -> float:
    """Evaluate the penalized objective at weight vector w."""
    w = np.asarray(w, dtype=float)
    y = np.asarray(treated_pre, dtype=float)
    X = np.asarray(donors_pre, dtype=float)
    if gamma < 0:
        raise SolverError(f"gamma must be nonnegative, got {gamma}")
    if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != (X.shape[1],):
        raise SolverError(
            f"dimension mismatch: y {y.shape}, X {X.shape}, w {w.shape}"
        )
    fit = float(((y - X @ w) ** 2).sum())
    penalty = float(gamma * (w @ ((y[:, None] - X) ** 2).sum(axis=0)))
    return fit + penalty


@njit(cache=True)
def _fw_core(G, b, lin, c0, max_iter, rtol):
    """Away-step Frank-Wolfe for min w'Gw - 2b'w + lin'w + c0 on the simplex.

    Exact line search (the objective is quadratic along any segment).
    Vertex ties in the linear minimization break toward the lowest index.
    """
    n = G.shape[0]
    w = np.full(n, 1.0 / n)
    for it in range(max_iter):
        Gw = G @ w
        grad = 2.0 * (Gw - b) + lin
        gw = grad @ w

        s = 0
        gmin = grad[0]
        for j in range(1, n):
            if grad[j] < gmin:
                gmin = grad[j]
                s = j
        a = -1
        gmax = -np.inf
        for j in range(n):
            if w[j] > 1e-12 and grad[j] > gmax:
                gmax = grad[j]
                a = j

        obj = w @ Gw - 2.0 * (b @ w) + lin @ w + c0
        gap = gw - gmin
        if gap <= rtol * (1.0 + abs(obj)):
            return w, obj, gap, it, True

        use_away = a >= 0 and (gmax - gw) > (gw - gmin) and w[a] < 1.0
        if use_away:
            # direction w - e_a, feasible up to w_a / (1 - w_a)
            d_grad = gw - grad[a]
            d_G_d = w @ Gw - 2.0 * Gw[a] + G[a, a]
            step_max = w[a] / (1.0 - w[a])
        else:
            # direction e_s - w
            d_grad = grad[s] - gw
            d_G_d = G[s, s] - 2.0 * Gw[s] + w @ Gw
            step_max = 1.0
        if d_grad >= 0.0:
            return w, obj, gap, it, True
        if d_G_d <= 0.0:
            step = step_max
        else:
            step = min(step_max, -d_grad / (2.0 * d_G_d))

        if use_away:
            w = w * (1.0 + step)
            w[a] -= step * 1.0
            if step >= step_max:
                w[a] = 0.0  # drop step: remove the away vertex exactly
        else:
            w = w * (1.0 - step)
            w[s] += step
        for j in range(n):
            if w[j] < 0.0:
                w[j] = 0.0
        w /= w.sum()

    Gw = G @ w
    grad = 2.0 * (Gw - b) + lin
    obj = w @ Gw - 2.0 * (b @ w) + lin @ w + c0
    gap = grad @ w - grad.min()
    return w, obj, gap, max_iter, gap <= rtol * (1.0 + abs(obj))


def solve_weights(
    treated_pre,
    donors_pre,
    gamma,
    max_iter: int = MAX_ITER,
    gap_rtol: float = GAP_RTOL,
) -> SolverResult:
    """Fit simplex weights for one treated unit.

    Returns the weight vector, final objective, duality gap and iteration
    count. A hit iteration cap is a soft failure: the best iterate is still
    returned with ``converged=False``.
    """
    y = np.ascontiguousarray(treated_pre, dtype=float)
    X = np.ascontiguousarray(donors_pre, dtype=float)
    if gamma < 0:
        raise SolverError(f"gamma must be nonnegative, got {gamma}")
    if X.ndim != 2 or y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise SolverError(f"dimension mismatch: y {y.shape}, X {X.shape}")
    if not (np.isfinite(y).all() and np.isfinite(X).all()):
        raise SolverError("non-finite values in solver input")
    n_donors = X.shape[1]
    if n_donors < 1:
        raise SolverError("at least one donor required")
    if n_donors == 1:
        w = np.ones(1)
        obj = penalized_objective(w, y, X, gamma)
        return SolverResult(w, obj, 0.0, 0, True)

    G = X.T @ X
    b = X.T @ y
    lin = gamma * ((y[:, None] - X) ** 2).sum(axis=0)
    c0 = float(y @ y)
    w, obj, gap, n_iter, ok = _fw_core(G, b, lin, c0, max_iter, gap_rtol)
    # drop numerical dust so exact vertex solutions come out exact
    w = np.where(w < 1e-14, 0.0, w)
    w = w / w.sum()
    return SolverResult(w, float(obj), float(gap), int(n_iter), bool(ok))


def fit_weights(panel, gamma, pre_periods=None) -> WeightMatrix:
    """Solve the weight problem for every treated unit of a panel.

    pre_periods optionally restricts fitting to a subset of pre-period
    column indices (used by cross-validation and leave-one-out).
    """
    if pre_periods is None:
        pre_periods = np.arange(panel.n_pre)
    else:
        pre_periods = np.asarray(pre_periods, dtype=int)
    X = panel.donors[:, pre_periods].T
    rows = []
    converged = True
    for i in range(panel.n_treated):
        res = solve_weights(panel.treated[i, pre_periods], X, gamma)
        converged = converged and res.converged
        rows.append(res.weights)
    return WeightMatrix(np.vstack(rows), gamma=gamma, converged=converged)
