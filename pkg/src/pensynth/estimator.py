"""Prediction errors, treatment-effect estimate, jackknife errors, CV for gamma."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import WeightMatrix, fit_weights

PLAIN = "plain"
LEAVE_ONE_OUT = "leave_one_out"

DEFAULT_GAMMA_GRID = (0.0, 1e-3, 1e-2, 1e-1, 0.2, 0.5, 1.0, 10.0)


@dataclass(frozen=True)
class ErrorMatrix:
    """Prediction errors, n_treated rows x (n_pre + 1) columns.

    The last column is the single post-treatment period. ``kind`` records
    whether pre-period entries come from full-sample weights (plain) or from
    per-period leave-one-out re-estimation.
    """

    errors: np.ndarray
    kind: str = PLAIN

    def __post_init__(self):
        err = np.asarray(self.errors, dtype=float)
        if err.ndim != 2:
            raise ValueError("errors must be a 2-D matrix")
        if self.kind not in (PLAIN, LEAVE_ONE_OUT):
            raise ValueError(f"unknown error kind: {self.kind}")
        err.setflags(write=False)
        object.__setattr__(self, "errors", err)

    @property
    def n_pre(self):
        return self.errors.shape[1] - 1

    @property
    def pre(self) -> np.ndarray:
        return self.errors[:, :-1]

    @property
    def post(self) -> np.ndarray:
        return self.errors[:, -1]


@dataclass(frozen=True)
class CvResult:
    """Selected penalty and the (gamma, validation MSE) grid behind it."""

    gamma_star: float
    grid: tuple


def prediction_errors(panel, weights: WeightMatrix) -> ErrorMatrix:
    """Errors Y_treated - W @ Y_donors for every treated unit and period."""
    W = weights.weights
    if W.shape != (panel.n_treated, panel.n_donors):
        raise ValueError(
            f"weight matrix {W.shape} does not match panel "
            f"({panel.n_treated} treated, {panel.n_donors} donors)"
        )
    return ErrorMatrix(panel.treated - W @ panel.donors, kind=PLAIN)


def att(errors: ErrorMatrix) -> float:
    """Average post-period prediction error across treated units."""
    if errors.kind != PLAIN:
        raise ValueError("att requires plain prediction errors")
    return float(errors.post.mean())


def loo_errors(panel, gamma) -> ErrorMatrix:
    """Leave-one-out prediction errors.

    For each pre period t the weights are re-fit on the remaining T0 - 1 pre
    periods and the error is evaluated at the omitted period t, so a fitted
    weight never sees the period it is scored on. The post-period column
    uses the full-pre-period weights, matching plain errors there.
    """
    t0 = panel.n_pre
    if t0 < 2:
        raise ValueError("leave-one-out errors require at least 2 pre periods")
    err = np.empty((panel.n_treated, t0 + 1))
    for t in range(t0):
        keep = np.delete(np.arange(t0), t)
        w_minus = fit_weights(panel, gamma, pre_periods=keep)
        err[:, t] = panel.treated[:, t] - w_minus.weights @ panel.donors[:, t]
    w_full = fit_weights(panel, gamma)
    err[:, t0] = panel.treated[:, t0] - w_full.weights @ panel.donors[:, t0]
    return ErrorMatrix(err, kind=LEAVE_ONE_OUT)


def select_gamma(panel, grid=DEFAULT_GAMMA_GRID, train_fraction: float = 0.5) -> CvResult:
    """Pick gamma by a chronological train/validation split of the pre periods.

    Weights are fit on the first ceil(train_fraction * T0) pre periods; the
    score is the mean squared prediction error over treated units and the
    remaining validation periods. Ties break toward the smaller gamma.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("gamma grid must be nonempty")
    if any(g < 0 for g in grid):
        raise ValueError("gamma values must be nonnegative")
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    t0 = panel.n_pre
    n_train = math.ceil(train_fraction * t0)
    if n_train < 1 or n_train >= t0:
        raise ValueError(
            f"degenerate split: {n_train} training of {t0} pre periods leaves "
            "no validation data"
        )
    train = np.arange(n_train)
    valid = np.arange(n_train, t0)
    scored = []
    for g in grid:
        w = fit_weights(panel, g, pre_periods=train)
        resid = panel.treated[:, valid] - w.weights @ panel.donors[:, valid]
        scored.append((g, float((resid**2).mean())))
    best = min(scored, key=lambda pair: (pair[1], pair[0]))
    return CvResult(gamma_star=best[0], grid=tuple(scored))
