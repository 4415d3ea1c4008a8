"""Hypothesis tests: placebo permutation, end-of-sample, and its jackknife form.

All three test the sharp null of zero treatment effect for every treated
unit. The placebo test permutes the treated label across units; the
end-of-sample tests compare the post period against the time series of
per-period squared errors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .estimator import ErrorMatrix, LEAVE_ONE_OUT, loo_errors, prediction_errors
from .solver import fit_weights, solve_weights

PLACEBO = "placebo"
ANDREWS = "andrews"
ANDREWS_LOO = "andrews_loo"


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    null_sample: tuple
    reject: bool
    tau: float


def rmspe_statistic(errors: ErrorMatrix) -> float:
    """Ratio of summed squared aggregate pre-period errors to the squared
    aggregate post-period error.

    Errors are summed across treated units within each period before
    squaring. A zero post-period aggregate makes the ratio +inf, the least
    extreme possible value under the small-ratio rejection rule.
    """
    agg_pre = errors.pre.sum(axis=0)
    agg_post = float(errors.post.sum())
    num = float((agg_pre**2).sum())
    if agg_post == 0.0:
        return math.inf
    return num / agg_post**2


def andrews_statistic(errors: ErrorMatrix) -> float:
    """Sum of squared post-period errors across treated units."""
    return float((errors.post**2).sum())


def _relabelled_statistic(panel, treated_idx, gamma) -> float:
    """RMSPE-ratio statistic with the given unit rows relabelled as treated."""
    treated_idx = np.asarray(treated_idx, dtype=int)
    donor_idx = np.setdiff1d(np.arange(panel.n_units), treated_idx)
    Yt = panel.outcomes[treated_idx]
    Yd = panel.outcomes[donor_idx]
    t0 = panel.n_pre
    rows = np.empty((len(treated_idx), panel.n_periods))
    X = Yd[:, :t0].T
    for k in range(len(treated_idx)):
        res = solve_weights(Yt[k, :t0], X, gamma)
        rows[k] = Yt[k] - res.weights @ Yd
    return rmspe_statistic(ErrorMatrix(rows))


def placebo_test(
    panel,
    gamma,
    n_permutations: int,
    tau: float,
    seed: int | None = None,
    enumerate_assignments: bool = False,
) -> TestResult:
    """Permutation test on the RMSPE-ratio statistic.

    Each of the P draws relabels a uniformly random subset of n_treated
    units (out of all N, true treated included) as pseudo-treated and
    re-fits weights at the same gamma. Small ratios are extreme, so the
    p-value counts draws with T(p) <= T_hat. With
    ``enumerate_assignments=True`` every n_treated-subset is used exactly
    once instead of random draws (seed then unused).
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    n1 = panel.n_treated
    errors = prediction_errors(panel, fit_weights(panel, gamma))
    t_hat = rmspe_statistic(errors)

    if enumerate_assignments:
        subsets = [
            np.array(c) for c in itertools.combinations(range(panel.n_units), n1)
        ]
    else:
        if n_permutations < 1:
            raise ValueError(f"n_permutations must be >= 1, got {n_permutations}")
        if seed is None:
            raise ValueError("placebo_test requires a seed for random draws")
        rng = np.random.default_rng(seed)
        subsets = [
            rng.choice(panel.n_units, size=n1, replace=False)
            for _ in range(n_permutations)
        ]

    null_sample = [_relabelled_statistic(panel, idx, gamma) for idx in subsets]
    p = len(null_sample)
    count = sum(1 for t_p in null_sample if t_p <= t_hat)
    p_value = (1 + count) / (p + 1)
    return TestResult(
        method=PLACEBO,
        statistic=t_hat,
        p_value=p_value,
        null_sample=tuple(null_sample),
        reject=p_value <= tau,
        tau=tau,
    )


def andrews_test(errors: ErrorMatrix, tau: float) -> TestResult:
    """End-of-sample test: is the post-period squared error extreme relative
    to the T0 per-period squared errors?"""
    if not 0 < tau < 1:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    s_hat = andrews_statistic(errors)
    null_sample = (errors.pre**2).sum(axis=0)
    p_value = float((null_sample >= s_hat).mean())
    method = ANDREWS_LOO if errors.kind == LEAVE_ONE_OUT else ANDREWS
    return TestResult(
        method=method,
        statistic=s_hat,
        p_value=p_value,
        null_sample=tuple(float(s) for s in null_sample),
        reject=p_value <= tau,
        tau=tau,
    )


def andrews_loo_test(panel, gamma, tau: float) -> TestResult:
    """End-of-sample test on leave-one-out errors (the correctly sized variant)."""
    return andrews_test(loo_errors(panel, gamma), tau)
