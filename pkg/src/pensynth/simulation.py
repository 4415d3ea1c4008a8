"""Factor-model data generator and the rejection-rate Monte Carlo harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .estimator import prediction_errors
from .inference import ANDREWS, ANDREWS_LOO, PLACEBO, andrews_test, andrews_loo_test, placebo_test
from .panel import PanelData, atomic_write_csv
from .solver import fit_weights

ALL_METHODS = (PLACEBO, ANDREWS, ANDREWS_LOO)

DEFAULT_ALPHA_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one Monte Carlo experiment."""

    t_pre: int
    n_treated: int
    n_donors: int
    seed: int
    gamma: float = 0.2
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    n_reps: int = 500
    n_permutations: int = 500
    tau: float = 0.05
    burn_in: int = 100

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if min(self.t_pre, self.n_treated, self.n_donors, self.n_reps, self.n_permutations) < 1:
            raise ValueError("t_pre, n_treated, n_donors, n_reps, n_permutations must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if not self.alpha_grid:
            raise ValueError("alpha_grid must be nonempty")
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must be in (0,1), got {self.tau}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class FactorPath:
    """One draw of the common factors and idiosyncratic noise.

    eta is the common AR(1) shock; lambdas stacks the three factor series
    (3 x T); loadings is N x 3; eps is N x T idiosyncratic noise.
    """

    eta: np.ndarray
    lambdas: np.ndarray
    loadings: np.ndarray
    eps: np.ndarray


@dataclass(frozen=True)
class RejectionTable:
    """Rows of (alpha, method, rejection_rate, mc_se)."""

    rows: tuple

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            list(self.rows), columns=["alpha", "method", "rejection_rate", "mc_se"]
        )

    def save_csv(self, path) -> None:
        atomic_write_csv(self.to_dataframe(), path)

    def rate(self, alpha, method) -> float:
        for a, m, r, _ in self.rows:
            if a == float(alpha) and m == method:
                return r
        raise KeyError((alpha, method))

    def se(self, alpha, method) -> float:
        for a, m, _, s in self.rows:
            if a == float(alpha) and m == method:
                return s
        raise KeyError((alpha, method))


def generate_factors(t_total, n_units, burn_in, rng) -> FactorPath:
    """Simulate the factor processes and truncate the first burn_in periods.

    eta is AR(1) around mean 2, lambda_1 AR(1) around 0, lambda_2 MA(1)
    around mean 1, lambda_3 ARMA(1,1) around 0. All innovations are i.i.d.
    standard normal; recursions start at their unconditional means.
    """
    if t_total < 1:
        raise ValueError("t_total must be >= 1")
    n = burn_in + t_total
    # column 0 holds the lag-period innovation needed by the MA terms
    nu = rng.standard_normal((4, n + 1))
    eta = np.empty(n)
    lam1 = np.empty(n)
    lam2 = np.empty(n)
    lam3 = np.empty(n)
    eta_prev, lam1_prev, lam3_prev = 2.0, 0.0, 0.0
    for t in range(n):
        eta[t] = 1.0 + 0.5 * eta_prev + nu[0, t + 1]
        lam1[t] = 0.5 * lam1_prev + nu[1, t + 1]
        lam2[t] = 1.0 + nu[2, t + 1] + 0.5 * nu[2, t]
        lam3[t] = 0.5 * lam3_prev + nu[3, t + 1] + 0.5 * nu[3, t]
        eta_prev, lam1_prev, lam3_prev = eta[t], lam1[t], lam3[t]
    loadings = rng.uniform(size=(n_units, 3))
    eps = rng.standard_normal((n_units, t_total))
    return FactorPath(
        eta=eta[burn_in:],
        lambdas=np.vstack([lam1[burn_in:], lam2[burn_in:], lam3[burn_in:]]),
        loadings=loadings,
        eps=eps,
    )


def generate_panel(config: SimConfig, alpha, rng) -> PanelData:
    """Draw one panel from the factor model.

    Pre-period outcomes are the baseline factor-model values. In the single
    post period the idiosyncratic term is a fresh standard-normal shock
    drawn for every unit (one idiosyncratic shock per period, so the test
    statistics stay exchangeable over time under the null), and treated
    units additionally receive the treatment effect alpha.
    """
    t_total = config.t_pre + 1
    n_units = config.n_treated + config.n_donors
    f = generate_factors(t_total, n_units, config.burn_in, rng)
    y = f.eta[None, :] + f.loadings @ f.lambdas + f.eps
    post_shock = rng.standard_normal(n_units)
    y[:, -1] = f.eta[-1] + f.loadings @ f.lambdas[:, -1] + post_shock
    y[: config.n_treated, -1] += alpha
    return PanelData(outcomes=y, n_treated=config.n_treated, n_pre=config.t_pre)


def _replication(config: SimConfig, alpha_idx, rep, methods):
    """Run one replication; returns {method: reject}.

    The random stream depends only on (seed, alpha index, replication
    index), so results are independent of execution order and of n_reps.
    """
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(alpha_idx, rep))
    panel_seed, placebo_seed = ss.spawn(2)
    rng = np.random.default_rng(panel_seed)
    panel = generate_panel(config, config.alpha_grid[alpha_idx], rng)

    rejects = {}
    if ANDREWS in methods:
        errors = prediction_errors(panel, fit_weights(panel, config.gamma))
        rejects[ANDREWS] = andrews_test(errors, config.tau).reject
    if ANDREWS_LOO in methods:
        rejects[ANDREWS_LOO] = andrews_loo_test(panel, config.gamma, config.tau).reject
    if PLACEBO in methods:
        result = placebo_test(
            panel,
            config.gamma,
            n_permutations=config.n_permutations,
            tau=config.tau,
            seed=placebo_seed,
        )
        rejects[PLACEBO] = result.reject
    return rejects


def rejection_rates(config: SimConfig, methods=ALL_METHODS, n_jobs: int = 1) -> RejectionTable:
    """Empirical rejection rate of each test at each treatment effect.

    Replications may run in parallel; aggregation is order-independent
    because each replication's stream is pre-derived from the master seed.
    """
    methods = tuple(methods)
    unknown = set(methods) - set(ALL_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    tasks = [
        (a, r) for a in range(len(config.alpha_grid)) for r in range(config.n_reps)
    ]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_replication)(config, a, r, methods) for a, r in tasks
    )
    rows = []
    for a, alpha in enumerate(config.alpha_grid):
        per_alpha = [res for (ai, _), res in zip(tasks, results) if ai == a]
        for method in methods:
            rate = float(np.mean([res[method] for res in per_alpha]))
            se = float(np.sqrt(rate * (1.0 - rate) / config.n_reps))
            rows.append((alpha, method, rate, se))
    return RejectionTable(rows=tuple(rows))
