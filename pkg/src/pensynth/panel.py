"""Balanced panel data model and long-format CSV ingestion."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


class PanelError(ValueError):
    """Raised when a panel file or its parameters are invalid."""


@dataclass(frozen=True)
class PanelData:
    """Balanced outcome panel with treated units in the leading rows.

    outcomes is N x T (units by periods); the first ``n_treated`` rows are
    treated and the first ``n_pre`` columns are pre-treatment. Only one
    post-treatment period is supported, so T = n_pre + 1.
    """

    outcomes: np.ndarray
    n_treated: int
    n_pre: int
    unit_ids: tuple = field(default=())

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=float)
        object.__setattr__(self, "outcomes", out)
        if not self.unit_ids:
            object.__setattr__(
                self, "unit_ids", tuple(f"unit_{k}" for k in range(out.shape[0]))
            )
        out.setflags(write=False)
        problems = validate(self)
        if problems:
            raise PanelError("; ".join(problems))

    @property
    def n_units(self):
        return self.outcomes.shape[0]

    @property
    def n_periods(self):
        return self.outcomes.shape[1]

    @property
    def n_donors(self):
        return self.n_units - self.n_treated

    @property
    def treated(self) -> np.ndarray:
        """n_treated x T block of treated-unit outcomes."""
        return self.outcomes[: self.n_treated]

    @property
    def donors(self) -> np.ndarray:
        """n_donors x T block of donor outcomes."""
        return self.outcomes[self.n_treated:]


def validate(panel) -> list[str]:
    """Return every invariant violation as a message; empty list when valid.

    Accepts anything with outcomes/n_treated/n_pre/unit_ids attributes so it
    can be used before a PanelData is fully constructed.
    """
    problems = []
    out = np.asarray(panel.outcomes, dtype=float)
    if out.ndim != 2:
        return [f"outcomes must be a 2-D matrix, got ndim={out.ndim}"]
    n, t = out.shape
    if not np.isfinite(out).all():
        problems.append("outcomes contains missing or non-finite values")
    if not 1 <= panel.n_treated <= n - 1:
        problems.append(
            f"n_treated must be in [1, N-1]; got {panel.n_treated} with N={n}"
            " (at least one donor required)"
        )
    if not 1 <= panel.n_pre <= t - 1:
        problems.append(f"n_pre must be in [1, T-1]; got {panel.n_pre} with T={t}")
    if t != panel.n_pre + 1:
        problems.append(f"exactly one post period required (T = n_pre + 1); got T={t}")
    if panel.unit_ids and len(panel.unit_ids) != n:
        problems.append(f"unit_ids has length {len(panel.unit_ids)}, expected {n}")
    return problems


def load_panel(path, n_treated: int, n_pre: int) -> PanelData:
    """Read a long-format CSV (``unit,time,outcome[,treated]``) into a PanelData.

    Units are ordered treated-first. When a 0/1 ``treated`` column is present
    it decides treatment assignment (its ones count must equal n_treated);
    otherwise the first ``n_treated`` units in order of first appearance are
    treated. Time values must form a contiguous integer range and every
    (unit, time) cell must be present exactly once.
    """
    try:
        df = pd.read_csv(path, dtype={"unit": str}, float_precision="round_trip")
    except FileNotFoundError:
        raise PanelError(f"panel file not found: {path}")
    except Exception as exc:
        raise PanelError(f"cannot parse panel file {path}: {exc}")

    required = {"unit", "time", "outcome"}
    if not required.issubset(df.columns):
        raise PanelError(
            f"panel CSV must have columns unit,time,outcome; got {list(df.columns)}"
        )

    times = pd.to_numeric(df["time"], errors="coerce")
    if times.isna().any() or (times != times.astype(int)).any():
        raise PanelError("time column must contain integers")
    df = df.assign(time=times.astype(int))
    outcomes = pd.to_numeric(df["outcome"], errors="coerce")
    if outcomes.isna().any():
        bad = df.loc[outcomes.isna(), ["unit", "time"]].iloc[0]
        raise PanelError(f"non-numeric outcome at unit={bad['unit']}, time={bad['time']}")
    df = df.assign(outcome=outcomes.astype(float))

    if df.duplicated(["unit", "time"]).any():
        bad = df.loc[df.duplicated(["unit", "time"]), ["unit", "time"]].iloc[0]
        raise PanelError(f"duplicate cell at unit={bad['unit']}, time={bad['time']}")

    t_values = np.sort(df["time"].unique())
    if not np.array_equal(t_values, np.arange(t_values[0], t_values[0] + len(t_values))):
        raise PanelError("time values must form a contiguous integer range")

    units_in_order = list(df["unit"].drop_duplicates())
    cells = df.set_index(["unit", "time"])["outcome"]
    counts = df.groupby("unit")["time"].count()
    if (counts != len(t_values)).any():
        short = counts[counts != len(t_values)].index[0]
        raise PanelError(f"unbalanced panel: unit {short} does not cover all periods")

    if "treated" in df.columns:
        flags = df.groupby("unit")["treated"].agg(["min", "max"])
        if (flags["min"] != flags["max"]).any():
            raise PanelError("treated flag must be constant within each unit")
        flag = {u: int(flags.loc[u, "max"]) for u in units_in_order}
        if any(v not in (0, 1) for v in flag.values()):
            raise PanelError("treated column must contain only 0 and 1")
        # canonical order (sorted within each group) so the result does not
        # depend on the row order of the file
        treated_units = sorted(u for u in units_in_order if flag[u] == 1)
        donor_units = sorted(u for u in units_in_order if flag[u] == 0)
        if len(treated_units) != n_treated:
            raise PanelError(
                f"treated column marks {len(treated_units)} units but n_treated={n_treated}"
            )
        ordered = treated_units + donor_units
    else:
        ordered = units_in_order

    matrix = np.empty((len(ordered), len(t_values)))
    for i, u in enumerate(ordered):
        matrix[i] = [cells[(u, t)] for t in t_values]

    return PanelData(
        outcomes=matrix, n_treated=n_treated, n_pre=n_pre, unit_ids=tuple(ordered)
    )


def save_panel(panel: PanelData, path) -> None:
    """Write a PanelData back to long-format CSV, atomically.

    Outcomes are written with full float precision so a load/save/load cycle
    reproduces the matrix bit-exactly.
    """
    rows = []
    for i, u in enumerate(panel.unit_ids):
        for t in range(panel.n_periods):
            rows.append(
                {
                    "unit": u,
                    "time": t + 1,
                    "outcome": repr(float(panel.outcomes[i, t])),
                    "treated": int(i < panel.n_treated),
                }
            )
    atomic_write_csv(pd.DataFrame(rows), path)


def atomic_write_csv(df: pd.DataFrame, path, **to_csv_kwargs) -> None:
    """Write a DataFrame to CSV via temp file + rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            df.to_csv(handle, index=False, **to_csv_kwargs)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
