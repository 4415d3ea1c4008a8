"""Command-line entry points: estimate, test, cv, simulate, plot."""

from __future__ import annotations

import json
import os
import sys
import tempfile

import click
import pandas as pd

from . import estimator, inference, simulation
from .panel import PanelError, atomic_write_csv, load_panel
from .solver import fit_weights

EXIT_INPUT_ERROR = 1
EXIT_SOFT_FAILURE = 2


def _fail(message, code=EXIT_INPUT_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(data, n_treated, n_pre):
    try:
        return load_panel(data, n_treated=n_treated, n_pre=n_pre)
    except PanelError as exc:
        _fail(str(exc))


@click.group()
def main():
    """Penalized synthetic control estimation and inference."""


@main.command()
@click.option("--data", required=True, type=click.Path(), help="Long-format panel CSV.")
@click.option("--n-treated", required=True, type=int)
@click.option("--n-pre", required=True, type=int)
@click.option("--gamma", default=0.0, type=float, show_default=True)
@click.option("--out-dir", default=".", type=click.Path(), show_default=True)
def estimate(data, n_treated, n_pre, gamma, out_dir):
    """Fit donor weights, write weights/errors CSVs, print the ATT."""
    panel = _load(data, n_treated, n_pre)
    if gamma < 0:
        _fail(f"gamma must be nonnegative, got {gamma}")
    weights = fit_weights(panel, gamma)
    errors = estimator.prediction_errors(panel, weights)

    os.makedirs(out_dir, exist_ok=True)
    w_rows = [
        {
            "treated_unit": panel.unit_ids[i],
            "donor_unit": panel.unit_ids[panel.n_treated + j],
            "weight": weights.weights[i, j],
        }
        for i in range(panel.n_treated)
        for j in range(panel.n_donors)
    ]
    atomic_write_csv(pd.DataFrame(w_rows), os.path.join(out_dir, "weights.csv"))
    e_rows = [
        {
            "treated_unit": panel.unit_ids[i],
            "time": t + 1,
            "error": errors.errors[i, t],
        }
        for i in range(panel.n_treated)
        for t in range(panel.n_periods)
    ]
    atomic_write_csv(pd.DataFrame(e_rows), os.path.join(out_dir, "errors.csv"))
    click.echo(f"ATT: {estimator.att(errors):.6f}")
    if not weights.converged:
        _fail("solver hit the iteration cap; best iterate written", EXIT_SOFT_FAILURE)


@main.command(name="test")
@click.option("--data", required=True, type=click.Path())
@click.option("--n-treated", required=True, type=int)
@click.option("--n-pre", required=True, type=int)
@click.option(
    "--method",
    required=True,
    type=click.Choice(["placebo", "andrews", "andrews-loo"]),
)
@click.option("--gamma", default=0.0, type=float, show_default=True)
@click.option("--permutations", default=500, type=int, show_default=True)
@click.option("--tau", default=0.05, type=float, show_default=True)
@click.option("--seed", default=None, type=int, help="Required for the placebo test.")
@click.option("--out-dir", default=".", type=click.Path(), show_default=True)
def run_test(data, n_treated, n_pre, method, gamma, permutations, tau, seed, out_dir):
    """Run one hypothesis test; print key-value results, write JSON + null sample."""
    panel = _load(data, n_treated, n_pre)
    try:
        if method == "placebo":
            if seed is None:
                _fail("--seed is required for the placebo test")
            result = inference.placebo_test(
                panel, gamma, n_permutations=permutations, tau=tau, seed=seed
            )
        elif method == "andrews":
            errors = estimator.prediction_errors(panel, fit_weights(panel, gamma))
            result = inference.andrews_test(errors, tau)
        else:
            result = inference.andrews_loo_test(panel, gamma, tau)
    except ValueError as exc:
        _fail(str(exc))

    payload = {
        "method": result.method,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "reject": result.reject,
        "tau": result.tau,
    }
    for key, value in payload.items():
        click.echo(f"{key}: {value}")

    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "test_result.json")
    _atomic_write_text(json.dumps(payload, indent=2) + "\n", json_path)
    atomic_write_csv(
        pd.DataFrame({"null_sample": list(result.null_sample)}),
        os.path.join(out_dir, "null_sample.csv"),
    )


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--n-treated", required=True, type=int)
@click.option("--n-pre", required=True, type=int)
@click.option(
    "--grid",
    default=",".join(str(g) for g in estimator.DEFAULT_GAMMA_GRID),
    show_default=True,
    help="Comma-separated gamma values.",
)
@click.option("--train-fraction", default=0.5, type=float, show_default=True)
def cv(data, n_treated, n_pre, grid, train_fraction):
    """Select the penalty by a train/validation split of the pre periods."""
    panel = _load(data, n_treated, n_pre)
    try:
        values = [float(g) for g in grid.split(",") if g.strip()]
        result = estimator.select_gamma(panel, values, train_fraction)
    except ValueError as exc:
        _fail(str(exc))
    click.echo(f"gamma_star: {result.gamma_star}")
    click.echo("gamma,validation_mse")
    for g, mse in result.grid:
        click.echo(f"{g},{mse}")


CONFIG_KEYS = {
    "t_pre": int,
    "n_treated": int,
    "n_donors": int,
    "seed": int,
    "gamma": float,
    "n_reps": int,
    "n_permutations": int,
    "tau": float,
    "burn_in": int,
}


def _parse_sim_config(path):
    kwargs = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "alpha_grid":
                kwargs[key] = tuple(float(a) for a in value.split(",") if a.strip())
            elif key == "methods":
                kwargs[key] = tuple(m.strip() for m in value.split(",") if m.strip())
            elif key in CONFIG_KEYS:
                kwargs[key] = CONFIG_KEYS[key](value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    if "seed" not in kwargs:
        raise ValueError("config must set an explicit seed")
    methods = kwargs.pop("methods", simulation.ALL_METHODS)
    return simulation.SimConfig(**kwargs), methods


def _atomic_write_text(text, path):
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(), help="Rejection table CSV path.")
@click.option("--threads", default=1, type=int, show_default=True)
@click.option(
    "--figure/--no-figure",
    default=True,
    show_default=True,
    help="Also render the rejection-rate figure next to the CSV.",
)
def simulate(config_path, out, threads, figure):
    """Run the Monte Carlo experiment and write the rejection-rate table."""
    try:
        config, methods = _parse_sim_config(config_path)
    except (OSError, ValueError, TypeError) as exc:
        _fail(str(exc))
    table = simulation.rejection_rates(config, methods=methods, n_jobs=threads)
    out_dir = os.path.dirname(os.fspath(out)) or "."
    os.makedirs(out_dir, exist_ok=True)
    table.save_csv(out)

    manifest_lines = [f"{key} = {getattr(config, key)}" for key in (
        "t_pre", "n_treated", "n_donors", "gamma", "n_reps",
        "n_permutations", "tau", "seed", "burn_in",
    )]
    manifest_lines.append("alpha_grid = " + ",".join(str(a) for a in config.alpha_grid))
    manifest_lines.append("methods = " + ",".join(methods))
    _atomic_write_text("\n".join(manifest_lines) + "\n", out + ".manifest.txt")
    if figure:
        from .figures import plot_rejection_rates

        plot_rejection_rates(
            table.to_dataframe(),
            os.path.splitext(out)[0] + ".png",
            level=config.tau,
        )
    click.echo(f"wrote {out}")


@main.command()
@click.option("--table", required=True, type=click.Path(), help="Rejection table CSV.")
@click.option("--out", required=True, type=click.Path(), help="Figure output path.")
@click.option("--level", default=None, type=float, help="Significance level line.")
def plot(table, out, level):
    """Render rejection-rate curves from a simulate output CSV."""
    from .figures import plot_rejection_rates

    try:
        df = pd.read_csv(table)
    except Exception as exc:
        _fail(f"cannot read table {table}: {exc}")
    missing = {"alpha", "method", "rejection_rate", "mc_se"} - set(df.columns)
    if missing:
        _fail(f"table is missing columns: {sorted(missing)}")
    plot_rejection_rates(df, out, level=level)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
