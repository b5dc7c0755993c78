"""``bench`` command line: sweep runs, optimum estimation, diagnostics
and report generation over a shared output directory.

Every flag can also be supplied through a flat key=value config file
(--config); explicit command-line flags win.  Outputs under --out:
per-run traces ``<algo>_<c>.csv``, ``optimum.json`` and ``summary.json``.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import click
import numpy as np

from . import harness
from .datasets import load_dataset
from .objectives import Regularizer, build_problem, estimate_smoothness
from .problem import full_objective
from .scsg import SCSG

REPORT_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4)


def _merged(ctx_params: dict, config_path) -> dict:
    """CLI values override config-file values; click defaults fill the rest."""
    merged = dict(ctx_params)
    if config_path:
        cfg = harness.parse_config_file(config_path)
        src = click.get_current_context().get_parameter_source
        for key, raw in cfg.items():
            name = key.replace("-", "_")
            if name not in merged:
                raise click.UsageError(f"unknown config key {key!r}")
            from click.core import ParameterSource

            if src(name) in (ParameterSource.DEFAULT, None):
                current = merged[name]
                caster = type(current) if current is not None else str
                if caster is bool:
                    merged[name] = raw.lower() in ("1", "true", "yes")
                else:
                    merged[name] = caster(raw)
    return merged


def _prepare_problem(params):
    dataset = load_dataset(params["data"], params["format"])
    data, est = estimate_smoothness(dataset.to_logistic(), params["trim"])
    reg = Regularizer("l2_scaled", 1.0 / data.n)
    problem = build_problem(data, reg)
    return problem, est


def _parse_grid(spec: str):
    lo, hi = spec.split(":")
    return range(int(lo), int(hi) + 1)


def _scsg_overrides(params, n):
    return dict(
        alpha=params["alpha"],
        m0=params["m0_frac"] * n,
        B0=params["b0_frac"] * n,
        b=max(1, round(params["b_frac"] * n)),
    )


def _c_label(c: float) -> str:
    k = math.log2(c)
    return f"2^{int(round(k))}" if abs(k - round(k)) < 1e-9 else f"{c:g}"


dataset_options = [
    click.option("--data", type=click.Path(), help="dataset file"),
    click.option("--format", "format", type=click.Choice(["libsvm", "csv"]), default="csv"),
    click.option("--trim", type=float, default=0.05, help="smoothness outlier trim fraction"),
    click.option("--seed", type=int, default=0),
    click.option("--out", type=click.Path(), default="bench_out"),
    click.option("--config", "config", type=click.Path(exists=True), default=None,
                 help="flat key=value config file; CLI flags override"),
]

scsg_options = [
    click.option("--alpha", type=float, default=1.25),
    click.option("--m0-frac", type=float, default=0.005),
    click.option("--B0-frac", "b0_frac", type=float, default=0.001),
    click.option("--b-frac", type=float, default=1e-4),
]


def _apply(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@click.group()
def main():
    """Finite-sum solver benchmark harness."""


@main.command()
@_apply(dataset_options)
@_apply(scsg_options)
@click.option("--algo", type=click.Choice(harness.ALGO_TAGS), default="scsg")
@click.option("--passes", type=float, default=50.0)
@click.option("--eta-grid", default="-10:10", help="exponent range lo:hi for eta = 2^k/L")
def run(**params):
    """Sweep one algorithm over the step-size grid and emit traces."""
    params = _merged(params, params.pop("config"))
    if not params["data"]:
        raise click.UsageError("--data is required")
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    problem, est = _prepare_problem(params)
    n = problem.n
    algo = params["algo"]
    overrides = _scsg_overrides(params, n) if algo == "scsg" else (
        {} if algo == "gd" else {"b": max(1, round(params["b_frac"] * n))}
    )
    result = harness.sweep(
        problem,
        algo,
        est.aggregate,
        grid_exponents=_parse_grid(params["eta_grid"]),
        pass_budget=params["passes"],
        seed=params["seed"],
        **overrides,
    )

    f0 = full_objective(problem, np.zeros(problem.dim))
    optimum_path = out / "optimum.json"
    provisional = not optimum_path.exists()
    if provisional:
        finite = [e.final_objective for e in result.entries if np.isfinite(e.final_objective)]
        best_seen = min(
            min(finite),
            min(e.trace.best_objective for e in result.entries if e.trace is not None),
        )
        f_star = best_seen
        click.echo("note: no optimum.json found; ratios are provisional "
                   "(run `bench optimum` first for calibrated ratios)")
    else:
        f_star = json.loads(optimum_path.read_text())["f_star"]

    for entry in result.entries:
        if entry.trace is None or not entry.trace.samples:
            continue
        name = f"{algo}_{_c_label(entry.c)}.csv".replace("^", "")
        if f0 > f_star:
            harness.emit_trace(entry.trace, f_star, f0, out / name)

    best = result.best
    ratios = harness.suboptimality_ratios(best.trace, f_star, f0) if f0 > f_star else None
    t_eps = {
        f"{eps:g}": harness.time_to_accuracy(best.trace, f_star, f0, eps)
        if f0 > f_star
        else None
        for eps in REPORT_EPSILONS
    }
    summary_path = out / "summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    summary[algo] = {
        "best_exponent": best.exponent,
        "best_c": best.c,
        "best_eta": best.eta,
        "final_objective": best.final_objective,
        "best_seen_objective": best.trace.best_objective,
        "final_ratio": float(ratios[-1]) if ratios is not None else None,
        "time_to_accuracy_passes": t_eps,
        "provisional_ratios": provisional,
        "seed": params["seed"],
        "passes": params["passes"],
        "L": est.aggregate,
        "n": n,
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    click.echo(
        f"{algo}: best c = {_c_label(best.c)} (eta = {best.eta:.6g}), "
        f"final objective = {best.final_objective:.12g}"
    )


@main.command()
@_apply(dataset_options)
@_apply(scsg_options)
@click.option("--passes", type=float, default=5000.0)
@click.option("--eta-c", type=float, default=None,
              help="step scale c for the long run; default: best c from summary.json")
@click.option("--tune-passes", type=float, default=50.0)
@click.option("--eta-grid", default="-10:10")
def optimum(**params):
    """Estimate (x*, F*) with a long best-tuned run plus a cross-check."""
    params = _merged(params, params.pop("config"))
    if not params["data"]:
        raise click.UsageError("--data is required")
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    problem, est = _prepare_problem(params)
    overrides = _scsg_overrides(params, problem.n)

    c = params["eta_c"]
    if c is None:
        summary_path = out / "summary.json"
        if summary_path.exists():
            summary = json.loads(summary_path.read_text())
            c = summary.get("scsg", {}).get("best_c")
    if c is None:
        result = harness.sweep(
            problem, "scsg", est.aggregate,
            grid_exponents=_parse_grid(params["eta_grid"]),
            pass_budget=params["tune_passes"], seed=params["seed"], **overrides,
        )
        c = result.best.c
    eta = c / est.aggregate
    x_star, f_star = harness.estimate_optimum(
        problem, eta, pass_budget=params["passes"], seed=params["seed"], **overrides
    )
    f0 = full_objective(problem, np.zeros(problem.dim))
    payload = {
        "f_star": f_star,
        "f0": f0,
        "eta": eta,
        "c": c,
        "passes": params["passes"],
        "seed": params["seed"],
        "L": est.aggregate,
        "x_star": [float(v) for v in x_star],
    }
    (out / "optimum.json").write_text(json.dumps(payload, indent=2))
    click.echo(f"F* = {f_star:.12g} (eta = {eta:.6g}, c = {_c_label(c)})")


@main.command()
@_apply(dataset_options)
@click.option("--mu", type=float, default=None, help="strong convexity hint")
def diagnostics(**params):
    """Complexity measures at the estimated optimum (requires optimum.json)."""
    params = _merged(params, params.pop("config"))
    if not params["data"]:
        raise click.UsageError("--data is required")
    out = Path(params["out"])
    optimum_path = out / "optimum.json"
    if not optimum_path.exists():
        raise click.UsageError("run `bench optimum` first")
    problem, est = _prepare_problem(params)
    stored = json.loads(optimum_path.read_text())
    x_star = np.asarray(stored["x_star"])
    diag = harness.diagnostics(problem, x_star, np.zeros(problem.dim), mu_hint=params["mu"])
    (out / "diagnostics.json").write_text(json.dumps(diag.to_dict(), indent=2))
    click.echo(json.dumps(diag.to_dict(), indent=2))


@main.command()
@click.option("--out", type=click.Path(exists=True), default="bench_out")
def report(out):
    """Tabulate best step sizes, final ratios and times-to-accuracy."""
    summary_path = Path(out) / "summary.json"
    if not summary_path.exists():
        raise click.UsageError(f"no summary.json under {out}; run `bench run` first")
    summary = json.loads(summary_path.read_text())
    header = f"{'algo':<12} {'best c':>8} {'final ratio':>14} " + " ".join(
        f"T({eps:g})".rjust(10) for eps in REPORT_EPSILONS
    )
    click.echo(header)
    click.echo("-" * len(header))
    for algo in sorted(summary):
        row = summary[algo]
        ratio = row.get("final_ratio")
        cells = [
            f"{algo:<12}",
            f"{_c_label(row['best_c']):>8}",
            f"{ratio:.3e}".rjust(14) if ratio is not None else "n/a".rjust(14),
        ]
        for eps in REPORT_EPSILONS:
            t = row["time_to_accuracy_passes"].get(f"{eps:g}")
            cells.append((f"{t:.1f}" if t is not None else "-").rjust(10))
        click.echo(" ".join(cells))


if __name__ == "__main__":  # pragma: no cover
    main()
