"""Command-line surface: data ingestion, preprocessing, and the three
commands (fit / simulate / benchmark).

Exit codes: 0 success, 2 validation error, 3 runtime failure. Matrices are
written as CSV with 17 significant digits so they round-trip exactly;
graphs additionally as DOT files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, chainio, kernels
from .config import BenchmarkConfig, ConfigError, RunConfig, SimulateConfig, load_config
from .forecast import forecast_one_step
from .graph import EdgeSet, PrecisionSummary, extract_edges, summarize_precision
from .priors import PriorConfig
from .sampler import ChainOutput, SamplerConfig, gibbs_run
from .simulate import ScenarioSpec, run_benchmark, simulate_scenario
from .spectral import BSplineBasis, curve_matrix

__all__ = ["Dataset", "ingest_csv", "preprocess", "main"]

_FMT = "%.17g"


@dataclass
class Dataset:
    values: np.ndarray      # p x T
    names: list
    time_labels: list

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


def ingest_csv(path, orientation: str = "columns") -> Dataset:
    """Strictly parse a rectangular numeric CSV with a header row.

    ``orientation='columns'`` reads series down the columns (rows are time
    points); ``'rows'`` transposes that. Missing or non-numeric cells are
    hard errors naming the offending row and column.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, missing header") from None
        if not header or all(not h.strip() for h in header):
            raise ValueError(f"{path}: missing header row")
        width = len(header)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise ValueError(
                    f"{path}: line {line_no} has {len(row)} cells, expected {width}"
                )
            parsed = []
            for col, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell {cell!r} at line {line_no}, "
                        f"column {header[col]!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: non-finite cell at line {line_no}, column {header[col]!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    matrix = np.asarray(rows)  # (T, p) for columns orientation
    if orientation == "columns":
        values = matrix.T
        names = [h.strip() for h in header]
        time_labels = [str(i) for i in range(values.shape[1])]
    elif orientation == "rows":
        values = matrix
        names = [f"row{i}" for i in range(values.shape[0])]
        time_labels = [h.strip() for h in header]
    else:
        raise ValueError("orientation must be 'columns' or 'rows'")
    return Dataset(values=values, names=names, time_labels=time_labels)

def preprocess(ds: Dataset, log: bool = False, diff_order: int = 0) -> Dataset:
    """Optional log transform, repeated first differences, then centering."""
    if diff_order not in (0, 1, 2):
        raise ValueError("diff_order must be 0, 1 or 2")
    values = ds.values.astype(float)
    labels = list(ds.time_labels)
    if log:
        if np.any(values <= 0):
            raise ValueError("log transform requires strictly positive values")
        values = np.log(values)
    for _ in range(diff_order):
        values = np.diff(values, axis=1)
        labels = labels[1:]
    if values.shape[1] < 8:
        raise ValueError("too few time points after differencing")
    values = values - values.mean(axis=1, keepdims=True)
    return Dataset(values=values, names=list(ds.names), time_labels=labels)


def _write_matrix_csv(path, matrix, names):
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([""] + list(names))
        for name, row in zip(names, np.asarray(matrix)):
            writer.writerow([name] + [_FMT % v for v in row])

def _write_edges(path, edges: EdgeSet, names):
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "j", "name_i", "name_j", "score"])
        for (i, j), score in zip(edges.pairs, edges.scores):
            writer.writerow([i, j, names[i], names[j], _FMT % score])

def _write_dot(path, edges: EdgeSet, names):
    lines = ["graph conditional_independence {"]
    for name in names:
        lines.append(f'  "{name}";')
    for (i, j), score in zip(edges.pairs, edges.scores):
        lines.append(f'  "{names[i]}" -- "{names[j]}" [weight={abs(score):.4f}];')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")

def _write_rows_csv(path, rows, columns):
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])

def _write_spectral_curves(path, chain: ChainOutput, names):
    """Plot-ready posterior-mean spectra on a frequency grid."""
    K = chain.draws["theta"].shape[2]
    basis = BSplineBasis(K)
    grid = np.linspace(0.0, np.pi, 101)
    theta_mean = chain.draws["theta"].mean(axis=0)
    curves = curve_matrix(theta_mean, grid, basis)
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["omega"] + list(names))
        for m, w in enumerate(grid):
            writer.writerow([_FMT % w] + [_FMT % curves[j, m] for j in range(len(names))])


def cmd_fit(run: RunConfig) -> int:
    run.validate(require_data=True)
    ds = ingest_csv(run.data, run.orientation)
    ds = preprocess(ds, log=run.log_transform, diff_order=run.diff_order)

    out_dir = Path(run.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = [int(s.generate_state(1)[0] % 2**31)
             for s in np.random.SeedSequence(run.seed).spawn(run.chains)]
    chains = []
    for idx, seed in enumerate(seeds):
        samp = SamplerConfig(**{**_asdict(run.sampler), "seed": seed})
        chain_dir = out_dir / f"chain_{idx:03d}"
        chains.append(gibbs_run(ds.values, run.prior, samp, store_dir=chain_dir))
    merged = ChainOutput.concat(chains) if len(chains) > 1 else chains[0]

    summary = summarize_precision(merged)
    _write_matrix_csv(out_dir / "omega_mean.csv", summary.omega_mean, ds.names)
    _write_matrix_csv(out_dir / "omega_lo.csv", summary.omega_lo, ds.names)
    _write_matrix_csv(out_dir / "omega_hi.csv", summary.omega_hi, ds.names)
    _write_matrix_csv(out_dir / "partial_corr.csv", summary.partial_corr, ds.names)

    edges = extract_edges(summary, run.edge_threshold)
    _write_edges(out_dir / "edges.csv", edges, ds.names)
    _write_dot(out_dir / "graph.dot", edges, ds.names)
    _write_spectral_curves(out_dir / "spectral_curves.csv", merged, ds.names)

    if run.forecast:
        result = forecast_one_step(ds.values, merged)
        with (out_dir / "forecast.csv").open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["series", "forecast"])
            for name, value in zip(ds.names, result.point):
                writer.writerow([name, _FMT % value])

    manifest = {
        "command": "fit",
        "version": __version__,
        "backend": kernels.backend_name(),
        "config_hash": chainio.config_hash(
            {"prior": _asdict(run.prior), "sampler": _asdict(run.sampler)}
        ),
        "seed": run.seed,
        "chain_seeds": seeds,
        "p": ds.p,
        "T": ds.T,
        "n_draws": int(merged.n_draws),
        "edge_threshold": run.edge_threshold,
        "n_edges": len(edges),
        "wall_seconds": merged.wall_seconds,
        "versions": chainio._versions(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return 0

def cmd_simulate(sim: SimulateConfig) -> int:
    spec = ScenarioSpec(
        p=sim.p, T=sim.T, setting=sim.setting, sparsity=sim.sparsity, seed=sim.seed
    )
    data = simulate_scenario(spec, extra=sim.extra)
    names = [f"s{j:03d}" for j in range(sim.p)]
    out = Path(sim.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for t in range(data.Y.shape[1]):
            writer.writerow([_FMT % v for v in data.Y[:, t]])
    _write_matrix_csv(sim.truth_output, data.omega_true, names)
    return 0

def cmd_benchmark(bench: BenchmarkConfig, prior: PriorConfig, samp: SamplerConfig) -> int:
    out_dir = Path(bench.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [
        {"setting": s, "p": bench.p, "T": T, "sparsity": sp}
        for s in bench.settings
        for T in bench.T_values
        for sp in bench.sparsities
    ]
    samp_kw = {k: v for k, v in _asdict(samp).items() if k != "seed"}
    rows = run_benchmark(
        cells,
        replicates=bench.replicates,
        prior_kw=_asdict(prior),
        samp_kw=samp_kw,
        base_seed=bench.seed,
        threshold=bench.edge_threshold,
        workers=bench.workers,
    )
    columns = [
        "setting", "p", "T", "sparsity", "replicates", "n_ok",
        "out_mse", "out_mse_se", "out_mcc",
        "baseline_mse", "baseline_mse_se", "baseline_mcc", "failures",
    ]
    _write_rows_csv(out_dir / "estimation_mse.csv", rows, columns)

    fc_rows = _forecast_benchmark(bench, prior, samp_kw)
    _write_rows_csv(
        out_dir / "forecast_mse.csv",
        fc_rows,
        ["setting", "p", "T", "replicates", "out_mse", "oracle_mse", "ratio"],
    )
    return 0

def _forecast_benchmark(bench: BenchmarkConfig, prior: PriorConfig, samp_kw: dict):
    """One-step forecast comparison against the true-model linear predictor."""
    from .simulate import oracle_one_step

    spec_kw = dict(
        p=bench.forecast_p, T=bench.forecast_T, setting=bench.forecast_setting,
        sparsity=bench.forecast_sparsity,
    )
    out_sq, oracle_sq = [], []
    for rep in range(bench.forecast_replicates):
        seed = int(np.random.SeedSequence([bench.seed, 97, rep]).generate_state(1)[0] % 2**31)
        data = simulate_scenario(ScenarioSpec(seed=seed, **spec_kw), extra=1)
        Y_fit, y_next = data.Y[:, :-1], data.Y[:, -1]
        chain = gibbs_run(Y_fit, prior, SamplerConfig(seed=seed + 1, **samp_kw))
        fc = forecast_one_step(Y_fit, chain)
        out_sq.append(np.mean((fc.point - y_next) ** 2))
        oracle_sq.append(np.mean((oracle_one_step(data) - y_next) ** 2))
    out_mse = float(np.mean(out_sq))
    oracle_mse = float(np.mean(oracle_sq))
    return [{
        **spec_kw, "replicates": bench.forecast_replicates,
        "out_mse": _FMT % out_mse, "oracle_mse": _FMT % oracle_mse,
        "ratio": _FMT % (out_mse / oracle_mse),
    }]


def _asdict(obj) -> dict:
    from dataclasses import asdict

    return asdict(obj)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="outgraph",
        description="Bayesian conditional-independence graphs for stationary "
        "multivariate time series.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    fit_p = sub.add_parser("fit", help="fit the model to a CSV dataset")
    fit_p.add_argument("--config", required=True)
    fit_p.add_argument("--data", help="override run.data")
    fit_p.add_argument("--output", help="override run.output")

    sim_p = sub.add_parser("simulate", help="generate synthetic data + truth")
    sim_p.add_argument("--config", required=True)

    bench_p = sub.add_parser("benchmark", help="run the estimation/forecast benchmark")
    bench_p.add_argument("--config", required=True)
    bench_p.add_argument("--workers", type=int, help="override benchmark.workers")

    args = parser.parse_args(argv)
    try:
        run, sim, bench = load_config(args.config)
        if args.command == "fit":
            if args.data:
                run.data = args.data
            if args.output:
                run.output = args.output
            run.validate(require_data=True)
        elif args.command == "benchmark" and args.workers:
            bench.workers = args.workers
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "fit":
            return cmd_fit(run)
        if args.command == "simulate":
            return cmd_simulate(sim)
        return cmd_benchmark(bench, run.prior, run.sampler)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, machine-readable on stderr
        print(json.dumps({"error": repr(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
