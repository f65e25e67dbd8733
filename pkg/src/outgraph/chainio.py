"""Chain persistence.

Layout (one directory per chain)::

    manifest.json     seeds, config hash, stored iteration indices,
                      field names/shapes/dtypes, package + numpy versions
    draws/<field>.npy one array per stored field, first axis = draw index
    acceptance.json   per-block acceptance counts (burn-in / sampling)
    adaptation.json   adaptation event log
    checkpoint.npz    full sampler state for resuming
    checkpoint.json   scalar sampler state + generator state

Everything numeric is float64 ``.npy`` (a stable, documented columnar
binary format); metadata is human-readable JSON.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = ["write_chain", "read_chain", "write_checkpoint", "load_checkpoint", "config_hash"]


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"outgraph": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_chain(store_dir, output) -> Path:
    """Persist a ChainOutput; returns the directory path."""
    root = Path(store_dir)
    draws_dir = root / "draws"
    draws_dir.mkdir(parents=True, exist_ok=True)
    for name, arr in output.draws.items():
        np.save(draws_dir / f"{name}.npy", np.asarray(arr))
    manifest = {
        "format": "outgraph-chain-v1",
        "seed": output.seed,
        "config_hash": config_hash(output.config),
        "config": output.config,
        "iterations": np.asarray(output.iterations).tolist(),
        "n_draws": int(output.n_draws),
        "fields": {
            name: {"shape": list(np.asarray(a).shape), "dtype": str(np.asarray(a).dtype)}
            for name, a in output.draws.items()
        },
        "wall_seconds": output.wall_seconds,
        "backend": output.backend,
        "versions": _versions(),
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    (root / "acceptance.json").write_text(json.dumps(output.accept_stats, indent=2))
    (root / "adaptation.json").write_text(json.dumps(output.adaptation_log, indent=2, default=float))
    return root


def read_chain(store_dir):
    """Load a persisted chain back into a ChainOutput."""
    from .sampler import ChainOutput

    root = Path(store_dir)
    manifest = json.loads((root / "manifest.json").read_text())
    draws = {
        name: np.load(root / "draws" / f"{name}.npy")
        for name in manifest["fields"]
    }
    return ChainOutput(
        draws=draws,
        iterations=np.asarray(manifest["iterations"], dtype=int),
        accept_stats=json.loads((root / "acceptance.json").read_text()),
        adaptation_log=json.loads((root / "adaptation.json").read_text()),
        seed=manifest["seed"],
        config=manifest["config"],
        wall_seconds=manifest["wall_seconds"],
        backend=manifest.get("backend", ""),
    )


def write_checkpoint(store_dir, runner) -> None:
    """Snapshot a `_Runner` so the chain can continue where it stopped."""
    root = Path(store_dir)
    root.mkdir(parents=True, exist_ok=True)
    state = runner.state
    arrays = {
        "L_raw": state.L_raw,
        "log_d": state.log_d,
        "a_raw": state.a_raw,
        "xi": state.xi,
        "eta": state.eta,
        "v": state.v,
        "delta": state.delta,
        "active_cols": runner.active_cols,
        "pre_L": runner.pre_activation_sums["L"],
        "pre_a": runner.pre_activation_sums["a"],
        "haario_mean": runner.haario.mean,
        "haario_m2": runner.haario.m2,
    }
    if runner.haario.chol is not None:
        arrays["haario_chol"] = runner.haario.chol
    for i, stored in enumerate(runner.stored):
        for key, val in stored.items():
            arrays[f"draw_{i}_{key}"] = np.asarray(val)
    np.savez_compressed(root / "checkpoint.npz", **arrays)
    meta = {
        "iteration": runner.iteration,
        "wall": runner.wall,
        "thresholds": [state.thresholds.lam, state.thresholds.lam_alt],
        "sigma_kappa": state.sigma_kappa,
        "d_loc": state.d_loc,
        "steps": runner.steps,
        "haario_count": runner.haario.count,
        "haario_mult": runner.haario.mult,
        "pre_n": runner.pre_activation_sums["n"],
        "n_stored": len(runner.stored),
        "stored_fields": list(runner.stored[0].keys()) if runner.stored else [],
        "stored_iterations": runner.stored_iterations,
        "accept": {k: {"window": a.window, "burnin": a.burnin, "sampling": a.sampling}
                   for k, a in runner.accept.items()},
        "adaptation_log": runner.adaptation_log,
        "rng_state": runner.rng.bit_generator.state,
    }
    (root / "checkpoint.json").write_text(json.dumps(meta, indent=2, default=float))


def load_checkpoint(store_dir, runner) -> None:
    """Restore a `_Runner` from :func:`write_checkpoint` output."""
    from .likelihood import Evaluation
    from .params import ThresholdLevels

    root = Path(store_dir)
    meta = json.loads((root / "checkpoint.json").read_text())
    with np.load(root / "checkpoint.npz") as data:
        arrays = {k: data[k].copy() for k in data.files}
    lam, lam_alt = meta["thresholds"]
    runner.state = runner.state.with_(
        L_raw=arrays["L_raw"],
        log_d=arrays["log_d"],
        a_raw=arrays["a_raw"],
        xi=arrays["xi"],
        eta=arrays["eta"],
        v=arrays["v"],
        delta=arrays["delta"],
        thresholds=ThresholdLevels(lam, lam_alt),
        sigma_kappa=meta["sigma_kappa"],
        d_loc=meta["d_loc"],
    )
    runner.iteration = int(meta["iteration"])
    runner.wall = float(meta["wall"])
    runner.steps = {k: float(v) for k, v in meta["steps"].items()}
    runner.active_cols = arrays["active_cols"].astype(bool)
    runner.pre_activation_sums = {
        "L": arrays["pre_L"], "a": arrays["pre_a"], "n": int(meta["pre_n"])
    }
    runner.haario.restore(
        {
            "count": meta["haario_count"],
            "mean": arrays["haario_mean"],
            "m2": arrays["haario_m2"],
            "chol": arrays.get("haario_chol"),
            "mult": meta["haario_mult"],
        }
    )
    runner.adaptation_log = list(meta["adaptation_log"])
    for name, acc in runner.accept.items():
        saved = meta["accept"][name]
        acc.window = [int(x) for x in saved["window"]]
        acc.burnin = [int(x) for x in saved["burnin"]]
        acc.sampling = [int(x) for x in saved["sampling"]]
    runner.stored = [
        {key: arrays[f"draw_{i}_{key}"] for key in meta["stored_fields"]}
        for i in range(int(meta["n_stored"]))
    ]
    runner.stored_iterations = [int(x) for x in meta["stored_iterations"]]
    rng_state = meta["rng_state"]
    # JSON round-trips the uint128 PCG64 state words as ints; restore as-is
    runner.rng.bit_generator.state = rng_state
    runner.ev = Evaluation(runner.state, runner.ctx)
