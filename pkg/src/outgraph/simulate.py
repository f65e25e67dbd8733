"""Synthetic-data generators for the three benchmark settings and the
sparse-precision generator they share.

Setting 1: latent series from Gaussian processes with exponential kernels
(equivalently stationary AR(1) on the integer grid), rotated/mixed through
a random model state whose precision is the generated sparse matrix.

Setting 2: latent ARMA(1,1) series with near-unit-root coefficients and
innovation variance chosen so the marginal variance is exactly 1.

Setting 3: a causal VAR(1) whose stationary precision equals a prescribed
matrix, built by a Woodbury-style construction from auxiliary parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.linalg import solve_triangular

from .graph import baseline_precision, score_estimate
from .params import cayley_rotation, skew_from_packed

__all__ = [
    "ScenarioSpec",
    "VarSystem",
    "SimulatedData",
    "gen_sparse_precision",
    "gen_setting1",
    "gen_setting2",
    "gen_setting3",
    "algorithm1_var",
    "simulate_scenario",
    "oracle_one_step",
    "run_benchmark",
]

_D_SCALE = 2.0
_BURNIN = 500


@dataclass(frozen=True)
class ScenarioSpec:
    p: int
    T: int
    setting: int
    sparsity: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.p < 2 or self.T < 8:
            raise ValueError("need p >= 2 and T >= 8")
        if self.setting not in (1, 2, 3):
            raise ValueError("setting must be 1, 2 or 3")
        if not 0 < self.sparsity < 1:
            raise ValueError("sparsity must be in (0, 1)")


@dataclass(frozen=True)
class VarSystem:
    Phi: np.ndarray
    Sigma_e: np.ndarray

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.Phi))))


@dataclass
class SimulatedData:
    Y: np.ndarray
    omega_true: np.ndarray
    U_true: np.ndarray | None
    spec: ScenarioSpec
    truth: dict = field(default_factory=dict)


def _block_sizes(p: int) -> list:
    base, rem = divmod(p, 3)
    return [base + (1 if i < rem else 0) for i in range(3)]

def _small_world_adjacency(p, rng, ring_degree=2, rewire=0.1):
    """Three small-world blocks on a partition of the nodes."""
    adj = np.zeros((p, p), dtype=bool)
    start = 0
    for size in _block_sizes(p):
        if size >= 3 and ring_degree >= 2:
            k = min(ring_degree if ring_degree % 2 == 0 else ring_degree - 1, size - 1)
            if k >= 2:
                g = nx.watts_strogatz_graph(
                    size, k, rewire, seed=int(rng.integers(2**31))
                )
                for a, b in g.edges:
                    adj[start + a, start + b] = adj[start + b, start + a] = True
        start += size
    return adj

def _pattern_from_budget(p, budget, rng, ring_degree, rewire):
    """Symmetric boolean pattern with roughly ``budget`` upper-triangle edges:
    small-world block edges first, Bernoulli cross links for the rest."""
    n_pairs = p * (p - 1) // 2
    adj = _small_world_adjacency(p, rng, ring_degree=ring_degree, rewire=rewire)
    iu = np.triu_indices(p, k=1)
    block_pairs = np.flatnonzero(adj[iu])
    if len(block_pairs) > budget:
        keep = rng.choice(block_pairs, size=budget, replace=False)
        mask = np.zeros(n_pairs, dtype=bool)
        mask[keep] = True
    else:
        mask = adj[iu].copy()
        free = np.flatnonzero(~mask)
        cross_q = (budget - len(block_pairs)) / max(len(free), 1)
        if cross_q > 0 and len(free):
            mask[free] = rng.random(len(free)) < cross_q
    pattern = np.zeros((p, p), dtype=bool)
    pattern[iu] = mask
    return pattern | pattern.T

def _omega_on_pattern(p, pattern, rng):
    """(I - L) D^2 (I - L)^T on the pattern, truncated and SPD-repaired."""
    L = np.zeros((p, p))
    low = np.tril(pattern, k=-1)
    L[low] = rng.standard_normal(int(low.sum()))
    d = np.full(p, _D_SCALE)
    B = (np.eye(p) - L) * d[None, :]
    omega = B @ B.T
    omega = (omega + omega.T) / 2.0
    off = ~np.eye(p, dtype=bool)
    omega[off & (np.abs(omega) < 1.0)] = 0.0
    eigmin = float(np.linalg.eigvalsh(omega)[0])
    if eigmin <= 0.05:
        omega += (abs(eigmin) + 0.1) * np.eye(p)
    while True:
        eig = np.linalg.eigvalsh(omega)
        if eig[-1] / eig[0] <= 1e4:
            break
        omega += 0.1 * np.eye(p)
    return omega

def gen_sparse_precision(
    p: int,
    sparsity: float,
    rng: np.random.Generator,
    ring_degree: int = 2,
    rewire: float = 0.1,
):
    """Sparse SPD precision matrix on a small-world-plus-cross-links pattern.

    The pattern comes from three small-world blocks plus Bernoulli
    cross-block links; the matrix itself is ``(I - L) D^2 (I - L)^T`` with
    standard-normal entries of L on the pattern, entries below 1 in
    magnitude truncated to zero, and a diagonal shift restoring positive
    definiteness / conditioning when needed. Because truncation removes
    and Cholesky fill-in adds off-diagonals, the pattern edge budget is
    recalibrated until the achieved nonzero fraction is close to the
    target. Blocks split ``p`` as evenly as possible (no padding).

    Returns ``(omega, adjacency)`` where adjacency is the boolean support
    of the final off-diagonal.
    """
    if not 0 <= sparsity < 1:
        raise ValueError("sparsity must be in [0, 1)")
    n_pairs = p * (p - 1) // 2
    target_edges = sparsity * n_pairs
    if sparsity > 0 and round(target_edges) < 1:
        raise ValueError(
            f"infeasible sparsity {sparsity} at p={p}: below one representable edge"
        )
    iu = np.triu_indices(p, k=1)
    off = ~np.eye(p, dtype=bool)

    budget = max(int(round(target_edges)), 0)
    omega = None
    for _ in range(6):
        pattern = _pattern_from_budget(p, budget, rng, ring_degree, rewire)
        omega = _omega_on_pattern(p, pattern, rng)
        achieved = int(np.count_nonzero(omega[iu]))
        if target_edges == 0 or abs(achieved - target_edges) <= 0.08 * target_edges:
            break
        ratio = target_edges / max(achieved, 1)
        budget = int(np.clip(round(budget * np.clip(ratio, 0.5, 2.0)), 1, n_pairs))

    # a zero-edge outcome at a tiny positive target can happen when every
    # budgeted entry falls below the magnitude-1 truncation; the diagonal
    # matrix is then the faithful result
    adjacency = (np.abs(omega) > 0) & off
    return omega, adjacency


def _modified_cholesky(omega: np.ndarray):
    """Factors (L, d) with ``omega = (I - L) D^2 (I - L)^T``."""
    B = np.linalg.cholesky(omega)
    d = np.diag(B).copy()
    return np.tril(np.eye(len(d)) - B / d[None, :], k=-1), d

def _random_rotation_packed(p: int, rng, scale: float | None = None) -> np.ndarray:
    if scale is None:
        scale = 0.5 / math.sqrt(p)
    return scale * rng.standard_normal(p * (p - 1) // 2)

def _observe(Z, L, d, U):
    """``Y = (I - L)^{-T} D^{-1} U Z`` by triangular solve."""
    p = len(d)
    rhs = (U @ Z) / d[:, None]
    return solve_triangular(np.eye(p) - L.T, rhs, lower=False, unit_diagonal=True)

def _latent(Y, L, d, U):
    return U.T @ (d[:, None] * (Y - L.T @ Y))


def _ar1_series(phi: np.ndarray, T: int, rng) -> np.ndarray:
    """Unit-variance stationary AR(1) rows, exact stationary start."""
    p = len(phi)
    z = np.empty((p, T))
    z[:, 0] = rng.standard_normal(p)
    innov_sd = np.sqrt(1.0 - phi**2)
    eps = rng.standard_normal((p, T))
    for t in range(1, T):
        z[:, t] = phi * z[:, t - 1] + innov_sd * eps[:, t]
    return z

def _gen1(spec: ScenarioSpec, extra: int = 0):
    rng = np.random.default_rng(spec.seed)
    omega, _ = gen_sparse_precision(spec.p, spec.sparsity, rng)
    ranges = rng.uniform(0.0, 10.0, size=spec.p)
    phi = np.exp(-1.0 / ranges)
    Z = _ar1_series(phi, spec.T + extra, rng)
    L, d = _modified_cholesky(omega)
    U = cayley_rotation(skew_from_packed(_random_rotation_packed(spec.p, rng), spec.p))
    Y = _observe(Z, L, d, U)
    return Y, omega, U, {"ranges": ranges, "phi": phi, "L": L, "d": d}

def gen_setting1(spec: ScenarioSpec):
    """Latents from exponential-kernel Gaussian processes.

    On the unit time grid the kernel ``exp(-|h|/range)`` makes each latent
    an AR(1) with coefficient ``exp(-1/range)``, sampled exactly from
    stationarity. Ranges are Unif(0, 10) per series.

    Returns ``(Y, omega_true, U_true)``.
    """
    if spec.setting != 1:
        raise ValueError("spec.setting must be 1")
    Y, omega, U, _ = _gen1(spec)
    return Y, omega, U

def _two_sided_uniform(rng, size):
    """Unif((0.9, 1) union (-1, -0.9)) draws."""
    mag = rng.uniform(0.9, 1.0, size=size)
    sign = np.where(rng.random(size) < 0.5, 1.0, -1.0)
    return mag * sign

def _gen2(spec: ScenarioSpec, extra: int = 0):
    rng = np.random.default_rng(spec.seed)
    omega, _ = gen_sparse_precision(spec.p, spec.sparsity, rng)
    p, T = spec.p, spec.T + extra
    phi = _two_sided_uniform(rng, p)
    th = _two_sided_uniform(rng, p)
    sig2 = (1.0 - phi**2) / (1.0 + 2.0 * th * phi + th**2)
    sig = np.sqrt(sig2)

    n_steps = T + _BURNIN
    z = np.empty((p, n_steps))
    # exact stationary start: Var(z)=1, Cov(z, e)=sig2
    z[:, 0] = rng.standard_normal(p)
    e_prev = sig2 * z[:, 0] + np.sqrt(sig2 * (1.0 - sig2)) * rng.standard_normal(p)
    eps = sig[:, None] * rng.standard_normal((p, n_steps))
    for t in range(1, n_steps):
        z[:, t] = phi * z[:, t - 1] + th * e_prev + eps[:, t]
        e_prev = eps[:, t]
    Z = z[:, _BURNIN:]

    L, d = _modified_cholesky(omega)
    U = cayley_rotation(skew_from_packed(_random_rotation_packed(p, rng), p))
    Y = _observe(Z, L, d, U)
    return Y, omega, U, {"phi": phi, "theta": th, "sigma2": sig2, "L": L, "d": d}

def gen_setting2(spec: ScenarioSpec):
    """Latents from unit-variance ARMA(1,1) with near-unit-root parameters.

    ``z_t = phi z_{t-1} + th e_{t-1} + e_t`` with innovation variance
    ``(1 - phi^2)/(1 + 2 th phi + th^2)`` so the marginal variance is 1.
    The recursion starts from an exact stationary pair ``(z_0, e_0)`` and a
    further 500 warm-up steps are discarded.

    Returns ``(Y, omega_true, U_true)``.
    """
    if spec.setting != 2:
        raise ValueError("spec.setting must be 2")
    Y, omega, U, _ = _gen2(spec)
    return Y, omega, U


def algorithm1_var(
    omega: np.ndarray, K_aux: np.ndarray, Q_aux: np.ndarray
) -> VarSystem:
    """Stationary VAR(1) with prescribed marginal precision ``omega``.

    Steps: ``C0 = omega^{-1}``; ``T = (I + K^T C0 K)^{-1}``;
    ``Sigma_e = C0 - C0 K T K^T C0``; ``K1 = C0 K T^{1/2}``;
    ``Gamma1 = K1 Q C0^{1/2}``; ``Phi = Gamma1 omega`` (square roots are the
    symmetric SPD ones). The middle inverse uses ``C0`` rather than
    ``C0^{-1}`` so that ``Sigma_e`` equals the Woodbury form of
    ``(C0^{-1} + K K^T)^{-1}`` and stays positive definite, which in turn
    forces the spectral radius of ``Phi`` below 1. The stationarity
    identity ``C0 = Phi C0 Phi^T + Sigma_e`` is asserted at construction.
    """
    p = omega.shape[0]
    C0 = np.linalg.inv(omega)
    C0 = (C0 + C0.T) / 2.0
    m = K_aux.shape[1]
    T_mat = np.linalg.inv(np.eye(m) + K_aux.T @ C0 @ K_aux)
    T_mat = (T_mat + T_mat.T) / 2.0
    C0K = C0 @ K_aux
    Sigma_e = C0 - C0K @ T_mat @ C0K.T
    Sigma_e = (Sigma_e + Sigma_e.T) / 2.0
    K1 = C0K @ _sym_sqrt(T_mat)
    Gamma1 = K1 @ Q_aux @ _sym_sqrt(C0)
    Phi = Gamma1 @ omega
    resid = C0 - Phi @ C0 @ Phi.T - Sigma_e
    if np.linalg.norm(resid) > 1e-8 * np.linalg.norm(C0):
        raise FloatingPointError("stationarity identity violated at construction")
    return VarSystem(Phi=Phi, Sigma_e=Sigma_e)

def _sym_sqrt(M: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(M)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)[None, :]) @ vecs.T

def _haar_orthogonal(p: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))[None, :]

def _gen3(spec: ScenarioSpec, extra: int = 0):
    rng = np.random.default_rng(spec.seed)
    omega, _ = gen_sparse_precision(spec.p, spec.sparsity, rng)
    p, T = spec.p, spec.T + extra
    K_aux = rng.standard_normal((p, p))
    Q_aux = _haar_orthogonal(p, rng)
    system = algorithm1_var(omega, K_aux, Q_aux)

    cov_chol = np.linalg.cholesky((np.linalg.inv(omega) + np.linalg.inv(omega).T) / 2.0)
    innov_chol = np.linalg.cholesky(system.Sigma_e)
    y = cov_chol @ rng.standard_normal(p)  # exact stationary start
    out = np.empty((p, T))
    for t in range(-_BURNIN, T):
        y = system.Phi @ y + innov_chol @ rng.standard_normal(p)
        if t >= 0:
            out[:, t] = y
    return out, omega, {"system": system}

def gen_setting3(spec: ScenarioSpec):
    """VAR(1) data with prescribed stationary precision: ``(Y, omega_true)``."""
    if spec.setting != 3:
        raise ValueError("spec.setting must be 3")
    Y, omega, _ = _gen3(spec)
    return Y, omega


def _true_acvf(data: SimulatedData, h_max: int) -> np.ndarray:
    """Exact latent autocovariances (p, h_max + 1) for settings 1 and 2."""
    lags = np.arange(h_max + 1)
    truth = data.truth
    if data.spec.setting == 1:
        return truth["phi"][:, None] ** lags[None, :]
    phi, th, sig2 = truth["phi"], truth["theta"], truth["sigma2"]
    gam = np.empty((data.spec.p, h_max + 1))
    gam[:, 0] = 1.0
    gam1 = sig2 * (1.0 + th * phi) * (phi + th) / (1.0 - phi**2)
    for h in range(1, h_max + 1):
        gam[:, h] = gam1 * phi ** (h - 1)
    return gam

def oracle_one_step(data: SimulatedData) -> np.ndarray:
    """True-model best linear one-step forecast of the last column of Y.

    Uses everything the generator knew: the exact latent autocovariances
    and the true transform for settings 1-2, the true VAR coefficient for
    setting 3. The fit window is ``Y[:, :-1]``.
    """
    from .forecast import blp_one_step

    Y_fit = data.Y[:, :-1]
    if data.spec.setting == 3:
        return data.truth["system"].Phi @ Y_fit[:, -1]
    L, d = data.truth["L"], data.truth["d"]
    U = data.U_true
    Z = _latent(Y_fit, L, d, U)
    gam = _true_acvf(data, min(Y_fit.shape[1], 200))
    z_next = np.array([blp_one_step(Z[j], gam[j]) for j in range(data.spec.p)])
    return _observe(z_next[:, None], L, d, U)[:, 0]


def simulate_scenario(spec: ScenarioSpec, extra: int = 0) -> SimulatedData:
    """Uniform wrapper over the three generators, with full truth attached.

    ``extra`` appends additional time points (held out for forecasting).
    """
    if spec.setting == 1:
        Y, omega, U, truth = _gen1(spec, extra)
    elif spec.setting == 2:
        Y, omega, U, truth = _gen2(spec, extra)
    else:
        Y, omega, truth = _gen3(spec, extra)
        U = None
    return SimulatedData(Y=Y, omega_true=omega, U_true=U, spec=spec, truth=truth)


def _benchmark_job(args):
    """One (cell, replicate) fit; returns the scored row or a failure marker."""
    from .graph import summarize_precision
    from .priors import PriorConfig
    from .sampler import SamplerConfig, gibbs_run

    cell, rep_seed, prior_kw, samp_kw, threshold = args
    try:
        spec = ScenarioSpec(
            p=cell["p"], T=cell["T"], setting=cell["setting"],
            sparsity=cell["sparsity"], seed=rep_seed,
        )
        data = simulate_scenario(spec)
        prior = PriorConfig(**prior_kw)
        samp = SamplerConfig(seed=rep_seed + 1, **samp_kw)
        chain = gibbs_run(data.Y, prior, samp)
        omega_hat = summarize_precision(chain).omega_mean
        out_score = score_estimate(omega_hat, data.omega_true, threshold)
        base_score = score_estimate(
            baseline_precision(data.Y), data.omega_true, threshold
        )
        return {
            "cell": dict(cell), "seed": rep_seed, "ok": True,
            "out": out_score, "baseline": base_score,
        }
    except Exception as exc:  # failure isolation per replicate
        return {"cell": dict(cell), "seed": rep_seed, "ok": False, "error": repr(exc)}

def run_benchmark(
    cells: list,
    replicates: int,
    prior_kw: dict,
    samp_kw: dict,
    base_seed: int = 0,
    threshold: float = 0.1,
    workers: int = 1,
) -> list:
    """Estimation benchmark over a grid of scenario cells.

    Each cell is a dict with keys ``setting, p, T, sparsity``. Results are
    aggregated per cell as mean squared Frobenius error for the posterior
    mean and the iid-baseline; replicate failures are recorded and the run
    continues. Output rows are deterministic for a fixed ``base_seed`` and
    independent of ``workers``.
    """
    jobs = []
    for idx, cell in enumerate(cells):
        for rep in range(replicates):
            seed = int(np.random.SeedSequence([base_seed, idx, rep]).generate_state(1)[0] % (2**31))
            jobs.append((dict(cell), seed, dict(prior_kw), dict(samp_kw), threshold))
    if workers > 1 and len(jobs) > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_benchmark_job, jobs))
    else:
        results = [_benchmark_job(j) for j in jobs]

    rows = []
    for idx, cell in enumerate(cells):
        cell_results = results[idx * replicates : (idx + 1) * replicates]
        ok = [r for r in cell_results if r["ok"]]
        row = {
            **cell,
            "replicates": replicates,
            "n_ok": len(ok),
            "failures": "; ".join(r["error"] for r in cell_results if not r["ok"]),
        }
        for name in ("out", "baseline"):
            if ok:
                mses = np.array([r[name]["frobenius_sq"] for r in ok])
                mccs = np.array([r[name]["edge_mcc"] for r in ok])
                row[f"{name}_mse"] = float(mses.mean())
                row[f"{name}_mse_se"] = float(mses.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else 0.0
                row[f"{name}_mcc"] = float(mccs.mean())
            else:
                row[f"{name}_mse"] = float("nan")
                row[f"{name}_mse_se"] = float("nan")
                row[f"{name}_mcc"] = float("nan")
        rows.append(row)
    return rows
