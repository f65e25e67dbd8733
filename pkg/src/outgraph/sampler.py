"""MCMC kernels and the Gibbs orchestration.

Update kernels
--------------
* gradient-drifted Gaussian proposals with Metropolis correction (Langevin
  steps) for ``L_raw``, ``log d``, ``xi`` and ``eta``;
* adaptive Metropolis for the packed skew entries ``a_raw``, with the
  proposal covariance rebuilt from past draws every ``adapt_window``
  iterations (scaled 2.38^2/dim plus a small nugget);
* log-scale random-walk Metropolis (with Jacobian) for the thresholds,
  the column-shrinkage factors and the d-location hyperparameter;
* conjugate Gibbs draws for the local shrinkage ``v`` and ``sigma_kappa``.

Schedule (all inside burn-in): a hot start from the baseline precision
estimate, a spectral-only phase, then all blocks except the thresholds,
threshold activation from early samples, shrinkage updates from
``shrink_start``, a one-shot rank truncation at ``truncate_at``, and
acceptance-band step adaptation per 100-iteration window. After burn-in
nothing adapts.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .graph import baseline_precision
from .likelihood import Evaluation, LikelihoodContext
from .params import ModelState, ThresholdLevels, pack_lower, unpack_lower
from .priors import (
    PriorConfig,
    RIDGE,
    grad_logprior_log_d,
    logprior_A,
    logprior_d,
    second_difference_penalty,
)
from .spectral import BSplineBasis, whittle_transform

__all__ = [
    "SamplerConfig",
    "ChainOutput",
    "mala_step",
    "rwmh_log_scale",
    "adaptive_mh",
    "HaarioProposal",
    "gibbs_run",
]

LMC_BLOCKS = ("xi", "eta", "L_raw", "log_d")
MH_BLOCKS = ("a_raw", "lam", "lam_alt", "delta", "d_loc")


@dataclass(frozen=True)
class SamplerConfig:
    total: int = 15000
    burnin: int = 5000
    thin: int = 5
    # initial per-block step sizes (adapted during burn-in)
    step_L: float = 0.05
    step_d: float = 0.1
    step_xi: float = 0.1
    step_eta: float = 0.1
    step_A: float = 0.05
    step_lam: float = 0.3
    step_lam_alt: float = 0.3
    step_delta: float = 0.5
    step_d_loc: float = 0.3
    adapt_window: int = 100
    mh_band: tuple = (0.15, 0.40)
    lmc_band: tuple = (0.45, 0.70)
    spectral_only: int = 500
    full_at: int = 1500
    shrink_start: int = 1000
    truncate_at: int = 3000
    trunc_eps: float = 1e-3
    lam_floor: float = 0.02
    drift_clip: float = 100.0  # cap on |drift| / (step * sqrt(dim))
    seed: int = 0

    def validate(self):
        if not 0 < self.burnin < self.total:
            raise ValueError("need 0 < burnin < total")
        if self.thin < 1 or self.total - self.burnin < self.thin:
            raise ValueError("no draws would be stored with this thinning")
        for lo, hi in (self.mh_band, self.lmc_band):
            if not 0 < lo < hi < 1:
                raise ValueError("acceptance bands must satisfy 0 < lo < hi < 1")
        if not self.spectral_only < self.full_at <= self.burnin:
            raise ValueError("need spectral_only < full_at <= burnin")
        if not 0 < self.shrink_start <= self.burnin:
            raise ValueError("shrink_start must fall inside burn-in")
        if not self.full_at <= self.truncate_at <= self.burnin:
            raise ValueError("truncate_at must lie in [full_at, burnin]")
        if self.adapt_window < 2:
            raise ValueError("adapt_window too small")


@dataclass
class ChainOutput:
    """Stored thinned draws plus acceptance and adaptation bookkeeping."""

    draws: dict
    iterations: np.ndarray
    accept_stats: dict
    adaptation_log: list
    seed: int
    config: dict
    wall_seconds: float = 0.0
    backend: str = ""

    @property
    def n_draws(self) -> int:
        return len(self.iterations)

    @property
    def p(self) -> int:
        return self.draws["d"].shape[1]

    @classmethod
    def concat(cls, chains: list) -> "ChainOutput":
        """Read-only merge of several chains (draws stacked in order)."""
        first = chains[0]
        return cls(
            draws={k: np.concatenate([c.draws[k] for c in chains]) for k in first.draws},
            iterations=np.concatenate([c.iterations for c in chains]),
            accept_stats={f"chain{i}": c.accept_stats for i, c in enumerate(chains)},
            adaptation_log=sum((c.adaptation_log for c in chains), []),
            seed=first.seed,
            config=first.config,
            wall_seconds=sum(c.wall_seconds for c in chains),
            backend=first.backend,
        )


# ---------------------------------------------------------------------------
# generic kernels (tested standalone on toy targets)

def mala_step(x, value_and_grad, step, rng, current=None, drift_clip=np.inf):
    """One Langevin proposal with Metropolis correction.

    ``value_and_grad(x) -> (logpost, grad, payload)``; the drift is
    ``(step^2/2) grad``, clipped in norm at ``drift_clip * step * sqrt(dim)``
    on both ends of the ratio (the clipped drift is part of the proposal,
    so the kernel stays exact). Non-finite proposals count as rejections.

    Returns ``(x_new, accepted, logpost_new, payload_new)`` where the
    payload echoes what ``value_and_grad`` produced at the returned point.
    """
    x = np.asarray(x, dtype=float)
    if current is None:
        current = value_and_grad(x)
    lp0, g0, payload0 = current
    cap = drift_clip * step * math.sqrt(x.size)

    def drift(g):
        dr = 0.5 * step * step * g
        norm = float(np.linalg.norm(dr))
        return dr * (cap / norm) if norm > cap else dr

    dr0 = drift(g0)
    noise = rng.standard_normal(x.shape)
    prop = x + dr0 + step * noise
    lp1, g1, payload1 = value_and_grad(prop)
    if not (np.isfinite(lp1) and np.all(np.isfinite(g1))):
        return x, False, lp0, payload0
    dr1 = drift(g1)
    log_q_fwd = -float(np.sum(noise * noise)) / 2.0
    back = (x - prop - dr1) / step
    log_q_rev = -float(np.sum(back * back)) / 2.0
    log_alpha = lp1 - lp0 + log_q_rev - log_q_fwd
    if math.log(rng.uniform()) < log_alpha:
        return prop, True, lp1, payload1
    return x, False, lp0, payload0

def rwmh_log_scale(x, logpost, scale, rng, current_lp=None):
    """Random-walk Metropolis on ``log x`` for a positive scalar.

    The acceptance ratio carries the Jacobian factor ``x_new / x``;
    ``logpost`` returning ``-inf`` (e.g. outside a uniform prior's range)
    forces rejection.
    """
    if current_lp is None:
        current_lp = logpost(x)
    prop = x * math.exp(scale * rng.standard_normal())
    lp1 = logpost(prop)
    if not np.isfinite(lp1):
        return x, False, current_lp
    log_alpha = lp1 - current_lp + math.log(prop) - math.log(x)
    if math.log(rng.uniform()) < log_alpha:
        return prop, True, lp1
    return x, False, current_lp

def adaptive_mh(x, logpost, proposal, rng, current_lp=None):
    """Symmetric multivariate-normal Metropolis move.

    ``proposal(rng, dim) -> increment``; symmetry of the increment makes
    the ratio a plain posterior ratio.
    """
    x = np.asarray(x, dtype=float)
    if current_lp is None:
        current_lp = logpost(x)
    prop = x + proposal(rng, x.size)
    lp1 = logpost(prop)
    if np.isfinite(lp1) and math.log(rng.uniform()) < lp1 - current_lp:
        return prop, True, lp1
    return x, False, current_lp


class HaarioProposal:
    """Empirical-covariance proposal, refreshed only at window boundaries.

    Accumulates every past value of the coordinate vector; ``refresh()``
    rebuilds the Cholesky factor of ``(2.38^2/dim) (cov + nugget I)``.
    Before two samples have been seen (or before the first refresh) the
    proposal is isotropic.
    """

    def __init__(self, dim: int, nugget: float = 1e-8):
        self.dim = dim
        self.nugget = nugget
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))
        self.chol = None
        self.mult = 1.0

    def update(self, x: np.ndarray):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += np.outer(delta, x - self.mean)

    def refresh(self):
        if self.count < 2:
            return False
        cov = self.m2 / (self.count - 1)
        scaled = (2.38**2 / self.dim) * (cov + self.nugget * np.eye(self.dim))
        self.chol = np.linalg.cholesky(scaled)
        return True

    def __call__(self, rng, dim):
        z = rng.standard_normal(dim)
        if self.chol is None:
            return self.mult * z
        return self.mult * (self.chol @ z)

    def snapshot(self) -> dict:
        return {
            "count": self.count, "mean": self.mean.copy(), "m2": self.m2.copy(),
            "chol": None if self.chol is None else self.chol.copy(), "mult": self.mult,
        }

    def restore(self, snap: dict):
        self.count = int(snap["count"])
        self.mean = np.asarray(snap["mean"]).copy()
        self.m2 = np.asarray(snap["m2"]).copy()
        self.chol = None if snap["chol"] is None else np.asarray(snap["chol"]).copy()
        self.mult = float(snap["mult"])


# ---------------------------------------------------------------------------
# Gibbs runner

class _Accept:
    """Per-block acceptance counters, split burn-in / sampling."""

    def __init__(self):
        self.window = [0, 0]
        self.burnin = [0, 0]
        self.sampling = [0, 0]

    def record(self, accepted: bool, in_burnin: bool):
        phase = self.burnin if in_burnin else self.sampling
        for bucket in (phase, self.window):
            bucket[0] += 1
            bucket[1] += int(accepted)

    def window_rate(self):
        return self.window[1] / self.window[0] if self.window[0] else None

    def reset_window(self):
        self.window = [0, 0]

    def as_dict(self):
        return {
            "burnin": {"proposed": self.burnin[0], "accepted": self.burnin[1]},
            "sampling": {"proposed": self.sampling[0], "accepted": self.sampling[1]},
        }


def _hot_start(Y: np.ndarray, prior: PriorConfig, rng: np.random.Generator) -> ModelState:
    """Modified Cholesky of the baseline precision, identity rotation."""
    p = Y.shape[0]
    omega0 = baseline_precision(Y, rho_blend=0.1)
    B = np.linalg.cholesky(omega0)
    d0 = np.diag(B).copy()
    L0 = np.eye(p) - B / d0[None, :]
    return ModelState(
        L_raw=np.tril(L0, k=-1),
        log_d=np.log(d0),
        a_raw=np.zeros(p * (p - 1) // 2),
        thresholds=ThresholdLevels(0.0, 0.0),
        xi=0.01 * rng.standard_normal((p, prior.R)),
        eta=0.01 * rng.standard_normal((prior.K, prior.R)),
        v=np.ones((p, prior.R)),
        delta=np.ones(prior.R),
        sigma_kappa=prior.sigma_kappa,
        d_loc=float(np.mean(d0)),
    )


class _Runner:
    """Mutable sampling state for one chain (supports checkpoint/resume)."""

    def __init__(self, Y, prior: PriorConfig, samp: SamplerConfig):
        samp.validate()
        Y = np.asarray(Y, dtype=float)
        if not np.all(np.isfinite(Y)):
            raise ValueError("data contains non-finite values")
        p, T = Y.shape
        if p < 2 or T < 8:
            raise ValueError("need p >= 2 and T >= 8")
        self.Y = Y
        self.prior = prior
        self.samp = samp
        self.rng = np.random.default_rng(samp.seed)
        self.ctx = LikelihoodContext(
            whittle_transform(Y), BSplineBasis(prior.K), h0=prior.h0
        )
        self.penalty = second_difference_penalty(prior.K)[0] + RIDGE * np.eye(prior.K)
        self.state = _hot_start(Y, prior, self.rng)
        self.ev = Evaluation(self.state, self.ctx)
        if not np.isfinite(self.ev.loglik):
            raise FloatingPointError("non-finite likelihood at initialization")
        self.steps = {
            "L_raw": samp.step_L, "log_d": samp.step_d, "xi": samp.step_xi,
            "eta": samp.step_eta, "a_raw": samp.step_A, "lam": samp.step_lam,
            "lam_alt": samp.step_lam_alt, "delta": samp.step_delta,
            "d_loc": samp.step_d_loc,
        }
        self.accept = {name: _Accept() for name in self.steps}
        self.haario = HaarioProposal(p * (p - 1) // 2)
        self.haario.mult = samp.step_A
        self.active_cols = np.ones(prior.R, dtype=bool)
        self.adaptation_log = []
        self.iteration = 0
        self.pre_activation_sums = {"L": np.zeros((p, p)), "a": np.zeros(p * (p - 1) // 2), "n": 0}
        self.stored = []
        self.stored_iterations = []
        self.wall = 0.0

    # -- block targets ------------------------------------------------

    def _xi_prec(self):
        tau = np.cumprod(self.state.delta)
        return self.state.v * tau[None, :]

    def _replace_and_eval(self, **changes):
        st = self.state.with_(**changes)
        return st, Evaluation(st, self.ctx, prev=self.ev)

    def _update_mala(self, block: str):
        samp, prior = self.samp, self.prior
        state = self.state

        if block == "xi":
            active = self.active_cols
            prec = self._xi_prec()

            def vg(xa):
                xi = state.xi.copy()
                xi[:, active] = xa
                st, e = self._replace_and_eval(xi=xi)
                lp = e.loglik - 0.5 * float(np.sum(prec * xi * xi))
                grad = e.grad_xi()[:, active] - (prec * xi)[:, active]
                return lp, grad, (st, e)

            x0 = state.xi[:, active]
            cur_lp = self.ev.loglik - 0.5 * float(np.sum(prec * state.xi**2))
            cur_grad = self.ev.grad_xi()[:, active] - (prec * state.xi)[:, active]
        elif block == "eta":
            pen = self.penalty / state.sigma_kappa

            def vg(eta):
                st, e = self._replace_and_eval(eta=eta)
                lp = e.loglik - 0.5 * float(np.einsum("kr,kl,lr->", eta, pen, eta))
                return lp, e.grad_eta() - pen @ eta, (st, e)

            x0 = state.eta
            cur_lp = self.ev.loglik - 0.5 * float(
                np.einsum("kr,kl,lr->", state.eta, pen, state.eta)
            )
            cur_grad = self.ev.grad_eta() - pen @ state.eta
        elif block == "L_raw":
            p = state.p
            sig2 = prior.sigma_T**2

            def vg(packed):
                L = unpack_lower(packed, p)
                st, e = self._replace_and_eval(L_raw=L)
                lp = e.loglik - 0.5 * float(np.sum(packed * packed)) / sig2
                grad = pack_lower(e.grad_L_raw()) - packed / sig2
                return lp, grad, (st, e)

            x0 = pack_lower(state.L_raw)
            cur_lp = self.ev.loglik - 0.5 * float(np.sum(x0 * x0)) / sig2
            cur_grad = pack_lower(self.ev.grad_L_raw()) - x0 / sig2
        elif block == "log_d":

            def vg(log_d):
                st, e = self._replace_and_eval(log_d=log_d)
                lp = e.loglik + logprior_d(np.exp(log_d), state.d_loc) + float(log_d.sum())
                grad = e.grad_log_d() + grad_logprior_log_d(log_d, state.d_loc)
                return lp, grad, (st, e)

            x0 = state.log_d
            cur_lp = (
                self.ev.loglik + logprior_d(state.d, state.d_loc) + float(x0.sum())
            )
            cur_grad = self.ev.grad_log_d() + grad_logprior_log_d(x0, state.d_loc)
        else:
            raise ValueError(f"unknown Langevin block {block!r}")

        _, accepted, _, payload = mala_step(
            x0, vg, self.steps[block], self.rng,
            current=(cur_lp, cur_grad, (self.state, self.ev)),
            drift_clip=samp.drift_clip,
        )
        self.state, self.ev = payload
        return accepted

    def _update_a(self):
        sigma_T = self.prior.sigma_T
        cache = {}

        def logpost(a):
            key = a.tobytes()
            st, e = self._replace_and_eval(a_raw=a)
            cache[key] = (st, e)
            return e.loglik + logprior_A(a, self.state.thresholds.lam_alt, sigma_T)

        cur = self.ev.loglik + logprior_A(
            self.state.a_raw, self.state.thresholds.lam_alt, sigma_T
        )
        a_new, accepted, _ = adaptive_mh(
            self.state.a_raw, logpost, self.haario, self.rng, current_lp=cur
        )
        if accepted:
            self.state, self.ev = cache[a_new.tobytes()]
        self.haario.update(self.state.a_raw)
        return accepted

    def _update_threshold(self, which: str):
        lo, hi = self.prior.lam_lo, self.prior.lam_hi
        th = self.state.thresholds
        cache = {}

        def logpost(level):
            if not lo <= level <= hi:
                return -np.inf
            new_th = (
                ThresholdLevels(level, th.lam_alt)
                if which == "lam"
                else ThresholdLevels(th.lam, level)
            )
            st, e = self._replace_and_eval(thresholds=new_th)
            cache[level] = (st, e)
            return e.loglik

        current = th.lam if which == "lam" else th.lam_alt
        new, accepted, _ = rwmh_log_scale(
            current, logpost, self.steps[which], self.rng, current_lp=self.ev.loglik
        )
        if accepted:
            self.state, self.ev = cache[new]
        return accepted

    def _update_d_loc(self):
        d = self.state.d
        sigma_d = self.prior.sigma_d

        def logpost(loc):
            if loc <= 0:
                return -np.inf
            return logprior_d(d, loc) - loc * loc / (2.0 * sigma_d**2)

        new, accepted, _ = rwmh_log_scale(
            self.state.d_loc, logpost, self.steps["d_loc"], self.rng
        )
        if accepted:
            self.state = self.state.with_(d_loc=float(new))
        return accepted

    def _update_shrinkage(self):
        """Conjugate v and sigma_kappa, random-walk delta.

        For the delta sweep the only state-dependent pieces of the target
        are the per-column sums ``s_r = sum_j v_jr xi_jr^2`` and the shape
        counts, so each scalar conditional is evaluated in closed form
        instead of re-summing the xi block.
        """
        state, prior, rng = self.state, self.prior, self.rng
        p = state.p
        tau = np.cumprod(state.delta)
        v = rng.gamma(
            shape=prior.nu1 + 0.5,
            scale=1.0 / (prior.nu1 + 0.5 * tau[None, :] * state.xi**2),
        )
        self.state = state = state.with_(v=v)

        delta = state.delta.copy()
        col_s = np.sum(state.v * state.xi**2, axis=0)  # s_r
        R = delta.size
        in_burnin = self.iteration <= self.samp.burnin
        for r in range(R):
            # tau_{r'} = tilde_tau_{r'} * delta_r for r' >= r
            tau = np.cumprod(delta)
            tilde = tau[r:] / delta[r]
            weight = float(tilde @ col_s[r:])          # coeff of delta_r in quad
            n_tail = p * (R - r)
            shape0 = prior.kappa1 if r == 0 else prior.kappa2

            def logpost(x):
                if x <= 0:
                    return -np.inf
                return (
                    (shape0 - 1.0 + 0.5 * n_tail) * math.log(x)
                    - x * (1.0 + 0.5 * weight)
                )

            new, acc, _ = rwmh_log_scale(delta[r], logpost, self.steps["delta"], rng)
            delta[r] = new
            self.accept["delta"].record(acc, in_burnin)
        self.state = state = state.with_(delta=delta)

        K = prior.K
        quad = float(np.einsum("kr,kl,lr->", state.eta, self.penalty, state.eta))
        sk = 1.0 / rng.gamma(
            shape=prior.c1 + 0.5 * K * R, scale=1.0 / (prior.c1 + 0.5 * quad)
        )
        self.state = self.state.with_(sigma_kappa=float(sk))

    # -- schedule ------------------------------------------------------

    def _activate_thresholds(self):
        sums = self.pre_activation_sums
        n = max(sums["n"], 1)
        mean_L = np.abs(pack_lower(sums["L"] / n))
        mean_a = np.abs(sums["a"] / n)
        lam = max(self.samp.lam_floor, float(np.quantile(mean_L, 0.80)))
        lam_alt = max(self.samp.lam_floor, float(np.quantile(mean_a, 0.80)))
        lam = min(lam, self.prior.lam_hi)
        lam_alt = min(lam_alt, self.prior.lam_hi)
        self.state = self.state.with_(thresholds=ThresholdLevels(lam, lam_alt))
        self.ev = Evaluation(self.state, self.ctx)
        self.adaptation_log.append(
            {"iteration": self.iteration, "event": "threshold_activation",
             "lam": lam, "lam_alt": lam_alt}
        )

    def _truncate_ranks(self):
        small = np.all(np.abs(self.state.xi) < self.samp.trunc_eps, axis=0)
        frozen = small & self.active_cols
        if frozen.any():
            xi = self.state.xi.copy()
            xi[:, frozen] = 0.0
            self.state = self.state.with_(xi=xi)
            self.ev = Evaluation(self.state, self.ctx)
            self.active_cols &= ~frozen
            if not self.active_cols.any():
                # keep one live column so the spectral block stays updatable
                self.active_cols[0] = True
        self.adaptation_log.append(
            {"iteration": self.iteration, "event": "rank_truncation",
             "frozen": int(frozen.sum()), "active": int(self.active_cols.sum())}
        )

    def _adapt_window_end(self):
        in_burnin = self.iteration <= self.samp.burnin
        for block, acc in self.accept.items():
            rate = acc.window_rate()
            acc.reset_window()
            if rate is None or not in_burnin:
                continue
            lo, hi = (
                self.samp.lmc_band if block in LMC_BLOCKS else self.samp.mh_band
            )
            factor = 1.1 if rate > hi else (0.9 if rate < lo else None)
            if factor is None:
                continue
            if block == "a_raw":
                self.haario.mult = self.haario.mult * factor
                self.steps[block] = self.haario.mult
            else:
                self.steps[block] *= factor
            self.adaptation_log.append(
                {"iteration": self.iteration, "event": "step_adapt",
                 "block": block, "rate": rate, "step": self.steps[block]}
            )
        if in_burnin and self.haario.refresh():
            self.adaptation_log.append(
                {"iteration": self.iteration, "event": "covariance_refresh",
                 "samples": self.haario.count}
            )

    def _store_draw(self):
        th = self.state.thresholds
        self.stored.append(
            {
                "L_eff": kernels.hard_threshold(self.state.L_raw, th.lam),
                "d": self.state.d,
                "a_eff": kernels.soft_threshold(self.state.a_raw, th.lam_alt),
                "lam": th.lam,
                "lam_alt": th.lam_alt,
                "theta": self.ev.theta,
            }
        )
        self.stored_iterations.append(self.iteration)

    def run(self, stop_after: int | None = None):
        samp = self.samp
        start = time.perf_counter()
        limit = samp.total if stop_after is None else min(stop_after, samp.total)
        while self.iteration < limit:
            self.iteration += 1
            it = self.iteration
            in_burnin = it <= samp.burnin

            if it == samp.full_at:
                self._activate_thresholds()
            if it == samp.truncate_at:
                self._truncate_ranks()

            spectral_phase = it <= samp.spectral_only
            thresholds_on = it > samp.full_at or (
                it == samp.full_at  # activation iteration already set them
            )

            self.accept["xi"].record(self._update_mala("xi"), in_burnin)
            self.accept["eta"].record(self._update_mala("eta"), in_burnin)
            if not spectral_phase:
                self.accept["L_raw"].record(self._update_mala("L_raw"), in_burnin)
                self.accept["log_d"].record(self._update_mala("log_d"), in_burnin)
                self.accept["a_raw"].record(self._update_a(), in_burnin)
                if thresholds_on:
                    self.accept["lam"].record(self._update_threshold("lam"), in_burnin)
                    self.accept["lam_alt"].record(
                        self._update_threshold("lam_alt"), in_burnin
                    )
                else:
                    sums = self.pre_activation_sums
                    sums["L"] += self.state.L_raw
                    sums["a"] += self.state.a_raw
                    sums["n"] += 1
                self.accept["d_loc"].record(self._update_d_loc(), in_burnin)
                if it >= samp.shrink_start:
                    self._update_shrinkage()

            if it % samp.adapt_window == 0:
                self._adapt_window_end()
            if it > samp.burnin and (it - samp.burnin) % samp.thin == 0:
                self._store_draw()
        self.wall += time.perf_counter() - start

    def output(self) -> ChainOutput:
        if self.stored:
            draws = {
                key: np.stack([s[key] for s in self.stored])
                for key in self.stored[0]
            }
        else:
            draws = {}
        return ChainOutput(
            draws=draws,
            iterations=np.asarray(self.stored_iterations, dtype=int),
            accept_stats={k: a.as_dict() for k, a in self.accept.items()},
            adaptation_log=list(self.adaptation_log),
            seed=self.samp.seed,
            config={"prior": asdict(self.prior), "sampler": asdict(self.samp)},
            wall_seconds=self.wall,
            backend=kernels.backend_name(),
        )


def gibbs_run(
    Y: np.ndarray,
    prior: PriorConfig,
    samp: SamplerConfig,
    store_dir=None,
    stop_after: int | None = None,
) -> ChainOutput:
    """Run one chain; optionally persist draws + checkpoint to ``store_dir``.

    A run stopped early (``stop_after``) can be continued with
    :func:`resume_run` on the same directory and produces bit-identical
    results to an uninterrupted run.
    """
    runner = _Runner(Y, prior, samp)
    runner.run(stop_after=stop_after)
    out = runner.output()
    if store_dir is not None:
        from . import chainio

        chainio.write_chain(store_dir, out)
        chainio.write_checkpoint(store_dir, runner)
    return out


def resume_run(store_dir, Y: np.ndarray, prior: PriorConfig, samp: SamplerConfig) -> ChainOutput:
    """Continue a stored chain to ``samp.total`` iterations."""
    from . import chainio

    runner = _Runner(Y, prior, samp)
    chainio.load_checkpoint(store_dir, runner)
    runner.run()
    out = runner.output()
    chainio.write_chain(store_dir, out)
    chainio.write_checkpoint(store_dir, runner)
    return out
