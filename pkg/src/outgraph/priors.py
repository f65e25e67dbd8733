"""Prior log-densities, exact samplers, and the smoothness penalty.

Blocks and their laws:

* ``d_j`` — inverse Gaussian with density ``C t^{-3/2} exp(-(t - loc)^2/(2t))``
  on t > 0, i.e. mean ``loc`` and shape ``loc^2``; the location gets a
  half-normal hyperprior of scale ``sigma_d``.
* sub-diagonal entries of ``L_raw`` and ``a_raw`` — independent
  ``N(0, sigma_T^2)`` on the *latent* (pre-threshold) coordinates; the
  thresholds act purely through the deterministic effective maps.
* ``lam``, ``lam_alt`` — uniform on ``[lam_lo, lam_hi]``.
* spectral loadings — ``xi[j,r] ~ N(0, 1/(v[j,r] tau_r))`` with
  ``tau_r = prod_{i<=r} delta_i`` (cumulative column shrinkage),
  ``v ~ Gamma(nu1, nu1)``, ``delta_1 ~ Gamma(kappa1, 1)``,
  ``delta_r ~ Gamma(kappa2, 1)`` for r >= 2; ``eta_r ~ N(0, sigma_kappa
  (P + eps I)^{-1})`` where P penalizes squared second differences;
  ``sigma_kappa ~ Inv-Gamma(c1, c1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .params import ModelState, ThresholdLevels, pack_lower

__all__ = [
    "PriorConfig",
    "logprior_d",
    "sample_d",
    "logprior_L",
    "logprior_A",
    "second_difference_penalty",
    "logprior_spectral",
    "logprior_state",
    "sample_prior",
]

RIDGE = 1e-6  # makes the second-difference prior proper


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the full prior stack."""

    sigma_T: float = 1.0       # slab scale for L and A entries
    sigma_d: float = 10.0      # half-normal scale for the d location
    lam_lo: float = 0.0
    lam_hi: float = 3.0        # 3 * sigma_T by default
    nu1: float = 3.0           # local shrinkage shape
    kappa1: float = 2.1        # first column-shrinkage shape
    kappa2: float = 3.1        # later column-shrinkage shapes
    sigma_kappa: float = 1.0   # initial eta scale
    c1: float = 2.0            # Inv-Gamma shape/rate for sigma_kappa
    R: int = 15                # max rank of the spectral loadings
    K: int = 10                # B-spline basis size
    h0: float = 1e-8           # threshold smoothing width

    def __post_init__(self):
        for name in ("sigma_T", "sigma_d", "nu1", "kappa1", "kappa2",
                     "sigma_kappa", "c1", "h0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.lam_lo < self.lam_hi:
            raise ValueError("need 0 <= lam_lo < lam_hi")
        if self.R < 1 or self.K < 4:
            raise ValueError("R >= 1 and K >= 4 required")


def logprior_d(d: np.ndarray, d_loc: float) -> float:
    """Sum of inverse-Gaussian log-densities with location ``d_loc``.

    The normalizing constant of the kernel ``t^{-3/2} exp(-(t-loc)^2/(2t))``
    is ``loc / sqrt(2 pi)`` (shape = loc^2 in the standard IG form).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or d_loc <= 0:
        raise ValueError("d and d_loc must be positive")
    log_c = math.log(d_loc) - 0.5 * math.log(2.0 * math.pi)
    return float(
        d.size * log_c - 1.5 * np.log(d).sum() - np.sum((d - d_loc) ** 2 / (2.0 * d))
    )

def grad_logprior_log_d(log_d: np.ndarray, d_loc: float) -> np.ndarray:
    """Gradient in log scale of ``logprior_d + sum(log d)`` (the Jacobian)."""
    d = np.exp(log_d)
    return -0.5 - d / 2.0 + d_loc**2 / (2.0 * d)

def sample_d(d_loc: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws: inverse Gaussian with mean ``d_loc``, shape ``d_loc^2``."""
    return stats.invgauss.rvs(
        mu=1.0 / d_loc, scale=d_loc**2, size=size, random_state=rng
    )


def _normal_logpdf_sum(x: np.ndarray, sigma: float) -> float:
    x = np.asarray(x, dtype=float)
    return float(
        -x.size * (0.5 * math.log(2.0 * math.pi) + math.log(sigma))
        - np.sum(x * x) / (2.0 * sigma**2)
    )

def logprior_L(L_raw: np.ndarray, lam: float, sigma_T: float) -> float:
    """Latent-coordinate prior for L: N(0, sigma_T^2) on sub-diagonal entries.

    ``lam`` shapes the model only through the effective (thresholded) L, so
    it does not enter this density.
    """
    del lam
    return _normal_logpdf_sum(pack_lower(np.asarray(L_raw)), sigma_T)

def logprior_A(a_raw: np.ndarray, lam_alt: float, sigma_T: float) -> float:
    """Latent-coordinate prior for the packed skew entries, as for L."""
    del lam_alt
    return _normal_logpdf_sum(np.asarray(a_raw), sigma_T)


def second_difference_penalty(K: int):
    """Second-difference penalty matrix and its log-pseudo-determinant.

    Returns ``(P, logpdet)`` where ``P = Q^T Q`` for the (K-2) x K stencil
    matrix Q with rows ``(1, -2, 1)``; P has rank K-2 and annihilates
    sequences affine in the index.
    """
    if K < 4:
        raise ValueError("K must be at least 4")
    Q = np.zeros((K - 2, K))
    idx = np.arange(K - 2)
    Q[idx, idx] = 1.0
    Q[idx, idx + 1] = -2.0
    Q[idx, idx + 2] = 1.0
    P = Q.T @ Q
    eig = np.linalg.eigvalsh(P)
    logpdet = float(np.sum(np.log(eig[2:])))  # two exact zeros
    return P, logpdet


def _gamma_logpdf_sum(x, shape, rate) -> float:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        return -np.inf
    return float(
        np.sum(shape * math.log(rate) - math.lgamma(shape)
               + (shape - 1.0) * np.log(x) - rate * x)
    )

def _invgamma_logpdf(x, shape, scale) -> float:
    if x <= 0:
        return -np.inf
    return shape * math.log(scale) - math.lgamma(shape) - (shape + 1.0) * math.log(x) - scale / x

def logprior_delta_terms(
    delta: np.ndarray, xi: np.ndarray, v: np.ndarray, config: PriorConfig
) -> float:
    """Joint-density terms involving the column-shrinkage factors delta.

    Sum of the Gamma priors on delta and the xi normals whose precisions
    ``v[j,r] tau_r`` carry ``tau_r = prod_{i<=r} delta_i``.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        return -np.inf
    tau = np.cumprod(delta)
    prec = v * tau[None, :]
    xi_part = 0.5 * np.sum(np.log(prec)) - 0.5 * np.sum(prec * xi * xi)
    gam = _gamma_logpdf_sum(delta[:1], config.kappa1, 1.0)
    if delta.size > 1:
        gam += _gamma_logpdf_sum(delta[1:], config.kappa2, 1.0)
    return float(xi_part) + gam

def logprior_spectral(
    xi: np.ndarray,
    eta: np.ndarray,
    v: np.ndarray,
    delta: np.ndarray,
    sigma_kappa: float,
    config: PriorConfig,
    penalty: np.ndarray | None = None,
) -> float:
    """Log-density of the full spectral-coefficient block."""
    if np.any(v <= 0) or np.any(delta <= 0) or sigma_kappa <= 0:
        raise ValueError("shrinkage latents must be positive")
    K, R = eta.shape
    if penalty is None:
        penalty = second_difference_penalty(K)[0] + RIDGE * np.eye(K)
    tau = np.cumprod(delta)
    prec = v * tau[None, :]
    total = float(
        0.5 * np.sum(np.log(prec))
        - 0.5 * xi.size * math.log(2.0 * math.pi)
        - 0.5 * np.sum(prec * xi * xi)
    )
    total += _gamma_logpdf_sum(v, config.nu1, config.nu1)
    total += _gamma_logpdf_sum(delta[:1], config.kappa1, 1.0)
    if delta.size > 1:
        total += _gamma_logpdf_sum(delta[1:], config.kappa2, 1.0)
    sign, logdet_pen = np.linalg.slogdet(penalty)
    total += R * 0.5 * (logdet_pen - K * math.log(2.0 * math.pi) - K * math.log(sigma_kappa))
    total += float(-0.5 * np.einsum("kr,kl,lr->", eta, penalty, eta) / sigma_kappa)
    total += _invgamma_logpdf(sigma_kappa, config.c1, config.c1)
    return total


def logprior_state(state: ModelState, config: PriorConfig, penalty=None) -> float:
    """Additive log-prior over every block, -inf off the support."""
    th = state.thresholds
    width = config.lam_hi - config.lam_lo
    for level in (th.lam, th.lam_alt):
        if not config.lam_lo <= level <= config.lam_hi:
            return -np.inf
    total = -2.0 * math.log(width)
    total += logprior_d(state.d, state.d_loc)
    total += stats.halfnorm.logpdf(state.d_loc, scale=config.sigma_d)
    total += logprior_L(state.L_raw, th.lam, config.sigma_T)
    total += logprior_A(state.a_raw, th.lam_alt, config.sigma_T)
    total += logprior_spectral(
        state.xi, state.eta, state.v, state.delta, state.sigma_kappa, config, penalty
    )
    return float(total)


def sample_prior(config: PriorConfig, p: int, rng: np.random.Generator) -> ModelState:
    """Exact forward draw of a full model state from the prior."""
    K, R = config.K, config.R
    lam = rng.uniform(config.lam_lo, config.lam_hi)
    lam_alt = rng.uniform(config.lam_lo, config.lam_hi)
    n_low = p * (p - 1) // 2

    d_loc = abs(rng.normal(0.0, config.sigma_d))
    d = sample_d(d_loc, p, rng)

    v = rng.gamma(shape=config.nu1, scale=1.0 / config.nu1, size=(p, R))
    delta = np.empty(R)
    delta[0] = rng.gamma(shape=config.kappa1, scale=1.0)
    if R > 1:
        delta[1:] = rng.gamma(shape=config.kappa2, scale=1.0, size=R - 1)
    tau = np.cumprod(delta)
    xi = rng.standard_normal((p, R)) / np.sqrt(v * tau[None, :])

    sigma_kappa = 1.0 / rng.gamma(shape=config.c1, scale=1.0 / config.c1)
    penalty = second_difference_penalty(K)[0] + RIDGE * np.eye(K)
    chol_prec = np.linalg.cholesky(penalty / sigma_kappa)
    eta = np.linalg.solve(chol_prec.T, rng.standard_normal((K, R)))

    return ModelState(
        L_raw=np.tril(rng.normal(0.0, config.sigma_T, size=(p, p)), k=-1),
        log_d=np.log(d),
        a_raw=rng.normal(0.0, config.sigma_T, size=n_low),
        thresholds=ThresholdLevels(lam=lam, lam_alt=lam_alt),
        xi=xi,
        eta=eta,
        v=v,
        delta=delta,
        sigma_kappa=float(sigma_kappa),
        d_loc=float(d_loc),
    )
