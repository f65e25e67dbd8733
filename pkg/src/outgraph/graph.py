"""Posterior summaries of the precision matrix, edge extraction, the
shrinkage baseline estimator, and scoring metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PrecisionSummary",
    "EdgeSet",
    "summarize_precision",
    "partial_correlations",
    "extract_edges",
    "baseline_precision",
    "score_estimate",
]


@dataclass(frozen=True)
class PrecisionSummary:
    """Posterior mean precision, its partial-correlation scaling, and
    elementwise credible bounds."""

    omega_mean: np.ndarray
    partial_corr: np.ndarray
    omega_lo: np.ndarray
    omega_hi: np.ndarray
    levels: tuple = (0.025, 0.975)

    @property
    def p(self) -> int:
        return self.omega_mean.shape[0]


@dataclass(frozen=True)
class EdgeSet:
    """Unordered node pairs (i < j) with their scaled scores."""

    pairs: list
    scores: np.ndarray
    threshold: float

    def __len__(self) -> int:
        return len(self.pairs)

    def as_adjacency(self, p: int) -> np.ndarray:
        adj = np.zeros((p, p), dtype=bool)
        for (i, j) in self.pairs:
            adj[i, j] = adj[j, i] = True
        return adj


def partial_correlations(omega: np.ndarray) -> np.ndarray:
    """Scale-free normalization ``-omega_ij / sqrt(omega_ii omega_jj)``.

    The diagonal is set to 1 by convention.
    """
    scale = 1.0 / np.sqrt(np.diag(omega))
    rho = -omega * scale[:, None] * scale[None, :]
    np.fill_diagonal(rho, 1.0)
    return rho

def omega_draws(chain) -> np.ndarray:
    """Per-draw precision matrices ``(I - L) D^2 (I - L)^T``, shape (n, p, p)."""
    L = chain.draws["L_eff"]
    d = chain.draws["d"]
    p = L.shape[1]
    B = (np.eye(p)[None, :, :] - L) * d[:, None, :]
    return B @ np.transpose(B, (0, 2, 1))

def summarize_precision(chain, levels=(0.025, 0.975)) -> PrecisionSummary:
    """Elementwise posterior means and quantile bounds over stored draws."""
    omegas = omega_draws(chain)
    if omegas.shape[0] == 0:
        raise ValueError("chain holds no stored draws")
    mean = omegas.mean(axis=0)
    mean = (mean + mean.T) / 2.0
    lo = np.quantile(omegas, levels[0], axis=0)
    hi = np.quantile(omegas, levels[1], axis=0)
    return PrecisionSummary(
        omega_mean=mean,
        partial_corr=partial_correlations(mean),
        omega_lo=lo,
        omega_hi=hi,
        levels=tuple(levels),
    )

def extract_edges(summary: PrecisionSummary, threshold: float) -> EdgeSet:
    """Edges where the posterior-mean partial correlation exceeds ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    rho = summary.partial_corr
    p = rho.shape[0]
    pairs, scores = [], []
    for i in range(p):
        for j in range(i + 1, p):
            if abs(rho[i, j]) > threshold:
                pairs.append((i, j))
                scores.append(rho[i, j])
    return EdgeSet(pairs=pairs, scores=np.asarray(scores), threshold=threshold)


def baseline_precision(Y: np.ndarray, rho_blend: float = 0.1) -> np.ndarray:
    """Inverse of the diagonally-blended sample covariance ("iid-baseline").

    Blends the sample covariance toward its diagonal with weight
    ``rho_blend``; if the blend is numerically degenerate the weight is
    raised to 0.5 with a warning.
    """
    Y = np.asarray(Y, dtype=float)
    p, T = Y.shape
    if T <= 3:
        raise ValueError("need more than 3 time points")
    Yc = Y - Y.mean(axis=1, keepdims=True)
    cov = Yc @ Yc.T / T
    blend = (1.0 - rho_blend) * cov + rho_blend * np.diag(np.diag(cov))
    if np.linalg.eigvalsh(blend)[0] <= 1e-10 * np.trace(blend) / p:
        warnings.warn("degenerate covariance; raising blend weight to 0.5")
        blend = 0.5 * cov + 0.5 * np.diag(np.diag(cov))
        blend += 1e-8 * np.trace(blend) / p * np.eye(p)
    return np.linalg.inv(blend)


def score_estimate(omega_hat: np.ndarray, omega_true: np.ndarray, threshold: float = 0.1) -> dict:
    """Error metrics between an estimated and a true precision matrix.

    Edge recovery compares the partial-correlation patterns of both
    matrices at the same scaled ``threshold``, so a perfect estimate scores
    MCC = 1 regardless of the threshold.
    """
    omega_hat = np.asarray(omega_hat, dtype=float)
    omega_true = np.asarray(omega_true, dtype=float)
    if omega_hat.shape != omega_true.shape:
        raise ValueError("shape mismatch")
    p = omega_hat.shape[0]
    diff = omega_hat - omega_true
    frob2 = float(np.sum(diff * diff))

    iu = np.triu_indices(p, k=1)
    pred = np.abs(partial_correlations(omega_hat)[iu]) > threshold
    truth = np.abs(partial_correlations(omega_true)[iu]) > threshold
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    denom = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = (tp * tn - fp * fn) / denom if denom > 0 else (1.0 if fp + fn == 0 else 0.0)
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return {
        "frobenius_sq": frob2,
        "scaled_mse": frob2 / p**2,
        "edge_precision": precision,
        "edge_recall": recall,
        "edge_mcc": float(mcc),
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
    }
