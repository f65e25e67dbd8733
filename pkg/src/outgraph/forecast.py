"""One-step-ahead forecasting from a fitted chain.

Per stored draw: map the data to latent coordinates with that draw's
transform, forecast each latent series with the best linear predictor
built from its fitted spectrum (autocovariances by numerical inversion of
the spectral representation), and map the predicted latent column back.
The point forecast is the mean of the per-draw forecasts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_toeplitz, solve_triangular

from .params import cayley_rotation, skew_from_packed
from .spectral import BSplineBasis

__all__ = [
    "ForecastResult",
    "acvf_from_spectrum",
    "blp_one_step",
    "forecast_one_step",
]

MAX_HISTORY = 200
_TOEPLITZ_RIDGE = 1e-8


@dataclass(frozen=True)
class ForecastResult:
    point: np.ndarray            # length-p forecast of the next column
    per_draw: np.ndarray | None  # (n_draws, p) forecasts
    mse: float | None            # realized one-step MSE when truth given


def _acvf_grid(n_grid: int, h_max: int):
    """Frequency grid on [0, 2pi) folded to [0, pi] and its cosine table."""
    om = 2.0 * np.pi * np.arange(n_grid) / n_grid
    folded = np.minimum(om, 2.0 * np.pi - om)
    lags = np.arange(h_max + 1)
    return folded, np.cos(np.outer(lags, om))

def acvf_from_spectrum(theta_row: np.ndarray, max_lag: int, basis: BSplineBasis) -> np.ndarray:
    """Autocovariances ``gamma(0..max_lag)`` of a fitted spectrum.

    Riemann inversion ``gamma(h) = mean_grid g(w) cos(h w)`` over a dense
    frequency grid (size ``max(512, 4 max_lag)``); ``gamma(0)`` lands on 1
    up to quadrature error because the spectra average to 1.
    """
    n_grid = max(512, 4 * max_lag)
    folded, cos_table = _acvf_grid(n_grid, max_lag)
    g = 2.0 * (basis.evaluate(folded / np.pi) @ theta_row)
    return cos_table @ g / n_grid

def blp_one_step(z_history: np.ndarray, gamma: np.ndarray) -> float:
    """Best linear prediction of the next value from a finite history.

    Solves the Toeplitz system of the last ``min(len(z), 200)`` values by
    Levinson recursion; a 1e-8 diagonal regularizer is the fallback for
    (near-)singular systems.
    """
    z = np.asarray(z_history, dtype=float)
    n = min(len(z), MAX_HISTORY, len(gamma) - 1)
    if n < 1:
        return 0.0
    recent = z[-n:]
    # coefficients on (z_T, z_{T-1}, ..., z_{T-n+1})
    rhs = gamma[1 : n + 1]
    try:
        coef = solve_toeplitz(gamma[:n], rhs)
        if not np.all(np.isfinite(coef)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        col = gamma[:n].copy()
        col[0] += _TOEPLITZ_RIDGE
        coef = solve_toeplitz(col, rhs)
        if not np.all(np.isfinite(coef)):
            raise np.linalg.LinAlgError("singular prediction system")
    return float(coef @ recent[::-1])


def _draw_transform(draw_L, draw_d, draw_a_eff):
    p = draw_L.shape[0]
    U = cayley_rotation(skew_from_packed(draw_a_eff, p))
    return draw_L, draw_d, U

def forecast_one_step(Y: np.ndarray, chain, truth: np.ndarray | None = None) -> ForecastResult:
    """Posterior-mean one-step forecast of the next observation column."""
    if chain.n_draws == 0:
        raise ValueError("chain holds no stored draws")
    Y = np.asarray(Y, dtype=float)
    p, T = Y.shape
    K = chain.draws["theta"].shape[2]
    basis = BSplineBasis(K)
    h_max = min(T, MAX_HISTORY)

    n = chain.n_draws
    per_draw = np.empty((n, p))
    eye = np.eye(p)
    # shared inversion grid across draws and series
    n_grid = max(512, 4 * h_max)
    folded, cos_table = _acvf_grid(n_grid, h_max)
    design = 2.0 * basis.evaluate(folded / np.pi)  # (n_grid, K)
    for i in range(n):
        L, d, U = _draw_transform(
            chain.draws["L_eff"][i], chain.draws["d"][i], chain.draws["a_eff"][i]
        )
        Z = U.T @ (d[:, None] * (Y - L.T @ Y))
        gammas = (chain.draws["theta"][i] @ design.T) @ cos_table.T / n_grid
        z_next = np.array(
            [blp_one_step(Z[j], gammas[j]) for j in range(p)]
        )
        rhs = (U @ z_next[:, None]) / d[:, None]
        per_draw[i] = solve_triangular(
            eye - L.T, rhs, lower=False, unit_diagonal=True
        )[:, 0]
    point = per_draw.mean(axis=0)
    mse = float(np.mean((point - truth) ** 2)) if truth is not None else None
    return ForecastResult(point=point, per_draw=per_draw, mse=mse)
