"""Spectral density family and the orthonormal frequency-domain transform.

Each latent series has a power spectrum ``g(w) = 2 sum_k theta_k B*_k(|w|/pi)``
built from normalized cubic B-splines on [0, 1] (``B*_k = B_k / int B_k``).
With ``theta_k >= 0`` and ``sum_k theta_k = 1/2`` the frequency average of
``g`` over [-pi, pi] is exactly 1, which encodes the unit-variance constraint
on the latent series. The ``theta`` rows come from a low-rank matrix
``kappa = xi eta^T`` through the bounded link ``Psi``.

The data transform is the orthonormal real Fourier matrix: a 1/sqrt(T) row
at frequency zero, interleaved sqrt(2/T) cosine/sine rows at the interior
Fourier frequencies ``w_l = 2 pi (l-1)/T``, and a 1/sqrt(T) alternating-sign
row at the Nyquist frequency for even T. Under the model the transformed
latent coordinates are approximately independent ``N(0, g_j(w_k(t)))`` with
slot-to-frequency map ``k(t) = floor(t/2) + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from . import kernels

__all__ = [
    "BSplineBasis",
    "SpectralCoeffs",
    "WhittleData",
    "link",
    "theta_from_lowrank",
    "spectral_value",
    "whittle_transform",
    "fourier_frequencies",
    "slot_frequency_map",
    "build_S",
]

_DEGREE = 3  # cubic


class BSplineBasis:
    """Normalized cubic B-spline basis on [0, 1] with clamped uniform knots.

    ``K`` basis functions require ``K - 4`` interior knots. Normalization
    divides each ``B_k`` by its exact integral ``(t_{k+4} - t_k) / 4``, so
    every normalized function integrates to 1 over [0, 1].
    """

    def __init__(self, K: int):
        if K < 4:
            raise ValueError("cubic basis needs K >= 4")
        self.K = K
        interior = np.linspace(0.0, 1.0, K - 2)[1:-1]
        self.knots = np.concatenate(
            (np.zeros(4), interior, np.ones(4))
        )
        # exact integral of each unnormalized cubic B-spline
        self.integrals = (self.knots[4 : 4 + K] - self.knots[:K]) / 4.0

    def evaluate_raw(self, u) -> np.ndarray:
        """Unnormalized basis values, shape (n_points, K)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise ValueError("u must lie in [0, 1]")
        out = BSpline.design_matrix(u, self.knots, _DEGREE, extrapolate=False)
        return np.asarray(out.todense())

    def evaluate(self, u) -> np.ndarray:
        """Normalized basis values ``B*_k(u)``, shape (n_points, K)."""
        return self.evaluate_raw(u) / self.integrals[None, :]


def bspline_basis(K: int, u: float) -> np.ndarray:
    """Normalized basis values at a single point, shape (K,)."""
    return BSplineBasis(K).evaluate(u)[0]

def link(u):
    """Monotone map of the real line onto (0, 1); ``link(0) = 1/2``."""
    return kernels.link_psi(u)


@dataclass(frozen=True)
class SpectralCoeffs:
    """Low-rank loadings for the per-series basis weights."""

    xi: np.ndarray   # (p, R)
    eta: np.ndarray  # (K, R)

    def __post_init__(self):
        if self.xi.ndim != 2 or self.eta.ndim != 2:
            raise ValueError("xi and eta must be matrices")
        if self.xi.shape[1] != self.eta.shape[1]:
            raise ValueError("xi and eta must share the rank dimension")

    @property
    def kappa(self) -> np.ndarray:
        return self.xi @ self.eta.T


def theta_from_lowrank(coeffs: SpectralCoeffs) -> np.ndarray:
    """Basis-weight matrix, rows summing to 1/2 exactly.

    ``theta[j, k] = Psi(kappa[j, k]) / (2 sum_l Psi(kappa[j, l]))``.
    """
    theta, _ = kernels.theta_rows(coeffs.kappa)
    return theta

def spectral_value(theta_row: np.ndarray, omega, basis: BSplineBasis) -> np.ndarray:
    """Power spectrum ``g(w) = 2 sum_k theta_k B*_k(|w|/pi)`` at ``omega``.

    The frequency average of ``g`` over [-pi, pi] is 1 for any valid row.
    """
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(np.abs(omega_arr) > np.pi):
        raise ValueError("omega must lie in [-pi, pi]")
    vals = 2.0 * (basis.evaluate(np.abs(omega_arr) / np.pi) @ theta_row)
    return vals if np.ndim(omega) else float(vals[0])

def curve_matrix(theta: np.ndarray, omegas: np.ndarray, basis: BSplineBasis) -> np.ndarray:
    """Stack of per-series spectra: ``G[j, m] = g_j(omegas[m])``."""
    design = 2.0 * basis.evaluate(np.abs(omegas) / np.pi)  # (n_freq, K)
    return theta @ design.T


def fourier_frequencies(T: int) -> np.ndarray:
    """``w_l = 2 pi (l-1)/T`` for ``l = 1..(T+1)//2 (+1 if T even)``."""
    n_freq = T // 2 + 1 if T % 2 == 0 else (T + 1) // 2
    return 2.0 * np.pi * np.arange(n_freq) / T

def slot_frequency_map(T: int):
    """0-based slot-to-frequency index map and per-frequency slot counts.

    Slot ``t`` (0-based) carries frequency index ``(t + 1) // 2``, i.e. the
    1-based rule ``k(t) = floor(t/2) + 1``; interior frequencies own a
    cosine and a sine slot.
    """
    kmap = (np.arange(T) + 1) // 2
    counts = np.bincount(kmap).astype(float)
    return kmap, counts


@dataclass(frozen=True)
class WhittleData:
    """Orthonormal real-Fourier transform of a data matrix.

    ``W`` is p x T with columns ordered (c1, c2, s2, c3, s3, ...);
    ``kmap[t]`` gives the frequency index of slot t and ``omegas`` the
    Fourier frequencies themselves.
    """

    W: np.ndarray
    kmap: np.ndarray
    counts: np.ndarray
    omegas: np.ndarray

    @property
    def p(self) -> int:
        return self.W.shape[0]

    @property
    def T(self) -> int:
        return self.W.shape[1]


def whittle_transform(Y: np.ndarray) -> WhittleData:
    """Rowwise orthonormal real Fourier transform of ``Y`` (p x T).

    Implemented with an rfft; equivalent to ``W = Y F^T`` for the dense
    orthonormal matrix ``F`` described in the module docstring.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    T = Y.shape[1]
    if T < 4:
        raise ValueError("need at least 4 time points")
    spec = np.fft.rfft(Y, axis=1)
    cos_part = spec.real
    sin_part = -spec.imag
    W = np.empty_like(Y)
    W[:, 0] = cos_part[:, 0] / np.sqrt(T)
    scale = np.sqrt(2.0 / T)
    if T % 2 == 0:
        interior = np.arange(1, T // 2)
        W[:, -1] = cos_part[:, T // 2] / np.sqrt(T)
    else:
        interior = np.arange(1, (T + 1) // 2)
    W[:, 2 * interior - 1] = scale * cos_part[:, interior]
    W[:, 2 * interior] = scale * sin_part[:, interior]
    kmap, counts = slot_frequency_map(T)
    return WhittleData(W=W, kmap=kmap, counts=counts, omegas=fourier_frequencies(T))

def build_S(t: int, G: np.ndarray, kmap: np.ndarray) -> np.ndarray:
    """Diagonal of ``S_t``: per-series spectrum at slot ``t`` (1-based).

    ``G`` is the (p, n_freq) curve matrix; consecutive sine/cosine slots
    share a frequency, so ``S_2 == S_3`` etc.
    """
    if not 1 <= t <= len(kmap):
        raise IndexError(f"slot {t} outside 1..{len(kmap)}")
    return G[:, kmap[t - 1]].copy()
