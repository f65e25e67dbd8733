"""Core parameterization: modified Cholesky factors, Cayley rotations, and
the deterministic maps between sampler coordinates and model matrices.

Conventions
-----------
* ``L`` is strictly lower triangular, ``d`` strictly positive, and the
  contemporaneous precision matrix is ``Omega = (I - L) D^2 (I - L)^T``
  with ``D = Diag(d)``.
* The rotation is stored through a skew-symmetric matrix ``A`` (packed as
  its ``p(p-1)/2`` sub-diagonal entries) and realized by the Cayley map
  ``U = (I - A)(I + A)^{-1}``, which is always special orthogonal.
* The whitening transform pairs with that factorization: with
  ``B = (I - L) D`` (so ``Omega = B B^T``), the latent coordinates are
  ``Z = U^T B^T Y = U^T D (I - L)^T Y``, which makes ``Cov(Z) = I`` exactly
  when ``Cov(Y) = Omega^{-1}``.
* Sampler coordinates hold the *raw* (un-thresholded) entries of ``L`` and
  ``A``; thresholding is applied lazily when matrices are formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels

__all__ = [
    "CholeskyFactor",
    "CayleyFactor",
    "ThresholdLevels",
    "ModelState",
    "pack_lower",
    "unpack_lower",
    "skew_from_packed",
    "effective_L",
    "effective_A",
    "cayley_rotation",
    "precision_from_factors",
    "latent_from_observed",
    "observed_from_latent",
]


@lru_cache(maxsize=64)
def lower_indices(p: int):
    """Cached strictly-lower index pair for p x p matrices."""
    return np.tril_indices(p, k=-1)

def pack_lower(M: np.ndarray) -> np.ndarray:
    """Extract the strictly-lower-triangular entries of ``M`` row by row."""
    i, j = lower_indices(M.shape[0])
    return np.asarray(M)[i, j].copy()

def unpack_lower(values: np.ndarray, p: int) -> np.ndarray:
    """Inverse of :func:`pack_lower`: a strictly-lower p x p matrix."""
    out = np.zeros((p, p))
    i, j = lower_indices(p)
    out[i, j] = values
    return out

def skew_from_packed(values: np.ndarray, p: int) -> np.ndarray:
    """Skew-symmetric matrix with sub-diagonal entries ``values``."""
    A = unpack_lower(values, p)
    return A - A.T


@dataclass(frozen=True)
class CholeskyFactor:
    """Strictly-lower ``L`` and positive scale vector ``d``."""

    L: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError("L must be square")
        if np.any(np.triu(L) != 0.0):
            raise ValueError("L must be strictly lower triangular")
        if d.shape != (L.shape[0],):
            raise ValueError("d has wrong length")
        if np.any(d <= 0.0):
            raise ValueError("all entries of d must be positive")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.L.shape[0]


@dataclass(frozen=True)
class CayleyFactor:
    """Skew-symmetric factor stored by its sub-diagonal entries."""

    packed: np.ndarray
    p: int

    def __post_init__(self):
        packed = np.asarray(self.packed, dtype=float)
        if packed.shape != (self.p * (self.p - 1) // 2,):
            raise ValueError("packed entries have wrong length for p")
        object.__setattr__(self, "packed", packed)

    def matrix(self) -> np.ndarray:
        return skew_from_packed(self.packed, self.p)


@dataclass(frozen=True)
class ThresholdLevels:
    """Hard threshold for L and soft threshold for A."""

    lam: float = 0.0
    lam_alt: float = 0.0

    def __post_init__(self):
        if self.lam < 0 or self.lam_alt < 0:
            raise ValueError("thresholds must be nonnegative")


@dataclass(frozen=True)
class ModelState:
    """Full set of sampled coordinates.

    ``L_raw`` and ``a_raw`` are pre-threshold; ``log_d`` is the log of the
    Cholesky scale; ``xi`` (p x R) and ``eta`` (K x R) are the low-rank
    spectral loadings; the remaining fields are shrinkage latents and the
    location hyperparameter of the prior on ``d``.
    """

    L_raw: np.ndarray
    log_d: np.ndarray
    a_raw: np.ndarray
    thresholds: ThresholdLevels
    xi: np.ndarray
    eta: np.ndarray
    v: np.ndarray = field(default=None)
    delta: np.ndarray = field(default=None)
    sigma_kappa: float = 1.0
    d_loc: float = 1.0

    def __post_init__(self):
        p = self.L_raw.shape[0]
        if self.log_d.shape != (p,):
            raise ValueError("log_d has wrong length")
        if self.a_raw.shape != (p * (p - 1) // 2,):
            raise ValueError("a_raw has wrong length")
        if self.xi.shape[0] != p or self.eta.shape[1] != self.xi.shape[1]:
            raise ValueError("xi/eta shapes are inconsistent")
        if self.v is None:
            object.__setattr__(self, "v", np.ones_like(self.xi))
        if self.delta is None:
            object.__setattr__(self, "delta", np.ones(self.xi.shape[1]))
        if self.sigma_kappa <= 0 or self.d_loc <= 0:
            raise ValueError("sigma_kappa and d_loc must be positive")

    @property
    def p(self) -> int:
        return self.L_raw.shape[0]

    @property
    def d(self) -> np.ndarray:
        return np.exp(self.log_d)

    @property
    def rank(self) -> int:
        return self.xi.shape[1]

    @property
    def n_basis(self) -> int:
        return self.eta.shape[0]

    def with_(self, **changes) -> "ModelState":
        """Successor state with the given fields replaced."""
        return replace(self, **changes)

    @classmethod
    def identity(cls, p: int, K: int, R: int) -> "ModelState":
        """State mapping Z = Y: L = 0, d = 1, A = 0, uniform spectra."""
        return cls(
            L_raw=np.zeros((p, p)),
            log_d=np.zeros(p),
            a_raw=np.zeros(p * (p - 1) // 2),
            thresholds=ThresholdLevels(),
            xi=np.zeros((p, R)),
            eta=np.zeros((K, R)),
        )


def effective_L(L_raw: np.ndarray, lam: float) -> np.ndarray:
    """Entrywise hard threshold: entries with ``|z| <= lam`` become 0."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return kernels.hard_threshold(np.asarray(L_raw, dtype=float), lam)

def effective_A(A_raw: np.ndarray, lam_alt: float) -> np.ndarray:
    """Entrywise soft threshold ``z (1 - lam'/|z|)_+``, skew-symmetry kept.

    Accepts either a packed sub-diagonal vector or a full skew matrix and
    returns the same layout.
    """
    if lam_alt < 0:
        raise ValueError("lam_alt must be nonnegative")
    A_raw = np.asarray(A_raw, dtype=float)
    if A_raw.ndim == 1:
        return kernels.soft_threshold(A_raw, lam_alt)
    packed = kernels.soft_threshold(pack_lower(A_raw), lam_alt)
    return skew_from_packed(packed, A_raw.shape[0])

def cayley_rotation(A: np.ndarray) -> np.ndarray:
    """Special orthogonal matrix ``(I - A)(I + A)^{-1}`` from skew ``A``.

    ``I + A`` is invertible for every skew-symmetric ``A`` (its eigenvalues
    are ``1 + i*t``), so the solve below cannot be singular in exact
    arithmetic; a LinAlgError is surfaced as-is should it ever trip.
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    eye = np.eye(p)
    # U = (I - A)(I + A)^{-1}; solve (I + A)^T X^T = (I - A)^T for X.
    return np.linalg.solve((eye + A).T, (eye - A).T).T

def precision_from_factors(L: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Precision matrix ``(I - L) D^2 (I - L)^T``, symmetrized exactly."""
    p = L.shape[0]
    B = (np.eye(p) - L) * d[np.newaxis, :]
    omega = B @ B.T
    return (omega + omega.T) / 2.0


def _state_matrices(state: ModelState):
    L_eff = effective_L(state.L_raw, state.thresholds.lam)
    A_eff = skew_from_packed(
        effective_A(state.a_raw, state.thresholds.lam_alt), state.p
    )
    return L_eff, state.d, cayley_rotation(A_eff)

def latent_from_observed(Y: np.ndarray, state: ModelState) -> np.ndarray:
    """Map observed columns to latent coordinates: ``Z = U^T D (I - L)^T Y``."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] != state.p:
        raise ValueError(f"Y has {Y.shape[0]} rows, state has p={state.p}")
    L_eff, d, U = _state_matrices(state)
    return U.T @ (d[:, None] * (Y - L_eff.T @ Y))

def observed_from_latent(Z: np.ndarray, state: ModelState) -> np.ndarray:
    """Inverse of :func:`latent_from_observed` via triangular solves.

    ``Y = (I - L)^{-T} D^{-1} U Z``; the unit-triangular system is solved
    by back-substitution, never by forming the inverse.
    """
    from scipy.linalg import solve_triangular

    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != state.p:
        raise ValueError(f"Z has {Z.shape[0]} rows, state has p={state.p}")
    L_eff, d, U = _state_matrices(state)
    rhs = (U @ Z) / d[:, None]
    return solve_triangular(
        np.eye(state.p) - L_eff.T, rhs, lower=False, unit_diagonal=True
    )
