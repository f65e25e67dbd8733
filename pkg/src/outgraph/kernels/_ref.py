"""Pure-numpy reference backend for the hot likelihood kernels.

Matrix products and linear solves live in the calling modules (BLAS/LAPACK
is already optimal for those); this backend covers the elementwise and
reduction stages that the compiled core fuses into single passes.

All inputs are float64 arrays; ``kmap`` maps a transform slot ``t`` to its
frequency index and ``counts[m]`` is the number of slots sharing frequency
``m`` (1 for the zero/Nyquist rows, 2 for interior cosine/sine pairs).
"""

import numpy as np


def hard_threshold(x, lam):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > lam, x, 0.0)

def soft_threshold(x, lam):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)

def smooth_threshold(x, lam, h0):
    """Smoothed hard threshold ``m(x) = x * s(x)`` and its derivative.

    ``s(x) = 1/2 + arctan((x^2 - lam^2)/h0) / pi`` approximates the
    indicator ``1{|x| > lam}``.
    """
    x = np.asarray(x, dtype=float)
    u = (x * x - lam * lam) / h0
    s = 0.5 + np.arctan(u) / np.pi
    ds = 2.0 * x / (np.pi * h0 * (1.0 + u * u))
    return x * s, s + x * ds

def whittle_terms(V, G, kmap, counts):
    """Quadratic and log-variance sums of the frequency-domain likelihood.

    Returns ``(quad, logdet_s)`` with ``quad = sum_{j,t} V[j,t]^2 / S[j,t]``
    and ``logdet_s = sum_{j,t} log S[j,t]`` where ``S[j,t] = G[j, kmap[t]]``.
    """
    S = G[:, kmap]
    quad = float(np.sum(V * V / S))
    logdet_s = float(np.dot(np.log(G).sum(axis=0), counts))
    return quad, logdet_s

def whiten_columns(V, G, kmap):
    """``P[j,t] = V[j,t] / G[j, kmap[t]]``."""
    return V / G[:, kmap]

def curve_grad(V, G, kmap, counts):
    """Gradient of the log-likelihood with respect to the curve values G.

    ``dG[j,m] = -counts[m]/(2 G[j,m]) + R2[j,m]/(2 G[j,m]^2)`` where
    ``R2[j,m]`` sums ``V^2`` over the slots at frequency ``m``.
    """
    p, n_freq = G.shape
    R2 = np.zeros((p, n_freq))
    np.add.at(R2, (slice(None), kmap), V * V)
    return 0.5 * (R2 / G - counts[None, :]) / G

def link_psi(u):
    """Bounded link ``Psi(u) = (1 + u/(1+|u|)) / 2`` onto (0, 1)."""
    u = np.asarray(u, dtype=float)
    return 0.5 * (1.0 + u / (1.0 + np.abs(u)))

def theta_rows(kappa):
    """Rows of basis weights: ``theta = Psi(kappa) / (2 row_sum)``.

    Returns ``(theta, row_sum)``; each theta row sums to 1/2 exactly by
    construction.
    """
    psi = link_psi(kappa)
    row_sum = psi.sum(axis=1)
    return psi / (2.0 * row_sum[:, None]), row_sum

def kappa_chain(kappa, theta, row_sum, dtheta):
    """Chain rule through the normalized link: d(loglik)/d(kappa).

    ``dkappa[j,l] = Psi'(kappa[j,l]) / (2 row_sum[j])
                    * (dtheta[j,l] - 2 sum_k dtheta[j,k] theta[j,k])``.
    """
    dpsi = 0.5 / (1.0 + np.abs(kappa)) ** 2
    inner = 2.0 * np.sum(dtheta * theta, axis=1)
    return dpsi / (2.0 * row_sum[:, None]) * (dtheta - inner[:, None])
