# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel core: fused single-pass versions of the elementwise and
reduction stages of the likelihood. Mirrors ``_ref`` exactly; the parity
tests compare the two backends on random inputs."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan, fabs, log, M_PI

cnp.import_array()


def hard_threshold(x, double lam):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = _hard(x.reshape(-1), lam)
    return out.reshape(x.shape)

cdef _hard(double[::1] x, double lam):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = x[i] if fabs(x[i]) > lam else 0.0
    return out_arr


def soft_threshold(x, double lam):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = _soft(x.reshape(-1), lam)
    return out.reshape(x.shape)

cdef _soft(double[::1] x, double lam):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double v, mag
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        v = x[i]
        mag = fabs(v) - lam
        out[i] = 0.0 if mag <= 0.0 else (mag if v > 0.0 else -mag)
    return out_arr


def smooth_threshold(x, double lam, double h0):
    """(m(x), m'(x)) for the smoothed hard threshold, elementwise."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    val, der = _smooth(x.reshape(-1), lam, h0)
    return val.reshape(x.shape), der.reshape(x.shape)

cdef _smooth(double[::1] x, double lam, double h0):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double u, s, ds, v, lam2 = lam * lam
    val_arr = np.empty(n)
    der_arr = np.empty(n)
    cdef double[::1] val = val_arr
    cdef double[::1] der = der_arr
    for i in range(n):
        v = x[i]
        u = (v * v - lam2) / h0
        s = 0.5 + atan(u) / M_PI
        ds = 2.0 * v / (M_PI * h0 * (1.0 + u * u))
        val[i] = v * s
        der[i] = s + v * ds
    return val_arr, der_arr


def whittle_terms(V, G, kmap, counts):
    cdef double[:, ::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef long[::1] km = np.ascontiguousarray(kmap, dtype=np.int64)
    cdef double[::1] cn = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t j, t, m
    cdef Py_ssize_t p = Vv.shape[0], T = Vv.shape[1], n_freq = Gv.shape[1]
    cdef double quad = 0.0, logdet = 0.0, v
    for j in range(p):
        for t in range(T):
            v = Vv[j, t]
            quad += v * v / Gv[j, km[t]]
        for m in range(n_freq):
            logdet += cn[m] * log(Gv[j, m])
    return quad, logdet


def whiten_columns(V, G, kmap):
    cdef double[:, ::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef long[::1] km = np.ascontiguousarray(kmap, dtype=np.int64)
    cdef Py_ssize_t j, t, p = Vv.shape[0], T = Vv.shape[1]
    out_arr = np.empty((p, T))
    cdef double[:, ::1] out = out_arr
    for j in range(p):
        for t in range(T):
            out[j, t] = Vv[j, t] / Gv[j, km[t]]
    return out_arr


def curve_grad(V, G, kmap, counts):
    cdef double[:, ::1] Vv = np.ascontiguousarray(V, dtype=np.float64)
    cdef double[:, ::1] Gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef long[::1] km = np.ascontiguousarray(kmap, dtype=np.int64)
    cdef double[::1] cn = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t j, t, m
    cdef Py_ssize_t p = Vv.shape[0], T = Vv.shape[1], n_freq = Gv.shape[1]
    cdef double v, g
    out_arr = np.zeros((p, n_freq))
    cdef double[:, ::1] out = out_arr
    for j in range(p):
        for t in range(T):
            v = Vv[j, t]
            out[j, km[t]] += v * v
        for m in range(n_freq):
            g = Gv[j, m]
            out[j, m] = 0.5 * (out[j, m] / g - cn[m]) / g
    return out_arr


def link_psi(u):
    u = np.asarray(u, dtype=np.float64)
    scalar = u.ndim == 0
    u = np.ascontiguousarray(np.atleast_1d(u))
    out = _psi(u.reshape(-1)).reshape(u.shape)
    return float(out[0]) if scalar else out

cdef _psi(double[::1] u):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double v
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        v = u[i]
        out[i] = 0.5 * (1.0 + v / (1.0 + fabs(v)))
    return out_arr


def theta_rows(kappa):
    cdef double[:, ::1] kv = np.ascontiguousarray(kappa, dtype=np.float64)
    cdef Py_ssize_t j, k, p = kv.shape[0], K = kv.shape[1]
    cdef double v, s
    theta_arr = np.empty((p, K))
    rowsum_arr = np.empty(p)
    cdef double[:, ::1] theta = theta_arr
    cdef double[::1] rowsum = rowsum_arr
    for j in range(p):
        s = 0.0
        for k in range(K):
            v = kv[j, k]
            v = 0.5 * (1.0 + v / (1.0 + fabs(v)))
            theta[j, k] = v
            s += v
        rowsum[j] = s
        for k in range(K):
            theta[j, k] /= 2.0 * s
    return theta_arr, rowsum_arr


def kappa_chain(kappa, theta, row_sum, dtheta):
    cdef double[:, ::1] kv = np.ascontiguousarray(kappa, dtype=np.float64)
    cdef double[:, ::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef double[::1] rs = np.ascontiguousarray(row_sum, dtype=np.float64)
    cdef double[:, ::1] dth = np.ascontiguousarray(dtheta, dtype=np.float64)
    cdef Py_ssize_t j, k, p = kv.shape[0], K = kv.shape[1]
    cdef double inner, a
    out_arr = np.empty((p, K))
    cdef double[:, ::1] out = out_arr
    for j in range(p):
        inner = 0.0
        for k in range(K):
            inner += dth[j, k] * th[j, k]
        inner *= 2.0
        for k in range(K):
            a = 1.0 + fabs(kv[j, k])
            out[j, k] = (dth[j, k] - inner) / (2.0 * a * a) / (2.0 * rs[j])
    return out_arr
