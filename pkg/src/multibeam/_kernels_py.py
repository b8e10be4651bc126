"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def toeplitz_sums(theta_l, delta, n_steps, offset, m):
    theta = theta_l + (np.arange(n_steps) + offset) * delta
    k = np.arange(m)
    return delta * np.exp(1j * np.pi * np.outer(k, np.sin(theta))).sum(axis=1)


def _ratio(coeffs, cp, sp):
    a0, a1, a2, b0, b1, b2 = coeffs
    return (a0 + a1 * cp + a2 * sp) / (b0 + b1 * cp + b2 * sp)


def ratio_grid_argmax(objective, constraints, thresholds, resolution):
    phi = -np.pi + np.arange(resolution) * (2.0 * np.pi / resolution)
    cp, sp = np.cos(phi), np.sin(phi)
    feasible = np.ones(resolution, dtype=bool)
    for row, t in zip(np.asarray(constraints).reshape(-1, 6), thresholds):
        feasible &= _ratio(row, cp, sp) >= t
    count = int(feasible.sum())
    if count == 0:
        return -1, 0.0, 0
    vals = np.where(feasible, _ratio(objective, cp, sp), -np.inf)
    best = int(np.argmax(vals))
    return best, float(vals[best]), count


def hermitian_forms(w, q):
    w = np.asarray(w)
    return np.einsum("si,si->s", w.conj(), w @ np.asarray(q).T).real
