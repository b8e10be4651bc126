"""Brute-force references: dense phase grids, random unit vectors, fine integration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .array import angular_power_matrix

DEFAULT_RESOLUTION = 200_000
REFERENCE_STEPS = 4096


@dataclass(frozen=True)
class TrigRatio:
    """``(a0 + a1 cos + a2 sin) / (b0 + b1 cos + b2 sin)`` over the phase ``phi``.

    The kernel fast path in :func:`grid_search_phi` recognises this type.
    """

    coeffs: tuple

    def __call__(self, phi):
        a0, a1, a2, b0, b1, b2 = self.coeffs
        c, s = np.cos(phi), np.sin(phi)
        return (a0 + a1 * c + a2 * s) / (b0 + b1 * c + b2 * s)

    @classmethod
    def from_functions(cls, num: Callable[[float], float], den: Callable[[float], float]):
        """Fit from direct evaluations of two first-order trigonometric polynomials.

        Three samples at 0, pi/2 and pi pin down ``x0 + x1 cos + x2 sin``.
        """
        def fit(fn):
            f0, f1, f2 = fn(0.0), fn(np.pi / 2), fn(np.pi)
            x0 = 0.5 * (f0 + f2)
            return x0, 0.5 * (f0 - f2), f1 - x0

        return cls(tuple(float(x) for x in fit(num) + fit(den)))

    @classmethod
    def rayleigh(cls, combine_fn: Callable[[float], np.ndarray], Q):
        """``w(phi)^H Q w(phi) / ||w(phi)||^2`` for a phase-parametrised weight."""
        Q = np.asarray(Q)

        def num(phi):
            w = combine_fn(phi)
            return np.vdot(w, Q @ w).real

        def den(phi):
            w = combine_fn(phi)
            return np.vdot(w, w).real

        return cls.from_functions(num, den)


@dataclass(frozen=True)
class AtLeast:
    """Constraint ``func(phi) >= threshold``."""

    func: Callable
    threshold: float

    def __call__(self, phi):
        return self.func(phi) >= self.threshold


@dataclass(frozen=True)
class GridResult:
    phi: float | None
    value: float | None
    feasible_count: int
    resolution: int

    @property
    def empty(self) -> bool:
        return self.feasible_count == 0

    def __iter__(self):
        return iter((self.phi, self.value, self.feasible_count))


def phase_grid(resolution: int) -> np.ndarray:
    return -np.pi + np.arange(resolution) * (2.0 * np.pi / resolution)


def grid_search_phi(objective, constraints: Sequence = (), resolution: int = DEFAULT_RESOLUTION
                    ) -> GridResult:
    """Exhaustive search over ``resolution`` phases in [-pi, pi).

    ``constraints`` are callables returning a boolean mask (see
    :class:`AtLeast`); no tolerance is applied. Ties go to the lowest index.
    """
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000")
    constraints = list(constraints)
    fast = isinstance(objective, TrigRatio) and all(
        isinstance(c, AtLeast) and isinstance(c.func, TrigRatio) for c in constraints)
    if fast:
        rows = np.array([c.func.coeffs for c in constraints], dtype=float).reshape(-1, 6)
        thresholds = np.array([c.threshold for c in constraints], dtype=float)
        idx, value, count = kernels.ratio_grid_argmax(
            np.asarray(objective.coeffs, dtype=float), rows, thresholds, int(resolution))
    else:
        phi = phase_grid(resolution)
        mask = np.ones(resolution, dtype=bool)
        for c in constraints:
            mask &= np.asarray(c(phi), dtype=bool)
        count = int(mask.sum())
        idx = -1
        if count:
            vals = np.where(mask, objective(phi), -np.inf)
            idx = int(np.argmax(vals))
            value = float(vals[idx])
    if count == 0:
        return GridResult(None, None, 0, resolution)
    return GridResult(float(phase_grid(resolution)[idx]), float(value), int(count), resolution)


@dataclass(frozen=True)
class SampleResult:
    w: np.ndarray | None
    value: float | None
    feasible_count: int

    @property
    def empty(self) -> bool:
        return self.w is None

    def __iter__(self):
        return iter((self.w, self.value))


def random_unit_vectors(M: int, samples: int, rng) -> np.ndarray:
    z = rng.standard_normal((samples, M)) + 1j * rng.standard_normal((samples, M))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sampled_search_w(objective, constraints: Sequence = (), M: int = 2, samples: int = 100_000,
                     seed=0, batch: int = 20_000) -> SampleResult:
    """Best of ``samples`` uniform random unit complex vectors.

    ``objective`` and each constraint act on a batch ``(S, M)`` and return
    values / boolean masks of length ``S``.
    """
    if M < 1 or samples < 1:
        raise ValueError("M and samples must be positive")
    rng = np.random.default_rng(seed)
    best_w, best_val, count = None, -np.inf, 0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        W = random_unit_vectors(M, n, rng)
        done += n
        mask = np.ones(n, dtype=bool)
        for c in constraints:
            mask &= np.asarray(c(W), dtype=bool)
        if not mask.any():
            continue
        count += int(mask.sum())
        vals = np.where(mask, objective(W), -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_w, best_val = W[i].copy(), float(vals[i])
    if best_w is None:
        return SampleResult(None, None, 0)
    return SampleResult(best_w, best_val, count)


def quadratic_batch(Q) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised ``w^H Q w`` over rows of a batch, for sampled searches."""
    Q = np.asarray(Q, dtype=complex)
    return lambda W: kernels.hermitian_forms(np.ascontiguousarray(W, dtype=complex), Q)


def integration_reference(theta_l: float, theta_r: float, M: int, rule: str = "midpoint"):
    """Angular power matrix at ``N_I = 4096``, the ground truth for coarse sums."""
    return angular_power_matrix(theta_l, theta_r, REFERENCE_STEPS, M, rule=rule).matrix
