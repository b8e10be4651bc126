"""Subbeam weight construction, steering, two-subbeam combination and ILS pattern synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .array import steering_matrix, steering_vector

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SubbeamPair:
    """Fixed (communication) and scanning subbeams with power split ``rho``."""

    w_c: np.ndarray = field(repr=False)
    w_s: np.ndarray = field(repr=False)
    rho: float = 0.5

    def __post_init__(self):
        w_c = np.asarray(self.w_c, dtype=complex)
        w_s = np.asarray(self.w_s, dtype=complex)
        if w_c.shape != w_s.shape or w_c.ndim != 1:
            raise ValueError("w_c and w_s must be vectors of the same length")
        for name, w in (("w_c", w_c), ("w_s", w_s)):
            if abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"{name} must have unit norm, got {np.linalg.norm(w):.3g}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        object.__setattr__(self, "w_c", w_c)
        object.__setattr__(self, "w_s", w_s)

    @property
    def P(self) -> float:
        return float(np.sqrt(self.rho * (1.0 - self.rho)))

    @property
    def M(self) -> int:
        return self.w_c.shape[0]


@dataclass(frozen=True)
class DesiredPattern:
    """Target waveform ``d_v = D_v * p_v`` on ``grid`` with per-angle weights ``D``.

    ``M`` is the number of array elements the pattern is meant for.
    """

    grid: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)
    D_v: np.ndarray = field(repr=False)
    p_v: np.ndarray = field(repr=False)
    M: int
    c_s: float = 1.0

    def __post_init__(self):
        for name, dtype in (("grid", float), ("D", float), ("D_v", float), ("p_v", complex)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=dtype))
        if self.M < 1:
            raise ValueError("M must be positive")
        n = len(self.grid)
        for name in ("D", "D_v", "p_v"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per grid angle")
        if np.any(np.asarray(self.D) < 0) or np.any(np.asarray(self.D_v) < 0):
            raise ValueError("D and D_v must be entrywise nonnegative")
        if np.any(np.abs(np.abs(self.p_v) - 1.0) > 1e-9):
            raise ValueError("p_v entries must have unit modulus")

    @property
    def d_v(self) -> np.ndarray:
        return self.D_v * self.p_v

    def with_phases(self, p_v) -> "DesiredPattern":
        return replace(self, p_v=np.asarray(p_v, dtype=complex))


def default_grid(n: int = 181) -> np.ndarray:
    return np.linspace(-np.pi / 2, np.pi / 2, n)


def conventional_beam(K_s: int, M: int, theta0: float = 0.0) -> np.ndarray:
    """Matched beam on the first ``K_s`` elements, zero elsewhere, unit norm."""
    if not 1 <= K_s <= M:
        raise ValueError(f"need 1 <= K_s <= M, got K_s={K_s}, M={M}")
    w = np.zeros(M, dtype=complex)
    w[:K_s] = np.conj(steering_vector(theta0, K_s)) / np.sqrt(K_s)
    return w


def steer(w, delta: float) -> np.ndarray:
    """Shift the pattern by ``sin(delta)`` in the sine domain."""
    w = np.asarray(w)
    return w * np.exp(-1j * np.pi * np.arange(w.shape[0]) * np.sin(delta))


def combine(pair: SubbeamPair, phi: float) -> np.ndarray:
    return np.sqrt(pair.rho) * pair.w_c + np.sqrt(1.0 - pair.rho) * np.exp(1j * phi) * pair.w_s


def multibeam_magnitude(w_c0, w_s0, rho: float, grid) -> np.ndarray:
    """Power-split magnitude of two ideal subbeams; ``rho`` may be 0 or 1 here."""
    A = steering_matrix(grid, len(w_c0))
    return np.sqrt(rho * np.abs(A @ w_c0) ** 2 + (1.0 - rho) * np.abs(A @ w_s0) ** 2)


def desired_multibeam(pair: SubbeamPair, grid=None, mainlobe_weights=None) -> DesiredPattern:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty angle grid")
    D = np.ones(grid.size) if mainlobe_weights is None else np.asarray(mainlobe_weights, float)
    D_v = multibeam_magnitude(pair.w_c, pair.w_s, pair.rho, grid)
    return DesiredPattern(grid, D, D_v, np.ones(grid.size, dtype=complex), pair.M)


def ils_synthesize(desired: DesiredPattern, max_iters: int = 50, tol: float = 1e-12,
                   full_output: bool = False):
    """Two-step iterative least squares fit of a weight vector to ``desired``.

    Alternates the minimum-norm least-squares solve of
    ``||D (A w - D_v p_v)||`` with the phase update ``p_v = exp(j arg(A w))``.
    Both steps minimise the same residual, so the recorded objective never
    increases. Stops early when the relative decrease drops below ``tol``.

    Returns the unit-norm weight vector, or ``(w, info)`` with
    ``full_output=True`` where ``info`` has keys ``objective`` (per-iteration
    residual), ``p_v`` (final phases) and ``iterations``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    A = steering_matrix(desired.grid, desired.M)
    DA = desired.D[:, None] * A
    DA_pinv = np.linalg.pinv(DA)
    target = desired.D * desired.D_v
    p_v = np.asarray(desired.p_v, dtype=complex)
    history = []
    w = None
    for _ in range(max_iters):
        w = DA_pinv @ (target * p_v)
        resid = DA @ w - target * p_v
        history.append(float(np.vdot(resid, resid).real))
        p_v = np.exp(1j * np.angle(A @ w))
        if len(history) > 1 and history[-2] - history[-1] <= tol * max(history[-2], 1e-300):
            break
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("desired magnitude is zero on the grid; nothing to fit")
    w = w / norm
    if full_output:
        return w, {"objective": history, "p_v": p_v, "iterations": len(history)}
    return w
