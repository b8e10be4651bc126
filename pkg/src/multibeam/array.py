"""Half-wavelength ULA geometry, narrowband multipath channels and beam metrics.

Angles are radians throughout. Element ``m`` of a steering vector carries the
phase ``pi * m * sin(theta)``; patterns use the plain transpose ``a(theta)^T w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ArrayConfig:
    num_elements: int

    def __post_init__(self):
        if self.num_elements < 2:
            raise ValueError(f"an array needs at least 2 elements, got {self.num_elements}")

    def steering(self, theta: float) -> np.ndarray:
        return steering_vector(theta, self.num_elements)


@dataclass(frozen=True)
class PathSpec:
    """One propagation path: complex gain, departure angle and arrival angle."""

    gain: complex
    aod: float
    aoa: float

    def __post_init__(self):
        for name in ("aod", "aoa"):
            value = getattr(self, name)
            if not -HALF_PI < value < HALF_PI:
                raise ValueError(f"{name}={value} must lie strictly inside (-pi/2, pi/2)")


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple
    tx_elements: int
    rx_elements: int
    matrix: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class ChannelSimConfig:
    """Rician channel draw: one LOS path plus ``num_paths - 1`` NLOS paths.

    ``spread`` is the full width of the uniform angular window (radians)
    centred on the LOS AoD; ``aoa_spread`` does the same around the LOS AoA
    and defaults to ``spread``.
    """

    los_aod: float = 0.0
    los_aoa: float = 0.0
    num_paths: int = 8
    los_nlos_db: float = 10.0
    spread: float = float(np.deg2rad(14.0))
    aoa_spread: float | None = None
    tx_elements: int = 16
    rx_elements: int = 16
    los_gain: float = 1.0


@dataclass(frozen=True)
class AngularPowerMatrix:
    theta_l: float
    theta_r: float
    steps: int
    matrix: np.ndarray = field(repr=False)


def _check_angle(theta):
    if not -HALF_PI <= theta <= HALF_PI:
        raise ValueError(f"angle {theta} outside [-pi/2, pi/2]")


def steering_vector(theta: float, M: int) -> np.ndarray:
    if M < 1:
        raise ValueError("steering vector needs M >= 1")
    _check_angle(theta)
    return np.exp(1j * np.pi * np.arange(M) * np.sin(theta))


def steering_matrix(grid: Sequence[float], M: int) -> np.ndarray:
    """Rows are ``a(theta_n)^T``; shape ``(len(grid), M)``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty angle grid")
    if np.any(np.abs(grid) > HALF_PI):
        raise ValueError("grid angles must lie in [-pi/2, pi/2]")
    return np.exp(1j * np.pi * np.outer(np.sin(grid), np.arange(M)))


def build_channel(paths: Sequence[PathSpec], tx: int, rx: int) -> MultipathChannel:
    if tx < 1 or rx < 1:
        raise ValueError("tx and rx must be positive")
    H = np.zeros((rx, tx), dtype=complex)
    for p in paths:
        H += p.gain * np.outer(steering_vector(p.aoa, rx), steering_vector(p.aod, tx))
    return MultipathChannel(tuple(paths), tx, rx, H)


def sample_rician_channel(cfg: ChannelSimConfig, seed) -> MultipathChannel:
    """Draw one channel; ``seed`` is anything ``numpy.random.default_rng`` accepts."""
    if cfg.num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    rng = np.random.default_rng(seed)
    paths = [PathSpec(complex(cfg.los_gain), cfg.los_aod, cfg.los_aoa)]
    n_nlos = cfg.num_paths - 1
    if n_nlos:
        aoa_spread = cfg.spread if cfg.aoa_spread is None else cfg.aoa_spread
        nlos_power = cfg.los_gain**2 * 10 ** (-cfg.los_nlos_db / 10)
        sigma = np.sqrt(nlos_power / n_nlos / 2)
        gains = sigma * (rng.standard_normal(n_nlos) + 1j * rng.standard_normal(n_nlos))
        aods = cfg.los_aod + rng.uniform(-0.5, 0.5, n_nlos) * cfg.spread
        aoas = cfg.los_aoa + rng.uniform(-0.5, 0.5, n_nlos) * aoa_spread
        paths += [PathSpec(complex(g), float(d), float(a)) for g, d, a in zip(gains, aods, aoas)]
    return build_channel(paths, cfg.tx_elements, cfg.rx_elements)


def _as_matrix(H):
    return H.matrix if isinstance(H, MultipathChannel) else np.asarray(H)


def mrc_receive_weights(H, w_t) -> np.ndarray:
    H = _as_matrix(H)
    w_t = np.asarray(w_t)
    if H.shape[1] != w_t.shape[0]:
        raise ValueError(f"channel has {H.shape[1]} tx columns, weight has {w_t.shape[0]} entries")
    return np.conj(H @ w_t)


def _norm_sq(w):
    n2 = float(np.vdot(w, w).real)
    if n2 == 0.0:
        raise ValueError("beamforming vector must be nonzero")
    return n2


def received_power(H, w_t) -> float:
    """Rayleigh quotient ``||H w||^2 / ||w||^2`` (MRC output power)."""
    H = _as_matrix(H)
    w_t = np.asarray(w_t)
    hw = H @ w_t
    return float(np.vdot(hw, hw).real) / _norm_sq(w_t)


def bf_gain(theta: float, w) -> float:
    w = np.asarray(w)
    return float(abs(steering_vector(theta, w.shape[0]) @ w) ** 2) / _norm_sq(w)


def pattern(w, grid) -> np.ndarray:
    w = np.asarray(w)
    return steering_matrix(grid, w.shape[0]) @ w


def _toeplitz_from_first_row(t):
    M = t.shape[0]
    idx = np.arange(M)
    diff = idx[None, :] - idx[:, None]
    return np.where(diff >= 0, t[np.abs(diff)], np.conj(t[np.abs(diff)]))


def angular_power_matrix(theta_l: float, theta_r: float, N_I: int, M: int,
                         rule: str = "midpoint") -> AngularPowerMatrix:
    """Riemann-sum approximation of the integral of ``a*(theta) a(theta)^T``.

    ``rule="midpoint"`` samples ``theta_l + (i - 1/2) * delta``;
    ``rule="right"`` samples ``theta_l + i * delta`` (i = 1..N_I). Both use
    equal weights ``delta``. Only the M distinct Toeplitz sums are computed.
    """
    if theta_l > theta_r:
        raise ValueError("reversed integration range")
    if N_I < 1:
        raise ValueError("N_I must be >= 1")
    offsets = {"midpoint": 0.5, "right": 1.0}
    if rule not in offsets:
        raise ValueError(f"unknown rule {rule!r}; expected one of {sorted(offsets)}")
    delta = (theta_r - theta_l) / N_I
    t = kernels.toeplitz_sums(float(theta_l), float(delta), int(N_I), offsets[rule], int(M))
    return AngularPowerMatrix(theta_l, theta_r, N_I, _toeplitz_from_first_row(np.asarray(t)))


def waveform_mse(w, desired, A=None) -> float:
    """``||D(A w - c d_v)||^2`` at the least-squares optimal real scale ``c``.

    ``desired`` is a :class:`~multibeam.subbeam.DesiredPattern`; ``A`` may be
    passed to avoid rebuilding the steering matrix.
    """
    w = np.asarray(w)
    if A is None:
        A = steering_matrix(desired.grid, w.shape[0])
    if A.shape[0] != desired.D.shape[0]:
        raise ValueError("desired pattern grid does not match steering matrix")
    Aw = desired.D * (A @ w)
    dv = desired.D * desired.d_v
    dd = float(np.vdot(dv, dv).real)
    if dd == 0.0:
        raise ValueError("desired waveform is identically zero")
    proj = float(np.vdot(dv, Aw).real)
    return max(float(np.vdot(Aw, Aw).real) - proj**2 / dd, 0.0)
