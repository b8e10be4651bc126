"""Closed-form optimisation of the subbeam combining phase.

Every metric of ``w_t(phi) = sqrt(rho) w_c + sqrt(1-rho) e^{j phi} w_s`` that
the combiner touches is a Rayleigh quotient ``w_t^H Q w_t / ||w_t||^2``. With
unit-norm subbeams it collapses to the sinusoid ratio

    (n0 + 2P Re{q e^{j phi}}) / (1 + 2P Re{c e^{j phi}})

where ``n0 = rho w_c^H Q w_c + (1-rho) w_s^H Q w_s``, ``q = w_c^H Q w_s`` and
``c = w_c^H w_s``. The maximiser and the super-level sets of that ratio have
closed forms; the solvers below are thin selections on top of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .array import AngularPowerMatrix, MultipathChannel, steering_vector
from .intervals import CyclicIntervalSet, wrap_angle
from .subbeam import SubbeamPair

INTERIOR = "interior-optimum"
BOUNDARY = "boundary-optimum"
RELAXED = "relaxed"
INFEASIBLE = "infeasible"

ARC, FULL, EMPTY = "arc", "full", "empty"

# relative slack that sends |rhs| == radius to the arc case
_CASE_TOL = 1e-12
_MEMBER_TOL = 1e-12


def _mat(H):
    return H.matrix if isinstance(H, MultipathChannel) else np.asarray(H)


def _apm(Apm):
    return Apm.matrix if isinstance(Apm, AngularPowerMatrix) else np.asarray(Apm)


def _polar(z):
    return abs(z), math.atan2(z.imag, z.real)


def _folded_atan(y, x):
    """arctan(y / x) in [-pi/2, pi/2], with x == 0 mapped to +-pi/2."""
    if x < 0:
        return math.atan2(-y, -x)
    return math.atan2(y, x)


@dataclass(frozen=True)
class SinusoidRatio:
    """``(n0 + 2P Re{q e^{j phi}}) / (1 + 2P Re{c e^{j phi}})``, vectorised over ``phi``."""

    n0: float
    q: complex
    c: complex
    P: float

    def __call__(self, phi):
        e = np.exp(1j * np.asarray(phi, dtype=float))
        num = self.n0 + 2 * self.P * np.real(self.q * e)
        den = 1.0 + 2 * self.P * np.real(self.c * e)
        return num / den

    def coefficients(self) -> np.ndarray:
        """(a0, a1, a2, b0, b1, b2) of ``(a0 + a1 cos + a2 sin) / (b0 + b1 cos + b2 sin)``."""
        P2 = 2 * self.P
        return np.array([self.n0, P2 * self.q.real, -P2 * self.q.imag,
                         1.0, P2 * self.c.real, -P2 * self.c.imag])


def quadratic_ratio(pair: SubbeamPair, Q) -> SinusoidRatio:
    """The Rayleigh quotient of Hermitian ``Q`` along the combining phase."""
    Q = np.asarray(Q)
    w_c, w_s = pair.w_c, pair.w_s
    n0 = pair.rho * np.vdot(w_c, Q @ w_c).real + (1 - pair.rho) * np.vdot(w_s, Q @ w_s).real
    return SinusoidRatio(float(n0), complex(np.vdot(w_c, Q @ w_s)),
                         complex(np.vdot(w_c, w_s)), pair.P)


def gain_ratio(pair: SubbeamPair, theta: float) -> SinusoidRatio:
    a = steering_vector(theta, pair.M)
    ac, as_ = a @ pair.w_c, a @ pair.w_s
    n0 = pair.rho * abs(ac) ** 2 + (1 - pair.rho) * abs(as_) ** 2
    return SinusoidRatio(float(n0), complex(np.conj(ac) * as_),
                         complex(np.vdot(pair.w_c, pair.w_s)), pair.P)


def power_ratio(pair: SubbeamPair, H) -> SinusoidRatio:
    H = _mat(H)
    return quadratic_ratio(pair, H.conj().T @ H)


@dataclass(frozen=True)
class CrossTerms:
    """Polar forms of the subbeam cross products.

    ``b1, beta1``: w_c^H w_s. ``b2, beta2``: w_c^H a*(theta_i) per direction.
    ``b3, beta3``: a^T(theta_i) w_s per direction. ``bp, betap``:
    w_c^H Apm w_s. ``bg, betag``: w_c^H H^H H w_s.
    """

    b1: float
    beta1: float
    b2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b3: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta3: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bp: float | None = None
    betap: float | None = None
    bg: float | None = None
    betag: float | None = None

    @property
    def a1(self):
        return self.bg

    @property
    def alpha1(self):
        return self.betag

    @property
    def a2(self):
        return self.b1

    @property
    def alpha2(self):
        return self.beta1


def cross_terms(pair: SubbeamPair, H=None, thetas: Sequence[float] = (), Apm=None) -> CrossTerms:
    b1, beta1 = _polar(complex(np.vdot(pair.w_c, pair.w_s)))
    A = np.array([steering_vector(t, pair.M) for t in thetas]).reshape(len(thetas), pair.M)
    t2 = np.conj(A @ pair.w_c)
    t3 = A @ pair.w_s
    kw = {}
    if Apm is not None:
        kw["bp"], kw["betap"] = _polar(complex(np.vdot(pair.w_c, _apm(Apm) @ pair.w_s)))
    if H is not None:
        Hm = _mat(H)
        kw["bg"], kw["betag"] = _polar(complex(np.vdot(Hm @ pair.w_c, Hm @ pair.w_s)))
    return CrossTerms(b1, beta1, np.abs(t2), np.angle(t2), np.abs(t3), np.angle(t3), **kw)


# ---------------------------------------------------------------------------
# closed forms


def ratio_maximizer(ratio: SinusoidRatio):
    """Maximiser of a sinusoid ratio and a degeneracy flag.

    The derivative numerator is ``X1 sin(phi) + X2 cos(phi) + L``; the
    maximum sits where it falls through zero.
    """
    a1, alpha1 = _polar(ratio.q)
    a2, alpha2 = _polar(ratio.c)
    P, G = ratio.P, ratio.n0
    X1 = -2 * P * a1 * math.cos(alpha1) + 2 * P * a2 * G * math.cos(alpha2)
    X2 = -2 * P * a1 * math.sin(alpha1) + 2 * P * a2 * G * math.sin(alpha2)
    L = -4 * P * P * a1 * a2 * math.sin(alpha1 - alpha2)
    R = math.hypot(X1, X2)
    scale = 2 * P * (a1 + a2 * abs(G))
    if R <= 1e-14 * max(scale, 1e-300):
        return 0.0, True
    mu0 = math.asin(min(1.0, max(-1.0, L / R)))
    zeta = _folded_atan(X2, X1)
    phi = math.pi + mu0 - zeta if X1 >= 0 else mu0 - zeta
    return wrap_angle(phi), False


def superlevel_set(ratio: SinusoidRatio, threshold: float):
    """``{phi : ratio(phi) >= threshold}`` and its case label (arc/full/empty).

    Writes the constraint as ``X1 sin(phi) + X2 cos(phi) >= B2 - B1`` and
    applies the three-case split on ``|B2 - B1|`` against ``hypot(X1, X2)``.
    """
    P = ratio.P
    B1 = ratio.n0 / (2 * P)
    B2 = threshold / (2 * P)
    b1, beta1 = _polar(ratio.c)
    bq, betaq = _polar(ratio.q)
    X1 = 2 * P * b1 * B2 * math.sin(beta1) - bq * math.sin(betaq)
    X2 = bq * math.cos(betaq) - 2 * P * b1 * B2 * math.cos(beta1)
    rhs = B2 - B1
    R = math.hypot(X1, X2)
    if R <= 1e-15 * max(abs(B1) + abs(B2) + bq, 1e-300):
        return (CyclicIntervalSet.full(), FULL) if rhs <= 0 else (CyclicIntervalSet.empty(), EMPTY)
    if abs(rhs) <= R * (1 + _CASE_TOL):
        mu = math.asin(min(1.0, max(-1.0, rhs / R)))
        sigma = _folded_atan(X2, X1)
        if X1 >= 0:
            lo, hi = mu - sigma, -mu + math.pi - sigma
        else:
            lo, hi = mu + math.pi - sigma, -mu + 2 * math.pi - sigma
        return CyclicIntervalSet.arc(lo, hi), ARC
    if rhs < 0:
        return CyclicIntervalSet.full(), FULL
    return CyclicIntervalSet.empty(), EMPTY


# ---------------------------------------------------------------------------
# public optimisers


@dataclass(frozen=True)
class CombinerSolution:
    phi: float
    objective_value: float
    feasible_set: CyclicIntervalSet
    status: str
    thresholds: tuple = ()
    degenerate: bool = False

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


@dataclass(frozen=True)
class RelaxationResult:
    feasible_set: CyclicIntervalSet
    applied_Cs: tuple
    rounds: int
    exhausted: bool


def unconstrained_phi_opt(pair: SubbeamPair, H, full_output: bool = False):
    """Phase maximising the MRC received power of the combined beam."""
    phi, degenerate = ratio_maximizer(power_ratio(pair, H))
    return (phi, degenerate) if full_output else phi


def phi_m1(pair: SubbeamPair, theta_c: float = 0.0) -> float:
    """Phase that co-phases both subbeams in the communication direction."""
    a = steering_vector(theta_c, pair.M)
    return wrap_angle(float(np.angle(a @ pair.w_c) - np.angle(a @ pair.w_s)))


def gain_thresholds(pair: SubbeamPair, Cs) -> np.ndarray:
    return np.asarray(Cs, dtype=float) ** 2 * (1 - pair.rho) * pair.M


def feasible_set_gain(pair: SubbeamPair, thetas, Cs) -> CyclicIntervalSet:
    """Phases meeting every minimum-gain constraint ``C_i^2 (1-rho) M``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    Cs = np.atleast_1d(np.asarray(Cs, dtype=float))
    if thetas.shape != Cs.shape or thetas.size == 0:
        raise ValueError("thetas and Cs must be non-empty and of equal length")
    result = CyclicIntervalSet.full()
    for theta, T in zip(thetas, gain_thresholds(pair, Cs)):
        arc, _ = superlevel_set(gain_ratio(pair, theta), T)
        result = result & arc
        if result.is_empty:
            break
    return result


def relax_gain_constraints(pair: SubbeamPair, thetas, Cs, priority=(), decay: float = 0.95,
                           max_rounds: int = 50) -> RelaxationResult:
    """Shrink the non-prioritised ``C_i`` geometrically until the phases intersect.

    Constraints whose index is in ``priority`` are never reduced; if only
    they remain binding and still conflict, the result is flagged exhausted.
    """
    Cs = np.atleast_1d(np.asarray(Cs, dtype=float)).copy()
    keep = np.zeros(Cs.size, dtype=bool)
    keep[list(priority)] = True
    feasible = feasible_set_gain(pair, thetas, Cs)
    rounds = 0
    while feasible.is_empty and rounds < max_rounds and not keep.all():
        Cs[~keep] *= decay
        rounds += 1
        feasible = feasible_set_gain(pair, thetas, Cs)
    return RelaxationResult(feasible, tuple(Cs), rounds, feasible.is_empty)


def _select(phi_star, objective, feasible, thresholds, degenerate=False, relaxed=False):
    if feasible.is_empty:
        return CombinerSolution(phi_star, float("nan"), feasible, INFEASIBLE, thresholds, degenerate)
    if feasible.contains(phi_star, tol=_MEMBER_TOL):
        phi, status = phi_star, INTERIOR
    else:
        ends = feasible.endpoints()
        values = objective(np.array(ends))
        phi, status = ends[int(np.argmax(values))], BOUNDARY
    if relaxed:
        status = RELAXED
    return CombinerSolution(float(phi), float(objective(phi)), feasible, status, thresholds,
                            degenerate)


def solve_p1(pair: SubbeamPair, H, thetas, Cs, relax: bool = True, priority=(),
             decay: float = 0.95, max_rounds: int = 50) -> CombinerSolution:
    """Max received power subject to minimum gains at the sensing directions."""
    f = power_ratio(pair, H)
    phi_star, degenerate = ratio_maximizer(f)
    Cs = tuple(np.atleast_1d(np.asarray(Cs, dtype=float)))
    feasible = feasible_set_gain(pair, thetas, Cs)
    relaxed = False
    if feasible.is_empty and relax:
        res = relax_gain_constraints(pair, thetas, Cs, priority, decay, max_rounds)
        feasible, Cs, relaxed = res.feasible_set, res.applied_Cs, True
    return _select(phi_star, f, feasible, Cs, degenerate, relaxed)


def feasible_set_power(pair: SubbeamPair, Apm, C_sp: float, w_ref) -> CyclicIntervalSet:
    """Phases whose normalised power over the range is at least ``C_sp`` times the reference."""
    A = _apm(Apm)
    w_ref = np.asarray(w_ref)
    T = C_sp * np.vdot(w_ref, A @ w_ref).real
    return superlevel_set(quadratic_ratio(pair, A), T)[0]


def solve_p2(pair: SubbeamPair, H, Apm, C_sp: float, w_ref) -> CombinerSolution:
    """Max received power subject to a minimum total scanning power."""
    f = power_ratio(pair, H)
    phi_star, degenerate = ratio_maximizer(f)
    feasible = feasible_set_power(pair, Apm, C_sp, w_ref)
    return _select(phi_star, f, feasible, (C_sp,), degenerate)


def phi_smax_gain(pair: SubbeamPair, theta_s0: float, full_output: bool = False):
    """Phase maximising the normalised gain at ``theta_s0``."""
    phi, degenerate = ratio_maximizer(gain_ratio(pair, theta_s0))
    return (phi, degenerate) if full_output else phi


def phi_smax_power(pair: SubbeamPair, Apm, full_output: bool = False):
    """Phase maximising the normalised power over the integration range of ``Apm``."""
    phi, degenerate = ratio_maximizer(quadratic_ratio(pair, _apm(Apm)))
    return (phi, degenerate) if full_output else phi


def feasible_set_rxpower(pair: SubbeamPair, H, C_p: float) -> CyclicIntervalSet:
    """Phases keeping the received power at least ``C_p * ||H w_c||^2``."""
    Hm = _mat(H)
    hc = Hm @ pair.w_c
    P_c = np.vdot(hc, hc).real
    return superlevel_set(power_ratio(pair, Hm), C_p * P_c)[0]


def solve_p3(pair: SubbeamPair, H, theta_s0: float, C_p: float) -> CombinerSolution:
    g = gain_ratio(pair, theta_s0)
    phi_star, degenerate = ratio_maximizer(g)
    return _select(phi_star, g, feasible_set_rxpower(pair, H, C_p), (C_p,), degenerate)


def solve_p4(pair: SubbeamPair, H, Apm, C_p: float) -> CombinerSolution:
    g = quadratic_ratio(pair, _apm(Apm))
    phi_star, degenerate = ratio_maximizer(g)
    return _select(phi_star, g, feasible_set_rxpower(pair, H, C_p), (C_p,), degenerate)
