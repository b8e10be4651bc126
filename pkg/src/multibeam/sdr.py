"""Global beamformer design by semidefinite relaxation.

Complex quadratic forms are mapped to real ones on ``[Re w; Im w]``; each
design problem becomes a unit-trace SDP over a ``2M x 2M`` matrix, and an
outer loop refreshes the desired-pattern phases between solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .array import (AngularPowerMatrix, MultipathChannel, received_power, steering_matrix,
                    steering_vector, waveform_mse)
from .sdp import (GE, INFEASIBLE, LE, MAXIMIZE, MINIMIZE, NUMERICAL_FAILURE, OPTIMAL,
                  Constraint, SdpProblem, solve_sdp)
from .subbeam import DesiredPattern

KINDS = ("P5", "P6", "P7", "P8")
RANK_TOL = 1e-6


def embed_real(z):
    """``[Re; Im]`` for vectors, ``[[Re, -Im], [Im, Re]]`` for matrices."""
    z = np.asarray(z)
    if z.ndim == 1:
        return np.concatenate([z.real, z.imag]).astype(float)
    if z.ndim == 2:
        re, im = z.real.astype(float), z.imag.astype(float)
        return np.block([[re, -im], [im, re]])
    raise ValueError("embed_real takes a vector or a matrix")


def real_to_complex(w_tilde) -> np.ndarray:
    """Unit-norm complex vector from a stacked real one."""
    w_tilde = np.asarray(w_tilde, dtype=float)
    if w_tilde.ndim != 1 or w_tilde.size % 2:
        raise ValueError("expected a real vector of even length")
    M = w_tilde.size // 2
    w = w_tilde[:M] + 1j * w_tilde[M:]
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("cannot normalise a zero vector")
    return w / norm


def gram(B) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    G = B.T @ B
    return 0.5 * (G + G.T)


def hermitian_embed(Q) -> np.ndarray:
    """Real symmetric form with ``x~^T Q~ x~ = x^H Q x`` for Hermitian ``Q``."""
    Qt = embed_real(np.asarray(Q))
    return 0.5 * (Qt + Qt.T)


def build_waveform_quadratic(desired: DesiredPattern, grid=None) -> np.ndarray:
    """Real form of the waveform mismatch minimised over the real scale.

    ``x~^T A^ x~ = ||D A w||^2 - Re{(D d_v)^H D A w}^2 / ||D d_v||^2``.
    """
    grid = desired.grid if grid is None else np.asarray(grid, dtype=float)
    A = steering_matrix(grid, desired.M)
    B = embed_real(desired.D[:, None] * A)
    u = embed_real(desired.D * desired.d_v)
    uu = float(u @ u)
    if uu == 0.0:
        raise ValueError("desired waveform is identically zero")
    Bu = B.T @ u
    return gram(B) - np.outer(Bu, Bu) / uu


def gain_quadratic(theta: float, M: int) -> np.ndarray:
    return gram(embed_real(steering_vector(theta, M)[None, :]))


def power_quadratic(H) -> np.ndarray:
    H = H.matrix if isinstance(H, MultipathChannel) else np.asarray(H)
    return gram(embed_real(H))


@dataclass(frozen=True)
class HomogenizedForms:
    A_hat: np.ndarray = field(repr=False)
    H_hat: np.ndarray = field(repr=False)
    A_s: tuple = field(default=(), repr=False)
    A_p: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class GlobalInputs:
    """Everything the relaxed design problems may need.

    Bounds left as ``None`` drop the corresponding constraint. ``rx_floor``
    is the absolute received-power floor ``C_p * P_c``.
    """

    H: np.ndarray = field(repr=False)
    desired: DesiredPattern = field(repr=False)
    thetas: tuple = ()
    Apm: np.ndarray | None = field(default=None, repr=False)
    eps_w: float | None = None
    eps_s: tuple | None = None
    eps_p: float | None = None
    rx_floor: float | None = None

    def __post_init__(self):
        H = self.H.matrix if isinstance(self.H, MultipathChannel) else np.asarray(self.H)
        object.__setattr__(self, "H", H)
        if isinstance(self.Apm, AngularPowerMatrix):
            object.__setattr__(self, "Apm", self.Apm.matrix)
        object.__setattr__(self, "thetas", tuple(float(t) for t in np.atleast_1d(self.thetas)))
        if self.eps_s is not None:
            eps_s = tuple(float(e) for e in np.atleast_1d(self.eps_s))
            if len(eps_s) != len(self.thetas):
                raise ValueError("eps_s needs one bound per sensing direction")
            object.__setattr__(self, "eps_s", eps_s)
        if H.shape[1] != self.desired.M:
            raise ValueError("channel and desired pattern disagree on M")

    @property
    def M(self) -> int:
        return self.desired.M


def homogenized_forms(inputs: GlobalInputs) -> HomogenizedForms:
    M = inputs.M
    return HomogenizedForms(
        build_waveform_quadratic(inputs.desired),
        power_quadratic(inputs.H),
        tuple(gain_quadratic(t, M) for t in inputs.thetas),
        None if inputs.Apm is None else hermitian_embed(inputs.Apm),
    )


def build_sdp(kind: str, inputs: GlobalInputs, forms: HomogenizedForms | None = None
              ) -> SdpProblem:
    """Relaxed problem for ``kind``; optional bounds enter only when set."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    f = homogenized_forms(inputs) if forms is None else forms
    cons = []
    if kind == "P6":
        if inputs.rx_floor is None:
            raise ValueError("P6 needs rx_floor (C_p * P_c)")
        return SdpProblem(f.A_hat, MINIMIZE, (Constraint(f.H_hat, GE, inputs.rx_floor),))
    if inputs.eps_w is not None:
        cons.append(Constraint(f.A_hat, LE, inputs.eps_w))
    if kind == "P5":
        if inputs.eps_s is not None:
            cons += [Constraint(As, GE, e) for As, e in zip(f.A_s, inputs.eps_s)]
        if inputs.eps_p is not None:
            if f.A_p is None:
                raise ValueError("eps_p given without an angular power matrix")
            cons.append(Constraint(f.A_p, GE, inputs.eps_p))
        return SdpProblem(f.H_hat, MAXIMIZE, tuple(cons))
    if inputs.rx_floor is not None:
        cons.append(Constraint(f.H_hat, GE, inputs.rx_floor))
    if kind == "P7":
        if not f.A_s:
            raise ValueError("P7 needs a sensing direction")
        return SdpProblem(f.A_s[0], MAXIMIZE, tuple(cons))
    if f.A_p is None:
        raise ValueError("P8 needs an angular power matrix")
    return SdpProblem(f.A_p, MAXIMIZE, tuple(cons))


def rotation_residual(W) -> float:
    """Relative distance of ``W`` from commuting with the embedded ``j``."""
    W = np.asarray(W, dtype=float)
    M = W.shape[0] // 2
    P1, P2 = W[:M, :M], W[M:, M:]
    Q1, Q2 = W[M:, :M], W[:M, M:]
    scale = max(np.linalg.norm(W), 1e-300)
    return float(np.hypot(np.linalg.norm(P1 - P2), np.linalg.norm(Q1 + Q2)) / scale)


def complex_equivalent(W) -> np.ndarray:
    """Hermitian ``P + jQ`` read off ``W = [[P, -Q], [Q, P]]`` (blocks averaged)."""
    W = np.asarray(W, dtype=float)
    M = W.shape[0] // 2
    P = 0.5 * (W[:M, :M] + W[M:, M:])
    Q = 0.5 * (W[M:, :M] - W[:M, M:])
    Wc = P + 1j * Q
    return 0.5 * (Wc + Wc.conj().T)


def extract_rank1(W, complex_structure: bool | None = None):
    """Scaled leading eigenvector of ``W`` and the ratio ``lambda_2 / lambda_1``.

    When every form in the problem is invariant under ``w -> e^{ja} w`` the
    solver returns the rotation-averaged matrix, whose real spectrum is
    paired. In that case (detected automatically unless forced) the ratio
    and the vector come from the equivalent complex Hermitian matrix, and
    the vector is returned in stacked real form.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    W = 0.5 * (W + W.T)
    if complex_structure is None:
        complex_structure = W.shape[0] % 2 == 0 and rotation_residual(W) < 1e-6
    if complex_structure:
        vals, vecs = np.linalg.eigh(complex_equivalent(W))
        if vals[-1] <= 0.0:
            raise ValueError("matrix has no positive eigenvalue")
        ratio = float(max(vals[-2], 0.0) / vals[-1]) if len(vals) > 1 else 0.0
        # the pair (v, Jv) shares lambda; its total trace is 2 * lambda
        return np.sqrt(2 * vals[-1]) * embed_real(vecs[:, -1]), ratio
    vals, vecs = np.linalg.eigh(W)
    if vals[-1] <= 0.0:
        raise ValueError("matrix has no positive eigenvalue")
    ratio = float(max(vals[-2], 0.0) / vals[-1]) if len(vals) > 1 else 0.0
    return np.sqrt(vals[-1]) * vecs[:, -1], ratio


def _score(problem: SdpProblem, v):
    V = np.outer(v, v)
    return float(np.sum(problem.C * V)), problem.slacks(V)


def _violation(problem: SdpProblem, slacks) -> float:
    if not len(slacks):
        return 0.0
    scale = np.array([1.0 + abs(c.bound) for c in problem.constraints])
    return float(np.max(np.clip(-np.asarray(slacks) / scale, 0.0, None)))


def randomize(problem: SdpProblem, W, samples: int = 500, seed=0, candidates=(),
              feas_tol: float = 1e-9):
    """Best feasible unit vector among Gaussian draws with covariance ``W``.

    ``candidates`` (real unit vectors) compete with the draws. Returns
    ``(v, feasible)``; if no candidate is feasible the least-violating one
    comes back with ``feasible=False``.
    """
    rng = np.random.default_rng(seed)
    vals, vecs = np.linalg.eigh(0.5 * (W + W.T))
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    draws = rng.standard_normal((samples, W.shape[0])) @ root.T
    pool = [np.asarray(c, float) for c in candidates] + list(draws)
    sign = 1.0 if problem.sense == MAXIMIZE else -1.0
    best, best_key = None, None
    for v in pool:
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        v = v / nv
        obj, sl = _score(problem, v)
        viol = _violation(problem, sl)
        feasible = viol <= feas_tol
        key = (feasible, sign * obj if feasible else -viol)
        if best_key is None or key > best_key:
            best, best_key = v, key
    return best, bool(best_key[0])


@dataclass
class GlobalSolution:
    w_t: np.ndarray | None = field(repr=False)
    objective_value: float
    rank_ratio: float
    iterations_used: int
    slacks: list
    status: str = OPTIMAL
    gamma_max: float = float("nan")
    converged: bool = False
    randomized: bool = False
    sdp_objective: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


def _recover(problem: SdpProblem, W, samples, seed):
    v, ratio = extract_rank1(W)
    v = v / np.linalg.norm(v)
    randomized = False
    if ratio >= RANK_TOL:
        v, _ = randomize(problem, W, samples, seed, candidates=(v,))
        randomized = True
    return v, ratio, randomized


def solve_problem(problem: SdpProblem, H, samples: int = 500, seed=0, tol: float = 1e-8
                  ) -> GlobalSolution:
    """Solve one relaxed problem and recover a unit-norm beamformer."""
    sol = solve_sdp(problem, tol=tol)
    if sol.status != OPTIMAL:
        return GlobalSolution(None, float("nan"), float("nan"), 1, [], sol.status)
    v, ratio, randomized = _recover(problem, sol.W, samples, seed)
    obj, sl = _score(problem, v)
    w = real_to_complex(v)
    return GlobalSolution(w, obj, ratio, 1, list(sl), OPTIMAL, received_power(H, w), True,
                          randomized, sol.objective_value)


def solve_relaxed(kind: str, inputs: GlobalInputs, samples: int = 500, seed=0,
                  tol: float = 1e-8) -> GlobalSolution:
    """One relaxed solve of ``kind`` followed by rank-one recovery."""
    return solve_problem(build_sdp(kind, inputs), inputs.H, samples, seed, tol)


def restoration_problem(problem: SdpProblem, A_hat) -> SdpProblem:
    """Minimise the waveform form subject to every other constraint of ``problem``."""
    others = tuple(c for c in problem.constraints
                   if not (c.relation == LE and np.array_equal(c.A, A_hat)))
    return SdpProblem(A_hat, MINIMIZE, others)


def pattern_mismatch(w, desired: DesiredPattern, A=None) -> float:
    """Waveform error after matching the desired phases to the beam itself."""
    if A is None:
        A = steering_matrix(desired.grid, desired.M)
    return waveform_mse(w, desired.with_phases(np.exp(1j * np.angle(A @ w))), A)


def sdp_ils(kind: str, inputs: GlobalInputs, L_max: int = 5, tol: float = 1e-6,
            samples: int = 500, seed=0, sdp_tol: float = 1e-8, restore: bool = True
            ) -> GlobalSolution:
    """Alternate relaxed solves with desired-phase updates.

    Starts from all-one phases; after each solve the phases become
    ``exp(j arg(A w))``. Stops once the waveform objective ``||D(Aw - c d_v)||^2``
    changes by less than ``tol`` relative to its previous value, or after
    ``L_max`` solves.

    A waveform bound is usually unreachable under the initial phases. With
    ``restore=True`` an infeasible iteration instead minimises the waveform
    error under the remaining constraints, which only serves to move the
    phases; the loop resumes the requested problem afterwards. Without it,
    or when even the restoration problem is infeasible, the solution comes
    back with the failing status and iteration index.
    """
    if L_max < 1:
        raise ValueError("L_max must be >= 1")
    desired = inputs.desired
    A = steering_matrix(desired.grid, desired.M)
    p_v = np.ones(len(desired.grid), dtype=complex)
    history = []
    prev = None
    out = None
    for it in range(1, L_max + 1):
        cur = replace(inputs, desired=desired.with_phases(p_v))
        forms = homogenized_forms(cur)
        problem = build_sdp(kind, cur, forms)
        it_seed = (seed, it) if np.isscalar(seed) else tuple(seed) + (it,)
        step = solve_problem(problem, cur.H, samples, it_seed, sdp_tol)
        restored = False
        if step.status == INFEASIBLE and restore and kind != "P6" and cur.eps_w is not None:
            step = solve_problem(restoration_problem(problem, forms.A_hat), cur.H, samples,
                                 it_seed, sdp_tol)
            restored = True
        if step.status != OPTIMAL:
            fail = out if out is not None else GlobalSolution(
                None, float("nan"), float("nan"), it, [], step.status)
            fail.status, fail.iterations_used, fail.history = step.status, it, history
            fail.converged = False
            return fail
        J = waveform_mse(step.w_t, cur.desired, A)
        history.append({"iteration": it, "waveform_objective": J,
                        "objective": step.objective_value, "rank_ratio": step.rank_ratio,
                        "randomized": step.randomized, "restoration": restored})
        if restored:
            # keep the requested problem's slacks semantics: report infeasibility so far
            step.status = INFEASIBLE
        out = step
        out.iterations_used = it
        out.history = history
        out.converged = (not restored and prev is not None
                         and abs(J - prev) <= tol * max(abs(prev), 1e-300))
        if out.converged:
            break
        prev = None if restored else J
        p_v = np.exp(1j * np.angle(A @ step.w_t))
    if out.status == INFEASIBLE:
        out.slacks = list(build_sdp(kind, replace(inputs, desired=desired.with_phases(p_v)))
                          .slacks(np.outer(embed_real(out.w_t), embed_real(out.w_t))))
    return out
