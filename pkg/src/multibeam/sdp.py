"""Small dense SDP solver for unit-trace problems with a few linear inequalities.

    optimize   <C, W>
    subject to trace(W) = 1,  <A_k, W> (<= | >=) eps_k,  W PSD

The problem is rewritten in standard primal form with one nonnegative slack
per inequality and solved by a homogeneous self-dual interior-point method
(Nesterov-Todd scaling, Mehrotra predictor-corrector). The embedding yields
either an optimal pair or a Farkas certificate, so infeasible inputs are
detected rather than iterated on forever.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

LE, GE = "LE", "GE"
MAXIMIZE, MINIMIZE = "maximize", "minimize"

SYM_TOL = 1e-12
MAX_ITERS = 200


@dataclass(frozen=True)
class Constraint:
    A: np.ndarray = field(repr=False)
    relation: str
    bound: float


@dataclass(frozen=True)
class SdpProblem:
    C: np.ndarray = field(repr=False)
    sense: str = MAXIMIZE
    constraints: tuple = ()

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 1:
            raise ValueError("objective must be a square matrix")
        _check_symmetric(C, "objective")
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"sense must be {MAXIMIZE!r} or {MINIMIZE!r}")
        cons = []
        for k, c in enumerate(self.constraints):
            if not isinstance(c, Constraint):
                c = Constraint(*c)
            A = np.asarray(c.A, dtype=float)
            if A.shape != C.shape:
                raise ValueError(f"constraint {k} has shape {A.shape}, expected {C.shape}")
            _check_symmetric(A, f"constraint {k}")
            if c.relation not in (LE, GE):
                raise ValueError(f"constraint {k}: relation must be LE or GE")
            if not math.isfinite(c.bound):
                raise ValueError(f"constraint {k}: bound must be finite (omit inactive constraints)")
            cons.append(Constraint(A, c.relation, float(c.bound)))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "constraints", tuple(cons))

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def constraint_values(self, W) -> np.ndarray:
        return np.array([np.sum(c.A * W) for c in self.constraints])

    def slacks(self, W) -> np.ndarray:
        """Signed slack per constraint; nonnegative means satisfied."""
        vals = self.constraint_values(W)
        return np.array([c.bound - v if c.relation == LE else v - c.bound
                         for c, v in zip(self.constraints, vals)])


@dataclass
class SdpSolution:
    W: np.ndarray | None = field(repr=False)
    objective_value: float
    status: str
    duality_gap: float
    iterations: int
    message: str = ""
    y: np.ndarray | None = field(default=None, repr=False)


def _check_symmetric(A, name):
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYM_TOL * scale:
        raise ValueError(f"{name} matrix is not symmetric")


def _sym(A):
    return 0.5 * (A + A.T)


class _Standard:
    """min <c, x> s.t. A x = b over x = (X in S^n_+, s in R^p_+)."""

    def __init__(self, problem: SdpProblem):
        n = problem.n
        p = len(problem.constraints)
        self.n, self.p, self.m = n, p, p + 1
        sign = -1.0 if problem.sense == MAXIMIZE else 1.0
        c_norm = np.linalg.norm(problem.C)
        self.c_scale = c_norm if c_norm > 0 else 1.0
        self.sign = sign
        self.C = sign * problem.C / self.c_scale
        mats = [np.eye(n)]
        b = [1.0]
        lp = np.zeros((self.m, p))
        for k, con in enumerate(problem.constraints):
            mats.append(con.A)
            b.append(con.bound)
            lp[k + 1, k] = 1.0 if con.relation == LE else -1.0
        row_scale = np.array([math.sqrt(np.sum(A * A) + np.sum(lp[i] ** 2))
                              for i, A in enumerate(mats)])
        self.mats = np.array([A / s for A, s in zip(mats, row_scale)])
        self.lp = lp / row_scale[:, None]
        self.b = np.array(b) / row_scale
        self.row_scale = row_scale

    def op(self, X, s):
        return np.einsum("kij,ij->k", self.mats, X) + self.lp @ s

    def adj(self, y):
        return np.einsum("k,kij->ij", y, self.mats), self.lp.T @ y


def _max_step(T, D, v, dv):
    """Largest alpha keeping both blocks in the cone.

    ``T`` maps the current matrix point to the identity (``T X T^T = I``).
    """
    alpha = np.inf
    ev = np.linalg.eigvalsh(_sym(T @ D @ T.T))[0]
    if ev < 0:
        alpha = -1.0 / ev
    neg = dv < 0
    if np.any(neg):
        alpha = min(alpha, float(np.min(-v[neg] / dv[neg])))
    return alpha


def solve_sdp(problem: SdpProblem, tol: float = 1e-8, max_iters: int = MAX_ITERS) -> SdpSolution:
    """Solve ``problem``; see the module docstring for the form."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    st = _Standard(problem)
    n, p, m = st.n, st.p, st.m
    C, b = st.C, st.b
    I_n = np.eye(n)

    X, S = I_n.copy(), I_n.copy()
    x, s = np.ones(p), np.ones(p)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0
    nu = n + p + 1

    b_norm = 1.0 + np.linalg.norm(b)
    c_norm = 1.0 + np.linalg.norm(C)
    status, msg = NUMERICAL_FAILURE, "iteration limit reached"
    it = 0

    for it in range(1, max_iters + 1):
        # residuals of the homogeneous system
        AyX, Ays = st.adj(y)
        rp = b * tau - st.op(X, x)
        rdX = C * tau - AyX - S
        rds = -Ays - s
        cx = float(np.sum(C * X))
        by = float(b @ y)
        rg = kappa + cx - by
        mu = (float(np.sum(X * S)) + x @ s + tau * kappa) / nu

        # convergence and certificates
        pres = np.linalg.norm(rp) / tau / b_norm
        dres = math.sqrt(np.sum(rdX ** 2) + rds @ rds) / tau / c_norm
        pobj, dobj = cx / tau, by / tau
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if pres <= tol and dres <= tol and gap <= tol:
            status, msg = OPTIMAL, "converged"
            break
        if by > 0:
            ray = math.sqrt(np.sum((AyX + S) ** 2) + np.sum((Ays + s) ** 2)) / by
            if ray <= tol:
                status, msg = INFEASIBLE, "primal infeasible: found y with b'y > 0, A*y <= 0"
                break
        if cx < 0:
            ray = np.linalg.norm(st.op(X, x)) / -cx
            if ray <= tol:
                status, msg = NUMERICAL_FAILURE, "dual infeasible certificate on a bounded problem"
                break
        if mu < 1e-300 or not np.isfinite(mu):
            msg = "complementarity collapsed before convergence"
            break

        # Nesterov-Todd scaling
        try:
            L2 = np.linalg.cholesky(X)
            L1 = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            msg = "lost positive definiteness"
            break
        U, lam, Vt = np.linalg.svd(L1.T @ L2)
        if lam[-1] <= 0:
            msg = "degenerate scaling"
            break
        R = L2 @ Vt.T / np.sqrt(lam)
        R_inv = np.sqrt(lam)[:, None] * (Vt @ sla.solve_triangular(L2, I_n, lower=True))
        W = R @ R.T
        TX = R_inv / np.sqrt(lam)[:, None]
        TS = R.T / np.sqrt(lam)[:, None]
        d_lp = np.sqrt(x / s)
        lam_lp = np.sqrt(x * s)

        def wmul(ZX, zs):
            return W @ ZX @ W, d_lp ** 2 * zs

        WA = np.array([W @ A @ W for A in st.mats])
        Mmat = np.einsum("kij,lij->kl", WA, st.mats) + (st.lp * d_lp ** 2) @ st.lp.T
        Mmat = _sym(Mmat)
        try:
            factor = sla.cho_factor(Mmat)
            Msolve = lambda r: sla.cho_solve(factor, r)  # noqa: E731
        except (np.linalg.LinAlgError, ValueError):
            Mpinv = np.linalg.pinv(Mmat)
            Msolve = lambda r: Mpinv @ r  # noqa: E731
        WcX, Wcs = wmul(C, np.zeros(p))
        AWc = st.op(WcX, Wcs)
        cWc = float(np.sum(C * WcX))
        v = AWc + b
        u = b - AWc
        Minv_v = Msolve(v)

        def direction(eta, rhsX, rhs_lp, rhs_tau):
            # rhs* are the right-hand sides of the scaled complementarity equations
            G = rhsX / (0.5 * (lam[:, None] + lam[None, :]))
            r4X = R @ G @ R.T
            r4s = rhs_lp / lam_lp * d_lp
            WrX, Wrs = wmul(eta * rdX, eta * rds)
            r1 = eta * rp - st.op(r4X, r4s) + st.op(WrX, Wrs)
            r2 = eta * rg + np.sum(C * r4X) - np.sum(C * WrX) + rhs_tau / tau
            Minv_r1 = Msolve(r1)
            dtau = (r2 - u @ Minv_r1) / (u @ Minv_v + cWc + kappa / tau)
            dy = Minv_r1 + Minv_v * dtau
            AdyX, Adys = st.adj(dy)
            dXW, dxW = wmul(AdyX - C * dtau - eta * rdX, Adys - eta * rds)
            dX = _sym(r4X + dXW)
            dx = r4s + dxW
            dS = _sym(eta * rdX - AdyX + C * dtau)
            ds = eta * rds - Adys
            dkappa = rhs_tau / tau - kappa / tau * dtau
            return dX, dx, dy, dS, ds, dtau, dkappa

        def step_length(d):
            dX, dx, _, dS, ds, dtau, dkappa = d
            aX = _max_step(TX, dX, x, dx)
            aS = _max_step(TS, dS, s, ds)
            a = min(aX, aS)
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        Lam = np.diag(lam)
        # predictor
        aff = direction(1.0, -Lam @ Lam, -lam_lp ** 2, -tau * kappa)
        a_aff = min(1.0, step_length(aff))
        dXa, dxa, _, dSa, dsa, dta, dka = aff
        mu_aff = (np.sum((X + a_aff * dXa) * (S + a_aff * dSa))
                  + (x + a_aff * dxa) @ (s + a_aff * dsa)
                  + (tau + a_aff * dta) * (kappa + a_aff * dka)) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
        # corrector
        dXt = R_inv @ dXa @ R_inv.T
        dSt = R.T @ dSa @ R
        corr = _sym(dXt @ dSt)
        rhsX = sigma * mu * I_n - Lam @ Lam - corr
        rhs_lp = sigma * mu - lam_lp ** 2 - (dxa / d_lp) * (dsa * d_lp)
        rhs_tau = sigma * mu - tau * kappa - dta * dka
        d = direction(1.0 - sigma, rhsX, rhs_lp, rhs_tau)
        alpha = min(1.0, 0.99 * step_length(d))
        if not np.isfinite(alpha) or alpha < 1e-12:
            msg = "step length collapsed"
            break
        dX, dx, dy, dS, ds, dtau, dkappa = d
        X = _sym(X + alpha * dX)
        S = _sym(S + alpha * dS)
        x = x + alpha * dx
        s = s + alpha * ds
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
    else:
        it = max_iters

    if status != OPTIMAL:
        return SdpSolution(None, float("nan"), status, float("nan"), it, msg,
                           y / max(tau, 1e-300) if status != INFEASIBLE else y)

    Wsol = _sym(X / tau)
    obj = float(np.sum(problem.C * Wsol))
    gap_abs = abs(float(np.sum(C * X) - b @ y)) / tau * st.c_scale
    y_orig = st.sign * st.c_scale * (y / tau) / st.row_scale
    return SdpSolution(Wsol, obj, OPTIMAL, gap_abs, it, msg, y_orig)


# ---------------------------------------------------------------------------
# plain-text serialization: header lines, then n rows of n values per matrix


def dump_problem(problem: SdpProblem) -> str:
    """Row-major text dump, one matrix per block, with a dimension header."""
    out = io.StringIO()
    n = problem.n
    out.write(f"sdp {n} {problem.sense} {len(problem.constraints)}\n")
    out.write("objective\n")
    np.savetxt(out, problem.C, fmt="%.17g")
    for c in problem.constraints:
        out.write(f"constraint {c.relation} {c.bound!r}\n")
        np.savetxt(out, c.A, fmt="%.17g")
    return out.getvalue()


def load_problem(text: str) -> SdpProblem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "sdp":
        raise ValueError("not an sdp dump")
    n, sense, k = int(head[1]), head[2], int(head[3])

    def block(start):
        return np.array([[float(v) for v in ln.split()] for ln in lines[start:start + n]])

    C = block(2)
    cons = []
    pos = 2 + n
    for _ in range(k):
        _, rel, bound = lines[pos].split()
        cons.append(Constraint(block(pos + 1), rel, float(bound)))
        pos += 1 + n
    return SdpProblem(C, sense, tuple(cons))


def problem_from_parts(C, sense=MAXIMIZE, constraints: Sequence = ()) -> SdpProblem:
    return SdpProblem(np.asarray(C, float), sense, tuple(Constraint(*c) for c in constraints))
