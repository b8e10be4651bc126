"""Oracle-dominance and equivalence checks, runnable as one report."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .array import (ChannelSimConfig, angular_power_matrix, received_power, sample_rician_channel,
                    steering_matrix, steering_vector, waveform_mse)
from .combiner import (phi_m1, phi_smax_gain, phi_smax_power, solve_p1, solve_p2, solve_p3,
                       solve_p4, unconstrained_phi_opt)
from .oracles import (AtLeast, TrigRatio, grid_search_phi, integration_reference,
                      quadratic_batch, sampled_search_w)
from .sdp import OPTIMAL
from .sdr import (GlobalInputs, build_waveform_quadratic, embed_real, gain_quadratic,
                  hermitian_embed, power_quadratic, solve_relaxed)
from .subbeam import (DesiredPattern, SubbeamPair, combine, conventional_beam, default_grid,
                      desired_multibeam, ils_synthesize, steer)

RANGE_DEG = 8.59


@dataclass
class PropertyResult:
    name: str
    passed: bool
    instances: int
    max_gap: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return (f"{tag}  {self.name:<28s} n={self.instances:<5d} max_gap={self.max_gap:.3e} "
                f"t={self.seconds:.2f}s{extra}")


@dataclass
class SuiteReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def text(self) -> str:
        lines = [r.line() for r in self.results]
        lines.append(f"{'ALL PASS' if self.passed else 'FAILURES'}: "
                     f"{sum(r.passed for r in self.results)}/{len(self.results)} properties")
        return "\n".join(lines) + "\n"


def _unit(z):
    return z / np.linalg.norm(z)


@dataclass
class CombinerInstance:
    pair: SubbeamPair
    H: np.ndarray
    theta_s: float
    Apm: np.ndarray
    w_ref: np.ndarray
    C_s: float
    C_sp: float
    C_p: float


def combiner_instance(index: int, M: int = 16, seed: int = 0) -> CombinerInstance:
    """Random channel, scan direction and thresholds for oracle comparisons.

    Odd indices replace the scanning sub-beam with a random unit vector to
    exercise phase configurations that steered beams never produce.
    """
    rng = np.random.default_rng([seed, index, 17])
    H = sample_rician_channel(ChannelSimConfig(tx_elements=M, rx_elements=M), [seed, index])
    ts = math.radians(rng.uniform(-30.0, 30.0))
    w_c = conventional_beam(M, M, 0.0)
    if index % 2:
        w_s = _unit(rng.standard_normal(M) + 1j * rng.standard_normal(M))
    else:
        w_s = steer(conventional_beam(max(1, (3 * M) // 4), M, 0.0), ts)
    pair = SubbeamPair(w_c, w_s, 0.5)
    half = math.radians(RANGE_DEG) / 2
    Apm = angular_power_matrix(ts - half, ts + half, 16, M).matrix
    w_ref = ils_synthesize(desired_multibeam(pair))
    return CombinerInstance(pair, H.matrix, ts, Apm, w_ref, rng.uniform(0.3, 1.0),
                            rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0))


def _identity(name, phi):
    return phi


def check_combiners(n: int = 50, seed: int = 0, resolution: int = 200_000, corrupt=None,
                    tol: float = 1e-8) -> list:
    """Closed-form solvers versus the constrained phase grid.

    ``corrupt(method, phi)`` may perturb solver outputs (negative control).
    """
    corrupt = corrupt or _identity
    methods = ("unconstrained", "P1", "P2", "P3", "P4")
    gaps = {m: 0.0 for m in methods}
    fails = {m: 0 for m in methods}
    t0 = time.perf_counter()
    for k in range(n):
        inst = combiner_instance(k, seed=seed)
        pair, M = inst.pair, inst.pair.M

        def wfun(phi, pair=pair):
            return combine(pair, phi)

        f = TrigRatio.rayleigh(wfun, inst.H.conj().T @ inst.H)
        a = steering_vector(inst.theta_s, M)
        g = TrigRatio.rayleigh(wfun, np.outer(a.conj(), a))
        gp = TrigRatio.rayleigh(wfun, inst.Apm)
        T_s = inst.C_s ** 2 * (1 - pair.rho) * M
        T_p = inst.C_sp * float(np.vdot(inst.w_ref, inst.Apm @ inst.w_ref).real)
        T_rx = inst.C_p * received_power(inst.H, pair.w_c)
        cases = {
            "unconstrained": (lambda: unconstrained_phi_opt(pair, inst.H), f, []),
            "P1": (lambda: solve_p1(pair, inst.H, [inst.theta_s], [inst.C_s], relax=False),
                   f, [AtLeast(g, T_s)]),
            "P2": (lambda: solve_p2(pair, inst.H, inst.Apm, inst.C_sp, inst.w_ref),
                   f, [AtLeast(gp, T_p)]),
            "P3": (lambda: solve_p3(pair, inst.H, inst.theta_s, inst.C_p),
                   g, [AtLeast(f, T_rx)]),
            "P4": (lambda: solve_p4(pair, inst.H, inst.Apm, inst.C_p), gp, [AtLeast(f, T_rx)]),
        }
        for m, (solve, obj, cons) in cases.items():
            out = solve()
            oracle = grid_search_phi(obj, cons, resolution)
            if m == "unconstrained":
                phi, feasible = out, True
            else:
                phi, feasible = out.phi, out.feasible
            if not feasible:
                if not oracle.empty:
                    fails[m] += 1
                    gaps[m] = math.inf
                continue
            phi = corrupt(m, phi)
            value = float(obj(phi))
            viol = max([0.0] + [(c.threshold - float(c.func(phi))) / (1 + abs(c.threshold))
                                for c in cons])
            short = 0.0 if oracle.empty else (oracle.value - value) / (1 + abs(oracle.value))
            gaps[m] = max(gaps[m], short, viol)
            if short > tol or viol > tol:
                fails[m] += 1
    dt = time.perf_counter() - t0
    return [PropertyResult(f"oracle-dominance {m}", fails[m] == 0, n, gaps[m], dt / len(methods),
                           f"failures={fails[m]}" if fails[m] else "") for m in methods]


def check_real_complex(n: int = 1000, seed: int = 0, tol: float = 1e-9) -> PropertyResult:
    """Real stacked quadratic forms against their complex definitions."""
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(n):
        rng = np.random.default_rng([seed, k, 29])
        M = int(rng.integers(2, 17))
        G = int(rng.integers(3, 40))
        cplx = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)  # noqa: E731
        H = cplx(M, M)
        w = cplx(M)
        grid = np.sort(rng.uniform(-np.pi / 2, np.pi / 2, G))
        desired = DesiredPattern(grid, rng.uniform(0.1, 2.0, G), rng.uniform(0.1, 2.0, G),
                                 np.exp(1j * rng.uniform(-np.pi, np.pi, G)), M)
        Q = cplx(M, M)
        Q = Q @ Q.conj().T
        theta = float(rng.uniform(-np.pi / 2, np.pi / 2))
        x = embed_real(w)
        a = steering_vector(theta, M)
        pairs = [
            (x @ power_quadratic(H) @ x, np.linalg.norm(H @ w) ** 2),
            (x @ build_waveform_quadratic(desired) @ x,
             waveform_mse(w, desired, steering_matrix(grid, M))),
            (x @ gain_quadratic(theta, M) @ x, abs(a @ w) ** 2),
            (x @ hermitian_embed(Q) @ x, np.vdot(w, Q @ w).real),
        ]
        for real, ref in pairs:
            scale = max(abs(ref), np.linalg.norm(w) ** 2 * 1e-12)
            worst = max(worst, abs(real - ref) / scale)
    return PropertyResult("real-complex equivalence", worst <= tol, n, worst,
                          time.perf_counter() - t0)


def check_integration(M: int = 16, steps=(16, 12), range_deg: float = RANGE_DEG,
                      centers_deg=(-24.36, -6.45, 5.01, 22.80), tol: float = 1e-3
                      ) -> PropertyResult:
    t0 = time.perf_counter()
    worst = 0.0
    for c in centers_deg:
        lo, hi = math.radians(c - range_deg / 2), math.radians(c + range_deg / 2)
        ref = integration_reference(lo, hi, M)
        for N in steps:
            err = np.abs(angular_power_matrix(lo, hi, N, M).matrix - ref).max()
            worst = max(worst, float(err))
    return PropertyResult("integration N_I=" + "/".join(map(str, steps)), worst < tol,
                          len(centers_deg) * len(steps), worst, time.perf_counter() - t0)


def check_vacuous(n: int = 100, seed: int = 0, tol: float = 1e-10) -> PropertyResult:
    """Zero thresholds must return the unconstrained maximisers unchanged."""
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(n):
        inst = combiner_instance(k, seed=seed)
        pair, H = inst.pair, inst.H
        phi_u = unconstrained_phi_opt(pair, H)
        got = [
            (solve_p1(pair, H, [inst.theta_s], [0.0]).phi, phi_u),
            (solve_p2(pair, H, inst.Apm, 0.0, inst.w_ref).phi, phi_u),
            (solve_p3(pair, H, inst.theta_s, 0.0).phi, phi_smax_gain(pair, inst.theta_s)),
            (solve_p4(pair, H, inst.Apm, 0.0).phi, phi_smax_power(pair, inst.Apm)),
        ]
        for a, b in got:
            d = abs(math.remainder(a - b, 2 * math.pi))
            worst = max(worst, d)
    return PropertyResult("vacuous-constraint collapse", worst <= tol, n, worst,
                          time.perf_counter() - t0)


def _batch_waveform(desired: DesiredPattern, A):
    Dd = desired.D * desired.d_v
    dd = float(np.vdot(Dd, Dd).real)

    def mse(W):
        AW = (A @ W.T) * desired.D[:, None]
        proj = (Dd.conj() @ AW).real
        return np.maximum(np.sum(np.abs(AW) ** 2, axis=0) - proj ** 2 / dd, 0.0)

    return mse


@dataclass
class SmallGlobalInstance:
    inputs: GlobalInputs
    desired: DesiredPattern
    A: np.ndarray


def small_global_instance(index: int, M: int = 4, seed: int = 0, C_s: float = 0.9,
                          C_sp: float = 0.9) -> SmallGlobalInstance:
    """P5 instance small enough for sampled-vector dominance.

    Desired phases follow the co-phased reference beam, whose waveform error
    becomes the bound, so that reference is always feasible for that term.
    """
    rng = np.random.default_rng([seed, index, 41])
    H = sample_rician_channel(ChannelSimConfig(tx_elements=M, rx_elements=M), [seed, index])
    ts = math.radians(rng.uniform(-40.0, 40.0))
    pair = SubbeamPair(conventional_beam(M, M, 0.0),
                       steer(conventional_beam(max(1, (3 * M) // 4), M, 0.0), ts), 0.5)
    base = desired_multibeam(pair, default_grid(91))
    A = steering_matrix(base.grid, M)
    w1 = _unit(combine(pair, phi_m1(pair)))
    desired = base.with_phases(np.exp(1j * np.angle(A @ w1)))
    half = math.radians(RANGE_DEG) / 2
    Apm = angular_power_matrix(ts - half, ts + half, 16, M).matrix
    w_ref = ils_synthesize(base)
    inputs = GlobalInputs(H.matrix, desired, (ts,), Apm,
                          eps_w=waveform_mse(w1, desired, A),
                          eps_s=(C_s ** 2 * 0.5 * M * 0.5,),
                          eps_p=C_sp * 0.5 * float(np.vdot(w_ref, Apm @ w_ref).real))
    return SmallGlobalInstance(inputs, desired, A)


def check_global_sampled(n: int = 20, M: int = 4, samples: int = 100_000, seed: int = 0,
                         tol: float = 1e-6) -> PropertyResult:
    """Relaxed P5 solution against the best of ``samples`` feasible unit vectors."""
    t0 = time.perf_counter()
    worst, fails = -math.inf, 0
    for k in range(n):
        inst = small_global_instance(k, M, seed)
        inp = inst.inputs
        sol = solve_relaxed("P5", inp, seed=(seed, k))
        HH = inp.H.conj().T @ inp.H
        a = steering_vector(inp.thetas[0], M)
        gain, apm = quadratic_batch(np.outer(a.conj(), a)), quadratic_batch(inp.Apm)
        mse = _batch_waveform(inst.desired, inst.A)
        best = sampled_search_w(
            quadratic_batch(HH),
            [lambda W: mse(W) <= inp.eps_w, lambda W: gain(W) >= inp.eps_s[0],
             lambda W: apm(W) >= inp.eps_p],
            M=M, samples=samples, seed=[seed, k])
        if sol.status != OPTIMAL:
            if not best.empty:
                fails += 1
                worst = math.inf
            continue
        if best.empty:
            continue
        got = received_power(inp.H, sol.w_t)
        gap = (best.value - got) / (1 + abs(best.value))
        worst = max(worst, gap)
        fails += gap > tol
    return PropertyResult(f"P5 sampled dominance M={M}", fails == 0, n, max(worst, 0.0),
                          time.perf_counter() - t0, f"failures={fails}" if fails else "")


def run_oracle_suite(seeds: int = 50, seed: int = 0, resolution: int = 200_000,
                     samples: int = 20_000, global_instances: int = 5, corrupt=None
                     ) -> SuiteReport:
    """All oracle properties at sizes that finish in well under a minute."""
    report = SuiteReport()
    report.results += check_combiners(seeds, seed, resolution, corrupt)
    report.results.append(check_real_complex(max(seeds, 100), seed))
    report.results.append(check_integration())
    report.results.append(check_vacuous(seeds, seed))
    if global_instances:
        report.results.append(check_global_sampled(global_instances, 4, samples, seed))
    return report
