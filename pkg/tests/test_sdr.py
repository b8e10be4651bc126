import math

import numpy as np
import pytest

from multibeam.array import (ChannelSimConfig, angular_power_matrix, received_power,
                             sample_rician_channel, steering_matrix, waveform_mse)
from multibeam.combiner import phi_m1, solve_p1, solve_p2, unconstrained_phi_opt
from multibeam.sdp import GE, LE, MAXIMIZE, MINIMIZE, OPTIMAL, SdpProblem, solve_sdp
from multibeam.sdr import (GlobalInputs, build_sdp, build_waveform_quadratic, embed_real,
                           extract_rank1, gain_quadratic, hermitian_embed, homogenized_forms,
                           pattern_mismatch, power_quadratic, real_to_complex, rotation_residual,
                           sdp_ils, solve_relaxed)
from multibeam.subbeam import (DesiredPattern, combine, conventional_beam, default_grid,
                               desired_multibeam, ils_synthesize)

from conftest import crandn, default_pair, unit

TS = math.radians(-6.45)


def test_embed_examples():
    np.testing.assert_array_equal(embed_real(np.array([1 + 1j])), [1, 1])
    np.testing.assert_array_equal(embed_real(np.array([[1j]])), [[0, -1], [1, 0]])


def test_embed_identities(rng):
    H, w = crandn(rng, 5, 4), crandn(rng, 4)
    Ht, wt = embed_real(H), embed_real(w)
    assert np.linalg.norm(wt) == pytest.approx(np.linalg.norm(w))
    assert wt @ Ht.T @ Ht @ wt == pytest.approx(np.linalg.norm(H @ w) ** 2, rel=1e-10)
    np.testing.assert_allclose(Ht @ wt, embed_real(H @ w), atol=1e-12)
    np.testing.assert_array_equal(Ht[:5, :4], H.real)
    np.testing.assert_array_equal(Ht[:5, 4:], -H.imag)


def test_real_to_complex_examples(rng):
    np.testing.assert_allclose(real_to_complex([1.0, 0.0]), [1.0])
    np.testing.assert_allclose(real_to_complex(np.array([1.0, 1.0]) / math.sqrt(2)),
                               [(1 + 1j) / math.sqrt(2)])
    w = crandn(rng, 6)
    np.testing.assert_allclose(real_to_complex(embed_real(w)), w / np.linalg.norm(w))


def _random_desired(rng, M=6, G=40):
    grid = np.sort(rng.uniform(-1.4, 1.4, G))
    return DesiredPattern(grid, rng.uniform(0.5, 2, G), rng.uniform(0.1, 2, G),
                          np.exp(1j * rng.uniform(-3, 3, G)), M)


def test_waveform_quadratic(rng):
    d = _random_desired(rng)
    Ahat = build_waveform_quadratic(d)
    assert np.linalg.eigvalsh(Ahat).min() >= -1e-10
    for _ in range(10):
        w = crandn(rng, 6)
        x = embed_real(w)
        assert x @ Ahat @ x == pytest.approx(waveform_mse(w, d), rel=1e-9, abs=1e-12)
    # a beam whose pattern is proportional to the target scores zero
    w = crandn(rng, 6)
    Aw = steering_matrix(d.grid, 6) @ w
    exact = DesiredPattern(d.grid, np.ones(40), np.abs(Aw), np.exp(1j * np.angle(Aw)), 6)
    x = embed_real(2.5 * w)
    assert x @ build_waveform_quadratic(exact) @ x == pytest.approx(0, abs=1e-9)


def test_hermitian_and_gain_forms(rng):
    Q = crandn(rng, 5, 5)
    Q = Q @ Q.conj().T
    w = crandn(rng, 5)
    x = embed_real(w)
    assert x @ hermitian_embed(Q) @ x == pytest.approx(np.vdot(w, Q @ w).real, rel=1e-12)
    G = gain_quadratic(0.3, 5)
    np.testing.assert_allclose(G, G.T)
    assert np.linalg.matrix_rank(G, tol=1e-10) <= 2
    assert np.linalg.eigvalsh(G).min() >= -1e-12


def _inputs(H, **kw):
    pair = default_pair(-6.45)
    d = desired_multibeam(pair)
    half = math.radians(8.59) / 2
    Apm = angular_power_matrix(TS - half, TS + half, 16, 16)
    return pair, GlobalInputs(H, d, (TS,), Apm, **kw)


def test_p5_without_waveform_bound_is_dominant_singular_vector(channel):
    _, inp = _inputs(channel)
    sol = solve_relaxed("P5", inp)
    _, s, Vh = np.linalg.svd(channel)
    v = Vh[0].conj()
    assert abs(np.vdot(v, sol.w_t)) == pytest.approx(1, abs=1e-4)
    assert sol.gamma_max == pytest.approx(s[0] ** 2, rel=1e-6)


def test_p6_vacuous_floor_bounds_ils(channel):
    pair, inp = _inputs(channel, rx_floor=0.0)
    problem = build_sdp("P6", inp)
    sol = solve_sdp(problem)
    w_ils = ils_synthesize(inp.desired, max_iters=1)
    assert sol.objective_value <= waveform_mse(w_ils, inp.desired) + 1e-8


def test_p7_forms(channel):
    _, inp = _inputs(channel, rx_floor=1.0, eps_w=10.0)
    p = build_sdp("P7", inp)
    for A in [p.C] + [c.A for c in p.constraints]:
        np.testing.assert_allclose(A, A.T, atol=1e-12)
    assert np.linalg.matrix_rank(p.C, tol=1e-9) <= 2
    assert p.sense == MAXIMIZE and [c.relation for c in p.constraints] == [LE, GE]


def test_build_sdp_requirements(channel):
    _, inp = _inputs(channel)
    with pytest.raises(ValueError):
        build_sdp("P6", inp)
    with pytest.raises(ValueError):
        build_sdp("P9", inp)
    assert build_sdp("P6", _inputs(channel, rx_floor=1.0)[1]).sense == MINIMIZE


def test_extract_rank1_examples(rng):
    v = rng.standard_normal(6)
    out, ratio = extract_rank1(np.outer(v, v))
    assert min(np.linalg.norm(out - v), np.linalg.norm(out + v)) < 1e-10
    assert ratio < 1e-12
    _, ratio = extract_rank1(np.diag([0.5, 0.5, 0.0, 0.0]))
    assert ratio == pytest.approx(1.0)


def test_extract_rank1_rotation_averaged(rng):
    w = unit(crandn(rng, 4))
    x, jx = embed_real(w), embed_real(1j * w)
    W = 0.5 * (np.outer(x, x) + np.outer(jx, jx))
    assert rotation_residual(W) < 1e-12
    out, ratio = extract_rank1(W)
    assert ratio < 1e-12
    assert abs(np.vdot(w, real_to_complex(out))) == pytest.approx(1, abs=1e-10)


def test_extraction_consistency(channel):
    pair, inp = _inputs(channel)
    w1 = unit(combine(pair, phi_m1(pair)))
    d = inp.desired.with_phases(np.exp(1j * np.angle(steering_matrix(inp.desired.grid, 16) @ w1)))
    inp = GlobalInputs(channel, d, (TS,), inp.Apm, eps_w=waveform_mse(w1, d), eps_s=(4.0,))
    sol = solve_relaxed("P5", inp)
    assert sol.status == OPTIMAL and sol.rank_ratio < 1e-8
    assert sol.objective_value == pytest.approx(sol.sdp_objective, rel=1e-6)
    assert min(sol.slacks) >= -1e-6
    assert np.linalg.norm(sol.w_t) == pytest.approx(1, abs=1e-10)


def test_relaxation_bounds_combiner_points():
    for k in range(5):
        H = sample_rician_channel(ChannelSimConfig(), [21, k]).matrix
        pair, inp = _inputs(H)
        d = inp.desired
        A = steering_matrix(d.grid, 16)
        w1 = unit(combine(pair, phi_m1(pair)))
        d1 = d.with_phases(np.exp(1j * np.angle(A @ w1)))
        eps_w = 1.5 * waveform_mse(w1, d1, A)
        inp = GlobalInputs(H, d1, (TS,), inp.Apm, eps_w=eps_w, eps_s=(0.9 ** 2 * 8,))
        sol = solve_relaxed("P5", inp)
        problem = build_sdp("P5", inp)
        for phi in (unconstrained_phi_opt(pair, H), solve_p1(pair, H, [TS], [0.9]).phi):
            w = unit(combine(pair, phi))
            x = embed_real(w)
            if np.all(problem.slacks(np.outer(x, x)) >= 0):
                assert sol.sdp_objective >= received_power(H, w) - 1e-7


def test_sdp_ils_matched_beam_on_los_channel():
    H = sample_rician_channel(ChannelSimConfig(num_paths=1), 0).matrix
    w_los = conventional_beam(16, 16, 0.0)
    d = DesiredPattern(default_grid(), np.ones(181),
                       np.abs(steering_matrix(default_grid(), 16) @ w_los), np.ones(181), 16)
    sol = sdp_ils("P5", GlobalInputs(H, d, eps_w=1e6))
    assert sol.status == OPTIMAL
    ang = math.acos(min(1.0, abs(np.vdot(w_los, sol.w_t))))
    assert ang < 1e-2


def test_sdp_ils_default_setup():
    its, converged = [], 0
    for k in range(6):
        H = sample_rician_channel(ChannelSimConfig(), [31, k]).matrix
        pair, inp = _inputs(H)
        A = steering_matrix(inp.desired.grid, 16)
        eps_w = pattern_mismatch(unit(combine(pair, phi_m1(pair))), inp.desired, A)
        inp = GlobalInputs(H, inp.desired, (TS,), inp.Apm, eps_w=eps_w)
        sol = sdp_ils("P5", inp, L_max=6)
        assert sol.status == OPTIMAL
        assert min(sol.slacks) >= -1e-6
        assert np.linalg.norm(sol.w_t) == pytest.approx(1, abs=1e-10)
        its.append(sol.iterations_used)
        converged += sol.converged
        hist = sol.history
        assert [h["iteration"] for h in hist] == list(range(1, len(hist) + 1))
    assert converged >= 4


def test_sdp_ils_reports_infeasible_without_restoration(channel):
    pair, inp = _inputs(channel)
    inp = GlobalInputs(channel, inp.desired, (TS,), inp.Apm, eps_w=1e-6)
    sol = sdp_ils("P5", inp, restore=False)
    assert sol.status == "infeasible" and sol.iterations_used == 1 and sol.w_t is None


def test_sdp_ils_rejects_bad_lmax(channel):
    _, inp = _inputs(channel)
    with pytest.raises(ValueError):
        sdp_ils("P5", inp, L_max=0)


def test_homogenized_forms_psd(channel):
    _, inp = _inputs(channel)
    f = homogenized_forms(inp)
    for M in (f.A_hat, f.H_hat, f.A_s[0], f.A_p):
        assert np.linalg.eigvalsh(M).min() >= -1e-9 * max(1, np.abs(M).max())
