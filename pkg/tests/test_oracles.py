import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibeam import _kernels_py, kernels
from multibeam.oracles import (AtLeast, TrigRatio, grid_search_phi, integration_reference,
                               quadratic_batch, sampled_search_w)

from conftest import crandn

trig = st.tuples(*[st.floats(-2, 2)] * 3).map(lambda t: TrigRatio((t[0], t[1], t[2], 3.0, 1.0, 0.5)))


def test_cosine_peak():
    r = grid_search_phi(np.cos, resolution=4000)
    assert abs(r.phi) <= math.pi / 4000 and r.feasible_count == 4000


def test_constraint_pushes_to_boundary():
    # excluding |phi| < 0.5 moves the cos maximiser to the edge of the allowed set
    r = grid_search_phi(np.cos, [lambda p: np.abs(p) >= 0.5], resolution=10_000)
    assert abs(abs(r.phi) - 0.5) <= 2 * math.pi / 10_000


def test_empty_is_distinct_from_zero():
    r = grid_search_phi(lambda p: np.zeros_like(p), [lambda p: p > 10], resolution=1000)
    assert r.empty and r.value is None and r.phi is None
    z = grid_search_phi(lambda p: np.zeros_like(p), resolution=1000)
    assert not z.empty and z.value == 0.0


def test_resolution_floor():
    with pytest.raises(ValueError):
        grid_search_phi(np.cos, resolution=999)


@settings(max_examples=30, deadline=None)
@given(trig, trig, st.floats(-0.5, 0.5), st.sampled_from([1000, 3001, 20_000]))
def test_refinement_monotone_and_fast_path(obj, con, t, R):
    cons = [AtLeast(con, t)]
    coarse, fine = grid_search_phi(obj, cons, R), grid_search_phi(obj, cons, 2 * R)
    if not coarse.empty:
        assert fine.value >= coarse.value
    slow = grid_search_phi(lambda p: obj(p), [lambda p: con(p) >= t], R)
    assert (slow.phi, slow.value, slow.feasible_count) == (coarse.phi, coarse.value,
                                                            coarse.feasible_count) or (
        slow.value == pytest.approx(coarse.value, rel=1e-14))


def test_lipschitz_agreement():
    f = TrigRatio((1.0, 0.3, -0.7, 2.0, 0.5, 0.4))
    a, b = grid_search_phi(f, resolution=1000), grid_search_phi(f, resolution=200_000)
    assert b.value - a.value <= 10 * math.pi / 1000


def test_sampled_singular_value(rng):
    H = crandn(rng, 2, 2)
    r = sampled_search_w(quadratic_batch(H.conj().T @ H), M=2, samples=100_000, seed=3)
    s1 = np.linalg.svd(H, compute_uv=False)[0] ** 2
    assert r.value <= s1 + 1e-12 and r.value >= 0.98 * s1
    assert np.linalg.norm(r.w) == pytest.approx(1)


def test_sampled_empty_and_deterministic(rng):
    Q = np.eye(3)
    assert sampled_search_w(quadratic_batch(Q), [lambda W: np.zeros(len(W), bool)],
                            M=3, samples=10_000, seed=1).empty
    Q = crandn(rng, 3, 3)
    a = sampled_search_w(quadratic_batch(Q @ Q.conj().T), M=3, samples=10_000, seed=9)
    b = sampled_search_w(quadratic_batch(Q @ Q.conj().T), M=3, samples=10_000, seed=9)
    np.testing.assert_array_equal(a.w, b.w)
    assert a.value == b.value


def test_integration_reference_zero_width():
    np.testing.assert_array_equal(integration_reference(0.3, 0.3, 8), 0)


# -- compiled vs numpy kernels ------------------------------------------------

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="extension not built")


@needs_ext
def test_backends_agree_toeplitz():
    from multibeam import _kernels
    for args in ((-0.3, 0.01, 16, 0.5, 16), (0.1, 0.002, 4096, 1.0, 7)):
        np.testing.assert_allclose(_kernels.toeplitz_sums(*args), _kernels_py.toeplitz_sums(*args),
                                   rtol=1e-12, atol=1e-14)


@needs_ext
@settings(max_examples=25, deadline=None)
@given(trig, trig, st.floats(-0.5, 0.5))
def test_backends_agree_grid(obj, con, t):
    from multibeam import _kernels
    args = (np.array(obj.coeffs), np.array([con.coeffs]), np.array([t]), 5000)
    a, b = _kernels.ratio_grid_argmax(*args), _kernels_py.ratio_grid_argmax(*args)
    assert a[0] == b[0] and a[2] == b[2]
    assert a[1] == pytest.approx(b[1], rel=1e-14)
