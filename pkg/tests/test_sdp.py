import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from multibeam.sdp import (GE, INFEASIBLE, LE, MAXIMIZE, MINIMIZE, NUMERICAL_FAILURE, OPTIMAL,
                           Constraint, SdpProblem, dump_problem, load_problem, solve_sdp)


def sym(rng, n):
    X = rng.standard_normal((n, n))
    return 0.5 * (X + X.T)


def check_contract(problem, sol, tol=1e-6):
    assert sol.status == OPTIMAL
    W = sol.W
    np.testing.assert_allclose(W, W.T, atol=1e-12)
    assert np.trace(W) == pytest.approx(1, abs=1e-7)
    assert np.linalg.eigvalsh(W).min() >= -1e-7
    assert np.all(problem.slacks(W) >= -tol)
    assert sol.duality_gap >= 0


def test_eigenvalue_extremum():
    p = SdpProblem(np.diag([1.0, 2.0, 3.0]), MAXIMIZE)
    sol = solve_sdp(p)
    check_contract(p, sol)
    assert sol.objective_value == pytest.approx(3, abs=1e-7)
    np.testing.assert_allclose(sol.W, np.diag([0, 0, 1.0]), atol=1e-6)


def test_contradictory_trace_is_infeasible():
    p = SdpProblem(np.eye(3), MAXIMIZE, (Constraint(np.eye(3), GE, 2.0),))
    sol = solve_sdp(p)
    assert sol.status == INFEASIBLE and sol.W is None


def _dual_reference(C, A, b, sense):
    """Optimal value of one-inequality problems from the scalar Lagrange dual."""
    s = 1.0 if sense == MAXIMIZE else -1.0
    # maximise tr(sC W) s.t. tr(W)=1, tr(A W) >= b  <=>  min_mu lmax(sC + mu (A - b I))
    n = C.shape[0]

    def dual(mu):
        return np.linalg.eigvalsh(s * C + mu * (A - b * np.eye(n)))[-1]

    hi = 1.0
    while dual(hi) < dual(0.5 * hi) and hi < 1e8:
        hi *= 2
    r = minimize_scalar(dual, bounds=(0.0, hi), method="bounded",
                        options={"xatol": 1e-12, "maxiter": 2000})
    return s * min(r.fun, dual(0.0))


@pytest.mark.parametrize("k", range(12))
def test_random_one_inequality_against_dual(k):
    rng = np.random.default_rng(k)
    n = 6
    C, A = sym(rng, n), sym(rng, n)
    ev = np.linalg.eigvalsh(A)
    b = ev[0] + rng.uniform(0.3, 0.9) * (ev[-1] - ev[0])
    sense = MAXIMIZE if k % 2 else MINIMIZE
    relation = GE
    p = SdpProblem(C, sense, (Constraint(A, relation, b),))
    sol = solve_sdp(p)
    check_contract(p, sol)
    assert sol.objective_value == pytest.approx(_dual_reference(C, A, b, sense), abs=1e-5)


def test_le_constraint_mirrors_ge():
    rng = np.random.default_rng(7)
    C, A = sym(rng, 5), sym(rng, 5)
    b = float(np.mean(np.linalg.eigvalsh(A)))
    a = solve_sdp(SdpProblem(C, MAXIMIZE, (Constraint(A, LE, b),)))
    m = solve_sdp(SdpProblem(C, MAXIMIZE, (Constraint(-A, GE, -b),)))
    assert a.objective_value == pytest.approx(m.objective_value, abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 50.0))
def test_scaling_covariance(seed, s):
    rng = np.random.default_rng(seed)
    C, A = sym(rng, 5), sym(rng, 5)
    b = float(np.mean(np.linalg.eigvalsh(A)))
    base = solve_sdp(SdpProblem(C, MAXIMIZE, (Constraint(A, GE, b),)))
    scaled = solve_sdp(SdpProblem(s * C, MAXIMIZE, (Constraint(A, GE, b),)))
    assert scaled.objective_value == pytest.approx(s * base.objective_value,
                                                   abs=1e-6 * max(1, s))


def test_weak_duality_against_random_feasible_points():
    rng = np.random.default_rng(3)
    n = 8
    C, A = sym(rng, n), sym(rng, n)
    b = float(np.mean(np.linalg.eigvalsh(A)))
    p = SdpProblem(C, MAXIMIZE, (Constraint(A, GE, b),))
    sol = solve_sdp(p)
    for _ in range(500):
        X = rng.standard_normal((n, 3))
        W = X @ X.T
        W /= np.trace(W)
        if p.slacks(W)[0] >= 0:
            assert sol.objective_value >= np.sum(C * W) - 1e-8


def test_iteration_cap_reports_failure():
    rng = np.random.default_rng(0)
    p = SdpProblem(sym(rng, 10), MAXIMIZE, (Constraint(sym(rng, 10), GE, 0.0),))
    sol = solve_sdp(p, max_iters=2)
    assert sol.status == NUMERICAL_FAILURE


def test_validation():
    with pytest.raises(ValueError):
        SdpProblem(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        SdpProblem(np.eye(2), MAXIMIZE, (Constraint(np.eye(2), GE, np.inf),))
    with pytest.raises(ValueError):
        SdpProblem(np.eye(2), "up")


def test_serialisation_roundtrip():
    rng = np.random.default_rng(1)
    p = SdpProblem(sym(rng, 4), MINIMIZE, (Constraint(sym(rng, 4), LE, 0.3),
                                           Constraint(sym(rng, 4), GE, -0.2)))
    q = load_problem(dump_problem(p))
    assert q.sense == p.sense and len(q.constraints) == 2
    np.testing.assert_array_equal(q.C, p.C)
    for a, b in zip(p.constraints, q.constraints):
        np.testing.assert_array_equal(a.A, b.A)
        assert (a.relation, a.bound) == (b.relation, b.bound)


@pytest.mark.parametrize("n,k", [(6, 0), (6, 1), (16, 2), (32, 3)])
def test_matches_cvxpy(n, k):
    cvxpy = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(100 + k)
    C = sym(rng, n)
    cons = []
    for j in range(2):
        A = sym(rng, n)
        ev = np.linalg.eigvalsh(A)
        cons.append(Constraint(A, GE if j == 0 else LE,
                               ev[0] + (0.4 if j == 0 else 0.7) * (ev[-1] - ev[0])))
    p = SdpProblem(C, MAXIMIZE, tuple(cons))
    ours = solve_sdp(p)
    W = cvxpy.Variable((n, n), symmetric=True)
    cc = [W >> 0, cvxpy.trace(W) == 1]
    cc += [cvxpy.trace(c.A @ W) >= c.bound if c.relation == GE else cvxpy.trace(c.A @ W) <= c.bound
           for c in cons]
    prob = cvxpy.Problem(cvxpy.Maximize(cvxpy.trace(C @ W)), cc)
    prob.solve(solver=cvxpy.CLARABEL)
    if prob.status == "infeasible":
        assert ours.status == INFEASIBLE
        return
    check_contract(p, ours)
    assert ours.objective_value == pytest.approx(prob.value, abs=1e-6)
