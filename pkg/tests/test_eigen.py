"""Eigenvalue paths: dense exact and randomized Lanczos."""

from __future__ import annotations

import numpy as np
import pytest

from sols import lanczos_iteration_cap, lanczos_min_eig, min_eigenpair_exact, suite

from conftest import wilson_slack


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_symmetric(rng, n: int, scale: float = 1.0) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return scale * 0.5 * (A + A.T)


def shifted_power_min_eig(H: np.ndarray, tol: float = 1e-13, max_iters: int = 200_000):
    """Independent oracle: power iteration on s I - H, no eigendecomposition."""
    n = H.shape[0]
    s = float(np.linalg.norm(H, 1))
    B = s * np.eye(n) - H
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    prev = np.inf
    for _ in range(max_iters):
        w = B @ v
        v = w / np.linalg.norm(w)
        mu = float(v @ B @ v)
        if abs(mu - prev) <= tol * max(1.0, abs(mu)):
            break
        prev = mu
    return s - mu


def test_exact_diagonal_example():
    est = min_eigenpair_exact(np.diag([3.0, -1.0, 2.0]))
    assert est.lam == pytest.approx(-1.0)
    assert np.allclose(np.abs(est.v_unit), [0.0, 1.0, 0.0], atol=1e-12)
    assert est.converged_by == "exact"


def test_exact_two_by_two_offdiagonal():
    est = min_eigenpair_exact(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert est.lam == pytest.approx(-1.0)
    assert np.allclose(np.abs(est.v_unit), np.full(2, 1.0 / np.sqrt(2.0)), atol=1e-12)


def test_exact_matches_shifted_power_oracle():
    H = random_symmetric(np.random.default_rng(0), 30)
    est = min_eigenpair_exact(H)
    assert est.lam == pytest.approx(shifted_power_min_eig(H), abs=1e-8)


def test_exact_rejects_asymmetric():
    M = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        min_eigenpair_exact(M)


def test_exact_residual_invariant_on_random_matrices():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        H = random_symmetric(rng, n, scale=float(rng.uniform(0.1, 10.0)))
        est = min_eigenpair_exact(H)
        resid = np.linalg.norm(H @ est.v_unit - est.lam * est.v_unit)
        assert resid <= 1e-8 * max(1.0, np.linalg.norm(H, 2))
        assert abs(np.linalg.norm(est.v_unit) - 1.0) <= 1e-12


# --- iteration cap ------------------------------------------------------------

def test_cap_formula_example():
    assert lanczos_iteration_cap(n=1000, M=10.0, eps=0.1, delta=0.01) == 57


def test_cap_zero_delta_forces_full_space():
    assert lanczos_iteration_cap(n=17, M=10.0, eps=0.1, delta=0.0) == 17


def test_cap_never_exceeds_dimension():
    assert lanczos_iteration_cap(n=5, M=100.0, eps=1e-4, delta=0.5) == 5


def test_cap_rejects_bad_inputs():
    with pytest.raises(ValueError):
        lanczos_iteration_cap(10, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        lanczos_iteration_cap(10, 1.0, 0.1, 1.0)


# --- Lanczos ------------------------------------------------------------------

def hv_of(H):
    return lambda v: H @ v


def test_full_space_is_exact_on_small_diagonal():
    H = np.diag([-1.0, 0.0, 1.0])
    est = lanczos_min_eig(hv_of(H), 3, M=2.0, eps=0.5, delta=0.0, rng=rng_for(0))
    assert est.lam == pytest.approx(-1.0, abs=1e-12)
    assert est.converged_by == "full_n"


def test_full_space_recovers_min_eig_on_suite_hessians():
    rng = np.random.default_rng(2)
    for problem in suite():
        obj = problem.make_objective()
        x = problem.start_point() + 0.05 * rng.standard_normal(problem.dim)
        H = obj.dense_hessian(x)
        exact = min_eigenpair_exact(H).lam
        M = float(np.linalg.norm(H, 2)) + 1.0
        est = lanczos_min_eig(hv_of(H), problem.dim, M=M, eps=0.5, delta=0.0, rng=rng_for(9))
        assert est.lam == pytest.approx(exact, abs=1e-8 * max(1.0, abs(exact)))


def test_rayleigh_upper_bound_holds_unconditionally():
    rng = np.random.default_rng(3)
    for trial in range(50):
        n = int(rng.integers(3, 40))
        H = random_symmetric(rng, n)
        exact = float(np.linalg.eigvalsh(H)[0])
        M = float(np.linalg.norm(H, 2)) + 2.0
        est = lanczos_min_eig(
            hv_of(H), n, M=M, eps=0.3, delta=0.05, rng=rng_for(100 + trial)
        )
        assert est.lam >= exact - 1e-10 * max(1.0, abs(exact))


def test_iteration_count_respects_cap():
    rng = np.random.default_rng(4)
    for trial in range(30):
        n = int(rng.integers(5, 80))
        H = random_symmetric(rng, n)
        M = float(np.linalg.norm(H, 2)) + 2.0
        eps, delta = 0.05, 0.01
        est = lanczos_min_eig(hv_of(H), n, M=M, eps=eps, delta=delta, rng=rng_for(trial))
        assert est.iters <= lanczos_iteration_cap(n, M, eps, delta)


def test_ritz_values_monotone():
    H = random_symmetric(np.random.default_rng(5), 40)
    M = float(np.linalg.norm(H, 2)) + 2.0
    est = lanczos_min_eig(
        hv_of(H), 40, M=M, eps=0.01, delta=0.2, rng=rng_for(6), track_ritz=True
    )
    ritz = est.ritz_values
    assert ritz is not None and len(ritz) == est.iters
    assert all(b >= a - 1e-10 for a, b in zip(ritz, ritz[1:]))


def test_breakdown_restarts_on_isotropic_hessian():
    # Every vector is an eigenvector of -I: first-step breakdown, and the
    # estimate is exact however the restarts go.
    H = -np.eye(6)
    est = lanczos_min_eig(hv_of(H), 6, M=2.0, eps=0.1, delta=0.01, rng=rng_for(7))
    assert est.lam == pytest.approx(-1.0, abs=1e-12)
    assert est.iters <= lanczos_iteration_cap(6, 2.0, 0.1, 0.01)


def test_monte_carlo_failure_rate_within_probability_contract():
    # Fixed matrix class from the module contract: n = 100 diagonal with
    # smallest eigenvalue -2, estimator run at eps = 0.1, delta = 0.01.
    n, eps, delta, M = 100, 0.1, 0.01, 10.0
    diag = np.linspace(-2.0, 6.0, n)
    H = np.diag(diag)
    trials, failures = 1000, 0
    for t in range(trials):
        est = lanczos_min_eig(hv_of(H), n, M=M, eps=eps, delta=delta, rng=rng_for(5000 + t))
        if est.lam > -2.0 + eps:
            failures += 1
        assert est.iters <= lanczos_iteration_cap(n, M, eps, delta)
    rate = failures / trials
    assert rate <= delta + wilson_slack(delta, trials)


def test_determinism_same_seed_same_estimate():
    H = random_symmetric(np.random.default_rng(8), 25)
    M = float(np.linalg.norm(H, 2)) + 2.0
    a = lanczos_min_eig(hv_of(H), 25, M=M, eps=0.05, delta=0.01, rng=rng_for(42))
    b = lanczos_min_eig(hv_of(H), 25, M=M, eps=0.05, delta=0.01, rng=rng_for(42))
    assert a.lam == b.lam
    assert np.array_equal(a.v_unit, b.v_unit)
