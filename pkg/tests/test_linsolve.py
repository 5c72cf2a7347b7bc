import numpy as np
import pytest

from rabidimer import SolverConfig, SolverError, solve


def test_identity_system():
    rhs = np.array([1.0 + 2j, -0.5, 3j])
    res = solve(np.eye(3), rhs)
    assert np.allclose(res.solution, rhs, atol=1e-14)
    assert res.residual_norm < 1e-14


def test_hand_inverted_2x2():
    # [[1, i], [-i, 2]] has determinant 1; inverse maps [1, 0] to [2, i]
    A = np.array([[1.0, 1j], [-1j, 2.0]])
    res = solve(A, np.array([1.0, 0.0]))
    assert np.allclose(res.solution, [2.0, 1j], atol=1e-12)


def test_rank_deficient_minimum_norm():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    rhs = np.array([2.0, 2.0])
    res = solve(A, rhs, SolverConfig(strategy="svd_always"))
    assert np.allclose(res.solution, [1.0, 1.0], atol=1e-10)
    assert res.residual_norm < 1e-10


def test_rank_deficient_through_default_path():
    # consistent rank-1 system also resolved by the damped LU route
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    res = solve(A, np.array([2.0, 2.0]))
    assert np.allclose(res.solution, [1.0, 1.0], atol=1e-6)


def test_residual_contract():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    res = solve(A, b)
    recomputed = np.linalg.norm(A @ res.solution - b) / np.linalg.norm(b)
    assert abs(res.residual_norm - recomputed) < 1e-14


def test_zero_rhs_gives_zero_solution():
    A = np.diag([1.0, 2.0, 3.0]).astype(complex)
    res = solve(A, np.zeros(3, dtype=complex))
    assert np.all(res.solution == 0)
    assert res.residual_norm == 0.0


def test_regularization_consistency():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 3 * np.eye(6)
    b = rng.normal(size=6) + 1j * rng.normal(size=6)
    exact = np.linalg.solve(A, b)
    errs = []
    for eps in (1e-6, 1e-8, 1e-10):
        # svd_always path has no refinement, exposing the raw damping order
        res = solve(A + 0j, b, SolverConfig(tikhonov_eps=eps))
        errs.append(np.linalg.norm(res.solution - exact))
    assert errs[-1] <= errs[0] + 1e-12
    assert errs[-1] < 1e-10


def test_non_finite_rejected():
    A = np.eye(2, dtype=complex)
    A[0, 0] = np.nan
    with pytest.raises(SolverError):
        solve(A, np.ones(2, dtype=complex))


def test_inconsistent_singular_system_errors():
    A = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.raises(SolverError) as err:
        solve(A, np.array([1.0, -1.0]), SolverConfig(strategy="svd_always"))
    assert err.value.residual_norm is not None


def test_well_conditioned_residual_is_tiny():
    # the damping shift must not limit accuracy on good matrices
    rng = np.random.default_rng(3)
    A = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)) + 4 * np.eye(7)
    b = rng.normal(size=7) + 1j * rng.normal(size=7)
    res = solve(A, b)
    assert res.residual_norm < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tikhonov_eps=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(svd_threshold=1.5)
    with pytest.raises(ValueError):
        SolverConfig(strategy="qr")


def test_svd_always_strategy():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(5, 5)) + 2 * np.eye(5)
    b = rng.normal(size=5)
    res = solve(A, b, SolverConfig(strategy="svd_always"))
    assert np.allclose(A @ res.solution, b, atol=1e-10)
    assert res.cond_estimate >= 1.0
