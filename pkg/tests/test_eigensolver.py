import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from magspec.eigensolver import (
    HermitianOperator, heat_trace_partial, lowest_eigenpairs, require_converged, residual_norms, riesz_mean,
)
from magspec._validation import SolverError


def random_operator(rng, n, density=0.05):
    A = sp.random(n, n, density=density, random_state=rng, dtype=complex, data_rvs=lambda m: rng.normal(size=m) + 1j * rng.normal(size=m))
    H = A + A.conj().T + sp.eye(n) * 0.1
    mass = rng.uniform(0.5, 2.0, size=n)
    return HermitianOperator(H, mass)


def dense_oracle(op, k):
    return la.eigh(op.matrix.toarray(), np.diag(op.mass), eigvals_only=True)[:k]


@pytest.mark.parametrize("n", [30, 120, 200])
def test_iterative_matches_dense(n):
    rng = np.random.default_rng(n)
    op = random_operator(rng, n)
    it = lowest_eigenpairs(op, 6, method="iterative", seed=3)
    assert it.converged
    assert np.allclose(it.eigenvalues, dense_oracle(op, 6), atol=1e-8 * it.scale)


def test_residual_certificate_recomputed():
    rng = np.random.default_rng(1)
    op = random_operator(rng, 80)
    res = lowest_eigenpairs(op, 5)
    H, M = op.matrix.toarray(), op.mass
    for lam, x in zip(res.eigenvalues, res.eigenvectors.T):
        r = H @ x - lam * M * x
        norm = np.sqrt(np.sum(np.abs(r) ** 2 / M)) / np.sqrt(np.sum(M * np.abs(x) ** 2))
        assert norm <= res.tol * res.scale
    assert np.allclose(residual_norms(op, res.eigenvalues, res.eigenvectors), res.residuals)


def test_non_hermitian_rejected():
    with pytest.raises(AssertionError):
        HermitianOperator(sp.csr_matrix(np.array([[1.0, 1j], [1j, 1.0]])), np.ones(2))


def test_bad_arguments():
    op = HermitianOperator(sp.eye(5), np.ones(5))
    with pytest.raises(ValueError):
        lowest_eigenpairs(op, 5)
    with pytest.raises(ValueError):
        lowest_eigenpairs(op, 2, tol=1e-2)
    with pytest.raises(ValueError):
        lowest_eigenpairs(op, 2, method="lobpcg")


def test_seed_determinism():
    rng = np.random.default_rng(5)
    op = random_operator(rng, 150)
    a = lowest_eigenpairs(op, 4, method="iterative", seed=11)
    b = lowest_eigenpairs(op, 4, method="iterative", seed=11)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_require_converged():
    res = lowest_eigenpairs(HermitianOperator(sp.diags([1.0, 2.0, 3.0]), np.ones(3)), 2)
    assert require_converged(res) is res
    res.converged = False
    with pytest.raises(SolverError):
        require_converged(res)


def test_partial_sums():
    assert heat_trace_partial([0.0, 1.0], 1.0) == pytest.approx(1 + np.exp(-1))
    assert riesz_mean([1.0, 2.0, 5.0], 3.0) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        heat_trace_partial([0.0], 0.0)
