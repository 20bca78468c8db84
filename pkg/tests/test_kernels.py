import numpy as np
import pytest
from scipy import sparse

from sesscmf import kernels
from sesscmf.factorization import _empty_structure, _kernel_csr

pure = kernels.get_backend("pure")
BACKENDS = [kernels.get_backend(name) for name in kernels.available_backends()]


def random_csr(rng, n, m, density=0.4, symmetric=False):
    mask = rng.random((n, m)) < density
    A = np.where(mask, rng.random((n, m)) + 0.1, 0.0)
    if symmetric:
        A = np.triu(A, 1)
        A = A + A.T
    return sparse.csr_matrix(A)


def joint_call(backend, out, base, f1, s1, w1, f2, s2, w2, nonneg=False):
    backend.solve_rows_joint(
        out, base, f1, *_kernel_csr(s1), w1, f2, *_kernel_csr(s2), w2, nonneg
    )


def test_backends_present():
    assert "pure" in kernels.available_backends()
    # the compiled extension is expected in a built tree
    assert kernels.active_backend() in kernels.available_backends()


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND_NAME)
def test_joint_solves_normal_equations(backend):
    rng = np.random.default_rng(0)
    n, m, k = 7, 5, 3
    R = random_csr(rng, n, m)
    Y = rng.standard_normal((m, k))
    Z = rng.standard_normal((m, k))
    V = random_csr(rng, n, m)  # second structure, same row count
    lam = 0.05
    w2 = 0.7
    out = np.zeros((n, k))
    joint_call(backend, out, lam * np.eye(k), Y, R, 1.0, Z, V, w2)
    for r in range(n):
        cols1 = R[r].indices
        vals1 = R[r].data
        cols2 = V[r].indices
        vals2 = V[r].data
        A = lam * np.eye(k)
        b = np.zeros(k)
        for c, v in zip(cols1, vals1):
            A += np.outer(Y[c], Y[c])
            b += v * Y[c]
        for c, v in zip(cols2, vals2):
            A += w2 * np.outer(Z[c], Z[c])
            b += w2 * v * Z[c]
        expected = np.linalg.solve(A, b)
        assert out[r] == pytest.approx(expected, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND_NAME)
def test_wmf_solves_confidence_weighted_system(backend):
    rng = np.random.default_rng(1)
    n, m, k = 6, 8, 4
    R = random_csr(rng, n, m, density=0.5)
    R.data[:] = 1.0
    Y = rng.standard_normal((m, k))
    lam = 0.1
    alpha = 7.5
    gram = Y.T @ Y + lam * np.eye(k)
    out = np.zeros((n, k))
    backend.solve_rows_wmf(out, Y, gram, *_kernel_csr(R), alpha, False)
    dense = R.toarray()
    for r in range(n):
        weights = 1.0 + alpha * dense[r]
        A = (Y.T * weights) @ Y + lam * np.eye(k)
        b = (Y.T * weights) @ dense[r]
        if not dense[r].any():
            assert np.all(out[r] == 0.0)
            continue
        expected = np.linalg.solve(A, b)
        assert out[r] == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_backend_parity_joint():
    if "native" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    native = kernels.get_backend("native")
    rng = np.random.default_rng(2)
    n, m, k = 9, 6, 5
    R = random_csr(rng, n, m)
    V = random_csr(rng, n, m, density=0.3)
    Y = rng.standard_normal((m, k))
    Z = rng.standard_normal((m, k))
    base = 0.02 * np.eye(k)
    out_a = np.zeros((n, k))
    out_b = np.zeros((n, k))
    joint_call(pure, out_a, base, Y, R, 1.0, Z, V, 0.6)
    joint_call(native, out_b, base, Y, R, 1.0, Z, V, 0.6)
    np.testing.assert_allclose(out_a, out_b, rtol=1e-10, atol=1e-13)


def test_backend_parity_wmf():
    if "native" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    native = kernels.get_backend("native")
    rng = np.random.default_rng(3)
    n, m, k = 8, 7, 4
    R = random_csr(rng, n, m, density=0.5)
    R.data[:] = 1.0
    Y = rng.standard_normal((m, k))
    gram = Y.T @ Y + 0.05 * np.eye(k)
    out_a = np.zeros((n, k))
    out_b = np.zeros((n, k))
    pure.solve_rows_wmf(out_a, Y, gram.copy(), *_kernel_csr(R), 4.0, False)
    native.solve_rows_wmf(out_b, Y, gram.copy(), *_kernel_csr(R), 4.0, False)
    np.testing.assert_allclose(out_a, out_b, rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND_NAME)
def test_empty_row_is_zero(backend):
    rng = np.random.default_rng(4)
    k = 3
    R = sparse.csr_matrix((2, 4))
    Y = rng.standard_normal((4, k))
    out = rng.standard_normal((2, k))  # pre-filled garbage must be overwritten
    empty = _empty_structure(2, k)
    joint_call(backend, out, 0.1 * np.eye(k), Y, R, 1.0, empty[3],
               sparse.csr_matrix((2, 1)), 0.0)
    assert np.all(out == 0.0)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND_NAME)
def test_nonneg_clips(backend):
    rng = np.random.default_rng(5)
    n, m, k = 6, 6, 3
    R = random_csr(rng, n, m, density=0.6)
    R.data = rng.standard_normal(R.nnz)  # signed targets force negatives
    Y = rng.standard_normal((m, k))
    out = np.zeros((n, k))
    empty = _empty_structure(n, k)
    joint_call(backend, out, 0.01 * np.eye(k), Y, R, 1.0, empty[3],
               sparse.csr_matrix((n, 1)), 0.0, nonneg=True)
    assert np.all(out >= 0.0)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND_NAME)
def test_singular_system_names_row(backend):
    k = 2
    # one observation whose factor vector is zero and no regularizer:
    # the normal equations are singular
    R = sparse.csr_matrix(np.array([[1.0]]))
    Y = np.zeros((1, k))
    out = np.zeros((1, k))
    gram = np.zeros((k, k))
    with pytest.raises(np.linalg.LinAlgError, match="row 0"):
        backend.solve_rows_wmf(out, Y, gram, *_kernel_csr(R), 1.0, False)
