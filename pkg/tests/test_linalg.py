import numpy as np
import pytest

from ma_isac import linalg


def random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (g + g.conj().T)


def random_psd(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T


def test_eigh_identity():
    w, u = linalg.eigh(np.eye(2, dtype=complex))
    assert np.allclose(w, [1.0, 1.0])
    assert np.linalg.norm(u.conj().T @ u - np.eye(2)) <= 1e-12


def test_eigh_diagonal_orders_ascending():
    w, u = linalg.eigh(np.diag([3.0, -1.0]).astype(complex))
    assert np.allclose(w, [-1.0, 3.0])
    assert np.allclose(np.abs(u), [[0, 1], [1, 0]])


def test_eigh_reconstruction_residual():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = random_hermitian(rng, 4)
        w, u = linalg.eigh(m)
        scale = np.linalg.norm(m)
        assert np.linalg.norm(m @ u - u * w) <= 1e-10 * scale
        assert np.linalg.norm(u.conj().T @ u - np.eye(4)) <= 1e-10
        assert np.linalg.norm((u * w) @ u.conj().T - m) <= 1e-10 * scale


def test_eigh_rejects_non_hermitian():
    with pytest.raises(ValueError):
        linalg.eigh(np.array([[1.0, 2.0], [0.0, 1.0]], dtype=complex))


def test_eigh_rejects_non_finite():
    m = np.eye(2, dtype=complex)
    m[0, 0] = np.nan
    with pytest.raises(ValueError):
        linalg.eigh(m)


def test_herm_sqrt_inv_identity():
    assert np.allclose(linalg.herm_sqrt_inv(np.eye(3, dtype=complex)), np.eye(3))


def test_herm_sqrt_inv_diagonal():
    r = linalg.herm_sqrt_inv(np.diag([4.0, 9.0]).astype(complex))
    assert np.allclose(r, np.diag([0.5, 1.0 / 3.0]))


def test_herm_sqrt_inv_residual():
    rng = np.random.default_rng(1)
    for _ in range(10):
        m = random_psd(rng, 4)
        r = linalg.herm_sqrt_inv(m, shift=1e-6)
        shifted = m + 1e-6 * np.eye(4)
        assert np.linalg.norm(r @ shifted @ r - np.eye(4)) <= 1e-9


def test_herm_sqrt_inv_singular_raises():
    m = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(ValueError):
        linalg.herm_sqrt_inv(m, shift=0.0)


def test_herm_sqrt_squares_back():
    rng = np.random.default_rng(2)
    m = random_psd(rng, 3)
    s = linalg.herm_sqrt(m)
    assert np.linalg.norm(s @ s - m) <= 1e-10 * np.linalg.norm(m)


def test_kron_vec_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        lhs = np.kron(a, b) @ linalg.vec(x)
        rhs = linalg.vec(b @ x @ a.T)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


def test_vec_unvec_roundtrip():
    rng = np.random.default_rng(4)
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    assert np.array_equal(linalg.unvec(linalg.vec(m), 3, 5), m)


def test_lifted_quadratic_equals_trace():
    # w^H (I kron A) w == tr(A W W^H) for column-stacked w.
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = random_hermitian(rng, 3)
        w_mat = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        w = linalg.vec(w_mat)
        lhs = (w.conj() @ np.kron(np.eye(3), a) @ w).real
        rhs = np.trace(a @ w_mat @ w_mat.conj().T).real
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))
