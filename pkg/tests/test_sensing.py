import numpy as np

from ma_isac import sensing
from ma_isac.channel import steering
from ma_isac.config import SystemConfig
from ma_isac.oracles import fim_finite_difference_oracle


def random_instance(rng, n_t=3, n_r=4):
    lam = 0.1
    d_t = 0.5 * lam * np.arange(n_t)
    d_r = np.sort(rng.uniform(0, 8 * lam, n_r))
    theta0 = rng.uniform(-1.2, 1.2)
    beta_t = np.exp(1j * rng.uniform(0, 2 * np.pi))
    beta_r = np.exp(1j * rng.uniform(0, 2 * np.pi))
    w_mat = rng.standard_normal((n_t, n_t)) + 1j * rng.standard_normal((n_t, n_t))
    return lam, d_t, d_r, theta0, beta_t, beta_r, w_mat


def test_kernels_zero_positions():
    lam = 0.1
    d_t = 0.5 * lam * np.arange(3)
    a_t, a_t_dot = steering(d_t, 0.4, lam)
    d_r = np.zeros(4)
    ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot, 0.4, lam)
    assert np.allclose(ktt, 4 * np.outer(a_t_dot, a_t_dot.conj()))
    assert np.allclose(kta, 4 * np.outer(a_t_dot, a_t.conj()))
    assert np.allclose(kaa, 4 * np.outer(a_t, a_t.conj()))


def test_kernels_endfire_drops_cross_terms():
    # cos(theta0) = 0 kills every position-dependent term.
    lam = 0.1
    d_t = 0.5 * lam * np.arange(3)
    theta0 = np.pi / 2
    a_t, a_t_dot = steering(d_t, theta0, lam)
    d_r = np.array([0.0, 0.1, 0.25])
    ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot, theta0, lam)
    assert np.allclose(ktt, 3 * np.outer(a_t_dot, a_t_dot.conj()))
    assert np.allclose(kta, 3 * np.outer(a_t_dot, a_t.conj()))


def test_kernel_traces_match_full_cascade():
    # tr(k.. W W^H) must equal the trace forms built from the full
    # receive-by-transmit cascade and its angle derivative.
    rng = np.random.default_rng(0)
    for _ in range(20):
        lam, d_t, d_r, theta0, beta_t, beta_r, w_mat = random_instance(rng)
        a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
        a_r, a_r_dot = steering(d_r, theta0, lam, beta_r)
        ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot,
                                                     theta0, lam, beta_r)
        cascade = np.outer(a_r, a_t.conj())
        cascade_dot = np.outer(a_r_dot, a_t.conj()) + np.outer(a_r, a_t_dot.conj())
        wt = w_mat @ w_mat.conj().T

        for kern, full in [(ktt, cascade_dot.conj().T @ cascade_dot),
                           (kta, cascade_dot.conj().T @ cascade),
                           (kaa, cascade.conj().T @ cascade)]:
            lhs = np.trace(kern @ wt)
            rhs = np.trace(full @ wt)
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_fim_zero_beamformer():
    rng = np.random.default_rng(1)
    lam, d_t, d_r, theta0, beta_t, beta_r, _ = random_instance(rng)
    a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
    ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot, theta0,
                                                 lam, beta_r)
    f = sensing.fim(np.zeros((3, 3), dtype=complex), ktt, kta, kaa,
                    0.5 + 0.5j, 1e-3, 16)
    assert np.allclose(f, 0.0)


def test_fim_cross_term_components():
    # F[0, 1:] must be (2L/sigma2) * [Re{conj(a)*t}, Re{conj(a)*t*j}].
    rng = np.random.default_rng(2)
    for _ in range(10):
        lam, d_t, d_r, theta0, beta_t, beta_r, w_mat = random_instance(rng)
        a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
        ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot,
                                                     theta0, lam, beta_r)
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        sigma2, l_slots = 0.37, 24
        f = sensing.fim(w_mat, ktt, kta, kaa, alpha, sigma2, l_slots)
        t2 = np.trace(kta @ w_mat @ w_mat.conj().T)
        scale = 2 * l_slots / sigma2
        assert abs(f[0, 1] - scale * (np.conj(alpha) * t2).real) <= 1e-9 * abs(scale)
        assert abs(f[0, 2] - scale * (np.conj(alpha) * t2 * 1j).real) <= 1e-9 * abs(scale)
        assert np.allclose(f, f.T)
        assert f[1, 1] == f[2, 2] and f[1, 2] == 0.0


def test_fim_matches_jacobian_oracle():
    rng = np.random.default_rng(3)
    for _ in range(5):
        lam, d_t, d_r, theta0, beta_t, beta_r, w_mat = random_instance(rng)
        a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
        ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot,
                                                     theta0, lam, beta_r)
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        f_fast = sensing.fim(w_mat, ktt, kta, kaa, alpha, 0.1, 32)
        f_ref = fim_finite_difference_oracle(w_mat, d_r, d_t, theta0, alpha,
                                             0.1, 32, lam, beta_t, beta_r)
        assert np.max(np.abs(f_fast - f_ref)) <= 1e-4 * np.max(np.abs(f_ref))


def test_crb_diagonal_fim():
    assert sensing.crb_theta(np.diag([2.0, 1.0, 1.0])) == 0.5


def test_crb_closed_form_matches_inverse():
    rng = np.random.default_rng(4)
    for _ in range(100):
        lam, d_t, d_r, theta0, beta_t, beta_r, w_mat = random_instance(rng)
        a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
        ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot,
                                                     theta0, lam, beta_r)
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        f = sensing.fim(w_mat, ktt, kta, kaa, alpha, 0.05, 64)
        crb = sensing.crb_theta(f)
        ref = np.linalg.inv(f)[0, 0]
        assert abs(crb - ref) <= 1e-10 * abs(ref)
        # the trace closed form agrees too
        obj = sensing.objective(w_mat, ktt, kta, kaa)
        crb2 = sensing.crb_from_objective(obj, alpha, 0.05, 64)
        assert abs(crb2 - ref) <= 1e-9 * abs(ref)


def test_crb_quadratic_homogeneity():
    rng = np.random.default_rng(5)
    lam, d_t, d_r, theta0, beta_t, beta_r, w_mat = random_instance(rng)
    a_t, a_t_dot = steering(d_t, theta0, lam, beta_t)
    ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot, theta0,
                                                 lam, beta_r)
    f1 = sensing.fim(w_mat, ktt, kta, kaa, 1.0, 0.1, 8)
    f2 = sensing.fim(np.sqrt(2) * w_mat, ktt, kta, kaa, 1.0, 0.1, 8)
    assert abs(sensing.crb_theta(f2) - 0.5 * sensing.crb_theta(f1)) \
        <= 1e-10 * sensing.crb_theta(f1)


def test_degenerate_ratio_term():
    # W orthogonal to the steering direction: the ratio term drops out and
    # nothing blows up.
    lam = 0.1
    d_t = 0.5 * lam * np.arange(3)
    a_t, a_t_dot = steering(d_t, 0.2, lam)
    d_r = np.array([0.0, 0.1, 0.2, 0.3])
    ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot, 0.2, lam)
    basis = np.linalg.svd(a_t.reshape(1, -1))[2][1:].conj().T  # orthogonal complement
    w_mat = basis @ np.eye(2, 3).astype(complex)
    assert abs(np.trace(kaa @ w_mat @ w_mat.conj().T)) <= 1e-12
    obj = sensing.objective(w_mat, ktt, kta, kaa)
    wt = w_mat @ w_mat.conj().T
    assert np.isfinite(obj)
    assert abs(obj - np.trace(ktt @ wt).real) <= 1e-9 * max(1.0, abs(obj))


def test_singular_fim_returns_infinite_bound():
    f = np.zeros((3, 3))
    assert sensing.crb_theta(f) == np.inf
