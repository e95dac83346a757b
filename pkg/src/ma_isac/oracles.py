"""Independent brute-force verifiers for the analytic subproblem solvers.

Deliberately slow and simple: dense grids, finite differences, and direct
reconstructions that share nothing with the code paths they check beyond
the basic linear-algebra kernel.  The CLI `verify` subcommand runs every
suite and reports one row per oracle.
"""
from dataclasses import dataclass

import numpy as np

from . import beamformer, filters_power, positions, sensing
from .channel import steering
from .linalg import vec


@dataclass
class OracleReport:
    name: str
    n_cases: int
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    passed: bool

    def row(self):
        return [self.name, str(self.n_cases), f"{self.max_abs_err:.6e}",
                f"{self.max_rel_err:.6e}", f"{self.tolerance:.1e}",
                "pass" if self.passed else "FAIL"]


def trust_region_grid_oracle(quad, lin, radius_sq, grid_density=4000) -> float:
    """Best objective value over interior stationary point plus a dense
    family of ball-feasible candidates; dimension capped at 3."""
    dim = len(lin)
    if dim > 3:
        raise ValueError("grid oracle refuses dimensions above 3")

    def objective(x):
        return float((x.conj() @ quad @ x).real - 2.0 * (lin.conj() @ x).real)

    candidates = [np.zeros(dim, dtype=complex)]
    try:
        x0 = np.linalg.solve(quad, lin)
        if np.sum(np.abs(x0) ** 2) <= radius_sq:
            candidates.append(x0)
    except np.linalg.LinAlgError:
        pass
    lam_top = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (quad + quad.conj().T)))))
    hi = np.linalg.norm(lin) / np.sqrt(radius_sq) + lam_top + 1.0
    eye = np.eye(dim)
    for nu in np.geomspace(1e-12, hi, grid_density):
        x = np.linalg.solve(quad + nu * eye, lin)
        nrm = np.linalg.norm(x)
        if nrm ** 2 <= radius_sq:
            candidates.append(x)
        if nrm > 0:
            candidates.append(x * np.sqrt(radius_sq) / nrm)
    return min(objective(x) for x in candidates)


def fim_finite_difference_oracle(w_mat, d_r, d_t, theta0, alpha, sigma2,
                                 l_slots, wavelength, beta_t, beta_r,
                                 step=1e-6) -> np.ndarray:
    """FIM from the stacked mean vector and explicit Jacobians.

    Uses an exact square probe surrogate S with S S^H = l_slots * I and a
    central difference in the angle; steering vectors are rebuilt inline so
    this path shares nothing with the kernel construction.
    """
    root_l = np.sqrt(l_slots)

    def response(theta):
        a_r = beta_r * np.exp(1j * (2 * np.pi / wavelength) * d_r * np.sin(theta))
        a_t = beta_t * np.exp(1j * (2 * np.pi / wavelength) * d_t * np.sin(theta))
        return np.outer(a_r, a_t.conj())

    def mean_vec(theta, al):
        return al * root_l * vec(response(theta) @ w_mat)

    j_theta = (mean_vec(theta0 + step, alpha)
               - mean_vec(theta0 - step, alpha)) / (2.0 * step)
    base = root_l * vec(response(theta0) @ w_mat)
    jac = np.stack([j_theta, base, 1j * base], axis=1)
    return (2.0 / sigma2) * (jac.conj().T @ jac).real


def scalar_grid_oracle(func, lo, hi, n_points=10001):
    """Dense-grid minimizer of a scalar function on [lo, hi]."""
    if hi < lo:
        raise ValueError("empty interval")
    if n_points < 1000:
        raise ValueError("grid too coarse to be an oracle")
    xs = np.linspace(lo, hi, n_points)
    vals = np.asarray(func(xs))
    if vals.shape != xs.shape:                 # non-vectorized callable
        vals = np.array([func(x) for x in xs])
    i = int(np.argmin(vals))
    return float(xs[i]), float(vals[i])


def _random_psd(rng, dim):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return g @ g.conj().T / dim


def run_trust_region_suite(seed=0, n_cases=200, tol=1e-4) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst_gap = -np.inf
    for _ in range(n_cases):
        dim = int(rng.integers(2, 4))
        quad = _random_psd(rng, dim)
        if rng.random() < 0.3:
            # force a singular case
            w, v = np.linalg.eigh(quad)
            w[0] = 0.0
            quad = (v * w) @ v.conj().T
        lin = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        radius_sq = float(rng.uniform(0.3, 3.0))
        res = beamformer.trust_region_solve(quad, lin, radius_sq)
        val = float((res.x.conj() @ quad @ res.x).real
                    - 2.0 * (lin.conj() @ res.x).real)
        ref = trust_region_grid_oracle(quad, lin, radius_sq)
        gap = val - ref                  # <= 0 means the solver beat the grid
        worst_gap = max(worst_gap, gap)
        if gap > tol or res.kkt > 1e-8:
            return OracleReport("trust_region_vs_grid", n_cases, gap, gap,
                                tol, False)
    return OracleReport("trust_region_vs_grid", n_cases, max(worst_gap, 0.0),
                        max(worst_gap, 0.0), tol, True)


def run_fim_suite(seed=0, n_cases=50, tol=1e-4) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst = worst_abs = 0.0
    for _ in range(n_cases):
        n_t = int(rng.integers(2, 5))
        n_r = int(rng.integers(2, 5))
        wavelength = 0.1
        d_t = 0.5 * wavelength * np.arange(n_t)
        d_r = np.sort(rng.uniform(0, 8 * wavelength, n_r))
        theta0 = rng.uniform(-1.2, 1.2)
        alpha = complex(rng.standard_normal(), rng.standard_normal())
        beta_t = np.exp(1j * rng.uniform(0, 2 * np.pi))
        beta_r = np.exp(1j * rng.uniform(0, 2 * np.pi))
        sigma2 = 10 ** rng.uniform(-3, 0)
        l_slots = int(rng.integers(4, 64))
        w_mat = rng.standard_normal((n_t, n_t)) + 1j * rng.standard_normal((n_t, n_t))
        a_t, a_t_dot = steering(d_t, theta0, wavelength, beta_t)
        ktt, kta, kaa = sensing.coefficient_matrices(d_r, a_t, a_t_dot,
                                                     theta0, wavelength, beta_r)
        f_fast = sensing.fim(w_mat, ktt, kta, kaa, alpha, sigma2, l_slots)
        f_ref = fim_finite_difference_oracle(w_mat, d_r, d_t, theta0, alpha,
                                             sigma2, l_slots, wavelength,
                                             beta_t, beta_r)
        abs_err = float(np.max(np.abs(f_fast - f_ref)))
        rel_err = abs_err / max(np.max(np.abs(f_ref)), 1e-300)
        worst = max(worst, rel_err)
        worst_abs = max(worst_abs, abs_err)
        if rel_err > tol:
            return OracleReport("fim_vs_jacobian", n_cases, abs_err, rel_err,
                                tol, False)
    return OracleReport("fim_vs_jacobian", n_cases, worst_abs, worst, tol, True)


def run_interval_minimizer_suite(seed=0, n_cases=500, tol=1e-6) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        curv = rng.standard_normal()
        if rng.random() < 0.15:
            curv = 0.0
        slope = rng.standard_normal()
        lo = rng.uniform(-2, 1)
        hi = lo + rng.uniform(0.01, 3.0)
        d_star = positions.theorem1_minimize(curv, slope, lo, hi)

        def f(d, curv=curv, slope=slope):
            return curv * d * d + slope * d

        _, ref = scalar_grid_oracle(f, lo, hi)
        gap = f(d_star) - ref
        worst = max(worst, gap)
        if gap > tol:
            return OracleReport("interval_minimizer_vs_grid", n_cases, gap,
                                gap, tol, False)
    return OracleReport("interval_minimizer_vs_grid", n_cases, worst, worst,
                        tol, True)


def run_power_suite(seed=0, n_cases=500, tol=1e-6) -> OracleReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        a5 = rng.uniform(0.05, 3.0)
        if rng.random() < 0.1:
            a5 = 0.0
        a6 = rng.standard_normal() * 2.0
        cap = rng.uniform(0.1, 4.0)
        q = filters_power.optimal_power(a5, a6, cap)

        def f(qv, a5=a5, a6=a6):
            return a5 * qv - a6 * np.sqrt(qv)

        _, ref = scalar_grid_oracle(f, 0.0, cap)
        gap = f(q) - ref
        worst = max(worst, gap)
        if gap > tol:
            return OracleReport("power_update_vs_grid", n_cases, gap, gap,
                                tol, False)
    return OracleReport("power_update_vs_grid", n_cases, worst, worst, tol, True)


def run_all(seed=0):
    return [
        run_trust_region_suite(seed),
        run_fim_suite(seed),
        run_interval_minimizer_suite(seed),
        run_power_suite(seed),
    ]
