"""Probing-beamformer update via penalty dual decomposition.

In the vectorized beamformer w = vec(W) the bound-minimization step is

    minimize  |w^H kta_lift w|^2 / (w^H kaa_lift w)  -  w^H ktt_lift w
    s.t.      w^H leak_quad w <= rate_budget,    ||w||^2 <= p_bs,

a quartic-over-quadratic objective.  A copy f of w and a scalar b standing
in for w^H kaa_lift f decouple it; both couplings are penalized and
dualized, giving an augmented Lagrangian that is block-minimized exactly:

  * w-block: the concave -w^H ktt_lift w term is replaced by its tangent
    plane at the previous iterate, and the leakage constraint is whitened
    into a norm ball (directly when leak_quad is invertible, after a
    diagonal-shift majorization when it is singular); the result is a
    convex trust-region problem solved by eigendecomposition plus a scalar
    secular equation.
  * f-block: a trust-region problem on the power ball.
  * b-block: a scalar convex problem whose stationarity condition is a
    cubic with exactly one positive root.

The outer layer performs dual ascent whenever both couplings are within
the current tolerance and tightens the penalty otherwise.
"""
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .fp import received_powers


class InfeasibleBudgetError(ValueError):
    """Rate constraint leaves no leakage budget (rate_budget < 0)."""


@dataclass
class PddContext:
    """Fixed data for one beamformer solve (all other blocks frozen)."""
    leak_quad: np.ndarray    # lifted quadratic form of the sensing leakage
    rate_budget: float       # leakage power the rate constraint can absorb
    ktt_lift: np.ndarray
    kta_lift: np.ndarray
    kaa_lift: np.ndarray
    p_bs: float
    leak_eigs: np.ndarray = field(default=None, repr=False)
    leak_vecs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.leak_eigs is None:
            self.leak_eigs, self.leak_vecs = linalg.eigh(self.leak_quad)

    @property
    def dim(self) -> int:
        return self.leak_quad.shape[0]


def build_constraint_data(gamma, omega, u, q, h, alpha, a_r, a_t, sigma2,
                          r_t, ktt, kta, kaa, p_bs) -> PddContext:
    """Assemble the lifted quadratic forms and the leakage budget.

    leak_quad is I kron (coef * a_t a_t^H) with
    coef = |alpha|^2 * sum_k |omega_k|^2 |u_k^H a_r|^2, so that
    w^H leak_quad w = sum_k |omega_k|^2 ||u_k^H alpha a_r a_t^H W||^2.
    The budget is the reformulated rate R2 minus its leakage terms minus
    the threshold: w^H leak_quad w <= rate_budget  <=>  R2 >= r_t.
    """
    n_t = ktt.shape[0]
    k_users = h.shape[0]
    coef = abs(alpha) ** 2 * float(
        np.sum(np.abs(omega) ** 2 * np.abs(h_conj_dot(u, a_r)) ** 2))
    leak_quad = np.kron(np.eye(n_t), coef * np.outer(a_t, a_t.conj()))

    budget = -r_t
    for k in range(k_users):
        gains = np.abs(h.conj() @ u[k]) ** 2
        noleak = float(np.sum(q * gains)) + sigma2 * float(np.sum(np.abs(u[k]) ** 2))
        cross = 2.0 * np.sqrt(1.0 + gamma[k]) * np.sqrt(q[k]) * \
            (np.conj(omega[k]) * np.vdot(u[k], h[k])).real
        budget += np.log1p(gamma[k]) - gamma[k] + cross - abs(omega[k]) ** 2 * noleak

    eye = np.eye(n_t)
    return PddContext(
        leak_quad=leak_quad,
        rate_budget=float(budget),
        ktt_lift=np.kron(eye, ktt),
        kta_lift=np.kron(eye, kta),
        kaa_lift=np.kron(eye, kaa),
        p_bs=p_bs,
    )


def h_conj_dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise u_k^H v."""
    return u.conj() @ v


@dataclass
class TrustRegionResult:
    x: np.ndarray
    nu: float
    stationarity: float      # backward error of (Q + nu I)x = q
    complementarity: float   # boundary violation relative to the radius when nu > 0

    @property
    def kkt(self) -> float:
        return max(self.stationarity, self.complementarity)


def _backward_error(quad, nu, x, lin):
    resid = np.linalg.norm(quad @ x + nu * x - lin)
    scale = (np.linalg.norm(quad) + nu) * np.linalg.norm(x) + np.linalg.norm(lin)
    return resid / max(scale, 1e-300)


def trust_region_solve(quad: np.ndarray, lin: np.ndarray, radius_sq: float,
                       tol: float = 1e-12) -> TrustRegionResult:
    """Minimize x^H Q x - 2 Re{q^H x} over ||x||^2 <= radius_sq, Q PSD.

    The stationary point is x = U (Lambda + nu I)^{-1} U^H q with the
    smallest nu >= 0 putting x inside the ball; nu solves the secular
    equation sum |q'_i|^2 / (lambda_i + nu)^2 = radius_sq, found by
    safeguarded Newton on the reciprocal-norm form.
    """
    if radius_sq <= 0:
        raise ValueError(f"invalid trust-region radius^2: {radius_sq}")
    eigs, vecs = linalg.eigh(quad)
    top = max(eigs[-1], 0.0)
    if eigs[0] < -1e-12 * max(top, 1e-300):
        raise ValueError(f"quadratic form not PSD (min eigenvalue {eigs[0]:.3e})")
    eigs = np.maximum(eigs, 0.0)
    qp = vecs.conj().T @ lin
    qp2 = np.abs(qp) ** 2
    qnorm = np.sqrt(np.sum(qp2))

    if qnorm == 0.0:
        x = np.zeros_like(lin)
        return TrustRegionResult(x, 0.0, 0.0, 0.0)

    # Interior candidate at nu = 0: valid when q has no weight on the null
    # space and the unconstrained norm fits in the ball.
    eps_w = 1e-14 * top
    active = eigs > eps_w
    null_weight = np.sqrt(np.sum(qp2[~active]))
    if null_weight <= 1e-12 * qnorm:
        norm0_sq = np.sum(qp2[active] / eigs[active] ** 2) if np.any(active) else 0.0
        if norm0_sq <= radius_sq:
            xp = np.zeros_like(qp)
            xp[active] = qp[active] / eigs[active]
            x = vecs @ xp
            return TrustRegionResult(x, 0.0, _backward_error(quad, 0.0, x, lin), 0.0)

    nu = _secular_root(eigs, qp2, radius_sq, tol=tol)
    xp = qp / (eigs + nu)
    x = vecs @ xp
    stat = _backward_error(quad, nu, x, lin)
    # Scale-free complementarity: nu = 0 or the iterate sits on the boundary
    # to relative precision.
    comp = abs(np.sum(np.abs(xp) ** 2) - radius_sq) / radius_sq if nu > 0 else 0.0
    return TrustRegionResult(x, float(nu), float(stat), float(comp))


def _secular_root(eigs, qp2, radius_sq, tol=1e-12, max_iter=200):
    """Solve sum(qp2 / (eigs + nu)^2) = radius_sq for nu in (0, hi]."""
    qnorm = np.sqrt(np.sum(qp2))
    lo = 0.0
    hi = qnorm / np.sqrt(radius_sq) + max(eigs[-1], 0.0)
    nu = 0.5 * hi
    for _ in range(max_iter):
        den = eigs + nu
        phi = np.sum(qp2 / den ** 2)
        if abs(phi - radius_sq) <= tol * radius_sq:
            break
        if phi > radius_sq:
            lo = nu
        else:
            hi = nu
        # Newton on psi(nu) = phi^(-1/2) - radius^(-1/2): nearly linear in nu.
        dphi = -2.0 * np.sum(qp2 / den ** 3)
        psi = 1.0 / np.sqrt(phi) - 1.0 / np.sqrt(radius_sq)
        dpsi = -0.5 * dphi / phi ** 1.5
        cand = nu - psi / dpsi if dpsi > 0 else None
        nu = cand if (cand is not None and lo < cand < hi) else 0.5 * (lo + hi)
        if hi - lo <= 1e-17 * max(1.0, hi):
            break
    return nu


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def _al_linear_w(f, b, lam1, lam2, rho, ctx):
    """Quadratic model of the Lagrangian in w: (quad, lin) with
    AL(w) = w^H quad w - 2 Re{lin^H w} + const - w^H ktt_lift w."""
    v4 = ctx.kta_lift @ f
    v5 = ctx.kaa_lift @ f
    n = ctx.dim
    quad = np.outer(v4, v4.conj()) / b \
        + (np.eye(n) + np.outer(v5, v5.conj())) / (2.0 * rho)
    lin = (f + b * v5) / (2.0 * rho) - lam1 / 2.0 - np.conj(lam2) / 2.0 * v5
    return quad, lin


def update_w(w0, f, b, lam1, lam2, rho, ctx) -> TrustRegionResult:
    """Exact minimizer of the majorized w-block subproblem.

    Keeps the leakage constraint satisfied and never increases the
    augmented Lagrangian when w0 is feasible.
    """
    if ctx.rate_budget < 0:
        raise InfeasibleBudgetError(
            f"rate constraint infeasible: budget {ctx.rate_budget:.3e}")
    quad, lin1 = _al_linear_w(f, b, lam1, lam2, rho, ctx)
    lin = lin1 + ctx.ktt_lift @ w0   # tangent plane of the concave term

    eigs, vecs = ctx.leak_eigs, ctx.leak_vecs
    top = max(eigs[-1], 0.0)
    if top > 0 and eigs[0] > 1e-10 * top:
        # Invertible leakage form: whiten directly.
        isqrt = (vecs / np.sqrt(eigs)) @ vecs.conj().T
        res = trust_region_solve(_hermitize(isqrt @ quad @ isqrt),
                                 isqrt @ lin, ctx.rate_budget)
        return TrustRegionResult(isqrt @ res.x, res.nu, res.stationarity,
                                 res.complementarity)

    # Singular leakage form: majorize w^H leak_quad w by shifting with
    # delta*I, which tightens the constraint but stays tangent at w0.
    delta = max(1e-8, 1e-8 * top)
    shifted = eigs + delta
    isqrt = (vecs / np.sqrt(shifted)) @ vecs.conj().T
    inv = (vecs / shifted) @ vecs.conj().T
    center = delta * (inv @ w0)           # solution offset in original space
    radius = float((delta ** 2 * np.vdot(w0, inv @ w0)).real
                   - delta * np.vdot(w0, w0).real + ctx.rate_budget)
    if radius <= 0:
        # Numerically exhausted budget: the surrogate ball collapses to its
        # center, which inherits feasibility from w0.
        return TrustRegionResult(center, np.inf, 0.0, 0.0)
    res = trust_region_solve(_hermitize(isqrt @ quad @ isqrt),
                             isqrt @ (lin - quad @ center), radius)
    return TrustRegionResult(isqrt @ res.x + center, res.nu,
                             res.stationarity, res.complementarity)


def update_f(w, b, lam1, lam2, rho, ctx) -> TrustRegionResult:
    """Exact minimizer of the f-block: trust region on the power ball."""
    y4 = ctx.kta_lift.conj().T @ w
    y5 = ctx.kaa_lift.conj().T @ w
    n = ctx.dim
    quad = np.outer(y4, y4.conj()) / b \
        + (np.eye(n) + np.outer(y5, y5.conj())) / (2.0 * rho)
    lin = (w + b * y5) / (2.0 * rho) + (lam1 - lam2 * y5) / 2.0
    return trust_region_solve(_hermitize(quad), lin, ctx.p_bs)


EPS_B = 1e-12


def scalar_block_minimizer(a1: float, a2: float, a4: float) -> float:
    """Minimizer of a1*b^2 + a2*b + a4/b over b > 0 (a1 > 0, a4 >= 0).

    Stationarity gives 2*a1*b^3 + a2*b^2 - a4 = 0, which has exactly one
    positive root when a4 > 0 (one sign change); a4 = 0 degenerates to the
    clipped parabola vertex.
    """
    if a4 == 0.0:
        return max(EPS_B, -a2 / (2.0 * a1))
    roots = np.roots([2.0 * a1, a2, 0.0, -a4])
    real_pos = [r.real for r in roots
                if abs(r.imag) <= 1e-8 * max(1.0, abs(r)) and r.real > 0]
    if not real_pos:
        raise AssertionError("cubic lost its positive root")  # impossible: one sign change
    return max(EPS_B, max(real_pos))


def update_b(w, f, lam2, rho, ctx) -> float:
    """Exact minimizer of the scalar block."""
    z = np.vdot(w, ctx.kaa_lift @ f)
    t = np.vdot(w, ctx.kta_lift @ f)
    a1 = 1.0 / (2.0 * rho)
    a2 = -z.real / rho - lam2.real
    a4 = abs(t) ** 2
    return scalar_block_minimizer(a1, a2, a4)


def al_value(w, f, b, lam1, lam2, rho, ctx) -> float:
    """Augmented Lagrangian of the split problem."""
    t = np.vdot(w, ctx.kta_lift @ f)
    z = np.vdot(w, ctx.kaa_lift @ f)
    val = abs(t) ** 2 / b - np.vdot(w, ctx.ktt_lift @ w).real
    diff = w - f
    val += np.sum(np.abs(diff) ** 2) / (2.0 * rho) + np.vdot(lam1, diff).real
    val += abs(z - b) ** 2 / (2.0 * rho) + (np.conj(lam2) * (z - b)).real
    return float(val)


@dataclass
class PddWarmStart:
    """Dual state carried between successive solves of slowly-drifting
    subproblems; replaying the penalty schedule from scratch costs an
    order of magnitude more iterations."""
    lam1: np.ndarray
    lam2: complex
    rho: float
    eta: float


@dataclass
class PddDiagnostics:
    converged: bool = False
    outer_iters: int = 0
    resid_consensus: list = field(default_factory=list)
    resid_fraction: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    branch: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    # One list per outer iteration (fixed penalty/duals inside): Lagrangian
    # value before the first sub-update and after every sub-update.
    al_trace: list = field(default_factory=list)
    kkt_max: float = 0.0
    warm_out: PddWarmStart = None

    def first_below(self, level: float):
        """1-based outer iteration where both residuals first drop below level."""
        for i, (r1, r2) in enumerate(zip(self.resid_consensus, self.resid_fraction)):
            if max(r1, r2) <= level:
                return i + 1
        return None


def pdd_solve(w_init: np.ndarray, ctx: PddContext, rho0: float = None,
              shrink: float = 0.85, eps_outer: float = 1e-5,
              max_outer: int = 150, max_inner: int = 50,
              inner_rtol: float = 1e-8, eta0: float = 1.0,
              collect_al: bool = False, warm: PddWarmStart = None):
    """Two-layer penalty-dual loop; returns (w, diagnostics).

    Inner: block descent over (w, f, b) until the Lagrangian stalls.
    Outer: dual ascent when both couplings are within eta, else penalty
    tightening by 1/shrink; eta halves from the residual at each dual step.
    The returned w is rescaled onto the power ball if consensus slack left
    it epsilon outside (scaling down preserves the leakage constraint).

    The default penalty weight makes the w-block strongly convex from the
    start (1/(2 rho0) = 2 * top curvature of the concave term); a flat
    rho0 = 1 also converges but wastes dozens of outer tightenings
    reeling in the unbounded w-block excursions it allows.
    """
    if ctx.rate_budget < 0:
        raise InfeasibleBudgetError(
            f"rate constraint infeasible: budget {ctx.rate_budget:.3e}")
    if rho0 is None:
        top = float(np.linalg.eigvalsh(ctx.ktt_lift)[-1])
        rho0 = min(1.0, 0.25 / top) if top > 0 else 1.0
    w = np.asarray(w_init, dtype=complex).copy()
    f = w.copy()
    b = max(EPS_B, np.vdot(w, ctx.kaa_lift @ f).real)
    if warm is not None:
        lam1 = warm.lam1.copy()
        lam2 = warm.lam2
        rho = warm.rho
        eta = warm.eta
    else:
        lam1 = np.zeros_like(w)
        lam2 = 0.0 + 0.0j
        rho = rho0
        eta = eta0
    diag = PddDiagnostics()

    for outer in range(max_outer):
        al_prev = al_value(w, f, b, lam1, lam2, rho, ctx)
        block_trace = [al_prev] if collect_al else None
        inner_done = max_inner
        for t in range(max_inner):
            res_w = update_w(w, f, b, lam1, lam2, rho, ctx)
            w = res_w.x
            if collect_al:
                block_trace.append(al_value(w, f, b, lam1, lam2, rho, ctx))
            res_f = update_f(w, b, lam1, lam2, rho, ctx)
            f = res_f.x
            if collect_al:
                block_trace.append(al_value(w, f, b, lam1, lam2, rho, ctx))
            b = update_b(w, f, lam2, rho, ctx)
            diag.kkt_max = max(diag.kkt_max, res_w.kkt if np.isfinite(res_w.nu)
                               else 0.0, res_f.kkt)
            al_now = al_value(w, f, b, lam1, lam2, rho, ctx)
            if collect_al:
                block_trace.append(al_now)
            if abs(al_now - al_prev) <= inner_rtol * max(1.0, abs(al_now)):
                inner_done = t + 1
                break
            al_prev = al_now
        if collect_al:
            diag.al_trace.append(block_trace)

        r1 = float(np.max(np.abs(w - f)))
        r2 = float(abs(np.vdot(w, ctx.kaa_lift @ f) - b))
        diag.resid_consensus.append(r1)
        diag.resid_fraction.append(r2)
        diag.rho.append(rho)
        diag.inner_iters.append(inner_done)
        if max(r1, r2) <= eta:
            lam1 = lam1 + (w - f) / rho
            lam2 = lam2 + (np.vdot(w, ctx.kaa_lift @ f) - b) / rho
            eta = 0.5 * max(r1, r2)
            diag.branch.append("dual")
        else:
            rho *= shrink
            diag.branch.append("penalty")
        diag.outer_iters = outer + 1
        if max(r1, r2) <= eps_outer:
            diag.converged = True
            break

    diag.warm_out = PddWarmStart(lam1=lam1, lam2=lam2, rho=rho, eta=eta)
    nrm2 = float(np.vdot(w, w).real)
    if nrm2 > ctx.p_bs:
        w = w * np.sqrt(ctx.p_bs / nrm2)
    return w, diag
