"""Outer block-coordinate loop tying all subproblem solvers together.

One outer iteration refreshes the rate auxiliaries, re-solves the
beamformer by the penalty-dual method, then updates filters, powers and
(in MA mode) the receive-antenna positions, recording the exact
closed-form CRB after each pass.  Every block either improves the bound
or leaves it unchanged while preserving feasibility, so the recorded CRB
trace is non-increasing.
"""
from dataclasses import dataclass, field

import numpy as np

from . import beamformer, filters_power, fp, positions, sensing
from .channel import (all_channels, default_positions, rng_stream, steering,
                      transmit_positions, _STREAM_INIT)
from .linalg import unvec, vec


class InfeasibleScenarioError(RuntimeError):
    """The sum-rate threshold cannot be met at full power."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class SolverState:
    w_mat: np.ndarray
    u: np.ndarray            # (K, n_r) receive filters
    q: np.ndarray            # (K,) user powers
    d_r: np.ndarray          # (n_r,) receive positions
    fp: fp.FpState
    history: list = field(default_factory=list)
    converged: bool = False
    mode: str = "MA"


def _steering_pair(cfg, d_r):
    a_r, _ = steering(d_r, cfg.theta0, cfg.wavelength, cfg.beta_r)
    return a_r


def mmse_filters(cfg, h, q, w_mat, a_r):
    """Direction-only MMSE initialization of the receive filters."""
    n_r = h.shape[1]
    base = (h.T * q) @ h.conj()
    a_t, _ = steering(transmit_positions(cfg), cfg.theta0, cfg.wavelength,
                      cfg.beta_t)
    g = a_t.conj() @ w_mat
    base = base + abs(cfg.alpha) ** 2 * float(np.sum(np.abs(g) ** 2)) * \
        np.outer(a_r, a_r.conj())
    base = base + cfg.sigma2 * np.eye(n_r)
    base = 0.5 * (base + base.conj().T)
    return np.stack([np.linalg.solve(base, h[k]) for k in range(h.shape[0])])


def initialize(cfg, chan, max_attempts: int = 20,
               feasibility_rounds: int = 5) -> SolverState:
    """Feasible starting point: random scaled beamformer, MMSE filters,
    full power, uniform positions.

    If the raw point misses the rate threshold, filters and auxiliaries
    alternate (powers stay maxed) before a fresh beamformer draw is tried;
    running out of attempts raises InfeasibleScenarioError.
    """
    rng = rng_stream(cfg.rng_seed, _STREAM_INIT)
    d_r = default_positions(cfg)
    h = all_channels(chan, d_r, cfg.wavelength)
    a_r = _steering_pair(cfg, d_r)
    a_t, _ = steering(transmit_positions(cfg), cfg.theta0, cfg.wavelength,
                      cfg.beta_t)
    q = cfg.p_user_arr.copy()
    best_rate = -np.inf
    for _ in range(max_attempts):
        g = rng.standard_normal((cfg.n_t, cfg.n_t)) \
            + 1j * rng.standard_normal((cfg.n_t, cfg.n_t))
        w_mat = g * np.sqrt(cfg.p_bs) / np.linalg.norm(g)
        u = mmse_filters(cfg, h, q, w_mat, a_r)
        for _ in range(feasibility_rounds):
            rate = fp.sum_rate(w_mat, u, q, h, cfg.alpha, a_r, a_t, cfg.sigma2)
            best_rate = max(best_rate, rate)
            if rate >= cfg.r_t:
                state = SolverState(
                    w_mat=w_mat, u=u, q=q,
                    d_r=np.array(d_r, dtype=float, copy=True),
                    fp=fp.update_auxiliaries(w_mat, u, q, h, cfg.alpha, a_r,
                                             a_t, cfg.sigma2))
                return state
            aux = fp.update_auxiliaries(w_mat, u, q, h, cfg.alpha, a_r, a_t,
                                        cfg.sigma2)
            u = filters_power.update_filters(aux.gamma, aux.omega, w_mat, q,
                                             h, cfg.alpha, a_r, a_t,
                                             cfg.sigma2, u)
    raise InfeasibleScenarioError(
        f"sum-rate threshold {cfg.r_t:.3f} nats unreachable "
        f"(best {best_rate:.3f} nats at full power)",
        diagnostics={"best_rate": best_rate, "r_t": cfg.r_t,
                     "attempts": max_attempts})


def feasibility_report(cfg, state, h, a_r, a_t):
    """Constraint slack snapshot for one iterate."""
    rate = fp.sum_rate(state.w_mat, state.u, state.q, h, cfg.alpha, a_r, a_t,
                       cfg.sigma2)
    gaps = np.diff(state.d_r)
    return {
        "sum_rate": rate,
        "w_power": float(np.linalg.norm(state.w_mat) ** 2),
        "q_in_box": bool(np.all((state.q >= -1e-12)
                                & (state.q <= cfg.p_user_arr * (1 + 1e-12)))),
        "dr_ok": bool(state.d_r[0] >= -1e-12
                      and state.d_r[-1] <= cfg.d_max * (1 + 1e-12)
                      and (len(gaps) == 0 or np.min(gaps) >= cfg.d_min * (1 - 1e-12))),
    }


def bca_solve(state: SolverState, cfg, chan, mode: str = "MA",
              max_outer: int = 30, tol: float = 1e-4,
              collect_pdd: bool = False,
              pdd_kwargs: dict = None) -> SolverState:
    """Cycle auxiliaries -> beamformer -> filters -> powers -> positions
    until the CRB stabilizes.

    The beamformer block keeps the previous matrix when the penalty-dual
    solve fails to improve the exact objective (a stationary-point guard),
    so the CRB trace is non-increasing by construction.
    """
    if mode not in ("MA", "FPA"):
        raise ValueError(f"unknown mode {mode!r}")
    state.mode = mode
    pdd_kwargs = dict(pdd_kwargs or {})
    a_t, a_t_dot = steering(transmit_positions(cfg), cfg.theta0,
                            cfg.wavelength, cfg.beta_t)
    d_t = transmit_positions(cfg)
    prev_crb = sensing.build_sensing_model(cfg, state.d_r, state.w_mat).crb
    pdd_warm = None

    for it in range(max_outer):
        d_r = state.d_r
        h = all_channels(chan, d_r, cfg.wavelength)
        a_r = _steering_pair(cfg, d_r)

        # Rate auxiliaries (tight after this refresh).
        aux = fp.update_auxiliaries(state.w_mat, state.u, state.q, h,
                                    cfg.alpha, a_r, a_t, cfg.sigma2)
        state.fp = aux
        rate_true = fp.sum_rate(state.w_mat, state.u, state.q, h, cfg.alpha,
                                a_r, a_t, cfg.sigma2)
        fp_gap_pre = abs(fp.r2_value(aux.gamma, aux.omega, state.w_mat,
                                     state.u, state.q, h, cfg.alpha, a_r, a_t,
                                     cfg.sigma2) - rate_true)

        # Beamformer via PDD, guarded against non-improving stationary exits.
        ktt, kta, kaa = sensing.coefficient_matrices(
            d_r, a_t, a_t_dot, cfg.theta0, cfg.wavelength, cfg.beta_r)
        ctx = beamformer.build_constraint_data(
            aux.gamma, aux.omega, state.u, state.q, h, cfg.alpha, a_r, a_t,
            cfg.sigma2, cfg.r_t, ktt, kta, kaa, cfg.p_bs)
        obj_old = sensing.objective(state.w_mat, ktt, kta, kaa)
        try:
            w_vec, pdd_diag = beamformer.pdd_solve(vec(state.w_mat), ctx,
                                                   collect_al=collect_pdd,
                                                   warm=pdd_warm,
                                                   **pdd_kwargs)
        except beamformer.InfeasibleBudgetError as exc:
            state.history.append({"iteration": it + 1, "halted": str(exc)})
            break
        pdd_warm = pdd_diag.warm_out
        w_cand = unvec(w_vec, cfg.n_t, cfg.n_t)
        obj_new = sensing.objective(w_cand, ktt, kta, kaa)
        w_kept = obj_new >= obj_old
        if w_kept:
            state.w_mat = w_cand

        # Filters and powers (margin-maximizing closed forms).
        state.u = filters_power.update_filters(
            aux.gamma, aux.omega, state.w_mat, state.q, h, cfg.alpha, a_r,
            a_t, cfg.sigma2, state.u)
        state.q = filters_power.update_powers(aux.gamma, aux.omega, state.u,
                                              h, cfg.p_user_arr)

        # Second refresh so the position step sees a tight constraint.
        aux = fp.update_auxiliaries(state.w_mat, state.u, state.q, h,
                                    cfg.alpha, a_r, a_t, cfg.sigma2)
        state.fp = aux
        rate_true = fp.sum_rate(state.w_mat, state.u, state.q, h, cfg.alpha,
                                a_r, a_t, cfg.sigma2)
        fp_gap_post = abs(fp.r2_value(aux.gamma, aux.omega, state.w_mat,
                                      state.u, state.q, h, cfg.alpha, a_r,
                                      a_t, cfg.sigma2) - rate_true)

        if mode == "MA":
            state.d_r = positions.update_positions(
                state.d_r, state.w_mat, state.u, state.q, aux.gamma,
                aux.omega, chan, cfg.alpha, cfg.theta0, cfg.wavelength,
                cfg.beta_r, d_t, a_t, cfg.r_t, cfg.sigma2, cfg.d_min,
                cfg.d_max)

        model = sensing.build_sensing_model(cfg, state.d_r, state.w_mat)
        h_end = all_channels(chan, state.d_r, cfg.wavelength)
        a_r_end = _steering_pair(cfg, state.d_r)
        feas = feasibility_report(cfg, state, h_end, a_r_end, a_t)
        record = {
            "iteration": it + 1,
            "crb": model.crb,
            "obj": model.obj,
            "fp_gap_pre": fp_gap_pre,
            "fp_gap_post": fp_gap_post,
            "pdd_converged": pdd_diag.converged,
            "pdd_outer": pdd_diag.outer_iters,
            "pdd_resid_consensus": pdd_diag.resid_consensus[-1]
            if pdd_diag.resid_consensus else 0.0,
            "pdd_resid_fraction": pdd_diag.resid_fraction[-1]
            if pdd_diag.resid_fraction else 0.0,
            "pdd_kkt_max": pdd_diag.kkt_max,
            "w_accepted": w_kept,
        }
        record.update(feas)
        if collect_pdd:
            record["pdd_diag"] = pdd_diag
        state.history.append(record)

        if np.isfinite(model.crb) and np.isfinite(prev_crb) \
                and abs(model.crb - prev_crb) <= tol * prev_crb:
            state.converged = True
            break
        prev_crb = model.crb
    return state


def solve_scenario(cfg, chan, mode="MA", max_outer=30, tol=1e-4,
                   collect_pdd=False, pdd_kwargs=None) -> SolverState:
    """initialize + bca_solve in one call."""
    state = initialize(cfg, chan)
    return bca_solve(state, cfg, chan, mode=mode, max_outer=max_outer,
                     tol=tol, collect_pdd=collect_pdd, pdd_kwargs=pdd_kwargs)
