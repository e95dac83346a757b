"""Scenario runner and verification CLI.

    isac run <scenario.json> --out <dir> [--jobs N]
    isac verify --out <dir>
    isac print-defaults

Scenario files carry explicit units in their key names: powers in dBm,
rates in bits, angles in degrees, lengths in meters.  Everything is
converted once at this boundary; the solver works in watts/nats/radians.
Unknown keys are rejected so silent unit mistakes cannot hide.
"""
import argparse
import concurrent.futures
import itertools
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import oracles
from .channel import sample_channel
from .config import SystemConfig, bits_to_nats, dbm_to_watt
from .solver import InfeasibleScenarioError, solve_scenario

SCHEMA_LINE = "#schema=1"

DEFAULT_SCENARIO = {
    "n_t": 4,
    "n_r": 4,
    "k_users": 2,
    "l_slots": 512,
    "wavelength_m": 0.1,
    "d_min_m": 0.05,
    "d_max_m": 0.4,
    "p_bs_dbm": 20.0,
    "p_user_dbm": [20.0, 20.0],
    "sigma2_dbm": -80.0,
    "r_t_bits": 4.0,
    "theta0_deg": 30.0,
    "rcs_alpha": [1e-5, 0.0],
    "beta_t": [1.0, 0.0],
    "beta_r": [1.0, 0.0],
    "paths_per_user": 10,
    "c0_ref_gain": 1e-3,
    "pathloss_exp": 2.8,
    "user_distance_m": [100.0, 100.0],
    "max_outer": 30,
    "crb_tol": 1e-4,
    "power_dbm_list": [20.0],
    "n_r_list": [4],
    "mode_list": ["MA", "FPA"],
    "seeds": [1, 2, 3],
}


def load_scenario(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    unknown = set(doc) - set(DEFAULT_SCENARIO)
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    merged = dict(DEFAULT_SCENARIO)
    merged.update(doc)
    return merged


def _as_complex(pair) -> complex:
    return complex(pair[0], pair[1])


def _per_user(value, k_users):
    if np.isscalar(value):
        return tuple(float(value) for _ in range(k_users))
    if len(value) != k_users:
        raise ValueError("per-user list length does not match k_users")
    return tuple(float(v) for v in value)


def config_from_scenario(doc: dict, p_bs_dbm: float, n_r: int,
                         seed: int) -> SystemConfig:
    k = int(doc["k_users"])
    return SystemConfig(
        n_t=int(doc["n_t"]),
        n_r=int(n_r),
        k_users=k,
        l_slots=int(doc["l_slots"]),
        wavelength=float(doc["wavelength_m"]),
        d_min=float(doc["d_min_m"]),
        d_max=float(doc["d_max_m"]),
        p_bs=dbm_to_watt(float(p_bs_dbm)),
        p_user=tuple(dbm_to_watt(p) for p in _per_user(doc["p_user_dbm"], k)),
        r_t=bits_to_nats(float(doc["r_t_bits"])),
        sigma2=dbm_to_watt(float(doc["sigma2_dbm"])),
        theta0=np.deg2rad(float(doc["theta0_deg"])),
        alpha=_as_complex(doc["rcs_alpha"]),
        beta_t=_as_complex(doc["beta_t"]),
        beta_r=_as_complex(doc["beta_r"]),
        paths=int(doc["paths_per_user"]),
        c0=float(doc["c0_ref_gain"]),
        pathloss_exp=float(doc["pathloss_exp"]),
        d_user=_per_user(doc["user_distance_m"], k),
        rng_seed=int(seed),
    )


def sweep_points(doc: dict):
    return list(itertools.product(doc["power_dbm_list"], doc["n_r_list"],
                                  doc["mode_list"], doc["seeds"]))


def run_point(doc, p_dbm, n_r, mode, seed):
    """One (sweep point, seed) solve; returns (summary_row, trace_rows, status)."""
    point_id = f"p{p_dbm:g}_nr{n_r}_{mode}_s{seed}"
    try:
        cfg = config_from_scenario(doc, p_dbm, n_r, seed)
        chan = sample_channel(cfg)
        state = solve_scenario(cfg, chan, mode=mode,
                               max_outer=int(doc["max_outer"]),
                               tol=float(doc["crb_tol"]))
        trace_rows = []
        for rec in state.history:
            if "halted" in rec:
                trace_rows.append([str(rec["iteration"]), "FAILED",
                                   rec["halted"], "", "", "", "", ""])
                continue
            trace_rows.append([
                str(rec["iteration"]),
                f"{rec['crb']:.12e}",
                f"{rec['obj']:.12e}",
                f"{rec['sum_rate']:.12e}",
                f"{max(rec['fp_gap_pre'], rec['fp_gap_post']):.3e}",
                str(rec["pdd_outer"]),
                f"{rec['pdd_resid_consensus']:.3e}",
                f"{rec['pdd_resid_fraction']:.3e}",
            ])
        last = state.history[-1]
        summary = [f"{p_dbm:g}", str(n_r), mode, str(seed),
                   f"{last['crb']:.12e}", f"{last['sum_rate']:.12e}",
                   "1" if state.converged else "0",
                   str(len(state.history)), "OK"]
        return point_id, summary, trace_rows, 0
    except InfeasibleScenarioError as exc:
        summary = [f"{p_dbm:g}", str(n_r), mode, str(seed), "", "", "", "",
                   f"FAILED infeasible: {exc}"]
        return point_id, summary, [], 2
    except Exception:
        summary = [f"{p_dbm:g}", str(n_r), mode, str(seed), "", "", "", "",
                   "FAILED internal"]
        traceback.print_exc()
        return point_id, summary, [], 1


TRACE_HEADER = ["iteration", "crb", "obj", "sum_rate", "fp_gap", "pdd_outer",
                "pdd_resid_consensus", "pdd_resid_fraction"]
SUMMARY_HEADER = ["p_bs_dbm", "n_r", "mode", "seed", "final_crb",
                  "final_sum_rate_nats", "converged", "iterations", "status"]


def _write_csv(path: Path, header, rows):
    lines = [SCHEMA_LINE, ",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def run_scenario(path, out_dir, jobs: int = 1) -> int:
    doc = load_scenario(path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = sweep_points(doc)
    if jobs > 1 and len(points) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point_star,
                                    [(doc,) + p for p in points]))
    else:
        results = [run_point(doc, *p) for p in points]

    exit_code = 0
    summary_rows = []
    for point_id, summary, trace_rows, status in results:
        summary_rows.append(summary)
        if trace_rows:
            _write_csv(out / f"trace_{point_id}.csv", TRACE_HEADER, trace_rows)
        if status != 0:
            exit_code = status if exit_code in (0, 2) else exit_code
    _write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows)
    return exit_code


def _run_point_star(args):
    return run_point(*args)


VERIFY_HEADER = ["oracle", "n_cases", "max_abs_err", "max_rel_err",
                 "tolerance", "status"]


def run_verify(out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = oracles.run_all()
    _write_csv(out / "verify.csv", VERIFY_HEADER, [r.row() for r in reports])
    for r in reports:
        print(" ".join(r.row()))
    return 0 if all(r.passed for r in reports) else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="isac",
        description="Movable-antenna uplink ISAC CRB-minimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario sweep")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1)

    p_verify = sub.add_parser("verify", help="run the oracle suites")
    p_verify.add_argument("--out", required=True, help="output directory")

    sub.add_parser("print-defaults", help="print the default scenario JSON")

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            return run_scenario(args.scenario, args.out, jobs=args.jobs)
        except (ValueError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    if args.command == "verify":
        return run_verify(args.out)
    if args.command == "print-defaults":
        print(json.dumps(DEFAULT_SCENARIO, indent=2))
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
