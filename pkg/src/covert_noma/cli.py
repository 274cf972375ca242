"""Experiment runner: reproduces the reference sweeps as CSV tables.

Every experiment writes a CSV with the fixed header
``sweep_var,value,metric,analytic,mc_mean,mc_stderr,extra`` plus a JSON
sidecar holding the fully resolved configuration, so any analytic number in
the table can be recomputed from the sidecar alone.  All dB/dBm handling
lives here; the library below works in linear units only.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import covert_opt, covertness, montecarlo, secrecy_analysis, secrecy_opt
from .model import (
    ADAPTIVE,
    PowerAllocation,
    SystemParams,
    compute_sinrs,
    sample_channels,
)

SPEC_VERSION = "1"

EXPERIMENTS = ("dep-phase1", "dep-phase2", "dep-vs-n", "sop", "covert-rate",
               "secrecy", "validate")

# configuration defaults; experiment-specific entries override the common ones
_COMMON = {
    "p_s_dbm": 10.0,
    "p_r_policy": "half_ps",   # "half_ps", "adaptive", or "dbm:<value>"
    "sigma2": 1.0,
    "n_samples": 15,
    "r_w": 0.25,
    "r_t": 0.5,
    "r_w_hat": 0.5,
    "r_b": 0.2,
    "p_dep_th": 0.8,
    "alpha_w": 0.8,
    "alpha_b": 0.2,
    "beta_t": 0.8,
    "beta_b": 0.2,
    "omega1_db": 5.0,
    "omega2_db": 5.0,
    "lam_sr": 1.0,
    "lam_rb": 1.0,
    "lam_sw": 0.5,
    "lam_se": 0.5,
    "lam_rt": 0.5,
    "lam_re": 0.5,
    "lam_rw": 0.5,
    "mc_trials": 100_000,
    "n_channels": 50,
    "seed": 20240915,
    "quadrature_order": 200,
    "sop_r_b": None,           # falls back to r_b
}

_PER_EXPERIMENT = {
    "dep-phase1": {"sweep_var": "p_s_dbm", "sweep_start": -10.0, "sweep_stop": 30.0,
                   "sweep_steps": 41, "sweep_scale": "db"},
    "dep-phase2": {"sweep_var": "omega2_db", "sweep_start": 0.0, "sweep_stop": 15.0,
                   "sweep_steps": 31, "sweep_scale": "db"},
    "dep-vs-n": {"sweep_var": "n_samples", "sweep_start": 1, "sweep_stop": 30,
                 "sweep_steps": 30, "sweep_scale": "linear",
                 "omega1_db": 7.0, "omega2_db": 9.0},
    "sop": {"sweep_var": "p_s_dbm", "sweep_start": 0.0, "sweep_stop": 30.0,
            "sweep_steps": 16, "sweep_scale": "db",
            "alpha_w": 0.6, "alpha_b": 0.4, "beta_t": 0.6, "beta_b": 0.4},
    "covert-rate": {"sweep_var": "p_s_dbm", "sweep_start": 0.0, "sweep_stop": 30.0,
                    "sweep_steps": 16, "sweep_scale": "db",
                    "n_samples": 3, "p_r_policy": "adaptive"},
    "secrecy": {"sweep_var": "p_s_dbm", "sweep_start": 0.0, "sweep_stop": 30.0,
                "sweep_steps": 7, "sweep_scale": "db",
                "r_t": 0.25, "p_r_policy": "adaptive", "n_channels": 20},
    "validate": {"mc_trials": 200_000},
}


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def resolve_config(experiment: str, config_path: str | None = None,
                   overrides: dict | None = None) -> dict:
    """Defaults <- config file <- --set overrides, later entries winning."""
    cfg = dict(_COMMON)
    cfg.update(_PER_EXPERIMENT.get(experiment, {}))
    cfg["experiment"] = experiment
    if config_path:
        with open(config_path) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise ValueError(f"unknown config key {key!r}")
        cfg[key] = value
    return cfg


def _params_from(cfg: dict, p_s_dbm: float | None = None,
                 n_samples: int | None = None) -> SystemParams:
    p_s = db_to_linear(p_s_dbm if p_s_dbm is not None else cfg["p_s_dbm"])
    policy = cfg["p_r_policy"]
    if policy == "half_ps":
        p_r = 0.5 * p_s
    elif policy == ADAPTIVE:
        p_r = ADAPTIVE
    elif isinstance(policy, str) and policy.startswith("dbm:"):
        p_r = db_to_linear(float(policy[4:]))
    else:
        raise ValueError(f"unknown relay power policy {policy!r}")
    lam = {"SR": cfg["lam_sr"], "RB": cfg["lam_rb"], "SW": cfg["lam_sw"],
           "SE": cfg["lam_se"], "RT": cfg["lam_rt"], "RE": cfg["lam_re"],
           "RW": cfg["lam_rw"]}
    return SystemParams(
        p_s=p_s, p_r=p_r, sigma2=cfg["sigma2"], lam=lam,
        n_samples=int(n_samples if n_samples is not None else cfg["n_samples"]),
        r_w=cfg["r_w"], r_t=cfg["r_t"], r_w_hat=cfg["r_w_hat"], r_b=cfg["r_b"],
        p_dep_th=cfg["p_dep_th"],
    )


def _alloc_from(cfg: dict) -> PowerAllocation:
    return PowerAllocation(alpha_w=cfg["alpha_w"], alpha_b=cfg["alpha_b"],
                           beta_t=cfg["beta_t"], beta_b=cfg["beta_b"])


def _row_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence([int(master), int(index)])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def _sweep_values(cfg: dict) -> list[float]:
    steps = int(cfg["sweep_steps"])
    if steps < 2:
        raise ValueError("sweeps need at least 2 steps")
    vals = np.linspace(float(cfg["sweep_start"]), float(cfg["sweep_stop"]), steps)
    if cfg["sweep_var"] == "n_samples":
        return [int(round(v)) for v in vals]
    return [float(v) for v in vals]


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    return repr(float(x))


# ---------------------------------------------------------------------------
# experiment implementations: each yields row tuples
# ---------------------------------------------------------------------------

def _run_dep_phase1(cfg: dict):
    alloc = _alloc_from(cfg)
    omega1 = db_to_linear(cfg["omega1_db"])
    for i, v in enumerate(_sweep_values(cfg)):
        params = _params_from(cfg, p_s_dbm=v)
        rep = covertness.dep_phase1(params, alloc, omega1)
        est = montecarlo.mc_dep(params, alloc, omega1, 1, int(cfg["mc_trials"]),
                                _row_seed(cfg["seed"], i))
        extra = {
            "min_dep": covertness.min_dep_phase1(params, alloc),
            "omega1_star_db": linear_to_db(covertness.omega1_star(params, alloc)),
        }
        yield ("p_s_dbm", v, "dep_phase1", rep.p_dep, est.mean, est.std_error, extra)


def _run_dep_phase2(cfg: dict):
    alloc = _alloc_from(cfg)
    params = _params_from(cfg)
    extra_const = {
        "omega2_star_db": linear_to_db(covertness.omega2_star(params, alloc)),
        "min_dep2": covertness.min_dep_phase2(params, alloc.beta_t),
    }
    for i, v in enumerate(_sweep_values(cfg)):
        omega2 = db_to_linear(v)
        rep = covertness.dep_phase2(params, alloc, omega2)
        est = montecarlo.mc_dep(params, alloc, omega2, 2, int(cfg["mc_trials"]),
                                _row_seed(cfg["seed"], i))
        yield ("omega2_db", v, "dep_phase2", rep.p_dep, est.mean, est.std_error,
               extra_const)


def _run_dep_vs_n(cfg: dict):
    alloc = _alloc_from(cfg)
    omega1 = db_to_linear(cfg["omega1_db"])
    omega2 = db_to_linear(cfg["omega2_db"])
    for i, n in enumerate(_sweep_values(cfg)):
        params = _params_from(cfg, n_samples=n)
        r1 = covertness.dep_phase1(params, alloc, omega1)
        r2 = covertness.dep_phase2(params, alloc, omega2)
        e1 = montecarlo.mc_dep(params, alloc, omega1, 1, int(cfg["mc_trials"]),
                               _row_seed(cfg["seed"], 2 * i))
        e2 = montecarlo.mc_dep(params, alloc, omega2, 2, int(cfg["mc_trials"]),
                               _row_seed(cfg["seed"], 2 * i + 1))
        extra1 = {"min_dep": covertness.min_dep_phase1(params, alloc)}
        extra2 = {"min_dep2": covertness.min_dep_phase2(params, alloc.beta_t)}
        yield ("n_samples", n, "dep_phase1", r1.p_dep, e1.mean, e1.std_error, extra1)
        yield ("n_samples", n, "dep_phase2", r2.p_dep, e2.mean, e2.std_error, extra2)


def _run_sop(cfg: dict):
    alloc = _alloc_from(cfg)
    r_b = cfg["sop_r_b"] if cfg["sop_r_b"] is not None else cfg["r_b"]
    for i, v in enumerate(_sweep_values(cfg)):
        params = _params_from(cfg, p_s_dbm=v)
        for j, mode in enumerate(("SC", "MRC")):
            scfg = secrecy_analysis.SopConfig(mode=mode,
                                              quadrature_order=int(cfg["quadrature_order"]))
            analytic = secrecy_analysis.sop(params, alloc, r_b, scfg)
            est = montecarlo.mc_sop(params, alloc, r_b, mode, int(cfg["mc_trials"]),
                                    _row_seed(cfg["seed"], 2 * i + j))
            yield ("p_s_dbm", v, f"sop_{mode.lower()}", analytic, est.mean,
                   est.std_error, {"r_b": r_b})


def _run_covert_rate(cfg: dict):
    n_ch = int(cfg["n_channels"])
    for i, v in enumerate(_sweep_values(cfg)):
        params = _params_from(cfg, p_s_dbm=v)
        rates = []
        infeasible = 0
        for k in range(n_ch):
            ch = sample_channels(params, _row_seed(cfg["seed"], i), stream_id=k)
            sol = covert_opt.maxmin_covert_pa(params, ch)
            if sol.feasible:
                rates.append(sol.covert_rate)
            else:
                infeasible += 1
        mean = float(np.mean(rates)) if rates else 0.0
        stderr = float(np.std(rates, ddof=1) / math.sqrt(len(rates))) if len(rates) > 1 else 0.0
        extra = {"feasible": len(rates), "infeasible": infeasible, "n_channels": n_ch}
        yield ("p_s_dbm", v, "covert_rate", mean, mean, stderr, extra)


def _run_secrecy(cfg: dict):
    n_ch = int(cfg["n_channels"])
    for i, v in enumerate(_sweep_values(cfg)):
        params = _params_from(cfg, p_s_dbm=v)
        for mode in ("SC", "MRC"):
            rates = []
            iters = []
            infeasible = 0
            for k in range(n_ch):
                ch = sample_channels(params, _row_seed(cfg["seed"], i), stream_id=k)
                try:
                    trace, rate = secrecy_opt.sca_maximize_secrecy(params, ch, mode)
                except secrecy_opt.InfeasibleAllocation:
                    infeasible += 1
                    continue
                rates.append(rate)
                iters.append(trace.iterations)
            mean = float(np.mean(rates)) if rates else 0.0
            stderr = float(np.std(rates, ddof=1) / math.sqrt(len(rates))) if len(rates) > 1 else 0.0
            extra = {"mean_iterations": float(np.mean(iters)) if iters else 0.0,
                     "infeasible": infeasible, "n_channels": n_ch}
            yield ("p_s_dbm", v, f"secrecy_{mode.lower()}", mean, mean, stderr, extra)


def _run_validate(cfg: dict):
    """Reduced-scale analytic-vs-Monte-Carlo validation suite."""
    trials = int(cfg["mc_trials"])
    seed = int(cfg["seed"])
    alloc = _alloc_from(cfg)
    checks = []

    def check(name, analytic, est, tol_extra=0.0):
        tol = 3.0 * max(est.std_error, 1.0 / est.trials) + tol_extra
        checks.append((name, analytic, est.mean, est.std_error,
                       abs(analytic - est.mean) <= tol, tol))

    params = _params_from(cfg)
    omega1 = db_to_linear(cfg["omega1_db"])
    check("dep_phase1_vs_mc", covertness.dep_phase1(params, alloc, omega1).p_dep,
          montecarlo.mc_dep(params, alloc, omega1, 1, trials, _row_seed(seed, 0)))
    omega2 = db_to_linear(cfg["omega2_db"])
    check("dep_phase2_vs_mc", covertness.dep_phase2(params, alloc, omega2).p_dep,
          montecarlo.mc_dep(params, alloc, omega2, 2, trials, _row_seed(seed, 1)),
          tol_extra=0.03)
    scfg_sc = secrecy_analysis.SopConfig(mode="SC")
    scfg_mrc = secrecy_analysis.SopConfig(mode="MRC")
    check("sop_sc_vs_mc", secrecy_analysis.sop(params, alloc, cfg["r_b"], scfg_sc),
          montecarlo.mc_sop(params, alloc, cfg["r_b"], "SC", trials, _row_seed(seed, 2)),
          tol_extra=1e-3)
    check("sop_mrc_vs_mc", secrecy_analysis.sop(params, alloc, cfg["r_b"], scfg_mrc),
          montecarlo.mc_sop(params, alloc, cfg["r_b"], "MRC", trials, _row_seed(seed, 3)),
          tol_extra=1e-3)
    for name, fn, qty in (("cdf_v_sc", secrecy_analysis.cdf_v_sc, "V_SC"),
                          ("cdf_u", secrecy_analysis.cdf_u, "U")):
        v = 0.8
        est = montecarlo.mc_empirical_cdf(qty, [v], params, alloc, trials,
                                          _row_seed(seed, hash(name) % 1000 + 10))[0]
        check(f"{name}_vs_mc", fn(v, params, alloc), est)
    est = montecarlo.mc_empirical_cdf("V_MRC", [0.8], params, alloc, trials,
                                      _row_seed(seed, 7))[0]
    check("cdf_v_mrc_vs_mc",
          secrecy_analysis.cdf_v_mrc(0.8, params, alloc, scfg_mrc), est)

    # covert optimizer: fairness and feasibility on a handful of realizations
    cparams = _params_from({**cfg, "n_samples": 3, "p_r_policy": "adaptive"})
    fair_ok = True
    solved = 0
    for k in range(10):
        ch = sample_channels(cparams, _row_seed(seed, 100), stream_id=k)
        sol = covert_opt.maxmin_covert_pa(cparams, ch)
        if not sol.feasible:
            continue
        solved += 1
        p_res = covert_opt.resolve_relay_power(cparams, ch)
        s = compute_sinrs(p_res, sol.alloc, ch)
        if abs(s.gamma_r_cb - s.gamma_b_cb) > 1e-10 * max(s.gamma_r_cb, 1e-300):
            fair_ok = False
    checks.append(("covert_fairness", float(solved), float(solved), 0.0, fair_ok, 0.0))

    # SCA: surrogate monotone and near the grid oracle on a few realizations
    sparams = _params_from({**cfg, "r_t": 0.25, "p_r_policy": "adaptive"})
    sca_ok = True
    for k in range(3):
        ch = sample_channels(sparams, _row_seed(seed, 200), stream_id=k)
        try:
            trace, rate = secrecy_opt.sca_maximize_secrecy(sparams, ch, "SC")
        except secrecy_opt.InfeasibleAllocation:
            continue
        phis = [st.surrogate for st in trace.steps]
        if any(b < a - 1e-7 for a, b in zip(phis, phis[1:])):
            sca_ok = False
        _, oracle = secrecy_opt.grid_oracle_secrecy(sparams, ch, "SC")
        if rate < oracle - max(0.05 * oracle, 0.01):
            sca_ok = False
    checks.append(("sca_vs_grid_oracle", 1.0 if sca_ok else 0.0, 1.0, 0.0, sca_ok, 0.0))

    for name, analytic, mc_mean, mc_stderr, ok, tol in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: analytic={analytic:.6g} "
              f"mc={mc_mean:.6g} tol={tol:.3g}")
        yield ("check", 0.0, name, analytic, mc_mean, mc_stderr,
               {"pass": bool(ok), "tolerance": tol})


_RUNNERS = {
    "dep-phase1": _run_dep_phase1,
    "dep-phase2": _run_dep_phase2,
    "dep-vs-n": _run_dep_vs_n,
    "sop": _run_sop,
    "covert-rate": _run_covert_rate,
    "secrecy": _run_secrecy,
    "validate": _run_validate,
}


def run(cfg: dict, out_path: str | Path) -> int:
    """Execute one experiment config; returns a process exit code."""
    out_path = Path(out_path)
    rows = list(_RUNNERS[cfg["experiment"]](cfg))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep_var", "value", "metric", "analytic",
                         "mc_mean", "mc_stderr", "extra"])
        for sweep_var, value, metric, analytic, mc_mean, mc_stderr, extra in rows:
            writer.writerow([sweep_var, repr(value) if isinstance(value, float) else value,
                             metric, _fmt(analytic), _fmt(mc_mean), _fmt(mc_stderr),
                             json.dumps(extra, sort_keys=True)])
    sidecar = {"spec_version": SPEC_VERSION, "config": cfg, "output": out_path.name}
    with open(str(out_path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    if cfg["experiment"] == "validate":
        failed = [r for r in rows if not r[6]["pass"]]
        return 1 if failed else 0
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="covert-noma",
        description="Covertness/secrecy experiments for the two-phase CDRT-NOMA network",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON config file (defaults baked in)")
    parser.add_argument("--set", dest="sets", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config entry")
    parser.add_argument("--out", help="output CSV path (default <experiment>.csv)")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    args = parser.parse_args(argv)

    overrides = {}
    for item in args.sets:
        if "=" not in item:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = _coerce(value.strip())
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["mc_trials"] = args.trials
    try:
        cfg = resolve_config(args.experiment, args.config, overrides)
        return run(cfg, args.out or f"{args.experiment}.csv")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
