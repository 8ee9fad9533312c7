"""Command-line driver: ``pdmp simulate|structural|rmse-table|variance-decay``.

Every subcommand reads an INI config (see :mod:`pdmp.config`), writes CSV or
INI files into ``--out`` and is a pure function of the config and seed.

Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 numerical
failure (rate-bound violation, degenerate weight or non-finite state).
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import estimators as est
from .config import ExperimentConfig, load_config
from .core import MarkState, evaluate_state, simulate_path
from .errors import (ConfigError, DegenerateRate, DegenerateWeight, InvalidArgument,
                     NumericalFailure, PlanDegenerate, RateBoundViolation)
from .models import morris_lecar as ml
from .models import telegraph as tg
from .reweight import AuxiliarySpec
from .rng import StreamKey, derive_stream, sample_trace
from .samplers import JitSampler

EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 1, 2, 3


def _fmt(x) -> str:
    return f"{x:.10g}" if isinstance(x, float) else str(x)


class ModelSetup:
    """Model objects built from a config: samplers, characteristics, auxiliaries."""

    def __init__(self, cfg: ExperimentConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = threads
        try:
            if cfg.model == "morris_lecar":
                self.params = ml.MlParams.from_mapping(cfg.model_params)
                self.jit = ml.jit_model(self.params)
                x0 = ml.default_initial_state(self.params)
            else:
                self.params = tg.TelegraphParams(**{k: float(v) for k, v in cfg.model_params.items()})
                self.jit = tg.jit_model(self.params)
                x0 = MarkState(0, 0.0)
        except (InvalidArgument, TypeError, ValueError) as exc:
            raise ConfigError(f"bad [{cfg.model}] parameters: {exc}") from exc
        theta0 = x0.theta if cfg.theta0 is None else cfg.theta0
        nu0 = x0.nu if cfg.nu0 is None else cfg.nu0
        if not 0 <= theta0 < self.jit.n_modes:
            raise ConfigError(f"theta0={theta0} outside 0..{self.jit.n_modes - 1}")
        self.x0 = MarkState(theta0, nu0)

    def characteristics(self, h):
        if self.cfg.model == "morris_lecar":
            return ml.ml_characteristics(self.params, h, self.cfg.rate_bound)
        return tg.telegraph_characteristics(self.params, h, self.cfg.rate_bound)

    def aux(self, kind, horizon):
        if kind in ("plain", "case3"):
            return None
        if self.cfg.model == "morris_lecar":
            if kind == "case1":
                return ml.case1_spec(self.params)
            return ml.case2_spec(self.params, horizon, self.x0)
        if kind == "case1":
            p = self.params
            return AuxiliarySpec("case1", aux_rate=np.array([p.a0, p.a1]),
                                 aux_kernel=np.array([[0.0, 1.0], [1.0, 0.0]]))
        # the telegraph intensity ignores nu, so any trajectory gives the target law
        return AuxiliarySpec("case2", trajectory=lambda t: np.zeros_like(np.asarray(t, dtype=float)))

    def sampler(self, horizon, kind="plain"):
        return JitSampler(self.jit, self.x0, horizon, self.cfg.rate_bound,
                          aux=self.aux(kind, horizon), threads=self.threads)


# subcommands --------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, setup: ModelSetup, out: Path):
    s = cfg.simulate
    n_paths = int(s.get("paths", 10))
    horizon = float(s.get("horizon", cfg.horizon))
    dt = float(s.get("grid", 0.1))
    h = float(s.get("h", 0.01))
    if n_paths < 1 or not dt > 0 or not h > 0 or horizon < 0:
        raise ConfigError("[simulate] needs paths >= 1, grid > 0, h > 0 and horizon >= 0")
    chars = setup.characteristics(h)
    grid = np.linspace(0.0, horizon, int(round(horizon / dt)) + 1)
    m = setup.jit
    top = m.n_modes - 1
    out.mkdir(parents=True, exist_ok=True)
    for i in range(n_paths):
        trace = sample_trace(derive_stream(StreamKey(cfg.seed, (i,))), cfg.rate_bound, horizon)
        skel = simulate_path(chars, trace, setup.x0)
        with open(out / f"path_{i:03d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "nu", "theta_frac", "up_probability", "rate"])
            for t in grid:
                theta, nu = evaluate_state(skel, chars, float(t))
                up = m.jump_prob.py_func(theta, nu, theta + 1, m.params) if theta < top else 0.0
                lam = m.rate.py_func(theta, nu, m.params)
                w.writerow([_fmt(float(t)), _fmt(nu), _fmt(theta / top), _fmt(float(up)), _fmt(float(lam))])
    if cfg.model == "morris_lecar":
        traj = ml.deterministic_ml(setup.params, horizon, setup.x0)
        vals = np.atleast_2d(traj(grid))
        with open(out / "deterministic.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "v", "n"])
            for t, (v, n) in zip(grid, vals):
                w.writerow([_fmt(float(t)), _fmt(float(v)), _fmt(float(n))])
    return n_paths


def cmd_structural(cfg: ExperimentConfig, setup: ModelSetup, out: Path):
    s = cfg.structural_estimation
    N = int(float(s.get("N", 10_000)))
    v_h, v_M = float(s.get("V1_h", 0.1)), int(s.get("V1_M", 4))
    c_h, c_M = float(s.get("c1_h", 1.0)), int(s.get("c1_M", 4))
    var_h, var_N = float(s.get("var_h", 0.01)), int(float(s.get("var_N", 100_000)))
    couplings = [c.strip() for c in s.get("couplings", "plain, case3").split(",") if c.strip()]
    T = cfg.horizon
    key = StreamKey(cfg.seed)
    plain = setup.sampler(T)
    c1, c1_se = est.estimate_c1(plain, c_h, c_M, N, seed=key.child(0), return_se=True)
    var_x = est.estimate_var(plain, var_h, var_N, seed=key.child(1))
    lines = []
    for i, kind in enumerate(couplings):
        beta = 1.0 if kind == "plain" else 2.0
        V1 = est.estimate_V1(setup.sampler(T, kind), v_h, v_M, N, beta, kind, seed=key.child(2 + i))
        name = "structural" if kind == "plain" else f"structural_{kind}"
        lines.append(f"[{name}]")
        if kind == "plain":
            lines += ["alpha = 1", "beta = 1", f"c1 = {c1:.6g}", f"V1 = {V1:.6g}", f"var_x = {var_x:.6g}",
                      f"# c1 standard error {c1_se:.3g}"]
        else:
            lines += ["beta = 2", f"V1 = {V1:.6g}"]
        lines.append("")
    out.mkdir(parents=True, exist_ok=True)
    (out / "structural.ini").write_text("\n".join(lines))
    print("\n".join(lines))


def rmse_rows(cfg: ExperimentConfig, setup: ModelSetup, full: bool = False, progress=None):
    """Rows of the RMSE table for every configured estimator and epsilon."""
    truth = cfg.true_value()
    T = cfg.horizon
    rows = []
    for e_idx, name in enumerate(cfg.estimators):
        coupling = "plain" if name == "mc" else name.split("-", 1)[1]
        sp = cfg.structural_params(coupling)
        sampler = setup.sampler(T, coupling if name != "mc" else "plain")
        for k, eps in enumerate(cfg.epsilon_list(full)):
            key = StreamKey(cfg.seed, (e_idx, k))
            plan = None
            if name != "mc":
                try:
                    M = est.select_M(eps, sp, cfg.h_star)
                    plan = est.mlmc_params(eps, sp, cfg.h_star, M)
                except PlanDegenerate:
                    plan = None
            if plan is None:
                plan = est.mc_params(eps, sp)
                reports = [est.run_mc(plan, sampler, key, r) for r in range(cfg.replications)]
            else:
                reports = [est.run_mlmc(plan, sampler, coupling, key, r) for r in range(cfg.replications)]
            summary = est.empirical_rmse(reports, truth)
            if not cfg.wall_time:
                summary = replace(summary, mean_wall_time=0.0)
            row = est.table_row(eps, name, plan, summary)
            rows.append(row)
            if progress:
                progress(row)
    return rows


def cmd_rmse_table(cfg, setup, out: Path, full=False):
    rows = rmse_rows(cfg, setup, full, progress=lambda r: print(",".join(map(str, r)), flush=True))
    out.mkdir(parents=True, exist_ok=True)
    est.write_table(out / "rmse_table.csv", rows)


def variance_decay_table(cfg: ExperimentConfig, setup: ModelSetup):
    s = cfg.variance_decay
    T = float(s.get("horizon", 10.0))
    h = float(s.get("h", 1.0))
    M = int(s.get("M", 4))
    levels = int(s.get("levels", 6))
    N = int(float(s.get("N", 10_000)))
    couplings = [c.strip() for c in s.get("couplings", "plain, case2, case3").split(",") if c.strip()]
    if levels < 1 or M < 2 or not h > 0 or not T > 0:
        raise ConfigError("[variance_decay] needs levels >= 1, M >= 2, h > 0, horizon > 0")
    curves, slopes = {}, {}
    for i, kind in enumerate(("plain", "case2", "case3")):
        if kind not in couplings:
            continue
        rows = est.variance_decay_curve(setup.sampler(T, kind), kind, h, M, levels, N,
                                        StreamKey(cfg.seed, (i,)))
        curves[kind] = rows
        slopes[kind] = est.decay_slope(rows)
    return curves, slopes, levels


def cmd_variance_decay(cfg, setup, out: Path):
    curves, slopes, levels = variance_decay_table(cfg, setup)
    out.mkdir(parents=True, exist_ok=True)
    kinds = ("plain", "case2", "case3")
    with open(out / "variance_decay.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l"] + [f"log_M_msd_{k}" for k in kinds])
        for i in range(levels):
            l = i + 2
            w.writerow([l] + [_fmt(curves[k][i][2]) if k in curves else "" for k in kinds])
        w.writerow(["slope"] + [_fmt(slopes[k]) if k in slopes and not math.isnan(slopes[k]) else ""
                                for k in kinds])
    for k in kinds:
        if k in slopes:
            print(f"{k}: slope {slopes[k]:.3f}")


COMMANDS = {
    "simulate": cmd_simulate,
    "structural": cmd_structural,
    "rmse-table": cmd_rmse_table,
    "variance-decay": cmd_variance_decay,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pdmp", description="Multilevel Monte Carlo experiments for PDMPs")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--seed", type=int, help="override [experiment] seed")
    ap.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    ap.add_argument("--full", action="store_true", help="append epsilons_full to the epsilon list")
    ap.add_argument("--out", default="out", help="output directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        threads = args.threads or cfg.threads or os.cpu_count() or 1
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg.validate()
        setup = ModelSetup(cfg, threads)
        out = Path(args.out)
        if args.command == "rmse-table":
            cmd_rmse_table(cfg, setup, out, args.full)
        else:
            COMMANDS[args.command](cfg, setup, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RateBoundViolation, NumericalFailure, DegenerateWeight, DegenerateRate) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
