"""``fracspec <command> --config <path> [--strict] [--out <dir>] [--threads N]``.

Each run writes ``report.csv``, ``report.json`` and ``manifest.json`` into the
output directory. Exit codes: 0 when every criterion passes (or ``--strict``
is off), 1 on a failing criterion under ``--strict``, 2 on usage or config
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from fracspec import __version__, _kernels
from fracspec.besov import besov_norm, embedding_report, lp_norm
from fracspec.config import COMMANDS, ConfigError, ExperimentConfig, dumps, load_config
from fracspec.elliptic import (
    EllipticProblem,
    NormSpec,
    coercivity_report,
    residual,
    resolvent_identity_residual,
    resolvent_sweep,
    separability_report,
    solve_elliptic,
)
from fracspec.grid import l2_norm, write_csv
from fracspec.parabolic import (
    ParabolicProblem,
    duhamel_solve,
    parabolic_coercivity_report,
    read_forcing_dir,
    separable_forcing,
)
from fracspec.symbols import (
    check_sector_condition,
    lower_bound_constant,
    mikhlin_sup,
    sigma_closure,
    uniformity_report,
    young_inequality_constant,
)


class Run:
    """Collects report rows, criteria and stage timings for one command."""

    def __init__(self, cfg: ExperimentConfig, workers: int):
        self.cfg = cfg
        self.workers = workers
        self.rows: list[dict] = []
        self.criteria: dict[str, dict] = {}
        self.timings: dict[str, float] = {}
        self.summary: dict = {}
        self.extra_files: dict[str, object] = {}

    def criterion(self, name: str, passed: bool, value=None, **detail):
        self.criteria[name] = {"passed": bool(passed), "value": value, **detail}

    def stage(self, name):
        run = self

        class _Stage:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = time.perf_counter() - self.t

        return _Stage()

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.criteria.values())

    def norm(self) -> NormSpec:
        if self.cfg.norm == "lp":
            return NormSpec(None, self.cfg.p)
        return NormSpec(self.cfg.besov())


# -- commands --------------------------------------------------------------


def cmd_solve_elliptic(run: Run):
    cfg = run.cfg
    k = cfg.kernels()
    sweep = [cfg.single_lambda()] if cfg.lam is not None else cfg.sweep()
    probes = cfg.probe_functions()
    worst = 0.0
    with run.stage("solve"):
        for s in sweep:
            for name, f in probes:
                u = solve_elliptic(EllipticProblem(k, s, f))
                r = residual(u, f, k, s)
                worst = max(worst, r)
                run.rows.append({"lambda_re": s.lam.real, "lambda_im": s.lam.imag,
                                 "probe": name, "residual": r,
                                 "u_l2": l2_norm(u), "f_l2": l2_norm(f)})
                if len(sweep) == 1 and len(probes) == 1:
                    run.extra_files["solution.csv"] = u
    run.criterion("residual", worst <= cfg.residual_tol, worst, tolerance=cfg.residual_tol)


def cmd_solve_parabolic(run: Run):
    cfg = run.cfg
    k = cfg.kernels()
    grid = cfg.grid()
    if cfg.forcing_dir is not None:
        forcings = [("forcing_dir", read_forcing_dir(cfg.forcing_path, cfg.radius, cfg.horizon))]
    else:
        forcings = [(name, separable_forcing(w, cfg.time_profile, cfg.horizon, cfg.steps))
                    for name, w in cfg.probe_functions(grid)]
    worst_ratio = 0.0
    series = []
    for name, f in forcings:
        steps = f.steps - 1
        with run.stage(f"solve[{name}]"):
            p = ParabolicProblem(k, f, cfg.horizon, steps)
            sol = duhamel_solve(p)
        run.criterion(f"initial_zero[{name}]", not np.any(sol.u.values[0]))
        for j, t in enumerate(sol.u.times):
            series.append({"probe": name, "t": float(t),
                           "u_l2": l2_norm(sol.u.values[j], grid),
                           "half_step_residual": float(sol.residuals[j - 1]) if j else 0.0})
        with run.stage(f"mixed_norms[{name}]"):
            rep = parabolic_coercivity_report(p, cfg.besov(), cfg.time_besov(),
                                              cfg.variant == "convolution", sol, run.workers)
        total = rep.rows[0].total_ratio
        worst_ratio = max(worst_ratio, total)
        for r in rep.rows:
            run.rows.append({"probe": name, **r.as_dict()})
    run.extra_files["timeseries.csv"] = series
    run.criterion("mixed_norm_ratio", math.isfinite(worst_ratio)
                  and worst_ratio <= cfg.parabolic_bound, worst_ratio, bound=cfg.parabolic_bound)


def _report_rows(run: Run, reports):
    for r in reports:
        run.rows.append({"quantity": r.quantity, "value": r.value, "passed": r.passed,
                         "location": json.dumps(r.location, sort_keys=True)})
        run.criterion(r.quantity, r.passed, r.value)


def cmd_analyze_symbol(run: Run):
    cfg = run.cfg
    k = cfg.kernels()
    grid = cfg.grid()
    sweep = cfg.sweep()
    with run.stage("condition"):
        _report_rows(run, [check_sector_condition(k, grid)])
    with run.stage("lower_bound"):
        _report_rows(run, [lower_bound_constant(k, sweep, grid, refine=cfg.refine)])
    with run.stage("uniformity"):
        try:
            _report_rows(run, uniformity_report(k, grid, sweep))
        except ArithmeticError as exc:
            run.criterion("uniformity", False, None, error=str(exc))
    with run.stage("mikhlin"):
        reports = []
        for i, t in enumerate(k.terms):
            reports += mikhlin_sup(t.symbol, grid, refine=cfg.refine, name=f"a_hat[{i}]")
        for re, im in cfg.mikhlin_lambdas:
            lam = complex(re, im)
            for i in (0, 1, 2):
                try:
                    reports += mikhlin_sup(sigma_closure(i, lam, k), grid, refine=cfg.refine,
                                           name=f"sigma_{i}@{lam}")
                except ArithmeticError as exc:
                    run.criterion(f"mikhlin[sigma_{i}@{lam}]", False, None, error=str(exc))
        _report_rows(run, reports)
    with run.stage("young"):
        _report_rows(run, [young_inequality_constant(k.order, t.alpha) for t in k.terms])


def cmd_besov_norm(run: Run):
    cfg = run.cfg
    bp = cfg.besov()
    fine = bp.replace(samples=2 * bp.samples)
    worst = 0.0
    with run.stage("norms"):
        for name, f in cfg.probe_functions():
            v = besov_norm(f, bp, run.workers)
            v2 = besov_norm(f, fine, run.workers)
            drift = abs(v2 - v) / v if v > 0 else 0.0
            worst = max(worst, drift)
            run.rows.append({"probe": name, "besov_norm": v, "besov_norm_2J": v2,
                             "quadrature_drift": drift, "lp_norm": lp_norm(f, bp.p)})
    run.criterion("quadrature_drift", worst <= 0.01, worst, tolerance=0.01)


def cmd_verify_coercivity(run: Run):
    cfg = run.cfg
    k = cfg.kernels()
    sweep = cfg.sweep()
    for name, f in cfg.probe_functions():
        with run.stage(f"coercivity[{name}]"):
            rep = coercivity_report(k, f, sweep, run.norm(), cfg.variant == "convolution",
                                    cfg.factor, run.workers)
        for r in rep.rows:
            run.rows.append({"probe": name, **r.as_dict()})
        run.criterion(f"uniform[{name}]", rep.uniform, rep.spread, factor=cfg.factor,
                      errors=rep.errors)
    run.summary["norm"] = run.norm().describe()


def cmd_verify_resolvent(run: Run):
    cfg = run.cfg
    k = cfg.kernels()
    sweep = cfg.sweep()
    probes = cfg.probe_functions()
    fs = [f for _, f in probes]
    norm = run.norm()
    with run.stage("sweep"):
        rep = resolvent_sweep(k, fs, sweep, norm, cfg.bound, run.workers)
    table = rep.meta.pop("table")
    for s, row in zip(rep.meta.pop("sweep"), table):
        for (name, _), v in zip(probes, row):
            run.rows.append({"lambda_re": s.real, "lambda_im": s.imag, "probe": name,
                             "scaled_resolvent_norm": v})
    run.criterion("resolvent_bound", rep.passed, rep.value, bound=cfg.bound,
                  location=rep.location)
    with run.stage("identity"):
        worst = 0.0
        for f in fs:
            for a, b in zip(sweep[:-1], sweep[1:]):
                worst = max(worst, resolvent_identity_residual(k, f, a, b))
    run.criterion("resolvent_identity", worst <= cfg.identity_tol, worst,
                  tolerance=cfg.identity_tol)
    with run.stage("separability"):
        sep = separability_report(k, fs, norm)
    run.criterion("separability", sep.passed, sep.value, window=[sep.meta["min"], sep.meta["max"]])


def cmd_verify_embedding(run: Run):
    cfg = run.cfg
    bp = cfg.besov()
    hs = cfg.h_sweep
    for name, u in cfg.probe_functions():
        fine = dict(cfg.probe_functions(cfg.grid(2)))[name] if cfg.refine else None
        for mu in cfg.mu:
            with run.stage(f"embedding[{name}, mu={mu}]"):
                rep = embedding_report(u, cfg.alpha, cfg.order, bp, cfg.p1, float(mu), hs, fine)
            for h, r in zip(rep.meta["h"], rep.meta.get("ratios", [])):
                run.rows.append({"probe": name, "mu": float(mu), "h": h, "ratio": r})
            run.criterion(f"embedding[{name}, mu={mu}]", rep.passed, rep.value,
                          refined=rep.meta.get("refined_value"))


HANDLERS = {
    "solve-elliptic": cmd_solve_elliptic,
    "solve-parabolic": cmd_solve_parabolic,
    "analyze-symbol": cmd_analyze_symbol,
    "besov-norm": cmd_besov_norm,
    "verify-coercivity": cmd_verify_coercivity,
    "verify-resolvent": cmd_verify_resolvent,
    "verify-embedding": cmd_verify_embedding,
}


# -- output ----------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def write_rows_csv(rows: list[dict], path: Path):
    header: list[str] = []
    for r in rows:
        header += [k for k in r if k not in header]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r.get(h, "")) for h in header])


def write_outputs(run: Run, out: Path, config_echo: dict):
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(run.rows, out / "report.csv")
    report = {"command": run.cfg.command, "rows": run.rows, "criteria": run.criteria,
              "summary": run.summary}
    (out / "report.json").write_text(dumps(report))
    for name, obj in run.extra_files.items():
        if isinstance(obj, list):
            write_rows_csv(obj, out / name)
        else:
            write_csv(obj, out / name)
    manifest = {
        "config": config_echo,
        "tool": "fracspec",
        "version": __version__,
        "backend": _kernels.BACKEND,
        "threads": run.workers,
        "timings_s": run.timings,
        "criteria": {k: v["passed"] for k, v in run.criteria.items()},
        "passed": run.passed,
    }
    (out / "manifest.json").write_text(dumps(manifest))


def run_config(cfg: ExperimentConfig, out: Path, workers: int = 1) -> Run:
    run = Run(cfg, workers)
    HANDLERS[cfg.command](run)
    write_outputs(run, out, cfg.to_dict())
    return run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracspec", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="flat JSON experiment config")
    ap.add_argument("--strict", action="store_true", help="exit 1 if any criterion fails")
    ap.add_argument("--out", default=None, help="output directory (default: fracspec-out)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("fracspec: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.command)
        out = Path(args.out or "fracspec-out")
        run = run_config(cfg, out, args.threads)
    except ConfigError as exc:
        print(f"fracspec: config error: {exc}", file=sys.stderr)
        return 2
    for name, c in run.criteria.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}")
    if args.strict and not run.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
