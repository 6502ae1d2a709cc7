"""Command-line driver: ``klee construct | verify | plot | sweep | selftest``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import FORMATS, ConfigError, RunConfig, load_config
from .construction import (
    SCHEMA_VERSION,
    VerificationReport,
    _numerator_min,
    critical_epsilon_K,
    klee_curvature,
    profile_table,
    verify_counterexample,
)
from .svg import LineChart

CSV_COLUMNS = ("phi", "rho_K", "rho_L", "m_K", "m_L", "t_star", "curvature_K", "curvature_L")
SWEEP_POINTS = 97


def cell_name(n: int, eps: float) -> str:
    return f"n{n}_eps{float(eps)!r}"


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _run_cells(func, jobs: int, cells):
    """Map over cells, in parallel if asked; results come back in input order."""
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, cells))
    return [func(c) for c in cells]


# --------------------------------------------------------------------------
# construct


def _table_cell(args):
    n, eps, N, m = args
    try:
        return profile_table(eps, n, N, m), None
    except (ArithmeticError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def write_table(path: Path, table: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(*(table[c] for c in CSV_COLUMNS)):
            w.writerow([_fmt(v) for v in row])


def read_table(path: Path) -> dict:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = np.array([[float(v) for v in row] for row in r])
    return {c: rows[:, i] for i, c in enumerate(CSV_COLUMNS)}


def cmd_construct(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(n, e, cfg.degree, cfg.nodes) for n, e in cfg.cells]
    results = _run_cells(_table_cell, cfg.jobs, cells)
    status = 0
    summary = []
    for (n, eps, _, _), (table, err) in zip(cells, results):
        name = cell_name(n, eps)
        if err is not None:
            print(f"{name}: FAILED {err}", file=sys.stderr)
            summary.append([n, eps, cfg.degree, "", "", "", "", "", err])
            status = 1
            continue
        fname = f"profile_{name}.csv"
        if "csv" in cfg.formats:
            write_table(out / fname, table)
        if "svg" in cfg.formats:
            write_figures(out, n, eps, table)
        summary.append([n, eps, cfg.degree, fname, _fmt(np.min(table["m_K"])), _fmt(np.max(table["m_K"])),
                        _fmt(np.min(table["rho_L"])), _fmt(np.max(table["rho_L"])), "ok"])
        print(f"{name}: {len(table['phi'])} rows")
    if "csv" in cfg.formats:
        with open(out / "construct_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "eps", "N", "file", "m_K_min", "m_K_max", "rho_L_min", "rho_L_max", "status"])
            w.writerows(summary)
    return status


# --------------------------------------------------------------------------
# verify


def _verify_cell(args) -> dict:
    n, eps, N, m, seed, mc, tol_m, refine = args
    try:
        report = verify_counterexample(eps, n, N, m, seed=seed, mc_samples=mc, tol_m=tol_m, refine=refine)
    except Exception as exc:  # breakdown of one cell must not abort the matrix
        report = VerificationReport(n=n, eps=eps, N=N, m=m, seed=seed, error=f"{type(exc).__name__}: {exc}")
    return report.to_dict()


def report_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


SUMMARY_COLUMNS = ("n", "eps", "passed", "m_mismatch", "route_agreement", "curvature_min_K", "curvature_min_L",
                   "central_symmetry_defect_K", "defect_floor", "origin_symmetry_defect_L", "failed_checks")


def cmd_verify(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(n, e, cfg.degree, cfg.nodes, cfg.seed, cfg.mc_samples, cfg.tol_m, cfg.refine) for n, e in cfg.cells]
    reports = _run_cells(_verify_cell, cfg.jobs, cells)
    rows = []
    for rep in reports:
        name = cell_name(rep["n"], rep["eps"])
        if "json" in cfg.formats:
            (out / f"report_{name}.json").write_text(report_json(rep))
        failed = ";".join(rep["failed_checks"]) + (f";error={rep['error']}" if rep["error"] else "")
        rows.append([rep["n"], repr(rep["eps"]), "yes" if rep["passed"] else "no"]
                    + [_fmt(rep[k]) for k in SUMMARY_COLUMNS[3:-1]] + [failed.strip(";")])
    if "csv" in cfg.formats:
        with open(out / "verify_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            w.writerows(rows)
    widths = [3, 6, 6, 12, 12]
    print(f"{'n':>3} {'eps':>6} {'pass':>6} {'mMismatch':>12} {'routes':>12}  failed")
    for r in rows:
        print(f"{r[0]:>{widths[0]}} {r[1]:>{widths[1]}} {r[2]:>{widths[2]}} "
              f"{float(r[3]):>12.3e} {float(r[4]):>12.3e}  {r[-1]}")
    ok = all(rep["passed"] for rep in reports)
    print("all cells passed" if ok else "certification FAILED")
    return 0 if ok else 1


# --------------------------------------------------------------------------
# plot


def write_figures(out: Path, n: int, eps: float, table: dict) -> list[Path]:
    name = cell_name(n, eps)
    tag = f"n = {n}, eps = {eps!r}"
    phi = table["phi"]
    paths = []

    # (a) boundary curves in the x_1 - x_n plane, closed by mirroring in x_1
    fig = LineChart(f"Profile curves of K and L ({tag})", "x_1", "x_n", equal_aspect=True)
    for col, label, dashed in (("rho_K", "K", False), ("rho_L", "L", True)):
        r = table[col]
        x = np.concatenate([r * np.sin(phi), (-r * np.sin(phi))[::-1]])
        y = np.concatenate([r * np.cos(phi), (r * np.cos(phi))[::-1]])
        fig.add(label, np.append(x, x[0]), np.append(y, y[0]), dashed)
    paths.append(out / f"boundary_{name}.svg")
    paths[-1].write_text(fig.render())

    # (b) inner section functions
    gap = float(np.max(np.abs(table["m_K"] - table["m_L"])))
    fig = LineChart(f"Inner section functions ({tag}), max gap {gap:.3e}", "phi", "maximal section volume")
    fig.add("m_K", phi, table["m_K"]).add("m_L", phi, table["m_L"], dashed=True)
    paths.append(out / f"sections_{name}.svg")
    paths[-1].write_text(fig.render())

    # (c) maximizer position
    fig = LineChart(f"Maximizing offset t(phi) ({tag})", "phi", "t")
    fig.add("t_K", phi, table["t_star"])
    paths.append(out / f"maximizer_{name}.svg")
    paths[-1].write_text(fig.render())
    return paths


def cmd_plot(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    missing = [(n, e) for n, e in cfg.cells if not (out / f"profile_{cell_name(n, e)}.csv").exists()]
    fresh = dict(zip(missing, _run_cells(_table_cell, cfg.jobs, [(n, e, cfg.degree, cfg.nodes) for n, e in missing])))
    for n, eps in cfg.cells:
        name = cell_name(n, eps)
        if (n, eps) in fresh:
            table, err = fresh[(n, eps)]
            if err is not None:
                print(f"{name}: FAILED {err}", file=sys.stderr)
                status = 1
                continue
        else:
            table = read_table(out / f"profile_{name}.csv")
        for p in write_figures(out, n, eps, table):
            print(p)
    return status


# --------------------------------------------------------------------------
# sweep and selftest


def cmd_sweep(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    eps_star = critical_epsilon_K()
    grid = np.linspace(0.0, 0.96, SWEEP_POINTS)
    phi = np.linspace(0.0, math.pi, 4097)
    rows = [(e, float(np.min(klee_curvature(e, phi))), _numerator_min(e)) for e in grid]
    if "csv" in cfg.formats:
        with open(out / "sweep_curvature.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eps", "curvature_min_K", "numerator_min"])
            w.writerows([[_fmt(v) for v in r] for r in rows])
    if "svg" in cfg.formats:
        fig = LineChart(f"Minimal curvature of K (critical eps = {eps_star:.6f})", "eps", "min curvature")
        fig.add("min curvature", grid, [r[1] for r in rows])
        (out / "sweep_curvature.svg").write_text(fig.render())
    if "json" in cfg.formats:
        (out / "sweep.json").write_text(json.dumps({"schema_version": SCHEMA_VERSION, "critical_epsilon": eps_star,
                                                    "exact": 3 * math.sqrt(6) / 8}, indent=2, sort_keys=True) + "\n")
    print(f"critical eps for convexity of K: {eps_star:.12f}")
    return 0


def cmd_selftest(cfg: RunConfig) -> int:
    from .selftest import run_selftest

    ok = True
    for name, passed, detail in run_selftest():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return 0 if ok else 1


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "plot": cmd_plot,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="klee", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--dim", type=int, action="append", help="dimension n (repeatable)")
    p.add_argument("--eps", type=float, action="append", help="perturbation eps (repeatable)")
    p.add_argument("--degree", type=int, help="spectral degree N (even)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="seed for the Monte Carlo spot check")
    p.add_argument("--format", action="append", choices=FORMATS, help="output format (repeatable)")
    p.add_argument("--jobs", type=int, help="worker processes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(
            dims=tuple(args.dim) if args.dim else None,
            epsilons=tuple(args.eps) if args.eps else None,
            degree=args.degree,
            out_dir=args.out,
            seed=args.seed,
            formats=tuple(dict.fromkeys(args.format)) if args.format else None,
            jobs=args.jobs,
        )
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    raise SystemExit(main())
