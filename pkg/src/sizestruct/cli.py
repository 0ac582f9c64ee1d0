"""Command-line driver: ``sizestruct run <config> [--out DIR] [--quiet] [--plot]``.

Every task writes comma-separated files with a header row and 17 significant
digits per float, so repeated runs are byte-identical. Exit code 1 signals a
validation error and 2 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics, spectral
from .coeffs import GeneralKernel, ModelParams, SeparableKernel, separable_envelope
from .config import RunConfig, parse_config
from .errors import ConfigError, NoRootError, NumericalError
from .solver import PopulationState, simulate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class RunReport:
    task: str
    out_dir: Path
    duration: float = 0.0
    files: list = field(default_factory=list)
    headline: dict = field(default_factory=dict)

    def summary(self) -> str:
        parts = [f"{k}={_fmt(v)}" for k, v in self.headline.items()]
        return f"[{self.task}] " + " ".join(parts) + f" ({len(self.files)} files)"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class _Writer:
    """Writes CSVs into ``out_dir`` and remembers them for cleanup."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list[Path] = []

    def csv(self, name: str, header, rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(path)
        return path

    def cleanup(self):
        for path in self.files:
            path.unlink(missing_ok=True)
        self.files.clear()


def _initial_state(cfg: RunConfig, which="initial") -> PopulationState:
    u1, u2 = getattr(cfg, which)
    return PopulationState.from_functions(cfg.grid, u1, u2)


def _write_trajectory(w: _Writer, traj, suffix=""):
    w.csv(f"observables{suffix}.csv", ("t", "mass1", "mass2", "total"), traj.observables)
    s = traj.grid.centers
    for st in traj.states:
        w.csv(f"profile{suffix}_{st.t:.10g}.csv", ("s", "u1", "u2"), zip(s, st.u1, st.u2))


def _report_csv(w: _Writer, headline: dict):
    w.csv("report.csv", ("quantity", "value"), headline.items())


def _task_simulate(cfg: RunConfig, w: _Writer) -> dict:
    times = cfg.output_times
    if times is None and cfg.t_end > 0:
        times = np.linspace(0.0, cfg.t_end, cfg.output_count + 1)[1:]
    traj = simulate(cfg.params, cfg.grid, _initial_state(cfg), cfg.t_end, times, cfg.safety)
    _write_trajectory(w, traj)
    final = traj.observables[-1]
    head = {"t_end": final[0], "final_mass1": final[1], "final_mass2": final[2],
            "final_total": final[3], "steps": len(traj.observables) - 1}
    if len(traj.observables) >= 10 and final[3] > 0:
        head["growth_rate"] = asymptotics.growth_rate(traj, cfg.window_fraction).rate
    return head


def _task_spectral(cfg: RunConfig, w: _Writer) -> dict:
    res = spectral.solve_lambda_star(cfg.params, cfg.tol, cfg.panels)
    lo, hi, count = cfg.sweep
    rows = [(lam, spectral.K_of_lambda(cfg.params, lam, cfg.panels))
            for lam in np.linspace(lo, hi, count)]
    rows.append((res.lambda_star, spectral.K_of_lambda(cfg.params, res.lambda_star, cfg.panels)))
    w.csv("spectral.csv", ("lambda", "K_lambda"), rows)
    return {"lambda_star": res.lambda_star, "K0": res.k_at_zero, "bracket_lo": res.bracket[0],
            "bracket_hi": res.bracket[1], "method": res.method, "iterations": res.iterations}


def _with_kernel(params: ModelParams, beta) -> ModelParams:
    return ModelParams(params.gamma1, params.gamma2, params.mu, params.c1, params.c2,
                       beta, params.m)


def _task_rank_n(cfg: RunConfig, w: _Writer) -> dict:
    beta = cfg.params.beta
    if isinstance(beta, SeparableKernel):
        res = spectral.solve_rank_n_root(cfg.params, cfg.tol, cfg.panels)
        return {"rank": beta.rank, "lambda_star": res.lambda_star, "R0": res.k_at_zero,
                "bracket_lo": res.bracket[0], "bracket_hi": res.bracket[1],
                "method": res.method}
    head = {"envelope_n": cfg.envelope_n}
    for side in ("lower", "upper"):
        env = _with_kernel(cfg.params, separable_envelope(beta, cfg.envelope_n, side))
        try:
            head[f"lambda_{side}"] = spectral.solve_rank_n_root(env, cfg.tol, cfg.panels).lambda_star
        except NoRootError:
            head[f"lambda_{side}"] = float("-inf")
    head["bracket_width"] = head["lambda_upper"] - head["lambda_lower"]
    return head


def _task_generator_eig(cfg: RunConfig, w: _Writer) -> dict:
    mat = spectral.generator_matrix(cfg.params, cfg.grid)
    lam, vec, it = spectral.power_iteration(mat, cfg.tol)
    n = cfg.grid.n_cells
    vec = vec / (cfg.grid.cell_width * np.sum(vec))
    w.csv("eigenvector.csv", ("s", "u1", "u2"), zip(cfg.grid.centers, vec[:n], vec[n:]))
    head = {"generator_eigenvalue": lam, "iterations": it, "n_cells": n}
    if isinstance(cfg.params.beta, SeparableKernel) and cfg.params.beta.rank == 1:
        head["lambda_star"] = spectral.solve_lambda_star(cfg.params, cfg.tol, cfg.panels).lambda_star
    return head


def _task_aeg(cfg: RunConfig, w: _Writer) -> dict:
    a, b = _initial_state(cfg), _initial_state(cfg, "initial_b")
    rep = asymptotics.aeg_check(cfg.params, cfg.grid, a, b, cfg.t_end, cfg.aeg_tol,
                                cfg.window_fraction)
    return {"rate_a": rep.rate_a, "rate_b": rep.rate_b,
            "profile_distance": rep.profile_distance,
            "settle_distance_a": rep.settle_distance_a,
            "settle_distance_b": rep.settle_distance_b, "verdict": rep.verdict}


def _task_report(cfg: RunConfig, w: _Writer) -> dict:
    p = cfg.params
    ext = asymptotics.extinction_sufficient(p)
    eps = cfg.epsilon if cfg.epsilon is not None else p.m / 4
    irr = asymptotics.irreducibility_conditions(p, eps)
    head = {"B": ext.birth_bound, "C": ext.transfer_bound, "extinction_lhs": ext.lhs,
            "extinction_rhs": ext.rhs, "extinction_holds": ext.holds,
            "tau_m": asymptotics.tau(p, p.m), "epsilon": eps,
            "birth_corner_ok": irr.birth_corner_ok, "c1_at_zero_ok": irr.c1_at_zero_ok,
            "c2_at_m_ok": irr.c2_at_m_ok}
    beta = p.beta
    try:
        if isinstance(beta, SeparableKernel) and beta.rank == 1:
            res = spectral.solve_lambda_star(p, cfg.tol, cfg.panels)
            head.update(lambda_star=res.lambda_star, K0=res.k_at_zero)
        elif isinstance(beta, SeparableKernel):
            res = spectral.solve_rank_n_root(p, cfg.tol, cfg.panels)
            head.update(lambda_star=res.lambda_star, R0=res.k_at_zero)
        elif isinstance(beta, GeneralKernel):
            env = _with_kernel(p, separable_envelope(beta, cfg.envelope_n, "lower"))
            head["lambda_lower_envelope"] = spectral.solve_rank_n_root(
                env, cfg.tol, cfg.panels).lambda_star
    except NoRootError:
        head["lambda_star"] = float("-inf")
    return head


TASK_HANDLERS = {
    "simulate": _task_simulate,
    "spectral": _task_spectral,
    "rank_n": _task_rank_n,
    "generator_eig": _task_generator_eig,
    "aeg": _task_aeg,
    "report": _task_report,
}


def run(cfg: RunConfig, out_dir="out") -> RunReport:
    """Run the configured task, writing its CSVs into ``out_dir``.

    On any error the files written so far are removed before re-raising.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = _Writer(out)
    start = time.perf_counter()
    try:
        headline = {"task": cfg.task, **TASK_HANDLERS[cfg.task](cfg, writer)}
        _report_csv(writer, headline)
    except Exception as exc:
        writer.cleanup()
        if hasattr(exc, "add_note"):
            exc.add_note(f"while running task {cfg.task!r}")
        raise
    return RunReport(cfg.task, out, time.perf_counter() - start, list(writer.files), headline)


def emit_plot_script(report: RunReport, path=None) -> Path:
    """Write a gnuplot script that plots the CSVs listed in ``report``."""
    if not report.files:
        raise ConfigError("report lists no output files")
    missing = [f for f in report.files if not Path(f).is_file()]
    if missing:
        raise ConfigError(f"missing CSV file(s): {[str(f) for f in missing]}")
    names = [Path(f).name for f in report.files]
    stanzas = []
    for obs in (n for n in names if n.startswith("observables")):
        stanzas.append("\n".join([
            "set logscale y", "set xlabel 't'", "set ylabel 'mass'",
            f"plot '{obs}' using 1:4 with lines title 'total', \\",
            f"     '{obs}' using 1:2 with lines title 'active', \\",
            f"     '{obs}' using 1:3 with lines title 'resting'",
            "unset logscale y"]))
    profiles = [n for n in names if n.startswith("profile") or n == "eigenvector.csv"]
    if profiles:
        last = profiles[-1]
        stanzas.append("\n".join([
            "set xlabel 's'", "set ylabel 'density'",
            f"plot '{last}' using 1:2 with lines title 'u1', \\",
            f"     '{last}' using 1:3 with lines title 'u2'"]))
    if "spectral.csv" in names:
        stanzas.append("\n".join([
            "set xlabel 'lambda'", "set ylabel 'K(lambda)'",
            "plot 'spectral.csv' using 1:2 with points pt 7 ps 0.5 title 'K', \\",
            "     1 with lines dashtype 2 title 'K = 1'"]))
    if not stanzas:
        raise ConfigError(f"nothing to plot for task {report.task!r}")
    header = ["# gnuplot script; run from the output directory",
              "set datafile separator ','", "set key autotitle columnhead",
              "set terminal pngcairo size 800,600",
              f"set output '{report.task}.png'"]
    if len(stanzas) > 1:
        header.append(f"set multiplot layout {len(stanzas)},1")
    text = "\n".join(header) + "\n\n" + "\n\n".join(stanzas) + "\n"
    if len(stanzas) > 1:
        text += "unset multiplot\n"
    path = Path(path) if path is not None else report.out_dir / "plot.gp"
    path.write_text(text)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sizestruct",
                                     description="Two-phase size-structured population lab")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one configured task")
    p_run.add_argument("config", help="YAML configuration file")
    p_run.add_argument("--out", default="out", help="output directory (default: out)")
    p_run.add_argument("--quiet", action="store_true", help="suppress the summary line")
    p_run.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(Path(args.config).read_text())
        report = run(cfg, args.out)
        if args.plot:
            report.files.append(emit_plot_script(report))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not args.quiet:
        print(report.summary())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
