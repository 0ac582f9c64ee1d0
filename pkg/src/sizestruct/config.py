"""YAML run configuration with validated defaults and a matching renderer.

Schema (unknown keys are rejected)::

    task: simulate | spectral | rank_n | generator_eig | aeg | report
    model:
      gamma1, gamma2, mu, c1, c2: <coefficient>
      beta:
        separable: [{b1: <coefficient>, b2: <coefficient>}, ...]
        # or
        general: {values: [[...], ...]}   # uniform tensor grid over [0, m]^2
    grid: {m: 1.0, n_cells: 200}
    time: {t_end: 10.0, output_count: 50}     # or output_times: [...]
    initial:   {u1: <coefficient>, u2: <coefficient>}
    initial_b: {u1: <coefficient>, u2: <coefficient>}   # aeg only
    solver:   {safety: 0.9}
    spectral: {tol: 1.0e-10, panels: 64, envelope_n: 4,
               sweep: {min: -0.4, max: 10.0, count: 50}}
    aeg:      {tol: 0.05, window_fraction: 0.5}
    checks:   {epsilon: 0.25}

    <coefficient> := {form: constant, value: v}
                   | {form: linear, a: v, b: v}
                   | {form: gaussian_bump, center: v, width: v, height: v}
                   | {form: table, knots: [...], values: [...],
                      interpolation: linear | step}

Coefficient domains are taken from ``grid.m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .coeffs import CoefficientFn, GeneralKernel, ModelParams, SeparableKernel
from .errors import ConfigError, SizeStructError
from .solver import DEFAULT_OUTPUT_COUNT, SAFETY, Grid

TASKS = ("simulate", "spectral", "rank_n", "generator_eig", "aeg", "report")

_FORM_KEYS = {
    "constant": ("value",),
    "linear": ("a", "b"),
    "gaussian_bump": ("center", "width", "height"),
    "table": ("knots", "values"),
}

DEFAULTS = {
    "solver": {"safety": SAFETY},
    "spectral": {"tol": 1e-10, "panels": 64, "envelope_n": 4,
                 "sweep": {"min": -0.4, "max": 10.0, "count": 50}},
    "aeg": {"tol": 0.05, "window_fraction": 0.5},
}


@dataclass(frozen=True)
class RunConfig:
    task: str
    params: ModelParams
    grid: Grid
    t_end: float = 0.0
    output_times: tuple | None = None
    output_count: int = DEFAULT_OUTPUT_COUNT
    initial: tuple | None = None
    initial_b: tuple | None = None
    safety: float = SAFETY
    tol: float = 1e-10
    panels: int = 64
    envelope_n: int = 4
    sweep: tuple = (-0.4, 10.0, 50)
    aeg_tol: float = 0.05
    window_fraction: float = 0.5
    epsilon: float | None = field(default=None)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")


def _num(v, where, integer=False):
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{where}: number must be finite")
    if integer:
        if x != int(x):
            raise ConfigError(f"{where}: expected an integer")
        return int(x)
    return x


def _nums(seq, where):
    if not isinstance(seq, (list, tuple)):
        raise ConfigError(f"{where}: expected a list")
    return [_num(v, f"{where}[{i}]") for i, v in enumerate(seq)]


def parse_coefficient(d, m, where) -> CoefficientFn:
    if not isinstance(d, dict) or "form" not in d:
        raise ConfigError(f"{where}: expected a mapping with a 'form' key")
    form = d["form"]
    if form not in _FORM_KEYS:
        raise ConfigError(f"{where}: unknown form {form!r}")
    allowed = ("form",) + _FORM_KEYS[form] + (("interpolation",) if form == "table" else ())
    _check_keys(d, allowed, where)
    missing = [k for k in _FORM_KEYS[form] if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {missing}")
    try:
        if form == "table":
            return CoefficientFn.table(_nums(d["knots"], f"{where}.knots"),
                                       _nums(d["values"], f"{where}.values"), m,
                                       d.get("interpolation", "linear"))
        args = [_num(d[k], f"{where}.{k}") for k in _FORM_KEYS[form]]
        return getattr(CoefficientFn, form)(*args, m)
    except ConfigError as exc:
        if str(exc).startswith(where):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def coefficient_to_dict(f: CoefficientFn) -> dict:
    if f.form == "table":
        knots, values, interp = f.params
        return {"form": "table", "knots": list(knots), "values": list(values),
                "interpolation": interp}
    return {"form": f.form, **dict(zip(_FORM_KEYS[f.form], f.params))}


def _parse_kernel(d, m):
    where = "model.beta"
    _check_keys(d, ("separable", "general"), where)
    if ("separable" in d) == ("general" in d):
        raise ConfigError(f"{where}: give exactly one of 'separable' or 'general'")
    if "separable" in d:
        terms = d["separable"]
        if not isinstance(terms, list) or not terms:
            raise ConfigError(f"{where}.separable: expected a non-empty list")
        pairs = []
        for k, term in enumerate(terms):
            w = f"{where}.separable[{k}]"
            _check_keys(term, ("b1", "b2"), w)
            if "b1" not in term or "b2" not in term:
                raise ConfigError(f"{w}: needs both b1 and b2")
            pairs.append((parse_coefficient(term["b1"], m, f"{w}.b1"),
                          parse_coefficient(term["b2"], m, f"{w}.b2")))
        return SeparableKernel(tuple(pairs))
    g = d["general"]
    _check_keys(g, ("values",), f"{where}.general")
    rows = g.get("values")
    if not isinstance(rows, list) or not rows:
        raise ConfigError(f"{where}.general.values: expected a list of rows")
    table = [_nums(r, f"{where}.general.values[{i}]") for i, r in enumerate(rows)]
    if len({len(r) for r in table}) != 1:
        raise ConfigError(f"{where}.general.values: rows differ in length")
    return GeneralKernel(table, m)


def _kernel_to_dict(beta) -> dict:
    if isinstance(beta, SeparableKernel):
        return {"separable": [{"b1": coefficient_to_dict(b1), "b2": coefficient_to_dict(b2)}
                              for b1, b2 in beta.terms]}
    return {"general": {"values": beta.values.tolist()}}


def _parse_initial(d, m, where):
    _check_keys(d, ("u1", "u2"), where)
    if "u1" not in d:
        raise ConfigError(f"{where}: needs u1")
    u1 = parse_coefficient(d["u1"], m, f"{where}.u1")
    u2 = parse_coefficient(d.get("u2", {"form": "constant", "value": 0.0}), m, f"{where}.u2")
    u1.check_nonnegative(f"{where}.u1")
    u2.check_nonnegative(f"{where}.u2")
    return (u1, u2)


def _section(doc, name):
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.get(name, {}).items()}
    given = doc.get(name, {})
    if given is None:
        given = {}
    _check_keys(given, tuple(out) if out else tuple(given), name)
    for k, v in given.items():
        if isinstance(out.get(k), dict):
            _check_keys(v, tuple(out[k]), f"{name}.{k}")
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def config_from_dict(doc) -> RunConfig:
    _check_keys(doc, ("task", "model", "grid", "time", "initial", "initial_b", "solver",
                      "spectral", "aeg", "checks"), "config")
    task = doc.get("task")
    if task not in TASKS:
        raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")

    grid_d = doc.get("grid")
    _check_keys(grid_d, ("m", "n_cells"), "grid")
    if "m" not in grid_d or "n_cells" not in grid_d:
        raise ConfigError("grid: needs m and n_cells")
    grid = Grid(_num(grid_d["m"], "grid.m"), _num(grid_d["n_cells"], "grid.n_cells", True))
    m = grid.m

    model = doc.get("model")
    _check_keys(model, ("gamma1", "gamma2", "mu", "c1", "c2", "beta"), "model")
    missing = [k for k in ("gamma1", "gamma2", "mu", "c1", "c2", "beta") if k not in model]
    if missing:
        raise ConfigError(f"model: missing key(s) {missing}")
    coeffs = {k: parse_coefficient(model[k], m, f"model.{k}")
              for k in ("gamma1", "gamma2", "mu", "c1", "c2")}
    beta = _parse_kernel(model["beta"], m)
    params = ModelParams(beta=beta, m=m, **coeffs)

    time_d = doc.get("time") or {}
    _check_keys(time_d, ("t_end", "output_times", "output_count"), "time")
    t_end = _num(time_d.get("t_end", 0.0), "time.t_end")
    if t_end < 0:
        raise ConfigError("time.t_end must be non-negative")
    output_times = None
    if "output_times" in time_d:
        output_times = tuple(_nums(time_d["output_times"], "time.output_times"))
        if any(b <= a for a, b in zip(output_times, output_times[1:])):
            raise ConfigError("time.output_times must be strictly increasing")
        if output_times and (output_times[0] <= 0 or output_times[-1] > t_end):
            raise ConfigError("time.output_times must lie in (0, t_end]")
    output_count = _num(time_d.get("output_count", DEFAULT_OUTPUT_COUNT),
                        "time.output_count", True)
    if output_count < 1:
        raise ConfigError("time.output_count must be >= 1")

    initial = _parse_initial(doc["initial"], m, "initial") if "initial" in doc else None
    initial_b = _parse_initial(doc["initial_b"], m, "initial_b") if "initial_b" in doc else None
    if task in ("simulate", "aeg") and initial is None:
        raise ConfigError(f"task {task} needs an 'initial' section")
    if task == "aeg" and initial_b is None:
        raise ConfigError("task aeg needs an 'initial_b' section")
    if task == "aeg" and t_end <= 0:
        raise ConfigError("task aeg needs time.t_end > 0")

    solver = _section(doc, "solver")
    safety = _num(solver["safety"], "solver.safety")
    if not 0 < safety <= 1:
        raise ConfigError("solver.safety must lie in (0, 1]")
    sp = _section(doc, "spectral")
    tol = _num(sp["tol"], "spectral.tol")
    if tol <= 0:
        raise ConfigError("spectral.tol must be positive")
    panels = _num(sp["panels"], "spectral.panels", True)
    envelope_n = _num(sp["envelope_n"], "spectral.envelope_n", True)
    if panels < 1 or envelope_n < 1:
        raise ConfigError("spectral.panels and spectral.envelope_n must be >= 1")
    sw = sp["sweep"]
    sweep = (_num(sw["min"], "spectral.sweep.min"), _num(sw["max"], "spectral.sweep.max"),
             _num(sw["count"], "spectral.sweep.count", True))
    if sweep[2] < 2 or sweep[1] <= sweep[0]:
        raise ConfigError("spectral.sweep needs max > min and count >= 2")
    aeg = _section(doc, "aeg")
    aeg_tol = _num(aeg["tol"], "aeg.tol")
    window = _num(aeg["window_fraction"], "aeg.window_fraction")
    if not 0 < window <= 1:
        raise ConfigError("aeg.window_fraction must lie in (0, 1]")
    checks = doc.get("checks") or {}
    _check_keys(checks, ("epsilon",), "checks")
    epsilon = _num(checks["epsilon"], "checks.epsilon") if "epsilon" in checks else None
    if epsilon is not None and not 0 < epsilon <= m / 2:
        raise ConfigError("checks.epsilon must lie in (0, m/2]")

    return RunConfig(task, params, grid, t_end, output_times, output_count, initial,
                     initial_b, safety, tol, panels, envelope_n, sweep, aeg_tol, window,
                     epsilon)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML configuration document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"parse error: {where}{getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    try:
        return config_from_dict(doc)
    except ConfigError:
        raise
    except SizeStructError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: RunConfig) -> dict:
    p = cfg.params
    doc = {
        "task": cfg.task,
        "model": {k: coefficient_to_dict(getattr(p, k))
                  for k in ("gamma1", "gamma2", "mu", "c1", "c2")},
        "grid": {"m": cfg.grid.m, "n_cells": cfg.grid.n_cells},
        "time": {"t_end": cfg.t_end, "output_count": cfg.output_count},
        "solver": {"safety": cfg.safety},
        "spectral": {"tol": cfg.tol, "panels": cfg.panels, "envelope_n": cfg.envelope_n,
                     "sweep": {"min": cfg.sweep[0], "max": cfg.sweep[1],
                               "count": cfg.sweep[2]}},
        "aeg": {"tol": cfg.aeg_tol, "window_fraction": cfg.window_fraction},
    }
    doc["model"]["beta"] = _kernel_to_dict(p.beta)
    if cfg.output_times is not None:
        doc["time"]["output_times"] = list(cfg.output_times)
    for name in ("initial", "initial_b"):
        init = getattr(cfg, name)
        if init is not None:
            doc[name] = {"u1": coefficient_to_dict(init[0]), "u2": coefficient_to_dict(init[1])}
    if cfg.epsilon is not None:
        doc["checks"] = {"epsilon": cfg.epsilon}
    return doc


def render_config(cfg: RunConfig) -> str:
    """YAML text that :func:`parse_config` maps back to ``cfg``."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
