"""Command-line entry point.

Usage::

    nonlocal-neumann <subcommand> [config] [--out DIR] [--set key=value ...]

The config file holds one ``key = value`` pair per line; ``#`` starts a
comment. Keys carry a block prefix (``measure.alpha``, ``grid.n``,
``solver.tol``, ...). ``--set`` overrides file entries. Each run writes
``<subcommand>.csv`` to the output directory: ``#`` header lines with the tool
version, the config echo and an error summary, then a comma-separated table.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on a usage or
config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .appendix_oracles import default_battery, gamma_profile
from .local_limit import alpha_sweep, strictly_decreasing
from .measures import stable_measure
from .nonlocal_op import Grid, OperatorSplitParams
from .reflect import ALL_MODELS, ReflectionModel, check_hypotheses
from .solver import (
    ProblemSpec, holder_quotient, neumann_second_difference, solve_direct, solve_limit, solve_truncated, solve_viscous,
)

SUBCOMMANDS = ("solve", "sweep-alpha", "verify-appendix", "check-reflections", "gamma-profile", "holder")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# key -> (parser, default); None marks a required-by-context key without default
def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _floats(s):
    return [float(t) for t in s.replace(";", ",").split(",") if t.strip()]


def _ints(s):
    return [_int(t) for t in s.replace(";", ",").split(",") if t.strip()]


def _words(s):
    return [t.strip() for t in s.replace(";", ",").split(",") if t.strip()]


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


def _opt_int(s):
    return None if s.strip().lower() in ("", "none", "inf", "singular") else _int(s)


SCHEMA: dict[str, tuple[Callable, object]] = {
    "measure.alpha": (_float, 1.5),
    "measure.g": (str, "const"),
    "measure.value": (_float, 1.0),
    "measure.slope": (_float, 1.0),
    "measure.cap": (_float, 2.0),
    "measure.rate": (_float, 1.0),
    "measure.normalized": (_bool, False),
    "reflection": (str, "censored"),
    "f": (str, "exp(-(x-1)**2)"),
    "grid.L": (_float, 8.0),
    "grid.n": (_int, 201),
    "grid.delta": (_opt_float, None),
    "grid.tail_tol": (_float, 1e-6),
    "grid.extension": (str, "constant"),
    "grid.extension_value": (_opt_float, None),
    "solver.method": (str, "direct"),
    "solver.tol": (_float, 1e-10),
    "solver.max_iter": (_int, 1_000_000),
    "solver.k": (_opt_int, None),
    "solver.k_schedule": (_ints, [8, 16, 32, 64]),
    "solver.epsilon": (_float, 1e-3),
    "solver.R_trunc": (_float, 1e6),
    "sweep.alphas": (_floats, [1.5, 1.7, 1.9, 1.95]),
    "sweep.models": (_words, [m.value for m in ALL_MODELS]),
    "sweep.window_fraction": (_float, 0.8),
    "reflections.samples": (_int, 100_000),
    "reflections.dimension": (_int, 2),
    "reflections.models": (_words, [m.value for m in ALL_MODELS]),
    "gamma.delta": (_float, 1.0),
    "gamma.x": (_floats, [0.5, 0.1, 0.01, 0.001]),
    "gamma.rtol": (_float, 1e-8),
    "holder.beta": (_float, 0.6),
    "holder.window": (_float, 0.5),
    "holder.ns": (_ints, [200, 400, 800]),
    "holder.max_ratio": (_float, 2.0),
    "rng_seed": (_int, 0),
}

ALIASES = {
    "alpha": "measure.alpha", "g": "measure.g", "model": "reflection", "L": "grid.L", "n": "grid.n",
    "delta": "grid.delta", "tol": "solver.tol", "method": "solver.method", "epsilon": "solver.epsilon",
    "seed": "rng_seed",
}

ALLOWED_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "log1p", "sqrt", "abs", "tanh", "sinh", "cosh",
                 "arctan", "sign", "minimum", "maximum", "where", "pi", "heaviside", "clip")
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict
    echo: list[str] = field(default_factory=list)

    def __getitem__(self, key: str):
        return self.values[key]


def _parse_lines(lines, source: str) -> list[tuple[str, str, str]]:
    out = []
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{num}", f"expected key = value, got {raw.strip()!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        out.append((key, value, f"{key} = {value}"))
    return out


def load_config(subcommand: str, path: str | None, overrides: list[str]) -> RunConfig:
    entries = []
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"file not found: {path}")
        entries += _parse_lines(p.read_text().splitlines(), p.name)
    entries += _parse_lines(overrides, "--set")
    values = {k: default for k, (_, default) in SCHEMA.items()}
    echo = []
    for key, raw, line in entries:
        name = ALIASES.get(key, key)
        if name not in SCHEMA:
            raise ConfigError(key, "unknown config key")
        parser = SCHEMA[name][0]
        try:
            values[name] = parser(raw)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
        echo.append(line)
    _validate(values)
    return RunConfig(subcommand, values, echo)


def _validate(v: dict) -> None:
    if not 0.0 < v["measure.alpha"] < 2.0:
        raise ConfigError("alpha", f"measure.alpha={v['measure.alpha']} must lie in (0, 2)")
    if v["measure.g"] not in ("const", "affine", "exp"):
        raise ConfigError("measure.g", "expected const, affine or exp")
    try:
        ReflectionModel.parse(v["reflection"])
        for key in ("sweep.models", "reflections.models"):
            for m in v[key]:
                ReflectionModel.parse(m)
    except ValueError as exc:
        raise ConfigError("reflection", str(exc)) from None
    if v["grid.L"] <= 0:
        raise ConfigError("grid.L", "must be positive")
    if v["grid.n"] < 3 or v["grid.n"] > 2000:
        raise ConfigError("grid.n", "must lie in [3, 2000]")
    if v["grid.extension"] not in ("constant", "prescribed"):
        raise ConfigError("grid.extension", "expected constant or prescribed")
    if v["grid.extension"] == "prescribed" and v["grid.extension_value"] is None:
        raise ConfigError("grid.extension_value", "required for a prescribed extension")
    if v["solver.method"] not in ("truncated", "limit", "direct", "viscous"):
        raise ConfigError("solver.method", "expected truncated, limit, direct or viscous")
    for key in ("solver.tol", "solver.epsilon", "solver.R_trunc", "gamma.delta", "holder.window"):
        if not v[key] > 0:
            raise ConfigError(key, "must be positive")
    if v["solver.method"] == "truncated" and v["solver.k"] is None:
        raise ConfigError("solver.k", "the truncated solver needs a finite k")
    ks = v["solver.k_schedule"]
    if len(ks) < 3 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ConfigError("solver.k_schedule", "needs at least 3 strictly increasing entries")
    if any(not 0 < a < 2 for a in v["sweep.alphas"]):
        raise ConfigError("sweep.alphas", "entries must lie in (0, 2)")
    if not 0 < v["holder.beta"] <= 1:
        raise ConfigError("holder.beta", "must lie in (0, 1]")
    if any(not 3 <= n <= 2000 for n in v["holder.ns"]):
        raise ConfigError("holder.ns", "entries must lie in [3, 2000]")
    _compile_f(v["f"])


def _compile_f(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized right-hand side from an expression in x using numpy functions."""
    try:
        code = compile(expr, "<f>", "eval")
    except SyntaxError as exc:
        raise ConfigError("f", f"invalid expression ({exc.msg})") from None
    unknown = set(code.co_names) - set(ALLOWED_NAMES) - {"x"}
    if unknown:
        raise ConfigError("f", f"unknown names {sorted(unknown)}")

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, {**ALLOWED_NAMES, "x": x}), x.shape).astype(float)

    try:
        f(np.linspace(0.0, 1.0, 3))
    except Exception as exc:
        raise ConfigError("f", f"cannot evaluate ({exc})") from None
    return f


def _measure(v: dict, alpha: float | None = None):
    g = v["measure.g"]
    params = {"const": {"value": v["measure.value"]}, "affine": {"slope": v["measure.slope"], "cap": v["measure.cap"]},
              "exp": {"rate": v["measure.rate"]}}[g]
    try:
        return stable_measure(v["measure.alpha"] if alpha is None else alpha, g, **params)
    except ValueError as exc:
        raise ConfigError(f"measure.{g}", str(exc)) from None


def _problem(v: dict, n: int | None = None, model=None) -> ProblemSpec:
    return ProblemSpec(
        _measure(v), model or v["reflection"], _compile_f(v["f"]), Grid(v["grid.L"], n or v["grid.n"]),
        normalized=v["measure.normalized"], extension=v["grid.extension"],
        extension_value=v["grid.extension_value"],
        params=OperatorSplitParams(delta=v["grid.delta"], tail_tol=v["grid.tail_tol"]),
    )


def verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else str(float(x))
    return str(x)


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    summary: dict
    passed: bool


def run_solve(cfg: RunConfig) -> Table:
    v = cfg.values
    prob = _problem(v)
    method = v["solver.method"]
    if method == "truncated":
        rep = solve_truncated(prob, v["solver.k"], v["solver.tol"], v["solver.max_iter"])
    elif method == "limit":
        rep = solve_limit(prob, v["solver.k_schedule"], v["solver.tol"], v["solver.max_iter"])
    elif method == "direct":
        rep = solve_direct(prob, v["solver.k"])
    else:
        rep = solve_viscous(prob, v["solver.epsilon"], v["solver.R_trunc"], v["solver.tol"], v["solver.k"])
    op = prob.operator(v["solver.k"] if method in ("direct", "viscous", "truncated") else v["solver.k_schedule"][-1])
    summary = {
        "method": rep.method, "iterations": rep.iterations, "residual": rep.residual,
        "boundary_residual": rep.boundary_residual, "converged": rep.converged,
        "contraction_factor": rep.contraction_factor, "epsilon": rep.epsilon,
        "increments": ";".join(fmt(x) for x in rep.increments) or "none",
        "row0_closure": op.row0_closure, "delta": op.delta, "tail_mass_beyond_half": op.tail_mass_beyond_half,
        "tail_ok": op.tail_ok,
    }
    ok = rep.converged and max(rep.residual, rep.boundary_residual) <= max(v["solver.tol"], 1e-9)
    if method == "truncated":
        ok = ok and rep.contraction_factor <= 1 - 0.05 * rep.epsilon
    u, f = rep.values, prob.f_values()
    if method == "viscous":
        lap = neumann_second_difference(prob.grid)
        res = u - v["solver.epsilon"] * (lap @ u) - np.clip(op.apply(u), -v["solver.R_trunc"], v["solver.R_trunc"]) - f
    else:
        res = u - op.apply(u) - f
    rows = [[x, ui, ri] for x, ui, ri in zip(prob.grid.nodes, u, res)]
    return Table(["x", "u", "residual"], rows, summary, ok)


def run_sweep(cfg: RunConfig) -> Table:
    v = dict(cfg.values)
    template = _problem({**v, "measure.normalized": True})
    table = alpha_sweep(template, v["sweep.alphas"], v["solver.tol"], v["sweep.models"], v["sweep.window_fraction"])
    rows = [[r.alpha, r.model, r.e_alpha, r.iterations, r.residual, verdict(r.ok)] for r in table.rows]
    alphas = v["sweep.alphas"]
    gaps = {a: table.cross_model_gap(a) for a in alphas}
    decreasing = {m: strictly_decreasing(table.errors(m)) for m in v["sweep.models"]}
    summary = {f"gap[{fmt(a)}]": g for a, g in gaps.items()}
    summary.update({f"decreasing[{m}]": d for m, d in decreasing.items()})
    summary["local_diffusion"] = table.coefficients.diffusion
    summary["local_drift"] = table.coefficients.b
    ok = all(r.ok for r in table.rows) and all(decreasing.values())
    if len(v["sweep.models"]) > 1:
        ok = ok and gaps[alphas[-1]] < gaps[alphas[0]]
    return Table(["alpha", "model", "e_alpha", "iterations", "residual", "ok"], rows, summary, ok)


def run_appendix(cfg: RunConfig) -> Table:
    reports = default_battery()
    rows = [[r.name, r.value, r.quadrature_error, verdict(r.verdict)] for r in reports]
    summary = {"claims": len(reports), "max_error": max(r.quadrature_error for r in reports)}
    return Table(["claim", "value", "error", "verdict"], rows, summary, all(r.verdict for r in reports))


EXPECTED_FAILURES = {
    ReflectionModel.CENSORED: {"normal_lipschitz", "even_extension"},
    ReflectionModel.FLEAS: {"even_extension"},
    ReflectionModel.PROJECTION: {"even_extension"},
    ReflectionModel.MIRROR: set(),
}


def run_reflections(cfg: RunConfig) -> Table:
    v = cfg.values
    rows = []
    ok = True
    for name in v["reflections.models"]:
        model = ReflectionModel.parse(name)
        rep = check_hypotheses(model, v["reflections.samples"], v["rng_seed"], v["reflections.dimension"])
        for key, res in rep.results.items():
            expected = key not in EXPECTED_FAILURES[model]
            match = res.passed == expected
            ok &= match
            rows.append([model.value, key, res.passed, expected, res.worst_margin, verdict(match)])
    return Table(["model", "hypothesis", "holds", "expected", "worst_margin", "verdict"], rows,
                 {"samples": v["reflections.samples"], "dimension": v["reflections.dimension"]}, ok)


def run_gamma(cfg: RunConfig) -> Table:
    v = cfg.values
    prof = gamma_profile(_measure(v), v["reflection"], v["gamma.delta"], v["gamma.x"], v["gamma.rtol"])
    rows = [[r.x, r.gamma, "" if r.closed_form is None else r.closed_form,
             "" if r.rel_error is None else r.rel_error] for r in prof.rows]
    summary = {"positive": prof.positive, "increasing": prof.increasing,
               "closed_form": "n/a" if prof.matches_closed_form is None else prof.matches_closed_form}
    return Table(["x", "gamma", "closed_form", "rel_error"], rows, summary, prof.verdict)


def run_holder(cfg: RunConfig) -> Table:
    v = cfg.values
    rows, quotients = [], []
    for n in v["holder.ns"]:
        rep = solve_direct(_problem(v, n=n), v["solver.k"])
        q = holder_quotient(rep.u, v["holder.beta"], v["holder.window"])
        quotients.append(q)
        rows.append([n, q, rep.residual])
    ratio = max(quotients) / min(quotients) if min(quotients) > 0 else math.inf
    return Table(["n", "quotient", "residual"], rows, {"ratio": ratio, "max_ratio": v["holder.max_ratio"]},
                 ratio < v["holder.max_ratio"])


RUNNERS = {
    "solve": run_solve, "sweep-alpha": run_sweep, "verify-appendix": run_appendix,
    "check-reflections": run_reflections, "gamma-profile": run_gamma, "holder": run_holder,
}


def render(cfg: RunConfig, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: nonlocal-neumann {__version__}\n")
    buf.write(f"# subcommand: {cfg.subcommand}\n")
    for line in cfg.echo:
        buf.write(f"# config: {line}\n")
    for key, value in table.summary.items():
        buf.write(f"# summary: {key} = {fmt(value)}\n")
    buf.write(f"# verdict: {verdict(table.passed)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def run(subcommand: str, config_path: str | None = None, out: str | Path = ".", overrides=()) -> tuple[int, Path]:
    """Run one subcommand and write its CSV; returns (exit status, output path)."""
    if subcommand not in RUNNERS:
        raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    cfg = load_config(subcommand, config_path, list(overrides))
    table = RUNNERS[subcommand](cfg)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{subcommand}.csv"
    path.write_text(render(cfg, table), newline="\n")
    return (0 if table.passed else 1), path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-neumann", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", nargs="?", help="key = value config file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry; may be repeated")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        status, path = run(args.subcommand, args.config, args.out, args.overrides)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    print(f"{'pass' if status == 0 else 'fail'}: wrote {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
