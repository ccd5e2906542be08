"""Command-line driver: ``resonance-lab <experiment> [--config F] [--set k=v] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from . import config as cfgmod
from .errors import (BathymetryError, ConfigFileError, ConfigurationError, DiffeoError, LabError,
                     ParameterError, SingularSymbolError, SolverError)
from .series import MaxSeries, fit_growth, fit_slope
from .spectral import Field1D, Grid1D

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 2, 3, 4
SCHEMA_PREFIX = "resonance-lab"


@dataclass
class Table:
    name: str
    columns: list
    rows: list


@dataclass
class RunResult:
    config: dict
    tables: list
    summary: dict
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# Catalog

CATALOG = {
    "proudman": ("Figure 1", "sup|h_R| of flat-bottom shallow water under a travelling Gaussian, one series per speed"),
    "topo-resonance": ("Figures 2-3", "constructed landslide over b0 = -tanh(X): sup|zeta1| and the bottom motion b_m"),
    "amplified-wave": ("Figure 4", "right-going pulse amplified by the constructed landslide"),
    "dispersive-resonant": ("Figures 5, 6, 8", "full dispersion, resonant pressure: sqrt(t) growth of sup|zeta_R|"),
    "dispersive-unit-speed": ("Figures 7, 8", "full dispersion, pressure moving at speed 1: t^(1/3) growth"),
    "strip-validate": ("none", "boundary operators on the strip against flat multipliers, adjointness, coercivity"),
}


def catalog() -> list:
    return [{"name": name, "figures": fig, "description": desc,
             "defaults": cfgmod.resolve(name, {}).echo()} for name, (fig, desc) in CATALOG.items()]


# ---------------------------------------------------------------------------
# Experiments.  Each has a validate step (cheap, before any compute) and a run step.


def _series_rows(series: MaxSeries, extra=()):
    return [[*extra, t, s, a] for t, s, a in zip(series.times, series.sup_norm, series.argmax_x)]


def _fit_dict(fit):
    return {"window": list(fit.window), "exponent": fit.exponent, "prefactor": fit.prefactor,
            "residual": fit.residual, "kind": fit.kind}


def _proudman_profile(c):
    from .shallow import Gaussian
    return Gaussian(c["amplitude"], c["width"], 0.0)


def validate_proudman(c):
    from .shallow import check_cfl
    check_cfl(c["dt"], c["dx"])
    if c["fit_t2"] > c["t_end"] or c["fit_t1"] >= c["fit_t2"]:
        raise ConfigFileError("proudman.fit_t1/fit_t2: window must satisfy fit_t1 < fit_t2 <= t_end")


def run_proudman(c, jobs=1):
    from .shallow import run_proudman_sweep, saturation_bound
    f0 = _proudman_profile(c)
    series = run_proudman_sweep(c["speeds"], f0, c["t_end"], dt=c["dt"], dx=c["dx"],
                                sample_dt=c["sample_dt"], jobs=jobs)
    rows, members = [], []
    for u, s in zip(c["speeds"], series):
        rows += _series_rows(s, (u,))
        bound = max(s.sup_norm[k] - saturation_bound(f0.sup, f0.sup_derivative, u, t) for k, t in enumerate(s.times))
        entry = {"U": u, "max_sup": float(s.sup_norm.max()), "max_excess_over_bound": float(bound)}
        if u == 1.0:
            entry["slope"] = _fit_dict(fit_slope(s, (c["fit_t1"], c["fit_t2"])))
            entry["predicted_slope"] = 0.5 * c["amplitude"] * math.exp(-0.5)
        members.append(entry)
    return [Table("series", ["U", "t", "sup_hR", "argmax_x"], rows)], {"members": members}


def _topo_setup(c, margin):
    from .topo import tanh_bathymetry, check_topo_cfl
    half = math.sqrt(1 + c["beta"]) * c["t_end"] + margin
    g = Grid1D.centered(math.ceil(half / c["dx"]) * c["dx"], c["dx"])
    bathy = tanh_bathymetry(g, c["beta"])
    check_topo_cfl(c["dt"], bathy)
    return g, bathy


def _topo_landslide(c, g, bathy):
    from .topo import constructed_from_rate, constructed_from_velocity, gaussian_rate
    if c.get("entry", "rate") == "velocity":
        return constructed_from_velocity(bathy, g.sample(lambda x: -np.exp(-x * x)))
    return constructed_from_rate(gaussian_rate(g))


def validate_topo(c):
    if not 0 < c["beta"] < 1:
        raise BathymetryError(f"topo-resonance.beta: depth 1 - beta must stay positive, got beta = {c['beta']}")
    _topo_setup(c, 20.0)
    if c["fit_t2"] > c["t_end"] or c["fit_t1"] >= c["fit_t2"]:
        raise ConfigFileError("topo-resonance.fit_t1/fit_t2: window must satisfy fit_t1 < fit_t2 <= t_end")


def run_topo_resonance(c, jobs=1):
    from .topo import build_constructed_resonance
    g, bathy = _topo_setup(c, 20.0)
    res = build_constructed_resonance(bathy, _topo_landslide(c, g, bathy), c["t_end"], c["dt"], c["sample_dt"])
    fit = fit_growth(res.zeta1, (c["fit_t1"], c["fit_t2"]))
    bm = res.bm_sup
    plateau = bm.value_at(c["t_end"]) / bm.value_at(0.5 * c["t_end"])
    rows = [[t, a, b, l2] for t, a, b, l2 in zip(res.times, res.zeta1.sup_norm, bm.sup_norm, res.bm_l2)]
    summary = {"entry": res.entry, "growth": _fit_dict(fit), "bm_plateau_ratio": plateau,
               "bm_sup_final": bm.sup_norm[-1], "bm_l2_final": float(res.bm_l2[-1])}
    return [Table("series", ["t", "sup_zeta1", "sup_bm", "l2_bm"], rows)], summary


def validate_amplified(c):
    if not 0 < c["beta"] < 1:
        raise BathymetryError(f"amplified-wave.beta: depth 1 - beta must stay positive, got beta = {c['beta']}")
    _topo_setup(c, abs(c["center"]) + 20.0)


def run_amplified(c, jobs=1):
    from .topo import no_landslide, right_moving_pulse, run_topo
    g, bathy = _topo_setup(c, abs(c["center"]) + 20.0)
    slide = _topo_landslide(c, g, bathy) if c["landslide"] == "on" else no_landslide(g)
    inc = right_moving_pulse(bathy, c["amplitude"], c["center"], c["width"])
    run = run_topo(bathy, slide, inc.zeta0, inc.v0, c["t_end"], c["dt"], c["sample_dt"])
    s = run.series
    summary = {"landslide": c["landslide"], "sup_initial": s.sup_norm[0], "sup_final": s.sup_norm[-1],
               "amplification": s.sup_norm[-1] / s.sup_norm[0]}
    return [Table("series", ["t", "sup_zeta1", "argmax_x"], _series_rows(s))], summary


def _dispersive_run(c, kind):
    from .dispersive import DispersiveRun, gaussian_pressure
    n, hw = c["n"], c["half_width"]
    if n % 2:
        raise ConfigFileError(f"n: need an even number of modes, got {n}")
    g = Grid1D.centered(hw, 2 * hw / n)
    return DispersiveRun(c["mu"], gaussian_pressure(g, c["amplitude"]), kind)


def validate_dispersive(c):
    if c["t_start"] >= c["t_end"]:
        raise ConfigFileError("t_start must be smaller than t_end")
    if c["n_samples"] < 3:
        raise ConfigFileError(f"n_samples: need at least 3, got {c['n_samples']}")
    _dispersive_run(c, "resonant")


def _dispersive_common(c, run):
    from .dispersive import p0_hat_l1, sup_series
    times = np.geomspace(c["t_start"], c["t_end"], c["n_samples"])
    R, L = sup_series(run, times, "R"), sup_series(run, times, "L")
    fit = fit_growth(R, (c["t_start"], c["t_end"]))
    rows = [[t, r, xr, l] for t, r, xr, l in zip(times, R.sup_norm, R.argmax_x, L.sup_norm)]
    summary = {"growth": _fit_dict(fit), "sup_zeta_L_max": float(L.sup_norm.max()), "p0_hat_l1": p0_hat_l1(run)}
    return Table("series", ["t", "sup_zeta_R", "argmax_x", "sup_zeta_L"], rows), summary


def run_dispersive_resonant(c, jobs=1):
    from .dispersive import decay_constants, g_second, resonant_sqrt_limit
    run = _dispersive_run(c, "resonant")
    table, summary = _dispersive_common(c, run)
    limit, xi0 = resonant_sqrt_limit(run)
    summary.update({"sqrt_limit": limit, "sqrt_limit_xi": xi0,
                    "sqrt_limit_ratio_final": table.rows[-1][1] / math.sqrt(table.rows[-1][0]) / limit})
    y = np.linspace(0.01, 6.0, 300)
    k = decay_constants()
    summary["phase_curvature"] = {"y0": k.y0, "c1": k.c1, "c2": k.c2}
    profile = Table("phase", ["y", "g_second"], [[a, b] for a, b in zip(y, g_second(y))])
    return [table, profile], summary


def run_dispersive_unit(c, jobs=1):
    from .dispersive import unit_speed_limit, zeta_R_along_ray
    run = _dispersive_run(c, "traveling_unit_speed")
    table, summary = _dispersive_common(c, run)
    limit = unit_speed_limit(run)
    rays = [[t, abs(zeta_R_along_ray(run, t)) / t ** (1 / 3)] for t in c["ray_times"]]
    summary.update({"ray_limit": limit, "ray_ratios": [[t, v / limit] for t, v in rays]})
    return [table, Table("ray", ["t", "ray_value"], rays)], summary


def validate_strip(c):
    from .strip import StripGrid2D
    for nx, nz in c["resolutions"]:
        if nx < 8:
            raise ConfigFileError(f"strip-validate.resolutions: n_x must be >= 8, got {nx}")
        StripGrid2D(Grid1D(0.0, 2 * math.pi, nx), nz)
    if not (0 <= c["epsilon"] < 0.5 and 0 <= c["beta"] < 0.5):
        raise ConfigFileError("strip-validate.epsilon/beta: amplitudes must lie in [0, 0.5)")


def adjointness_report(mu, epsilon, beta, n_pairs, seed, nx=128, nz=16) -> dict:
    """Random smooth (B, phi) pairs on a non-flat strip: adjoint mismatch, sign of <G_nd B, B>, coercivity."""
    from .strip import FEStrip, ShapeParams, StripGrid2D, apply_operators, build_diffeo
    g = Grid1D(0.0, 2 * math.pi, nx)
    zeta = g.sample(lambda x: np.cos(x) + 0.5 * np.sin(2 * x))
    b = g.sample(lambda x: np.sin(x) - 0.3 * np.cos(3 * x))
    fe = FEStrip(build_diffeo(zeta, b, ShapeParams(epsilon, beta, mu), StripGrid2D(g, nz)))
    rng = np.random.default_rng(seed)
    modes = np.arange(1, 9)

    def smooth():
        amp = rng.normal(size=8) / modes**2
        ph = rng.uniform(0, 2 * np.pi, 8)
        return Field1D(g, np.cos(np.outer(g.x, modes) + ph) @ amp)

    worst, nd_max = 0.0, -np.inf
    for _ in range(n_pairs):
        B, phi = smooth(), smooth()
        ops = apply_operators(fe, phi, B)
        gap = abs(ops["G_nn"].inner(phi) - B.inner(ops["G_dd"]))
        worst = max(worst, gap / (B.norm_l2() * phi.norm_l2()))
        nd_max = max(nd_max, ops["G_nd"].inner(B))
    return {"adjoint_mismatch": worst, "nd_form_max": float(nd_max), "coercivity": fe.k_min}


def run_strip(c, jobs=1):
    from .strip import flat_validation
    rep = flat_validation(lambda x: np.cos(x) + 0.5 * np.sin(2 * x),
                          lambda x: np.sin(x) + 0.3 * np.cos(3 * x), c["mu"], c["resolutions"])
    keys = ["G_dn", "G_nn", "G_dd", "G_nd"]
    rows = [[nx, nz, *(rep.errors[k][i] for k in keys)] for i, (nx, nz) in enumerate(rep.resolutions)]
    summary = {"orders": rep.orders,
               **adjointness_report(c["mu"], c["epsilon"], c["beta"], c["n_pairs"], c["seed"])}
    return [Table("errors", ["n_x", "n_z", *(f"err_{k}" for k in keys)], rows)], summary


EXPERIMENT_FUNCS: dict[str, tuple[Callable, Callable]] = {
    "proudman": (validate_proudman, run_proudman),
    "topo-resonance": (validate_topo, run_topo_resonance),
    "amplified-wave": (validate_amplified, run_amplified),
    "dispersive-resonant": (validate_dispersive, run_dispersive_resonant),
    "dispersive-unit-speed": (validate_dispersive, run_dispersive_unit),
    "strip-validate": (validate_strip, run_strip),
}


def run(config: cfgmod.ExperimentConfig, jobs: int = 1) -> RunResult:
    validate, body = EXPERIMENT_FUNCS[config.experiment]
    validate(config.values)
    start = time.perf_counter()
    tables, summary = body(config.values, jobs=jobs)
    return RunResult(config.echo(), tables, summary, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Output


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def _plain(obj):
    """Make nested summaries JSON-serialisable (numpy scalars, tuples, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def atomic_write(path: str, text: str):
    """Write via a temporary file in the same directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def schema_id(experiment: str, table: str) -> str:
    return f"{SCHEMA_PREFIX}/{experiment}/{table}/v1"


def render_csv(experiment: str, table: Table, config: dict) -> str:
    lines = [f"# schema: {schema_id(experiment, table.name)}; artifact {__version__}",
             "# config: " + json.dumps(_plain(config), sort_keys=True),
             ",".join(table.columns)]
    lines += [",".join(_num(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def render_json(experiment: str, result: RunResult) -> str:
    doc = {"schema": f"{SCHEMA_PREFIX}/{experiment}/v1", "artifact_version": __version__,
           "config": result.config, "summary": result.summary,
           "tables": {t.name: {"schema": schema_id(experiment, t.name), "columns": t.columns, "rows": t.rows}
                      for t in result.tables}}
    return json.dumps(_plain(doc), indent=1, sort_keys=True) + "\n"


def write_outputs(result: RunResult, out_dir: str, fmt: str) -> list:
    exp = result.config["experiment"]
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt == "json":
        path = os.path.join(out_dir, f"{exp}.json")
        atomic_write(path, render_json(exp, result))
        return [path]
    for t in result.tables:
        path = os.path.join(out_dir, f"{exp}.{t.name}.csv")
        atomic_write(path, render_csv(exp, t, result.config))
        written.append(path)
    manifest = {"schema": f"{SCHEMA_PREFIX}/{exp}/manifest/v1", "artifact_version": __version__,
                "config": result.config, "summary": result.summary,
                "files": [os.path.basename(p) for p in written]}
    path = os.path.join(out_dir, f"{exp}.manifest.json")
    atomic_write(path, json.dumps(_plain(manifest), indent=1, sort_keys=True) + "\n")
    return written + [path]


# ---------------------------------------------------------------------------
# Self-test


def self_test(report=print) -> bool:
    """A few fast end-to-end checks; True when all pass."""
    from .dispersive import (DispersiveRun, cubic_phase_integral, cubic_phase_integral_closed_form,
                             default_dt, evolve_spectral, gaussian_pressure)
    from .shallow import run_proudman_sweep, Gaussian
    from .spectral import dispersion, sech
    from .strip import flat_validation

    def proudman_slope():
        s = run_proudman_sweep([1.0], Gaussian(), 20.0, dt=0.01, dx=0.02, sample_dt=0.1)[0]
        return abs(fit_slope(s, (10.0, 20.0)).exponent / (0.5 * math.exp(-0.5)) - 1)

    def dispersive_energy():
        g = Grid1D.centered(32.0, 0.25)
        run = DispersiveRun(1.0, gaussian_pressure(g))
        init = (g.sample(lambda x: np.exp(-x * x)), g.sample(lambda x: x * np.exp(-x * x)))
        dt = default_dt(run)
        e = evolve_spectral(run, init, [0.0, 1000 * dt], dt, forced=False).energy
        return abs(e[1] - e[0]) / e[0]

    def strip_flat():
        rep = flat_validation(np.cos, np.sin, 1.0, ((32, 8), (64, 16)))
        return max(v[-1] for v in rep.errors.values())

    checks = [
        ("flat symbols", lambda: max(abs(float(sech(1.0)) - 0.6480542736638855),
                                     abs(float(dispersion(1.0, 1.0)) - math.sqrt(math.tanh(1.0))))),
        ("cubic phase integral", lambda: abs(cubic_phase_integral() - cubic_phase_integral_closed_form())),
        ("proudman slope (relative)", proudman_slope),
        ("spectral energy drift", dispersive_energy),
        ("strip vs flat multipliers", strip_flat),
    ]
    tolerances = [1e-12, 1e-10, 0.03, 1e-10, 5e-3]
    ok = True
    for (name, fn), tol in zip(checks, tolerances):
        try:
            v = fn()
            passed = v < tol
        except LabError as exc:
            v, passed = exc, False
        ok &= passed
        report(f"{'PASS' if passed else 'FAIL'}  {name}: {v} (tolerance {tol:g})")
    return ok


# ---------------------------------------------------------------------------
# Entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resonance-lab", description="Forced linear water-wave experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--self-test", action="store_true", help="run quick consistency checks and exit")
    sub = p.add_subparsers(dest="command")
    for name in cfgmod.EXPERIMENTS:
        sp = sub.add_parser(name, help=CATALOG[name][1])
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable; wins over --config)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--jobs", type=int, default=1, help="parallel sweep members")
        sp.add_argument("--quiet", action="store_true")
    lp = sub.add_parser("list", help="list experiments")
    lp.add_argument("--json", action="store_true", help="machine-readable catalog")
    return p


def _overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigFileError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.self_test:
        return EXIT_OK if self_test() else EXIT_SELFTEST
    if args.command is None:
        _parser().print_help()
        return EXIT_CONFIG
    if args.command == "list":
        entries = catalog()
        if args.json:
            print(json.dumps(entries, indent=1))
        else:
            for e in entries:
                print(f"{e['name']:<24}{e['figures']:<18}{e['description']}")
                print("    " + cfgmod.render_defaults(e["name"]).replace("\n", "\n    "))
        return EXIT_OK
    say = (lambda *a: None) if args.quiet else (lambda *a: print(*a, file=sys.stderr))
    try:
        if args.jobs < 1:
            raise ConfigFileError(f"--jobs must be >= 1, got {args.jobs}")
        cfg = cfgmod.load(args.command, args.config, _overrides(args.set))
        result = run(cfg, jobs=args.jobs)
        paths = write_outputs(result, args.out, args.format)
    except (ConfigFileError, ParameterError, BathymetryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, SolverError, DiffeoError, SingularSymbolError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    say(f"{args.command}: {result.wall_time:.2f} s")
    for p in paths:
        say(f"  wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
