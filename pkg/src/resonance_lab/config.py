"""Flat ``key = value`` experiment configuration with typed validation.

Lines are ``key = value``; ``#`` starts a comment.  Every experiment has its
own schema; unknown keys are rejected by name, and every value is parsed with
the declared type before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .errors import ConfigFileError


def _float_list(text: str) -> tuple:
    items = [s for s in text.replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


def _resolutions(text: str) -> tuple:
    out = []
    for item in text.split(","):
        nx, nz = item.strip().lower().split("x")
        out.append((int(nx), int(nz)))
    return tuple(out)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.__name__ = "|".join(options)
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    help: str
    positive: bool = False


def _k(parse, default, help, positive=False):
    return Key(parse, default, help, positive)


SCHEMAS: dict[str, dict[str, Key]] = {
    "proudman": {
        "speeds": _k(_float_list, (0.5, 0.8, 0.9, 1.0, 1.1, 1.5, 2.0), "disturbance speeds U, comma separated"),
        "amplitude": _k(float, 1.0, "Gaussian amplitude of f0"),
        "width": _k(float, 1.0, "Gaussian width of f0", True),
        "dx": _k(float, 0.01, "grid spacing", True),
        "dt": _k(float, 0.005, "time step", True),
        "t_end": _k(float, 40.0, "final time", True),
        "sample_dt": _k(float, 0.1, "sampling interval of sup|h_R|", True),
        "fit_t1": _k(float, 10.0, "fit window start"),
        "fit_t2": _k(float, 40.0, "fit window end"),
    },
    "topo-resonance": {
        "beta": _k(float, 0.5, "bottom amplitude in b0 = -tanh(X)", True),
        "entry": _k(_choice("rate", "velocity"), "rate", "landslide entry: rate of zeta3 or velocity field"),
        "dx": _k(float, 0.02, "grid spacing", True),
        "dt": _k(float, 0.01, "time step", True),
        "t_end": _k(float, 40.0, "final time", True),
        "sample_dt": _k(float, 0.5, "sampling interval", True),
        "fit_t1": _k(float, 10.0, "fit window start"),
        "fit_t2": _k(float, 40.0, "fit window end"),
    },
    "amplified-wave": {
        "beta": _k(float, 0.5, "bottom amplitude in b0 = -tanh(X)", True),
        "amplitude": _k(float, 1.0, "incident pulse amplitude"),
        "center": _k(float, -20.0, "incident pulse centre"),
        "width": _k(float, 1.0, "incident pulse width", True),
        "landslide": _k(_choice("on", "off"), "on", "superpose the constructed landslide forcing"),
        "dx": _k(float, 0.02, "grid spacing", True),
        "dt": _k(float, 0.01, "time step", True),
        "t_end": _k(float, 40.0, "final time", True),
        "sample_dt": _k(float, 0.5, "sampling interval", True),
    },
    "dispersive-resonant": {
        "mu": _k(float, 1.0, "shallowness parameter", True),
        "amplitude": _k(float, -1.0, "P0 = amplitude * exp(-X^2)"),
        "n": _k(int, 16384, "number of Fourier modes", True),
        "half_width": _k(float, 512.0, "periodic box is [-half_width, half_width)", True),
        "t_start": _k(float, 50.0, "first sample time", True),
        "t_end": _k(float, 500.0, "last sample time", True),
        "n_samples": _k(int, 41, "geometrically spaced samples", True),
    },
    "dispersive-unit-speed": {
        "mu": _k(float, 1.0, "shallowness parameter", True),
        "amplitude": _k(float, -1.0, "P0 = amplitude * exp(-X^2)"),
        "n": _k(int, 16384, "number of Fourier modes", True),
        "half_width": _k(float, 512.0, "periodic box is [-half_width, half_width)", True),
        "t_start": _k(float, 50.0, "first sample time", True),
        "t_end": _k(float, 500.0, "last sample time", True),
        "n_samples": _k(int, 41, "geometrically spaced samples", True),
        "ray_times": _k(_float_list, (500.0, 2000.0, 20000.0), "times for the along-ray limit"),
    },
    "strip-validate": {
        "mu": _k(float, 1.0, "shallowness parameter", True),
        "resolutions": _k(_resolutions, ((128, 16), (256, 32), (512, 64)), "n_x x n_z list, e.g. 128x16,256x32"),
        "epsilon": _k(float, 0.05, "surface amplitude for the adjointness check"),
        "beta": _k(float, 0.05, "bottom amplitude for the adjointness check"),
        "n_pairs": _k(int, 20, "random (B, phi) pairs", True),
        "seed": _k(int, 0, "RNG seed for the random pairs"),
    },
}

EXPERIMENTS = tuple(SCHEMAS)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    values: Mapping[str, Any]

    def __getitem__(self, key):
        return self.values[key]

    def echo(self) -> dict:
        """Resolved configuration (defaults included) with JSON-friendly values."""
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v
        return {"experiment": self.experiment, **{k: plain(v) for k, v in sorted(self.values.items())}}


def parse_text(text: str, source: str = "<config>") -> dict:
    """Split ``key = value`` lines into raw strings; later duplicates are errors."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigFileError(f"{source}:{lineno}: empty key")
        if key in raw:
            raise ConfigFileError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def resolve(experiment: str, raw: Mapping[str, str], overrides: Mapping[str, str] = ()) -> ExperimentConfig:
    """Typed configuration from file values and command-line overrides (overrides win)."""
    if experiment not in SCHEMAS:
        raise ConfigFileError(f"unknown experiment {experiment!r}")
    schema = SCHEMAS[experiment]
    merged = {**dict(raw), **dict(overrides)}
    named = merged.pop("experiment", experiment)
    if named != experiment:
        raise ConfigFileError(f"config is for experiment {named!r}, not {experiment!r}")
    values = {}
    for key in merged:
        if key not in schema:
            raise ConfigFileError(f"{experiment}.{key}: unknown key (known: {', '.join(sorted(schema))})")
    for key, entry in schema.items():
        if key not in merged:
            values[key] = entry.default
            continue
        try:
            v = entry.parse(merged[key])
        except ValueError as exc:
            raise ConfigFileError(f"{experiment}.{key}: cannot parse {merged[key]!r} ({exc})") from None
        if entry.positive and not v > 0:
            raise ConfigFileError(f"{experiment}.{key}: must be positive, got {v}")
        values[key] = v
    return ExperimentConfig(experiment, values)


def load(experiment: str, path=None, overrides: Mapping[str, str] = ()) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = parse_text(fh.read(), str(path))
        except OSError as exc:
            raise ConfigFileError(f"cannot read config {path}: {exc}") from None
    return resolve(experiment, raw, overrides)


def render_defaults(experiment: str) -> str:
    """Default configuration as config-file text."""
    lines = []
    for key, entry in SCHEMAS[experiment].items():
        v = entry.default
        if isinstance(v, tuple) and v and isinstance(v[0], tuple):
            text = ",".join(f"{a}x{b}" for a, b in v)
        elif isinstance(v, tuple):
            text = ",".join(repr(x) for x in v)
        else:
            text = str(v)
        lines.append(f"{key} = {text}  # {entry.help}")
    return "\n".join(lines)
