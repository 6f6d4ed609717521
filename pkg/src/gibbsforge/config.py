"""Experiment configuration: INI-style sections with key = value lines.

Example::

    [map]
    name = pitchfork_doubling
    params = 0.8, 0.05

    [potential]
    name = zero

    [experiment]
    kind = equilibrium
    grid_n = 1024
    gamma = 0.5
    seed = 0
    output_dir = out
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigParseError

EXPERIMENTS = ("analyze", "equilibrium", "gibbs", "hyptimes", "stat-sweep", "stoch-sweep")
AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    map_name: str
    map_params: tuple = ()
    potential_name: str = "zero"
    potential_params: tuple = ()
    experiment: str = "analyze"
    grid_n: int = 1024
    sigma: Optional[float] = None
    gamma: float = 0.9
    c: Optional[float] = None
    delta: Optional[float] = None
    seed: int = 0
    output_dir: str = "out"
    sweep: tuple = ()
    sweep_base: Optional[float] = None
    samples: Optional[int] = None
    n_max: Optional[int] = None
    noise: str = "nu"
    scheme: str = "cell"


def _line_of(text, section, key):
    """1-based line number of ``key`` inside ``[section]``, or of the section header."""
    current = None
    header_line = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            current = m.group(1).strip()
            if current == section:
                header_line = i
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", line):
            return i
    return header_line


def _floats(text, raw, section, key):
    s = raw.strip()
    if not s:
        return ()
    out = []
    for part in s.split(","):
        try:
            out.append(float(part.strip()))
        except ValueError:
            raise ConfigParseError(f"not a decimal number: {part.strip()!r}",
                                   _line_of(text, section, key), f"{section}.{key}") from None
    return tuple(out)


def _scalar(text, sec, section, key, cast, default, allow_auto=False):
    if key not in sec:
        return default
    raw = sec[key].strip()
    if allow_auto and raw.lower() == AUTO:
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigParseError(f"invalid value {raw!r}", _line_of(text, section, key),
                               f"{section}.{key}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigParseError(str(exc).splitlines()[0], line) from None

    for required in ("map", "experiment"):
        if not cp.has_section(required):
            raise ConfigParseError(f"missing section [{required}]")
    m = cp["map"]
    if "name" not in m:
        raise ConfigParseError("missing map name", _line_of(text, "map", None), "map.name")
    pot = cp["potential"] if cp.has_section("potential") else {}
    ex = cp["experiment"]

    kind = ex.get("kind", "analyze").strip()
    if kind not in EXPERIMENTS:
        raise ConfigParseError(f"unknown experiment {kind!r}; expected one of {', '.join(EXPERIMENTS)}",
                               _line_of(text, "experiment", "kind"), "experiment.kind")
    grid_n = _scalar(text, ex, "experiment", "grid_n", int, 1024)
    if grid_n < 8:
        raise ConfigParseError("grid_n must be >= 8", _line_of(text, "experiment", "grid_n"),
                               "experiment.grid_n")
    gamma = _scalar(text, ex, "experiment", "gamma", float, 0.9)
    if not 0.0 < gamma < 1.0:
        raise ConfigParseError("gamma must lie in (0, 1)", _line_of(text, "experiment", "gamma"),
                               "experiment.gamma")
    noise = ex.get("noise", "nu").strip()
    if noise not in ("nu", "lebesgue"):
        raise ConfigParseError("noise must be 'nu' or 'lebesgue'", _line_of(text, "experiment", "noise"),
                               "experiment.noise")
    scheme = ex.get("scheme", "cell").strip()
    if scheme not in ("cell", "midpoint"):
        raise ConfigParseError("scheme must be 'cell' or 'midpoint'",
                               _line_of(text, "experiment", "scheme"), "experiment.scheme")
    sweep = _floats(text, ex.get("sweep", ""), "experiment", "sweep")
    if kind in ("stat-sweep", "stoch-sweep") and not sweep:
        raise ConfigParseError(f"experiment {kind} needs a sweep list",
                               _line_of(text, "experiment", "kind"), "experiment.sweep")
    return ExperimentConfig(
        map_name=m["name"].strip(),
        map_params=_floats(text, m.get("params", ""), "map", "params"),
        potential_name=pot.get("name", "zero").strip() if pot else "zero",
        potential_params=_floats(text, pot.get("params", ""), "potential", "params") if pot else (),
        experiment=kind,
        grid_n=grid_n,
        sigma=_scalar(text, ex, "experiment", "sigma", float, None, allow_auto=True),
        gamma=gamma,
        c=_scalar(text, ex, "experiment", "c", float, None, allow_auto=True),
        delta=_scalar(text, ex, "experiment", "delta", float, None, allow_auto=True),
        seed=_scalar(text, ex, "experiment", "seed", int, 0),
        output_dir=ex.get("output_dir", "out").strip(),
        sweep=sweep,
        sweep_base=_scalar(text, ex, "experiment", "sweep_base", float, None, allow_auto=True),
        samples=_scalar(text, ex, "experiment", "samples", int, None, allow_auto=True),
        n_max=_scalar(text, ex, "experiment", "n_max", int, None, allow_auto=True),
        noise=noise,
        scheme=scheme,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from None
    return parse_config(text)
