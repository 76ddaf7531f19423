"""Scenario configuration: YAML files validated into plain dataclasses.

Schema (every section except ``space`` is optional)::

    name: hyperbolic-m2-cmc
    space:
      tau: hyperbolic            # euclidean | hyperbolic | spherical | custom-series
      coefficients: [0, 1, 0, 0.1]   # custom-series only: tau(t) = sum a_k t^k
      Psi: zero                  # zero | log-cosh | {series: [b0, 0, b2, ...]}
      m: 2
      t_max: 30.0
    fiber:
      dim: 1
      metric: flat               # flat | round-sphere (stereographic chart)
    graph:
      kind: cmc-radial           # cmc-radial (c, d) | affine (matrix, offset) | constant (value)
      c: 0.5
      d: 0.0
    probes:
      radii: [0.5, 1.0, 2.0]     # base points (t, angles) used for tensor identities
      angle: 0.7                 # every angular coordinate of a probe
      grid_size: 1024            # spectral grid
      fd_step: {first: 6.0e-6, second: 1.2e-4}
    spectral:
      radii: [1.0, 2.0, 5.0]     # balls for Cheeger scan and eigenvalues
      setti: {alpha: 0.0, delta: 0.0}
    outputs:
      directory: out
      formats: [json, csv]
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .geometry import DEFAULT_FD, FDSteps
from .radial import InvalidSpaceError, RadialSpace, psi_builtin

__all__ = [
    "ConfigError",
    "SpaceSpec",
    "FiberSpec",
    "GraphSpec",
    "ProbeSpec",
    "SpectralSpec",
    "OutputSpec",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "TAU_BUILTINS",
    "PSI_BUILTINS",
]

TAU_BUILTINS = ("euclidean", "hyperbolic", "spherical", "custom-series")
PSI_BUILTINS = ("zero", "log-cosh", "series")
GRAPH_KINDS = ("cmc-radial", "affine", "constant")
FIBER_METRICS = ("flat", "round-sphere")


class ConfigError(ValueError):
    """Bad configuration; ``where`` names the offending field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class SpaceSpec:
    tau: str
    m: int
    t_max: float
    coefficients: Optional[list] = None
    Psi: Any = "zero"

    def build(self) -> RadialSpace:
        if isinstance(self.Psi, dict):
            name, coeffs = "series", self.Psi["series"]
        else:
            name, coeffs = self.Psi, None
        P, Pp = psi_builtin(name, coeffs)
        label = self.tau if name == "zero" else f"{self.tau}+{name}"
        if self.tau == "euclidean":
            return RadialSpace.euclidean(self.m, self.t_max, P, Pp, label=label)
        if self.tau == "hyperbolic":
            return RadialSpace.hyperbolic(self.m, self.t_max, P, Pp, label=label)
        if self.tau == "spherical":
            return RadialSpace.spherical(self.m, self.t_max, P, Pp, label=label)
        return RadialSpace.custom_series(self.m, self.coefficients, self.t_max, P, Pp, label=label)


@dataclass
class FiberSpec:
    dim: int = 1
    metric: str = "flat"


@dataclass
class GraphSpec:
    kind: str = "constant"
    c: float = 0.0
    d: float = 0.0
    matrix: Optional[list] = None
    offset: Optional[list] = None
    value: Optional[list] = None


@dataclass
class ProbeSpec:
    radii: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    angle: float = 0.7
    grid_size: int = 1024
    fd_step: Optional[dict] = None

    def fd(self) -> FDSteps:
        if not self.fd_step:
            return DEFAULT_FD
        return FDSteps(first=float(self.fd_step.get("first", DEFAULT_FD.first)),
                       second=float(self.fd_step.get("second", DEFAULT_FD.second)))


@dataclass
class SpectralSpec:
    radii: list = field(default_factory=lambda: [1.0, 2.0, 5.0])
    setti: Optional[dict] = None


@dataclass
class OutputSpec:
    directory: Optional[str] = None
    formats: list = field(default_factory=lambda: ["json", "csv"])


@dataclass
class ScenarioConfig:
    name: str
    space: SpaceSpec
    fiber: FiberSpec
    graph: GraphSpec
    probes: ProbeSpec
    spectral: SpectralSpec
    outputs: OutputSpec
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def sha256(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _section(raw: dict, key: str, allowed: tuple) -> dict:
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be a mapping")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown field")
    return sec


def _num(where: str, value, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected {kind.__name__}, got {value!r}") from None
    if kind is int and out != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    return out


def _num_list(where: str, value) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(where, "expected a list of numbers")
    return [_num(f"{where}[{i}]", v) for i, v in enumerate(value)]


def parse_config(raw: dict) -> ScenarioConfig:
    """Validate a config mapping. Raises ``ConfigError`` naming the bad field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = set(raw) - {"name", "space", "fiber", "graph", "probes", "spectral", "outputs"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    raw = copy.deepcopy(raw)

    sp = _section(raw, "space", ("tau", "coefficients", "Psi", "m", "t_max"))
    if "tau" not in sp:
        raise ConfigError("space.tau", "missing")
    if sp["tau"] not in TAU_BUILTINS:
        raise ConfigError("space.tau", f"unknown builtin {sp['tau']!r}; choose from {TAU_BUILTINS}")
    if "m" not in sp:
        raise ConfigError("space.m", "missing")
    m = _num("space.m", sp["m"], int)
    default_tmax = {"euclidean": 10.0, "hyperbolic": 30.0, "spherical": 2.5, "custom-series": None}[sp["tau"]]
    if "t_max" not in sp and default_tmax is None:
        raise ConfigError("space.t_max", "required for custom-series")
    t_max = _num("space.t_max", sp.get("t_max", default_tmax))
    coeffs = None
    if sp["tau"] == "custom-series":
        if "coefficients" not in sp:
            raise ConfigError("space.coefficients", "required for custom-series")
        coeffs = _num_list("space.coefficients", sp["coefficients"])
    Psi = sp.get("Psi", "zero")
    if isinstance(Psi, dict):
        if set(Psi) != {"series"}:
            raise ConfigError("space.Psi", "coefficient form is {series: [b0, 0, b2, ...]}")
        Psi = {"series": _num_list("space.Psi.series", Psi["series"])}
    elif Psi not in ("zero", "log-cosh"):
        raise ConfigError("space.Psi", f"unknown builtin {Psi!r}; choose from {PSI_BUILTINS}")
    space = SpaceSpec(sp["tau"], m, t_max, coeffs, Psi)
    try:
        space.build().validate()
    except InvalidSpaceError as exc:
        raise ConfigError("space", str(exc)) from None

    fb = _section(raw, "fiber", ("dim", "metric"))
    fiber = FiberSpec(_num("fiber.dim", fb.get("dim", 1), int), fb.get("metric", "flat"))
    if fiber.dim < 1:
        raise ConfigError("fiber.dim", "must be >= 1")
    if fiber.metric not in FIBER_METRICS:
        raise ConfigError("fiber.metric", f"unknown metric {fiber.metric!r}; choose from {FIBER_METRICS}")

    gr = _section(raw, "graph", ("kind", "c", "d", "matrix", "offset", "value"))
    kind = gr.get("kind", "constant")
    if kind not in GRAPH_KINDS:
        raise ConfigError("graph.kind", f"unknown kind {kind!r}; choose from {GRAPH_KINDS}")
    graph = GraphSpec(kind, _num("graph.c", gr.get("c", 0.0)), _num("graph.d", gr.get("d", 0.0)))
    if kind == "cmc-radial":
        if fiber.dim != 1 or fiber.metric != "flat":
            raise ConfigError("fiber", "cmc-radial graphs need a flat one-dimensional fiber")
        if m not in (2, 3):
            raise ConfigError("space.m", "cmc-radial probes need m in (2, 3)")
    elif kind == "affine":
        if "matrix" not in gr:
            raise ConfigError("graph.matrix", "required for affine graphs")
        A = np.asarray(gr["matrix"], dtype=float)
        if A.shape != (fiber.dim, m):
            raise ConfigError("graph.matrix", f"shape {A.shape} should be ({fiber.dim}, {m})")
        graph.matrix = A.tolist()
        graph.offset = _num_list("graph.offset", gr.get("offset", [0.0] * fiber.dim))
        if len(graph.offset) != fiber.dim:
            raise ConfigError("graph.offset", f"needs {fiber.dim} entries")
    else:
        graph.value = _num_list("graph.value", gr.get("value", [0.0] * fiber.dim))
        if len(graph.value) != fiber.dim:
            raise ConfigError("graph.value", f"needs {fiber.dim} entries")
    if kind != "cmc-radial" and m not in (2, 3):
        raise ConfigError("space.m", "graph probes need m in (2, 3)")

    pr = _section(raw, "probes", ("radii", "angle", "grid_size", "fd_step"))
    probes = ProbeSpec()
    if "radii" in pr:
        probes.radii = _num_list("probes.radii", pr["radii"])
    probes.angle = _num("probes.angle", pr.get("angle", probes.angle))
    probes.grid_size = _num("probes.grid_size", pr.get("grid_size", probes.grid_size), int)
    if probes.grid_size < 64:
        raise ConfigError("probes.grid_size", "must be >= 64")
    if "fd_step" in pr:
        fs = pr["fd_step"]
        if not isinstance(fs, dict) or set(fs) - {"first", "second"}:
            raise ConfigError("probes.fd_step", "expected {first: x, second: y}")
        probes.fd_step = {k: _num(f"probes.fd_step.{k}", v) for k, v in fs.items()}
    for i, r in enumerate(probes.radii):
        if not 0.0 < r < t_max:
            raise ConfigError(f"probes.radii[{i}]", f"must lie in (0, {t_max})")

    sc = _section(raw, "spectral", ("radii", "setti"))
    spectral = SpectralSpec()
    if "radii" in sc:
        spectral.radii = _num_list("spectral.radii", sc["radii"])
    for i, r in enumerate(spectral.radii):
        if not 0.0 < r <= t_max:
            raise ConfigError(f"spectral.radii[{i}]", f"must lie in (0, {t_max}]")
    if sc.get("setti") is not None:
        st = sc["setti"]
        if not isinstance(st, dict) or set(st) != {"alpha", "delta"}:
            raise ConfigError("spectral.setti", "expected {alpha: a, delta: d}")
        a, d = _num("spectral.setti.alpha", st["alpha"]), _num("spectral.setti.delta", st["delta"])
        if not a >= d >= 0:
            raise ConfigError("spectral.setti", "need alpha >= delta >= 0")
        spectral.setti = {"alpha": a, "delta": d}

    out = _section(raw, "outputs", ("directory", "formats"))
    outputs = OutputSpec(out.get("directory"), list(out.get("formats", ["json", "csv"])))
    bad = set(outputs.formats) - {"json", "csv"}
    if bad:
        raise ConfigError("outputs.formats", f"unknown format {sorted(bad)[0]!r}")

    name = str(raw.get("name", f"{space.tau}-m{m}-{kind}"))
    return ScenarioConfig(name, space, fiber, graph, probes, spectral, outputs, raw)


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(where, f"YAML parse error: {getattr(exc, 'problem', exc)}") from None
    return parse_config(raw)
