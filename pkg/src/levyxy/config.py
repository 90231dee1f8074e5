"""Flat run configuration: TOML with dotted keys, validated before anything runs.

Example::

    schema_version = 1
    mode = "quantum"
    coupling.source = "power-law"
    coupling.L = 12
    coupling.J = 1.0
    coupling.alpha = 1.0
    times = "linspace(0, 5, 21)"
    ensemble.M = 240
    ensemble.N_m = "inf"
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np
import tomli

SCHEMA_VERSION = 1
MODES = ("quantum", "hydro", "single-excitation", "analyze")

# key -> (type, default); None default means required where the mode needs it
SCHEMA = {
    "schema_version": (int, None),
    "mode": (str, None),
    "times": ((str, list), None),
    "output.dir": (str, "out"),
    "coupling.source": (str, "power-law"),
    "coupling.L": (int, None),
    "coupling.J": (float, 1.0),
    "coupling.alpha": (float, None),
    "coupling.path": (str, None),
    "ion.count": (int, 25),
    "ion.axial_frequency": (float, 126.3e3),
    "ion.radial_frequencies": (list, [2.93e6, 2.898e6]),
    "ion.rabi_frequency": ((float, list), 2 * math.pi * 100e3),
    "ion.detuning": (float, 40e3),
    "ion.lamb_dicke_scale": (float, 0.05),
    "quantum.estimator": (str, "sampling"),
    "quantum.center": (int, None),
    "quantum.R": (int, 10),
    "ensemble.M": (int, 240),
    "ensemble.N_m": ((int, str), 100),
    "ensemble.seed": (int, 0),
    "ensemble.sector": (str, "balanced"),
    "ensemble.bias_cancel": (bool, False),
    "ensemble.prep_error": (float, 0.0),
    "engine.method": (str, "krylov"),
    "engine.krylov_dim": (int, 30),
    "engine.step_tolerance": (float, 1e-10),
    "engine.dense_cap": (int, 20_000),
    "hydro.lambda": (float, None),
    "hydro.alpha": (float, None),
    "hydro.solver": (str, "fourier"),
    "hydro.dispersion": (str, "lattice"),
    "hydro.L": (int, 2001),
    "hydro.half_width": (int, 100),
    "hydro.D": (float, None),
    "single.source": (int, None),
    "analysis.input": (str, None),
    "analysis.alpha": (float, None),
    "analysis.J": (float, None),
    "analysis.t_min": (float, None),
    "analysis.t_max": (float, None),
    "analysis.edge_exclude": (int, 2),
    "analysis.beta_fixed": (bool, True),
    "analysis.alpha_sigma": (float, None),
}

TIME_SPEC = re.compile(r"^\s*(linspace|geomspace)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)\s*$")


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    source: str
    line: int | None
    key: str | None
    message: str

    def __str__(self):
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        return f"{where}: {self.key}: {self.message}" if self.key else f"{where}: {self.message}"


def _flatten(table, prefix=""):
    out = {}
    for k, v in table.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text, key):
    # dotted key on one line first, then the bare name under a [table] header
    last = key.rpartition(".")[2]
    for pattern in (re.escape(key), re.escape(last)):
        pat = re.compile(rf"^\s*{pattern}\s*=")
        for n, line in enumerate(text.splitlines(), start=1):
            if pat.match(line):
                return n
    return None


def parse_times(spec) -> np.ndarray:
    """``"linspace(a, b, n)"``, ``"geomspace(a, b, n)"`` or a list of numbers."""
    if isinstance(spec, str):
        m = TIME_SPEC.match(spec)
        if not m:
            raise ValueError(f"cannot parse times {spec!r}; expected linspace(a, b, n), "
                             "geomspace(a, b, n) or a list")
        fn, a, b, n = m.groups()
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise ValueError("times need at least one point")
        return (np.linspace if fn == "linspace" else np.geomspace)(a, b, n)
    t = np.asarray(spec, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty list")
    return t


@dataclass
class RunConfig:
    values: dict
    source: str = "<config>"

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def mode(self) -> str:
        return self.values["mode"]

    @property
    def times(self) -> np.ndarray:
        return parse_times(self.values["times"])

    @property
    def N_m(self) -> int | None:
        v = self.values["ensemble.N_m"]
        return None if isinstance(v, str) and v.lower() in ("inf", "none", "exact") else int(v)

    def echo(self) -> dict:
        return dict(sorted(self.values.items()))


def _check_type(key, value, typ):
    if typ is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if typ is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(typ, tuple):
        return any(_check_type(key, value, t) for t in typ)
    return isinstance(value, typ)


def _validate(values, text, source):
    diags = []

    def err(key, msg):
        diags.append(Diagnostic(source, _line_of(text, key) if key else None, key, msg))

    for key, v in values.items():
        if key not in SCHEMA:
            err(key, "unknown key")
            continue
        typ = SCHEMA[key][0]
        if not _check_type(key, v, typ):
            names = typ.__name__ if isinstance(typ, type) else "/".join(t.__name__ for t in typ)
            err(key, f"expected {names}, got {type(v).__name__}")
    if diags:
        return diags
    if values.get("schema_version") != SCHEMA_VERSION:
        err("schema_version", f"must be {SCHEMA_VERSION}")
    mode = values.get("mode")
    if mode not in MODES:
        err("mode", f"must be one of {', '.join(MODES)}")
        return diags
    for key, (_, default) in SCHEMA.items():
        if default is not None:
            values.setdefault(key, default)

    def need(key, why):
        if values.get(key) is None:
            err(key, f"required in {why}")
            return False
        return True

    def positive(key):
        if values.get(key) is not None and not values[key] > 0:
            err(key, "must be positive")

    if mode != "analyze":
        if need("times", f"{mode} mode"):
            try:
                t = parse_times(values["times"])
                if np.any(t < 0):
                    err("times", "times must be non-negative")
                if mode == "hydro" and np.any(t <= 0):
                    err("times", "hydro profiles need t > 0")
            except ValueError as exc:
                err("times", str(exc))
    if mode in ("quantum", "single-excitation"):
        src = values["coupling.source"]
        if src == "power-law":
            if need("coupling.L", "a power-law coupling") and values["coupling.L"] < 2:
                err("coupling.L", "must be at least 2")
            need("coupling.alpha", "a power-law coupling")
            positive("coupling.alpha")
            positive("coupling.J")
        elif src == "file":
            need("coupling.path", "a coupling read from file")
        elif src != "ion-chain":
            err("coupling.source", "must be power-law, ion-chain or file")
    if mode == "quantum":
        _validate_quantum(values, err)
    if mode == "hydro":
        need("hydro.lambda", "hydro mode")
        positive("hydro.lambda")
        if values.get("hydro.alpha") is None and values.get("coupling.alpha") is None:
            err("hydro.alpha", "required in hydro mode (or set coupling.alpha)")
        if values["hydro.solver"] not in ("fourier", "master"):
            err("hydro.solver", "must be fourier or master")
        if values["hydro.dispersion"] not in ("lattice", "continuum", "scaling"):
            err("hydro.dispersion", "must be lattice, continuum or scaling")
        if values["hydro.L"] < 2:
            err("hydro.L", "must be at least 2")
        if values["hydro.half_width"] < 0:
            err("hydro.half_width", "must be non-negative")
    if mode == "analyze":
        need("analysis.input", "analyze mode")
        if values.get("analysis.alpha") is None and values.get("coupling.alpha") is None:
            err("analysis.alpha", "required in analyze mode (or set coupling.alpha)")
    return diags


def _validate_quantum(values, err):
    est = values["quantum.estimator"]
    if est not in ("sampling", "full-trace", "typicality"):
        err("quantum.estimator", "must be sampling, full-trace or typicality")
    method = values["engine.method"]
    if method not in ("dense-eigen", "krylov"):
        err("engine.method", "must be dense-eigen or krylov")
    if values["engine.krylov_dim"] < 2:
        err("engine.krylov_dim", "must be at least 2")
    if not values["engine.step_tolerance"] > 0:
        err("engine.step_tolerance", "must be positive")
    L = values.get("coupling.L") if values["coupling.source"] == "power-law" else None
    if values["coupling.source"] == "ion-chain":
        L = values["ion.count"]
    if L is not None and L >= 2 and method == "dense-eigen":
        largest = comb(L, L // 2)
        if largest > values["engine.dense_cap"]:
            err("engine.method", f"dense-eigen needs sector dimension {largest} for L={L}, "
                                 f"above the cap {values['engine.dense_cap']}")
    if L is not None and est == "full-trace" and L > 14:
        err("quantum.estimator", f"full-trace is limited to L <= 14, got L={L}")
    M = values["ensemble.M"]
    if est == "sampling" and (M < 2 or M % 2):
        err("ensemble.M", "must be a positive even number")
    nm = values["ensemble.N_m"]
    if isinstance(nm, str):
        if nm.lower() not in ("inf", "none", "exact"):
            err("ensemble.N_m", "must be a positive integer or \"inf\"")
    elif nm < 1:
        err("ensemble.N_m", "must be at least 1")
    if values["ensemble.sector"] not in ("balanced", "any"):
        err("ensemble.sector", "must be balanced or any")
    if not 0 <= values["ensemble.prep_error"] < 1:
        err("ensemble.prep_error", "must lie in [0, 1)")
    if values["quantum.R"] < 1:
        err("quantum.R", "must be at least 1")


def parse_config(text: str, source: str = "<config>") -> tuple[RunConfig | None, list[Diagnostic]]:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        return None, [Diagnostic(source, int(m.group(1)) if m else None, None,
                                 f"parse error: {exc}")]
    values = _flatten(raw)
    diags = _validate(values, text, source)
    return (None if diags else RunConfig(values, source)), diags


def load_config(path) -> RunConfig:
    """Read and validate; raises :class:`ConfigError` with all diagnostics."""
    path = Path(path)
    cfg, diags = parse_config(path.read_text(), str(path))
    if diags:
        raise ConfigError(diags)
    return cfg
