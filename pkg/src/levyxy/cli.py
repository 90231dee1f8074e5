"""Command-line driver: ``levyxy {run,validate,couplings,collapse,verify} --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import FitError, FitWindow, collapse_fit, write_fit_report
from .config import SCHEMA_VERSION, ConfigError, Diagnostic, RunConfig, load_config, parse_config
from .coupling import (ConvergenceError, IonChainSpec, ResonanceError, build_ion_chain_matrix,
                       build_power_law, load_matrix_csv, save_matrix_csv)
from .fields import CorrelationField, read_field_csv, write_field_csv
from .hydro import (LevyParams, QuadratureError, StiffnessError, evolve_master_equation,
                    fourier_solution, golden_rule_rates)
from .quantum import (EvolutionEngine, KrylovConvergenceError, full_trace_correlation,
                      single_excitation_profile, typicality_trace)
from .sampling import MeasurementPlan, draw_ensemble, estimate_correlation, save_ensemble

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
NUMERICAL_ERRORS = (KrylovConvergenceError, StiffnessError, QuadratureError, FitError,
                    ConvergenceError, ResonanceError, FloatingPointError,
                    np.linalg.LinAlgError)
MANIFEST = "manifest.json"


def build_coupling(cfg: RunConfig):
    src = cfg["coupling.source"]
    if src == "power-law":
        if cfg.get("coupling.L") is None or cfg.get("coupling.alpha") is None:
            raise ConfigError([Diagnostic(cfg.source, None, "coupling.L",
                                          "power-law couplings need coupling.L and coupling.alpha")])
        return build_power_law(cfg["coupling.L"], cfg["coupling.J"], cfg["coupling.alpha"])
    if src == "file":
        return load_matrix_csv(cfg["coupling.path"])
    spec = IonChainSpec(
        ion_count=cfg["ion.count"],
        axial_frequency=cfg["ion.axial_frequency"],
        radial_frequencies=tuple(cfg["ion.radial_frequencies"]),
        rabi_frequencies=cfg["ion.rabi_frequency"],
        beatnote_detuning_from_com=cfg["ion.detuning"],
        lamb_dicke_scale=cfg["ion.lamb_dicke_scale"],
    )
    return build_ion_chain_matrix(spec)


def _engine(cfg):
    return EvolutionEngine(cfg["engine.method"], cfg["engine.krylov_dim"],
                           cfg["engine.step_tolerance"], cfg["engine.dense_cap"])


def _run_quantum(cfg, out, seed, workers):
    J = build_coupling(cfg)
    L = J.size
    times = cfg.times
    center = cfg.get("quantum.center")
    est = cfg["quantum.estimator"]
    written = []
    if est == "full-trace":
        field = full_trace_correlation(J, L, times, center=center)
    elif est == "typicality":
        field = typicality_trace(J, L, times, center=center, R=cfg["quantum.R"], seed=seed,
                                 engine=_engine(cfg))
    else:
        sector = "any" if cfg["ensemble.sector"] == "any" else None
        ens = draw_ensemble(L, cfg["ensemble.M"], center=center, seed=seed,
                            remainder_magnetization=sector)
        save_ensemble(ens, out / "ensemble.txt")
        written.append("ensemble.txt")
        plan = MeasurementPlan(len(ens), cfg.N_m, seed=seed)
        field = estimate_correlation(ens, _engine(cfg), J, times, plan,
                                     bias_cancel=cfg["ensemble.bias_cancel"],
                                     prep_error=cfg["ensemble.prep_error"], workers=workers)
    write_field_csv(field, out / "correlation.csv")
    return written + ["correlation.csv"]


def _run_single(cfg, out):
    J = build_coupling(cfg)
    source = cfg.get("single.source")
    source = J.size // 2 if source is None else source
    times = cfg.times
    P = single_excitation_profile(J, source, times)
    write_field_csv(CorrelationField(times, np.arange(J.size), P, center=source),
                    out / "single_excitation.csv")
    return ["single_excitation.csv"]


def _run_hydro(cfg, out):
    alpha = cfg.get("hydro.alpha") or cfg.get("coupling.alpha")
    params = LevyParams(alpha, cfg["hydro.lambda"])
    times = cfg.times
    hw = cfg["hydro.half_width"]
    if cfg["hydro.solver"] == "master":
        L = cfg["hydro.L"]
        c = L // 2
        f0 = np.zeros(L)
        f0[c] = 1.0
        f = evolve_master_equation(golden_rule_rates(params, L), f0, times)
        lo, hi = max(c - hw, 0), min(c + hw, L - 1)
        field = CorrelationField(times, np.arange(lo, hi + 1), f[:, lo:hi + 1], center=c)
    else:
        j = np.arange(-hw, hw + 1)
        f = fourier_solution(params, j, times, dispersion=cfg["hydro.dispersion"],
                             D=cfg.get("hydro.D"))
        field = CorrelationField(times, j + hw, f, center=hw)
    write_field_csv(field, out / "profile.csv")
    return ["profile.csv"]


def _run_analysis(cfg, out, input_path=None):
    path = Path(input_path or cfg["analysis.input"])
    if not path.is_absolute() and not path.exists():
        path = Path(cfg.source).parent / path
    field = read_field_csv(path)
    alpha = cfg.get("analysis.alpha") or cfg.get("coupling.alpha")
    Jscale = cfg.get("analysis.J")
    t_min = cfg.get("analysis.t_min")
    if t_min is None:
        t_min = 5.0 / (Jscale or 1.0)
    window = FitWindow(t_min=t_min, t_max=cfg.get("analysis.t_max") or float("inf"),
                       edge_exclude=cfg["analysis.edge_exclude"])
    fit = collapse_fit(field, alpha, window, beta_fixed=cfg["analysis.beta_fixed"], J=Jscale,
                       alpha_sigma=cfg.get("analysis.alpha_sigma"))
    write_fit_report(fit, out / "fit_report.json")
    return ["fit_report.json"]


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_manifest(out: Path, cfg: RunConfig, files, seed, workers, elapsed, started):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "levyxy",
        "version": __version__,
        "command": cfg.mode,
        "config": cfg.echo(),
        "seed": seed,
        "workers": workers,
        "started_utc": started,
        "wall_clock_s": round(elapsed, 3),
        "files": {name: sha256(out / name) for name in files},
    }
    _atomic_write(out / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def verify_manifest(out) -> list[str]:
    """Names of files whose hash no longer matches (or that are missing)."""
    out = Path(out)
    manifest = json.loads((out / MANIFEST).read_text())
    bad = []
    for name, digest in manifest["files"].items():
        p = out / name
        if not p.exists() or sha256(p) != digest:
            bad.append(name)
    return bad


def _execute(cfg: RunConfig, out: Path, seed: int, workers: int, what: str, input_path=None):
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    if what == "couplings":
        save_matrix_csv(build_coupling(cfg), out / "couplings.csv")
        files = ["couplings.csv"]
    elif what == "collapse" or cfg.mode == "analyze":
        files = _run_analysis(cfg, out, input_path)
    elif cfg.mode == "quantum":
        files = _run_quantum(cfg, out, seed, workers)
    elif cfg.mode == "single-excitation":
        files = _run_single(cfg, out)
    else:
        files = _run_hydro(cfg, out)
    write_manifest(out, cfg, files, seed, workers, time.perf_counter() - t0, started)
    for name in files:
        print(out / name)
    return files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levyxy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the configured simulation or analysis"),
                        ("validate", "check a config file without running it"),
                        ("couplings", "write the coupling matrix only"),
                        ("collapse", "fit the scaling collapse to an existing CSV"),
                        ("verify", "check output files against their manifest")):
        p = sub.add_parser(name, help=help_)
        if name == "verify":
            p.add_argument("--out", required=True, help="output directory holding manifest.json")
            continue
        p.add_argument("--config", required=True, help="TOML config file")
        if name == "validate":
            continue
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        if name in ("run", "collapse"):
            p.add_argument("--seed", type=int, default=None, help="overrides ensemble.seed")
            p.add_argument("--workers", type=int, default=1)
        if name == "collapse":
            p.add_argument("--input", default=None, help="CSV to fit (overrides analysis.input)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            bad = verify_manifest(args.out)
            for name in bad:
                print(f"hash mismatch: {name}", file=sys.stderr)
            return EXIT_OK if not bad else EXIT_IO
        if args.command == "validate":
            text = Path(args.config).read_text()
            _, diags = parse_config(text, args.config)
            for d in diags:
                print(d, file=sys.stderr)
            if not diags:
                print(f"{args.config}: ok")
            return EXIT_CONFIG if diags else EXIT_OK
        cfg = load_config(args.config)
        if args.command == "collapse" and cfg.get("analysis.alpha") is None \
                and cfg.get("coupling.alpha") is None:
            raise ConfigError([Diagnostic(args.config, None, "analysis.alpha",
                                          "required for a collapse fit")])
        seed = getattr(args, "seed", None)
        seed = cfg["ensemble.seed"] if seed is None else seed
        workers = getattr(args, "workers", 1)
        if workers < 1:
            raise ConfigError([Diagnostic(args.config, None, None, "--workers must be >= 1")])
        out = Path(args.out or cfg["output.dir"])
        _execute(cfg, out, seed, workers, args.command, getattr(args, "input", None))
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # invalid values that only show up once the model is built
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
