"""Command line driver for the built-in benchmark problems.

Four subcommands, all driven by a sectioned key=value config file:

  forward   build a problem, add noise, export the instance directory
  solve     reconstruct with one of the four methods, export results
  sweep     repeat solve over a list of noise levels, export sweep.csv
  probe     run ill-posedness probes, export their tables

Unknown sections or keys are rejected.  Identical config + seed produce a
byte-identical output tree: every file is written atomically, CSV floats use
%.17g, key=value files use repr, and nothing records wall time or timestamps.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .bochner import BochnerFunction, TimeGrid, _atomic_write_text, bochner_norm, write_csv
from .diagnostics import (
    integrability_tail,
    stacked_spectrum,
    temporal_spectrum,
    translation_modulus,
)
from .errors import (
    ConfigError,
    DimensionError,
    DynregError,
    InvalidInputError,
    InvalidParameterError,
)
from .operators import apply_forward, load_kernel_csv, load_pattern_csv
from .problems import (
    BUILTIN_PROBLEMS,
    NoiseSpec,
    ProblemInstance,
    add_noise,
    export_instance,
    make_dct_analogue,
    make_identity_problem,
    make_mpi_analogue,
    make_nonuniform_example,
)
from .solvers import (
    KaczmarzConfig,
    ParameterRule,
    SolveReport,
    TikhonovConfig,
    kaczmarz_multi_direction,
    landweber_kaczmarz,
    tikhonov_temporal,
    tikhonov_uniform,
    time_subproblems,
)
from .svgplot import line_plot

_METHODS = ("tikhonov_temporal", "tikhonov_uniform", "landweber_kaczmarz", "kaczmarz_multi")
_PROBES = ("temporal_spectrum", "stacked_spectrum", "integrability", "translation")
_POINTWISE_KINDS = ("dct", "nonuniform", "identity")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, flattened view of one config file."""

    # [problem]
    kind: str
    n_t: int = 32
    n_x: int = 32
    horizon: float = 1.0
    sigma: float = 0.1
    window: int | None = None
    decay: float = 1.0
    pattern_csv: str | None = None
    kernel_csv: str | None = None
    # [noise]
    delta: float = 0.01
    seed: int = 0
    fraction: float = 0.99
    # [solver]
    method: str = "tikhonov_uniform"
    alpha: float | None = None
    rule_scale: float = 1.0
    rule_exponent: float = 1.0
    tol: float = 1e-10
    max_iter: int = 5000
    tau: float = 2.0
    omega: float | str = "auto"
    max_sweeps: int = 500
    memory: int = 3
    sections: int | None = None
    # [probe]
    probes: tuple[str, ...] = _PROBES
    time_index: int = 0
    radii: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    tail_exponent: float = 1.0
    shift_steps: tuple[int, ...] = (1, 2, 4)
    ensemble: int = 8
    # [sweep]
    deltas: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    # [output]
    out_dir: str = "out"


def _parse_positive_float(raw: str) -> float:
    v = float(raw)
    if not math.isfinite(v) or v <= 0.0:
        raise ValueError(f"must be a positive real, got {raw}")
    return v


def _parse_positive_int(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise ValueError(f"must be a positive integer, got {raw}")
    return v


def _parse_omega(raw: str):
    return raw if raw == "auto" else _parse_positive_float(raw)


def _parse_list(raw: str, item):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(item(p) for p in parts)


_SCHEMA: dict[str, dict[str, object]] = {
    "problem": {
        "kind": lambda raw: raw,
        "n_t": _parse_positive_int,
        "n_x": _parse_positive_int,
        "T": _parse_positive_float,
        "sigma": _parse_positive_float,
        "window": _parse_positive_int,
        "decay": lambda raw: float(raw),
        "pattern_csv": lambda raw: raw,
        "kernel_csv": lambda raw: raw,
    },
    "noise": {
        "delta": _parse_positive_float,
        "seed": lambda raw: int(raw),
        "fraction": _parse_positive_float,
    },
    "solver": {
        "method": lambda raw: raw,
        "alpha": _parse_positive_float,
        "rule_scale": _parse_positive_float,
        "rule_exponent": _parse_positive_float,
        "tol": _parse_positive_float,
        "max_iter": _parse_positive_int,
        "tau": _parse_positive_float,
        "omega": _parse_omega,
        "max_sweeps": lambda raw: int(raw),
        "memory": _parse_positive_int,
        "sections": _parse_positive_int,
    },
    "probe": {
        "probes": lambda raw: _parse_list(raw, str),
        "time_index": lambda raw: int(raw),
        "radii": lambda raw: _parse_list(raw, _parse_positive_float),
        "tail_exponent": _parse_positive_float,
        "shift_steps": lambda raw: _parse_list(raw, _parse_positive_int),
        "ensemble": _parse_positive_int,
    },
    "sweep": {
        "deltas": lambda raw: _parse_list(raw, _parse_positive_float),
    },
    "output": {
        "dir": lambda raw: raw,
    },
}

_FIELD_NAMES = {
    ("problem", "T"): "horizon",
    ("output", "dir"): "out_dir",
}


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a config file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case, [problem] T is uppercase
    with open(path) as f:
        try:
            parser.read_file(f)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            converter = _SCHEMA[section].get(key)
            if converter is None:
                raise ConfigError(f"{path}: unknown key {key!r} in section [{section}]")
            field = _FIELD_NAMES.get((section, key), key)
            try:
                values[field] = converter(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from exc
    if "kind" not in values:
        raise ConfigError(f"{path}: [problem] kind is required")
    cfg = ExperimentConfig(**values)
    _validate(cfg, path, set(values))
    return cfg


def _validate(cfg: ExperimentConfig, path: str, explicit: set[str]) -> None:
    if cfg.kind not in BUILTIN_PROBLEMS:
        raise ConfigError(
            f"{path}: unknown problem kind {cfg.kind!r}, pick one of {sorted(BUILTIN_PROBLEMS)}"
        )
    if cfg.window is not None and cfg.window > cfg.n_x:
        raise ConfigError(f"{path}: window {cfg.window} exceeds n_x = {cfg.n_x}")
    if not 0.0 < cfg.fraction <= 1.0:
        raise ConfigError(f"{path}: noise fraction must lie in (0, 1], got {cfg.fraction}")
    if cfg.method not in _METHODS:
        raise ConfigError(f"{path}: unknown method {cfg.method!r}, pick one of {list(_METHODS)}")
    if not 0.0 < cfg.rule_exponent < 2.0:
        raise ConfigError(f"{path}: rule_exponent must lie in (0, 2), got {cfg.rule_exponent}")
    if cfg.max_sweeps < 0:
        raise ConfigError(f"{path}: max_sweeps must be >= 0, got {cfg.max_sweeps}")
    if cfg.sections is not None and cfg.sections > cfg.n_t:
        raise ConfigError(f"{path}: sections {cfg.sections} exceeds n_t = {cfg.n_t}")
    if cfg.method == "tikhonov_temporal" and cfg.kind == "mpi":
        raise ConfigError(f"{path}: the tracking solver needs a pointwise problem, not 'mpi'")
    for probe in cfg.probes:
        if probe not in _PROBES:
            raise ConfigError(f"{path}: unknown probe {probe!r}, pick from {list(_PROBES)}")
    # Cross-field probe checks fire only for keys written in the file; the
    # defaults are not consumed outside cmd_probe, which reports the module
    # error itself when a defaulted combination cannot run.
    if (
        "probes" in explicit
        and "temporal_spectrum" in cfg.probes
        and cfg.kind not in _POINTWISE_KINDS
    ):
        raise ConfigError(f"{path}: temporal_spectrum needs a pointwise problem, not {cfg.kind!r}")
    if not 0 <= cfg.time_index < cfg.n_t:
        raise ConfigError(f"{path}: time_index {cfg.time_index} outside [0, {cfg.n_t})")
    if "shift_steps" in explicit and any(k >= cfg.n_t for k in cfg.shift_steps):
        raise ConfigError(f"{path}: shift steps must stay below n_t = {cfg.n_t}")


def _build_problem(cfg: ExperimentConfig) -> ProblemInstance:
    try:
        if cfg.kind == "dct":
            pattern = None
            if cfg.pattern_csv is not None:
                pattern = load_pattern_csv(cfg.pattern_csv, TimeGrid(cfg.horizon, cfg.n_t))
            window = cfg.window if cfg.window is not None else cfg.n_x
            return make_dct_analogue(
                cfg.n_t, cfg.n_x, cfg.sigma, window, cfg.horizon, pattern=pattern
            )
        if cfg.kind == "mpi":
            kernel = None
            if cfg.kernel_csv is not None:
                kernel = load_kernel_csv(cfg.kernel_csv, TimeGrid(cfg.horizon, cfg.n_t))
            return make_mpi_analogue(cfg.n_t, cfg.n_x, cfg.decay, cfg.horizon, kernel=kernel)
        if cfg.kind == "nonuniform":
            return make_nonuniform_example(cfg.n_t, cfg.n_x, cfg.horizon)
        return make_identity_problem(cfg.n_t, cfg.n_x, cfg.horizon)
    except (InvalidParameterError, InvalidInputError, DimensionError) as exc:
        raise ConfigError(f"cannot build problem: {exc}") from exc


def _alpha_argument(cfg: ExperimentConfig):
    if cfg.alpha is not None:
        return cfg.alpha
    return ParameterRule(cfg.rule_scale, cfg.rule_exponent)


def _embed_static(problem: ProblemInstance, x: np.ndarray) -> BochnerFunction:
    n_t = problem.forward.time_grid.n_t
    return problem.forward.source_template(np.tile(x, (n_t, 1)))


def _run_solver(
    cfg: ExperimentConfig, problem: ProblemInstance, noisy: BochnerFunction, delta: float
) -> tuple[SolveReport, BochnerFunction, float, float]:
    """Dispatch on cfg.method.

    Returns (report, space-time reconstruction, relative error, data residual);
    static reconstructions are embedded as constant-in-time functions.
    """
    if cfg.method in ("tikhonov_temporal", "tikhonov_uniform"):
        solver = tikhonov_temporal if cfg.method == "tikhonov_temporal" else tikhonov_uniform
        report = solver(
            problem.forward,
            noisy,
            _alpha_argument(cfg),
            delta,
            TikhonovConfig(tol=cfg.tol, max_iter=cfg.max_iter),
            truth=problem.truth,
        )
        reconstruction = report.reconstruction
        error = report.error
    else:
        kcfg = KaczmarzConfig(
            omega=cfg.omega, tau=cfg.tau, max_sweeps=cfg.max_sweeps, memory=cfg.memory
        )
        subs = time_subproblems(problem.forward, noisy, delta, sections=cfg.sections)
        start = np.zeros(problem.forward.static.n_in)
        loop = landweber_kaczmarz if cfg.method == "landweber_kaczmarz" else kaczmarz_multi_direction
        report = loop(subs, kcfg, start)
        reconstruction = _embed_static(problem, report.reconstruction)
        error = bochner_norm(reconstruction - problem.truth) / bochner_norm(problem.truth)
    residual = bochner_norm(apply_forward(problem.forward, reconstruction) - noisy)
    return report, reconstruction, error, residual


def _write_table(path: str, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(f"{float(cell):.17g}")
        lines.append(",".join(cells))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def cmd_forward(cfg: ExperimentConfig, quiet: bool = False) -> None:
    """Build the problem, draw noise, export the instance directory."""
    problem = _build_problem(cfg)
    spec = NoiseSpec(cfg.delta, cfg.seed, cfg.fraction)
    noisy = add_noise(problem.data_clean, spec)
    export_instance(problem, noisy, spec, cfg.out_dir)
    _say(quiet, f"wrote {cfg.out_dir}/{{truth,data_clean,data_noisy}}.csv and meta.txt")


def cmd_solve(cfg: ExperimentConfig, quiet: bool = False) -> None:
    """Reconstruct from one noisy draw and export reconstruction/trace/report."""
    problem = _build_problem(cfg)
    noisy = add_noise(problem.data_clean, NoiseSpec(cfg.delta, cfg.seed, cfg.fraction))
    report, reconstruction, error, residual = _run_solver(cfg, problem, noisy, cfg.delta)
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_csv(reconstruction, os.path.join(cfg.out_dir, "reconstruction.csv"))
    _write_table(
        os.path.join(cfg.out_dir, "trace.csv"),
        "iter,subproblem,residual,alpha,error",
        report.trace,
    )
    alpha = report.alphas[0] if report.alphas else math.nan
    grid = problem.forward.time_grid
    text = (
        f"kind={problem.label}\n"
        f"method={cfg.method}\n"
        f"n_t={grid.n_t}\n"
        f"n_x={problem.truth.n_dim}\n"
        f"T={float(grid.horizon)!r}\n"
        f"delta={float(cfg.delta)!r}\n"
        f"seed={cfg.seed}\n"
        f"alpha={float(alpha)!r}\n"
        f"stop_reason={report.stop_reason}\n"
        f"iterations={report.iterations}\n"
        f"residual={float(residual)!r}\n"
        f"relative_error={float(error)!r}\n"
    )
    _atomic_write_text(os.path.join(cfg.out_dir, "report.txt"), text)
    _say(quiet, f"wrote {cfg.out_dir}/{{reconstruction.csv,trace.csv,report.txt}}")


def cmd_sweep(cfg: ExperimentConfig, quiet: bool = False) -> None:
    """Solve across the configured noise levels; seeds advance with the index."""
    problem = _build_problem(cfg)
    rows = []
    for index, delta in enumerate(cfg.deltas):
        noisy = add_noise(problem.data_clean, NoiseSpec(delta, cfg.seed + index, cfg.fraction))
        report, _, error, residual = _run_solver(cfg, problem, noisy, delta)
        alpha = report.alphas[0] if report.alphas else math.nan
        rows.append((delta, alpha, error, residual))
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_table(os.path.join(cfg.out_dir, "sweep.csv"), "delta,alpha,error,residual", rows)
    try:
        line_plot(
            os.path.join(cfg.out_dir, "sweep.svg"),
            [r[0] for r in rows],
            [r[2] for r in rows],
            xlabel="delta",
            ylabel="relative error",
            title=f"{problem.label}: error against noise level",
            logx=True,
            logy=True,
        )
    except Exception:
        pass  # plots are best-effort and never change the exit status
    _say(quiet, f"wrote {cfg.out_dir}/sweep.csv over {len(rows)} noise levels")


def _probe_ensemble(cfg: ExperimentConfig, problem: ProblemInstance) -> list[BochnerFunction]:
    """Unit-ball source ensemble: one constant-in-time member, the rest seeded."""
    forward = problem.forward
    shape = (forward.time_grid.n_t, forward.static.n_in)
    members = []
    constant = forward.source_template(np.ones(shape))
    members.append(constant * (1.0 / bochner_norm(constant)))
    for k in range(max(cfg.ensemble - 1, 0)):
        rng = np.random.default_rng(cfg.seed + 1000 + k)
        draw = forward.source_template(rng.standard_normal(shape))
        norm = bochner_norm(draw)
        if norm > 0.0:
            members.append(draw * (1.0 / norm))
    return members


def cmd_probe(cfg: ExperimentConfig, quiet: bool = False) -> None:
    """Run the configured probes and export one table (and plot) each."""
    problem = _build_problem(cfg)
    forward = problem.forward
    os.makedirs(cfg.out_dir, exist_ok=True)
    written = []

    def _table_with_plot(name, header, rows, xlabel, ylabel, logx, logy):
        _write_table(os.path.join(cfg.out_dir, f"{name}.csv"), header, rows)
        written.append(f"{name}.csv")
        try:
            line_plot(
                os.path.join(cfg.out_dir, f"{name}.svg"),
                [r[0] for r in rows],
                [r[1] for r in rows],
                xlabel=xlabel,
                ylabel=ylabel,
                title=f"{problem.label}: {name}",
                logx=logx,
                logy=logy,
            )
        except Exception:
            pass  # best-effort
    if "temporal_spectrum" in cfg.probes:
        rep = temporal_spectrum(forward, cfg.time_index)
        rows = list(enumerate(rep.singular_values, start=1))
        _table_with_plot(
            f"spectrum_t{cfg.time_index}", "k,sigma", rows, "k", "sigma", False, True
        )
    if "stacked_spectrum" in cfg.probes:
        rep = stacked_spectrum(forward)
        rows = list(enumerate(rep.singular_values, start=1))
        _table_with_plot("spectrum_stacked", "k,sigma", rows, "k", "sigma", False, True)
    ensemble = None
    if "integrability" in cfg.probes:
        ensemble = _probe_ensemble(cfg, problem)
        table = integrability_tail(forward, ensemble, cfg.radii, cfg.tail_exponent)
        _table_with_plot("integrability", "r,tail", table, "r", "tail mass", True, True)
    if "translation" in cfg.probes:
        if ensemble is None:
            ensemble = _probe_ensemble(cfg, problem)
        images = [apply_forward(forward, member) for member in ensemble]
        shifts = [k * forward.time_grid.dt for k in cfg.shift_steps]
        table = translation_modulus(images, shifts)
        _table_with_plot("translation", "z,modulus", table, "z", "modulus", False, False)
    _say(quiet, f"wrote {cfg.out_dir}/{{{','.join(written)}}}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dynreg",
        description="Formulate, probe, and regularize the built-in dynamic inverse problems.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "forward": cmd_forward,
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "probe": cmd_probe,
    }
    helps = {
        "forward": "export truth, clean data, and one noisy draw",
        "solve": "reconstruct from a noisy draw",
        "sweep": "solve across a list of noise levels",
        "probe": "run spectral/integrability/translation probes",
    }
    for name, handler in handlers.items():
        sub = commands.add_parser(name, help=helps[name])
        sub.add_argument("--config", required=True, help="sectioned key=value config file")
        sub.add_argument("--out", help="override [output] dir")
        sub.add_argument("--seed", type=int, help="override [noise] seed")
        sub.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        handlers[args.command](cfg, quiet=args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except DynregError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
