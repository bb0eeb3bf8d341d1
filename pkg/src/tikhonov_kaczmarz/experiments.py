"""Batch experiments: configuration files, calibrated noise, semiconvergence
studies and iTK / l-iTK comparisons, with CSV and JSON output.

Configurations are INI files with dotted section names::

    [problem]
    kind = c
    n_interior = 199
    n_sources = 2
    truth = bump
    x0 = one
    rho = 1.0

    [noise]
    levels = 1e-2; 1e-3; 1e-4
    seed = 0

    [solver]
    method = litk
    alpha = 0.05
    tau = 2.0

    [solver.inner]
    tol = 1e-10

    [output]
    dir = results

A noise level is a single number (used for every equation) or a
comma-separated vector with one entry per equation. ``alpha`` and ``tau``
may be ``auto``. An optional ``[constants]`` section overrides the
estimated ``eta``, ``M``, ``L`` and ``Mbar``. Unknown sections or keys are
errors.
"""

import configparser
import csv
import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .elliptic import Grid1D, ProblemKind, build_system, profile, synthesize_data
from .errors import ConfigError, DegenerateNoise, InvalidArgument
from .inner import InnerConfig, Safeguard
from .kaczmarz import Method, SolverConfig, StopReason, choose_alpha, choose_tau, run
from .operators import diagnose, estimate_constants

TRACE_COLUMNS = ("k", "op_index", "omega", "residual_pre", "residual_post", "inner_iterations", "error_to_truth")
SEMICONV_COLUMNS = ("delta", "stop_index", "final_error", "total_inner_iterations", "loped_steps")
COMPARE_COLUMNS = ("method",) + SEMICONV_COLUMNS + ("stop_reason",)

_NOISE_RETRIES = 5


def noise_rng(seed, level, i):
    """Independent stream for equation ``i`` at noise level ``level``."""
    return np.random.default_rng(np.random.SeedSequence([seed, level, i]))


def add_noise(y, delta, seed, spaces=None, level=0):
    """Perturb each ``y_i`` by a Gaussian direction rescaled to norm ``delta_i``.

    Norms are those of ``spaces[i]`` (Euclidean if omitted). The draw for
    equation ``i`` depends only on ``(seed, level, i)``.
    """
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (len(y),))
    if np.any(delta < 0):
        raise InvalidArgument("noise levels must be nonnegative")
    out = []
    for i, (yi, di) in enumerate(zip(y, delta)):
        yi = np.asarray(yi, dtype=float)
        if di == 0:
            out.append(yi.copy())
            continue
        norm = (lambda v: float(np.linalg.norm(v))) if spaces is None else spaces[i].norm
        rng = noise_rng(seed, level, i)
        for _ in range(_NOISE_RETRIES):
            z = rng.standard_normal(yi.shape)
            nz = norm(z)
            if nz >= 1e-300:
                break
        else:
            raise DegenerateNoise(f"noise draw for equation {i} has vanishing norm")
        out.append(yi + (di / nz) * z)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ProblemKind = ProblemKind.C
    n_interior: int = 199
    N: int = 2
    truth: str = "bump"
    x0: str = None
    rho: float = 1.0
    noise_levels: tuple = (1e-3,)
    seed: int = 0
    solver: SolverConfig = None
    alpha: object = "auto"
    tau: object = "auto"
    constants: dict = field(default_factory=dict)
    estimator_samples: int = 40
    output_dir: Path = Path("results")

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind.parse(self.kind))
        levels = tuple(np.atleast_1d(np.asarray(d, dtype=float)) for d in self.noise_levels)
        if not levels:
            raise ConfigError("noise_levels must not be empty")
        for d in levels:
            if d.shape not in ((1,), (self.N,)):
                raise ConfigError(f"noise level {d.tolist()} needs 1 or {self.N} entries")
            if np.any(d < 0):
                raise ConfigError("noise levels must be nonnegative")
        object.__setattr__(self, "noise_levels", levels)
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.solver is None:
            object.__setattr__(self, "solver", SolverConfig(alpha=1.0, tau=2.0))

    def delta(self, j):
        return np.broadcast_to(self.noise_levels[j], (self.N,)).copy()


@dataclass(frozen=True)
class SemiconvRow:
    delta: float
    stop_index: int
    final_error: float
    total_inner_iterations: int
    loped_steps: int
    method: Method = Method.LITK
    stop_reason: StopReason = None


# -- configuration files ------------------------------------------------------

_SCHEMA = {
    "problem": {"kind", "n_interior", "n_sources", "truth", "x0", "rho"},
    "constants": {"eta", "M", "L", "Mbar", "samples"},
    "noise": {"levels", "seed"},
    "solver": {"method", "alpha", "tau", "max_cycles", "loping_shortcut"},
    "solver.inner": {"tol", "max_inner", "safeguard"},
    "output": {"dir"},
}


def _number(section, key, value, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {value!r} is not a valid {kind.__name__}") from None


def _auto_or_float(section, key, value):
    return "auto" if value.strip().lower() == "auto" else _number(section, key, value)


def _parse_levels(text):
    levels = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            levels.append(tuple(float(v) for v in chunk.split(",")))
        except ValueError:
            raise ConfigError(f"bad noise level {chunk!r}") from None
    if not levels:
        raise ConfigError("[noise] levels is empty")
    return levels


def parse_config(text, base_dir=None):
    """Parse INI text into an :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    def get(section, key, default=None):
        if parser.has_section(section) and key in parser[section]:
            return parser[section][key].strip()
        return default

    try:
        kind = ProblemKind.parse(get("problem", "kind", "c"))
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None
    N = _number("problem", "n_sources", get("problem", "n_sources", "2"), int)
    if N < 1:
        raise ConfigError("[problem] n_sources must be at least 1")

    constants = {}
    for key in ("eta", "M", "L", "Mbar"):
        val = get("constants", key)
        if val is not None:
            constants[key] = _number("constants", key, val)

    shortcut = get("solver", "loping_shortcut", "true").lower()
    if shortcut not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
        raise ConfigError(f"[solver] loping_shortcut = {shortcut!r} is not a boolean")
    try:
        inner = InnerConfig(
            tol=_number("solver.inner", "tol", get("solver.inner", "tol", "1e-10")),
            max_inner=_number("solver.inner", "max_inner", get("solver.inner", "max_inner", "100"), int),
            safeguard=Safeguard(get("solver.inner", "safeguard", "objective_backtrack")),
        )
        method = Method.parse(get("solver", "method", "litk"))
    except (ValueError, InvalidArgument) as exc:
        raise ConfigError(str(exc)) from None
    alpha = _auto_or_float("solver", "alpha", get("solver", "alpha", "auto"))
    tau = _auto_or_float("solver", "tau", get("solver", "tau", "auto"))
    max_cycles = _number("solver", "max_cycles", get("solver", "max_cycles", "10000"), int)

    out = Path(get("output", "dir", "results"))
    if base_dir is not None and not out.is_absolute():
        out = Path(base_dir) / out

    try:
        solver = SolverConfig(
            alpha=1.0 if alpha == "auto" else alpha,
            tau=2.0 if tau == "auto" else tau,
            method=method,
            max_cycles=max_cycles,
            inner=inner,
            use_loping_shortcut=shortcut in ("true", "yes", "1", "on"),
        )
        return ExperimentConfig(
            kind=kind,
            n_interior=_number("problem", "n_interior", get("problem", "n_interior", "199"), int),
            N=N,
            truth=get("problem", "truth", "bump"),
            x0=get("problem", "x0"),
            rho=_number("problem", "rho", get("problem", "rho", "1.0")),
            noise_levels=_parse_levels(get("noise", "levels", "1e-3")),
            seed=_number("noise", "seed", get("noise", "seed", "0"), int),
            solver=solver,
            alpha=alpha,
            tau=tau,
            constants=constants,
            estimator_samples=_number("constants", "samples", get("constants", "samples", "40"), int),
            output_dir=out,
        )
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)


# -- setup ---------------------------------------------------------------------


@dataclass
class Setup:
    """Everything derived from a config before any noise is drawn."""

    system: object
    truth: np.ndarray
    y: list
    solver: SolverConfig
    eta_estimate: float


def prepare(cfg, deltas=None):
    """Build the system, exact data, constants and the resolved solver config."""
    try:
        grid = Grid1D(cfg.n_interior)
        system = build_system(cfg.kind, cfg.N, grid, x0=cfg.x0, rho=cfg.rho)
        truth = profile(cfg.truth, system.operators[0])
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None
    y = synthesize_data(system, truth)
    if deltas is None:
        deltas = cfg.noise_levels
    delta_max = max(float(np.max(d)) for d in deltas)
    est = estimate_constants(system, y, delta_max, samples=cfg.estimator_samples, seed=cfg.seed)
    constants = {**est, **cfg.constants}
    constants["eta"] = min(constants["eta"], 1 - 1e-12)
    system = system.with_constants(**constants)
    alpha = choose_alpha(delta_max, cfg.rho) if cfg.alpha == "auto" else cfg.alpha
    tau = choose_tau(constants["eta"]) if cfg.tau == "auto" else cfg.tau
    solver = replace(cfg.solver, alpha=alpha, tau=tau)
    return Setup(system, truth, y, solver, est["eta"])


def _noisy(setup, cfg, delta, level):
    spaces = [op.codomain for op in setup.system.operators]
    return add_noise(setup.y, delta, cfg.seed, spaces=spaces, level=level)


def _final_error(setup, trace):
    return setup.system.domain.norm(trace.final_x - setup.truth)


# -- output --------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, enum.Enum):
        return v.value
    return repr(float(v))


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in trace.steps:
            w.writerow([_fmt(getattr(s, c)) for c in TRACE_COLUMNS])


def write_rows_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in columns])


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def summary(trace, setup, delta):
    return {
        "method": setup.solver.method.value,
        "stop_index": trace.stop_index,
        "stop_reason": trace.stop_reason.value,
        "final_error": _json_float(_final_error(setup, trace)),
        "alpha": setup.solver.alpha,
        "tau": setup.solver.tau,
        "eta_estimate": _json_float(setup.eta_estimate),
        "delta": [float(d) for d in delta],
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- drivers -------------------------------------------------------------------


def run_experiment(cfg, write=True):
    """Run the configured method at every noise level.

    Writes ``trace_level{j}.csv`` and ``summary_level{j}.json`` per level
    into ``cfg.output_dir`` and returns the list of traces.
    """
    setup = prepare(cfg)
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    traces = []
    for j in range(len(cfg.noise_levels)):
        delta = cfg.delta(j)
        trace = run(setup.system, _noisy(setup, cfg, delta, j), delta, setup.truth, setup.solver)
        traces.append(trace)
        if write:
            write_trace_csv(cfg.output_dir / f"trace_level{j}.csv", trace)
            _write_json(cfg.output_dir / f"summary_level{j}.json", summary(trace, setup, delta))
    return traces


def _levels(cfg, deltas):
    if deltas is None:
        return [cfg.delta(j) for j in range(len(cfg.noise_levels))]
    return [np.broadcast_to(np.asarray(d, dtype=float), (cfg.N,)).copy() for d in deltas]


def _check_decreasing(levels):
    tops = [float(np.max(d)) for d in levels]
    if any(b >= a for a, b in zip(tops, tops[1:])):
        raise InvalidArgument("noise levels must be strictly decreasing")


def _row(setup, trace, delta, method):
    return SemiconvRow(
        delta=float(np.max(delta)),
        stop_index=trace.stop_index,
        final_error=_final_error(setup, trace),
        total_inner_iterations=trace.total_inner_iterations,
        loped_steps=trace.loped_steps,
        method=method,
        stop_reason=trace.stop_reason,
    )


def semiconvergence_study(cfg, deltas=None, write=True):
    """One run of the configured method per noise level, strictly decreasing.

    Returns one :class:`SemiconvRow` per level and writes
    ``semiconvergence.csv``.
    """
    levels = _levels(cfg, deltas)
    _check_decreasing(levels)
    setup = prepare(cfg, levels)
    rows = []
    for j, delta in enumerate(levels):
        trace = run(setup.system, _noisy(setup, cfg, delta, j), delta, setup.truth, setup.solver)
        rows.append(_row(setup, trace, delta, setup.solver.method))
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_rows_csv(cfg.output_dir / "semiconvergence.csv", rows, SEMICONV_COLUMNS)
    return rows


def compare_methods(cfg, deltas=None, write=True):
    """iTK and l-iTK on identical noise realizations, paired per level.

    Returns the rows (iTK first in each pair) and writes ``compare.csv``.
    """
    levels = _levels(cfg, deltas)
    _check_decreasing(levels)
    setup = prepare(cfg, levels)
    rows = []
    for j, delta in enumerate(levels):
        y_noisy = _noisy(setup, cfg, delta, j)
        for method in (Method.ITK, Method.LITK):
            solver = replace(setup.solver, method=method)
            trace = run(setup.system, y_noisy, delta, setup.truth, solver)
            rows.append(_row(setup, trace, delta, method))
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_rows_csv(cfg.output_dir / "compare.csv", rows, COMPARE_COLUMNS)
    return rows


def run_diagnostics(cfg, write=True):
    """Adjoint, Taylor and cone diagnostics at ``x0``; returns the report."""
    setup = prepare(cfg)
    report = diagnose(setup.system, setup.solver.alpha, samples=cfg.estimator_samples, seed=cfg.seed)
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        _write_json(cfg.output_dir / "diagnostics.json", report_dict(report))
    return report


def report_dict(report):
    return {k: _json_float(v) for k, v in report.as_dict().items()}
