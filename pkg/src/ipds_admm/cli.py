"""Command-line benchmark front end: ``solve``, ``compare`` and ``sweep``.

Settings come from built-in defaults, then an optional ``key=value`` config
file, then command-line flags. Every run writes a trace CSV and a manifest
next to it; a manifest is itself a valid config file, so feeding it back via
``--config`` replays the run (keys starting with ``info.`` are ignored).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import re
import subprocess
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .baselines import BaselineConfig, StructureError, run_radmm, run_spgm, run_subgrad
from .linblock import apply
from .problems import (
    PhaseRetrievalSpec,
    RobustRegressionSpec,
    SparsePcaSpec,
    build_phase_retrieval,
    build_robust_regression,
    build_sparse_pca,
    load_data,
    sparse_pca_start,
    synth_data,
    synth_phase_retrieval,
)
from .schedule import (
    BENCHMARK_THETA2,
    IpdsSchedule,
    Regime,
    RegimeViolation,
    derived_constants,
    experiment_defaults,
    select_params,
)
from .solver import StoppingRule, objective_value, solve
from .traceio import read_manifest, write_manifest, write_trace

__all__ = ["RunConfig", "RunOutcome", "main", "run_cli", "load_config", "parse_budget", "parse_beta0"]

SOLVERS = ("ipds", "radmm", "spgm", "subgrad")
PROBLEMS = ("sparse-pca", "phase-retrieval", "robust-regression")
DEFAULT_TRACE_EVERY = 100
TRACE_EVERY_ENV = "IPDS_TRACE_EVERY"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """One fully resolved run. ``None`` means "use the solver or builder default"."""

    problem: str = "sparse-pca"
    synth: Optional[str] = "randn:200x50"
    data: Optional[str] = None
    rows: Optional[int] = None
    cols: Optional[int] = None
    r: int = 5
    rho: float = 100.0
    s: int = 3
    solver: str = "ipds"
    params: str = "experiment"
    regime: Optional[str] = None
    theta2: Optional[float] = None
    sigma: Optional[float] = None
    beta0: str = "50rho"
    budget: Optional[str] = "30s"
    max_iter: Optional[int] = None
    tol: float = 1e-6
    seed: int = 0
    out: str = "trace.csv"
    trace_every: Optional[int] = None
    radmm_beta: str = "100rho"
    radmm_mu: Optional[float] = None
    subgrad_step0: Optional[float] = None
    subgrad_decay: float = 0.5
    spgm_step0: Optional[float] = None
    spgm_mu0: Optional[float] = None

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if self.params not in ("experiment", "theory"):
            raise ConfigError(f"--params must be 'experiment' or 'theory', got {self.params!r}")
        if self.data is not None and not Path(self.data).is_file():
            raise ConfigError(f"data file {self.data!r} does not exist")
        if self.trace_every is not None and self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")
        parse_budget(self.budget)
        if parse_budget(self.budget) is None and self.max_iter is None:
            raise ConfigError("need a wall-time --budget or --max-iter")
        return self


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, text):
    if text is None:
        return None
    kind = _FIELD_TYPES[key]
    if isinstance(text, str):
        text = text.strip()
        if text == "" and kind.startswith("Optional"):
            return None
    try:
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc
    return str(text)


def parse_budget(text) -> Optional[float]:
    """``"30s"``, ``"2m"``, ``"500ms"``, a bare number of seconds, or ``none``."""
    if text is None:
        return None
    text = str(text).strip().lower()
    if text in ("", "none"):
        return None
    m = re.fullmatch(r"([0-9]*\.?[0-9]+(?:e[-+]?[0-9]+)?)\s*(ms|s|m|h)?", text)
    if not m:
        raise ConfigError(f"cannot parse budget {text!r}")
    scale = {"ms": 1e-3, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}[m.group(2)]
    value = float(m.group(1)) * scale
    if not value > 0:
        raise ConfigError("budget must be positive")
    return value


def parse_beta0(text, rho: float) -> float:
    """A number, or a multiple of the l1 weight written ``<k>rho``."""
    text = str(text).strip()
    try:
        if text.endswith("rho"):
            value = float(text[:-3] or 1.0) * rho
        else:
            value = float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse penalty {text!r}") from exc
    if not value > 0:
        raise ConfigError(f"penalty must be positive, got {text!r} (rho={rho})")
    return value


def load_config(path) -> dict:
    raw = read_manifest(path)
    out = {}
    for key, value in raw.items():
        if key.startswith("info."):
            continue
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        out[key] = _convert(key, value)
    return out


def _git_describe() -> str:
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() or "unknown"


# problem and parameter assembly


def _regime_for(cfg: RunConfig) -> Regime:
    if cfg.regime is not None:
        try:
            return Regime.parse(cfg.regime)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return Regime.SURJECTIVE if cfg.problem == "phase-retrieval" else Regime.BIJECTIVE


def _parse_synth(text: str):
    m = re.fullmatch(r"(\w+):(\d+)x(\d+)", str(text).strip())
    if not m:
        raise ConfigError(f"--synth expects kind:MxD, got {text!r}")
    return m.group(1), int(m.group(2)), int(m.group(3))


def build_problem(cfg: RunConfig):
    """Return the problem and the starting point."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.problem == "sparse-pca":
        if cfg.data is not None:
            D = load_data(cfg.data, cfg.rows, cfg.cols, cfg.seed)
        else:
            kind, m, d = _parse_synth(cfg.synth)
            D = synth_data(kind, m, d, cfg.seed)
        prob = build_sparse_pca(SparsePcaSpec(D, cfg.r, cfg.rho))
        v0 = sparse_pca_start(D.shape[1], cfg.r, cfg.seed)
        return prob, (v0, v0.copy())
    if cfg.problem == "phase-retrieval":
        _, m, d = _parse_synth(cfg.synth)
        spec = synth_phase_retrieval(m, d, cfg.r, cfg.seed, cfg.rho)
        prob = build_phase_retrieval(spec)
        v0 = 0.1 * rng.standard_normal(d)
        return prob, (spec.D @ v0, v0)
    _, m, d = _parse_synth(cfg.synth)
    G = rng.standard_normal((m, d))
    v = np.zeros(d)
    v[rng.choice(d, size=min(cfg.s, d), replace=False)] = rng.standard_normal(min(cfg.s, d))
    z = G @ v
    # a tenth of the measurements get gross outliers
    bad = rng.choice(m, size=max(m // 10, 1), replace=False)
    z[bad] += 10.0 * rng.standard_normal(bad.size)
    prob = build_robust_regression(RobustRegressionSpec(G, z, cfg.s))
    return prob, (np.zeros(d), np.zeros(m))


def _with_overrides(params, theta2=None, sigma=None, certified=None):
    theta2 = params.theta2 if theta2 is None else float(theta2)
    sigma = params.sigma if sigma is None else float(sigma)
    consts = derived_constants(params.regime, sigma, params.theta1, theta2, params.xi, params.delta, params.kappa)
    return dataclasses.replace(
        params,
        theta2=theta2,
        sigma=sigma,
        theory_certified=params.theory_certified if certified is None else certified,
        **consts,
    )


def build_params(cfg: RunConfig, prob):
    regime = _regime_for(cfg)
    spec = prob.spectral
    if cfg.params == "theory":
        params = select_params(regime, spec.kappa, spec.lambda_down_prime, spec.lambda_up)
        if cfg.theta2 is not None or cfg.sigma is not None:
            params = _with_overrides(params, cfg.theta2, cfg.sigma, certified=False)
        return params
    params = experiment_defaults(kappa=spec.kappa, regime=regime)
    theta2 = BENCHMARK_THETA2 if cfg.theta2 is None else cfg.theta2
    return _with_overrides(params, theta2, cfg.sigma)


# running


@dataclass
class RunOutcome:
    solver: str
    status: str
    trace: list
    x: tuple
    settings: dict
    iterations: int

    def summary(self, prob) -> dict:
        last = self.trace[-1]
        feas_x = float(np.linalg.norm(apply(prob.coupling, self.x) - prob.rhs))
        return dict(
            solver=self.solver,
            status=self.status,
            t=self.iterations,
            wall_time=last.wall_time,
            objective=last.objective,
            feasibility=last.feasibility,
            objective_x=objective_value(prob, self.x),
            feasibility_x=feas_x,
        )


def _trace_every(cfg: RunConfig) -> int:
    if cfg.trace_every is not None:
        return cfg.trace_every
    env = os.environ.get(TRACE_EVERY_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"{TRACE_EVERY_ENV} must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError(f"{TRACE_EVERY_ENV} must be >= 1")
        return value
    return DEFAULT_TRACE_EVERY


def run_one(cfg: RunConfig, prob, x0, params) -> RunOutcome:
    rule = StoppingRule(epsilon=cfg.tol, max_iter=cfg.max_iter, max_wall_time=parse_budget(cfg.budget))
    every = cfg.trace_every
    if cfg.solver == "ipds":
        beta0 = parse_beta0(cfg.beta0, cfg.rho)
        sched = IpdsSchedule(beta0, params.xi, params.p, params.delta, prob.spectral.lambda_up, prob.lipschitz_last)
        res = solve(prob, params, sched, rule, record_every=every, x0=x0)
        settings = dict(beta0=beta0)
        return RunOutcome("ipds", res.status, res.trace, res.final.x, settings, res.final.t)
    if cfg.solver == "radmm":
        bcfg = BaselineConfig("radmm", beta_fixed=parse_beta0(cfg.radmm_beta, cfg.rho), mu_fixed=cfg.radmm_mu)
        res = run_radmm(prob, bcfg, rule, params, x0=x0, record_every=every)
        return RunOutcome("radmm", res.status, res.trace, res.solve_result.final.x, res.settings, res.solve_result.final.t)
    if cfg.solver == "spgm":
        bcfg = BaselineConfig("spgm", step0=cfg.spgm_step0, mu0=cfg.spgm_mu0)
        res = run_spgm(prob, bcfg, rule, x0=x0, record_every=every)
    else:
        bcfg = BaselineConfig("subgrad", step0=cfg.subgrad_step0, decay=cfg.subgrad_decay)
        res = run_subgrad(prob, bcfg, rule, x0=x0, record_every=every)
    return RunOutcome(cfg.solver, res.status, res.trace, res.q, res.settings, res.trace[-1].t)


def _manifest(cfg: RunConfig, params, outcome: RunOutcome) -> dict:
    entries = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}
    entries["info.version"] = __version__
    entries["info.git_describe"] = _git_describe()
    entries["info.theory_certified"] = str(bool(params.theory_certified)).lower()
    for key, value in params.as_dict().items():
        entries[f"info.param.{key}"] = value
    for key, value in outcome.settings.items():
        entries[f"info.solver.{key}"] = value
    entries["info.status"] = outcome.status
    entries["info.iterations"] = outcome.iterations
    return entries


def _manifest_path(trace_path: Path) -> Path:
    return trace_path.with_suffix(".manifest")


def execute(cfg: RunConfig, out: Path):
    """Run ``cfg`` and write its trace and manifest to ``out``."""
    prob, x0 = build_problem(cfg)
    params = build_params(cfg, prob)
    outcome = run_one(cfg, prob, x0, params)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace(out, outcome.trace)
    write_manifest(_manifest_path(out), _manifest(dataclasses.replace(cfg, out=str(out)), params, outcome))
    return prob, outcome


SUMMARY_FIELDS = ("solver", "status", "t", "wall_time", "objective", "feasibility", "objective_x", "feasibility_x")


def _write_summary(path: Path, rows: list) -> str:
    lines = [",".join(SUMMARY_FIELDS)]
    for row in rows:
        cells = []
        for k in SUMMARY_FIELDS:
            v = row.get(k, "")
            cells.append("%.17g" % v if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    path.write_text(text)
    return text


def _variant_path(out: Path, tag: str) -> Path:
    return out.with_name(f"{out.stem}.{tag}{out.suffix or '.csv'}")


# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_run_flags(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key=value file; flags override it")
    p.add_argument("--problem", default=S, choices=PROBLEMS)
    p.add_argument("--synth", default=S, help="synthetic data kind:MxD, e.g. randn:200x50")
    p.add_argument("--data", default=S, help="CSV data matrix (sparse PCA)")
    p.add_argument("--rows", type=int, default=S, help="subsample this many rows of --data")
    p.add_argument("--cols", type=int, default=S, help="subsample this many columns of --data")
    p.add_argument("--r", type=int, default=S, help="components (sparse PCA) or rows of D (phase retrieval)")
    p.add_argument("--rho", type=float, default=S, help="l1 weight")
    p.add_argument("--s", type=int, default=S, help="sparsity level (robust regression)")
    p.add_argument("--params", default=S, choices=("experiment", "theory"))
    p.add_argument("--regime", default=S, choices=("bi", "su"))
    p.add_argument("--theta2", type=float, default=S, help="last-block proximal weight override")
    p.add_argument("--sigma", type=float, default=S, help="dual step override")
    p.add_argument("--beta0", default=S, help="initial penalty, a number or <k>rho")
    p.add_argument("--budget", default=S, help="wall-time budget per run, e.g. 30s, 2m, none")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    p.add_argument("--tol", type=float, default=S, help="step-residual tolerance")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S, help="trace CSV path (compare/sweep: path stem)")
    p.add_argument("--trace-every", dest="trace_every", type=int, default=S, help=f"record stride (env {TRACE_EVERY_ENV})")
    p.add_argument("--radmm-beta", dest="radmm_beta", default=S, help="fixed penalty of the RADMM baseline")
    p.add_argument("--radmm-mu", dest="radmm_mu", type=float, default=S)
    p.add_argument("--subgrad-step0", dest="subgrad_step0", type=float, default=S)
    p.add_argument("--subgrad-decay", dest="subgrad_decay", type=float, default=S)
    p.add_argument("--spgm-step0", dest="spgm_step0", type=float, default=S)
    p.add_argument("--spgm-mu0", dest="spgm_mu0", type=float, default=S)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ipds-bench", description="Benchmark the increasing-penalty ADMM solver against baselines.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sp = sub.add_parser("solve", help="run one solver")
    _add_run_flags(sp)
    sp.add_argument("--solver", default=argparse.SUPPRESS, choices=SOLVERS)
    cp = sub.add_parser("compare", help="run several solvers on the same instance")
    _add_run_flags(cp)
    cp.add_argument("--all-solvers", dest="all_solvers", action="store_true")
    cp.add_argument("--solvers", default="ipds", help="comma-separated solver list")
    wp = sub.add_parser("sweep", help="grid over initial penalties and seeds")
    _add_run_flags(wp)
    wp.add_argument("--solver", default=argparse.SUPPRESS, choices=SOLVERS)
    wp.add_argument("--beta0-grid", dest="beta0_grid", default="10rho,50rho,100rho,500rho")
    wp.add_argument("--seeds", default="0")
    return p


def _resolve(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(ns, "config", None):
        if not Path(ns.config).is_file():
            raise ConfigError(f"config file {ns.config!r} does not exist")
        values.update(load_config(ns.config))
    for key in _FIELD_TYPES:
        if hasattr(ns, key):
            values[key] = getattr(ns, key)
    cfg = RunConfig(**values)
    if cfg.trace_every is None:
        cfg.trace_every = _trace_every(cfg)
    return cfg.validate()


def _cmd_solve(cfg: RunConfig) -> int:
    prob, outcome = execute(cfg, Path(cfg.out))
    row = outcome.summary(prob)
    print(
        f"{row['solver']}: {row['status']} after {row['t']} iterations, "
        f"objective {row['objective_x']:.10g}, feasibility {row['feasibility_x']:.3e}"
    )
    return EXIT_OK if outcome.status == "converged" else EXIT_BUDGET


def _cmd_compare(cfg: RunConfig, ns) -> int:
    names = list(SOLVERS) if ns.all_solvers else [s.strip() for s in ns.solvers.split(",") if s.strip()]
    for name in names:
        if name not in SOLVERS:
            raise ConfigError(f"unknown solver {name!r}")
    out = Path(cfg.out)
    rows = []
    for name in names:
        run_cfg = dataclasses.replace(cfg, solver=name)
        try:
            prob, outcome = execute(run_cfg, _variant_path(out, name))
        except StructureError as exc:
            rows.append(dict(solver=name, status=f"skipped ({exc})".replace(",", ";")))
            continue
        rows.append(outcome.summary(prob))
    sys.stdout.write(_write_summary(_variant_path(out, "summary"), rows))
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig, ns) -> int:
    grid = [g.strip() for g in ns.beta0_grid.split(",") if g.strip()]
    try:
        seeds = [int(s) for s in ns.seeds.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--seeds expects integers, got {ns.seeds!r}") from exc
    out = Path(cfg.out)
    rows = []
    for seed in seeds:
        for beta0 in grid:
            run_cfg = dataclasses.replace(cfg, seed=seed, beta0=beta0)
            prob, outcome = execute(run_cfg, _variant_path(out, f"seed{seed}.beta{beta0}"))
            row = outcome.summary(prob)
            row["solver"] = f"{cfg.solver}[seed={seed};beta0={beta0}]"
            rows.append(row)
    sys.stdout.write(_write_summary(_variant_path(out, "summary"), rows))
    return EXIT_OK


def run_cli(argv=None) -> int:
    """Parse ``argv`` and run; returns the process exit code."""
    try:
        ns = _parser().parse_args(argv)
        if ns.command is None:
            raise ConfigError("missing command: solve, compare or sweep")
        cfg = _resolve(ns)
        if ns.command == "solve":
            return _cmd_solve(cfg)
        if ns.command == "compare":
            return _cmd_compare(cfg, ns)
        return _cmd_sweep(cfg, ns)
    except SystemExit as exc:
        # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    except RegimeViolation as exc:
        print(f"error: regime violation: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run_cli())
