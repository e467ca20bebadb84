"""Comparison solvers: projected subgradient, smoothing proximal gradient and fixed-penalty ADMM.

SubGrad and SPGM work on the constraint-eliminated form of a two-block
problem whose last coupling map is ``c * I``: ``x_2 = (b - A_1 x_1) / c``.
Their step-size and smoothing rules are not pinned down by the method
descriptions they follow; the defaults below are our own and are marked
as such.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .linblock import ScaledIdentity, apply
from .moreau import MoreauEnvelope, envelope_gradient
from .schedule import FixedSchedule, RegimeParams
from .solver import CompositeProblem, SolveResult, StoppingRule, TraceRecord, objective_value, solve

__all__ = [
    "StructureError",
    "BaselineConfig",
    "BaselineResult",
    "run_subgrad",
    "run_spgm",
    "run_radmm",
    "SPGM_SMOOTHING_EXPONENT",
]

SPGM_SMOOTHING_EXPONENT = 1.0 / 3.0


class StructureError(ValueError):
    """The problem does not have the structure a baseline needs."""


@dataclass(frozen=True)
class BaselineConfig:
    """Baseline settings; ``None`` selects the documented default.

    ``step0``: initial step (SubGrad: ``0.1 / (C_h + C_f)``; SPGM: multiplier 1 on
    ``1 / L_t``). ``decay``: SubGrad step exponent. ``mu0``: SPGM initial smoothing
    (default ``1 / C_h``). ``beta_fixed``/``mu_fixed``: RADMM penalty and smoothing
    (``mu_fixed`` defaults to ``1 / (lambda_up delta beta_fixed)``).
    """

    method: str = "subgrad"
    step0: Optional[float] = None
    decay: float = 0.5
    beta_fixed: Optional[float] = None
    mu_fixed: Optional[float] = None
    mu0: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("subgrad", "spgm", "radmm"):
            raise ValueError(f"unknown baseline {self.method!r}")
        for name in ("step0", "beta_fixed", "mu_fixed", "mu0"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not self.decay > 0:
            raise ValueError("decay must be positive")


@dataclass
class BaselineResult:
    trace: list
    q: tuple
    status: str
    settings: dict = field(default_factory=dict)
    solve_result: Optional[SolveResult] = None


class _Eliminated:
    """``F(v) = f_1(v) + h_1(v) + (f_2 + h_2)((b - A_1 v) / c)``."""

    def __init__(self, prob: CompositeProblem):
        if prob.n != 2:
            raise StructureError(f"needs a two-block problem, got n={prob.n}")
        last = prob.coupling[1]
        if not isinstance(last, ScaledIdentity) or last.scale == 0.0:
            raise StructureError("needs the last coupling map to be a nonzero multiple of the identity")
        self.prob = prob
        self.A1 = prob.coupling[0]
        self.c = last.scale

    def second(self, v):
        return (self.prob.rhs - self.A1.apply(v)) / self.c

    def pull_back(self, g2):
        # chain rule through x_2(v)
        return -self.A1.adjoint(g2) / self.c

    def q(self, v):
        return (v, self.second(v))


def _record(prob, q, t, elapsed, step_res, mu=math.nan):
    feas = float(np.linalg.norm(apply(prob.coupling, q) - prob.rhs))
    return TraceRecord(
        t=t,
        wall_time=elapsed,
        objective=objective_value(prob, q),
        feasibility=feas,
        crit_bound=math.nan,
        step_residual=step_res,
        theta=math.nan,
        beta=math.nan,
        mu=mu,
    )


def _start(elim: _Eliminated, x0, step):
    prob = elim.prob
    v = np.zeros(prob.dims[0]) if x0 is None else np.array(x0[0], dtype=float)
    return np.asarray(prob.prox[0].prox(v, step), dtype=float)


def _loop(prob, elim, rule, record_every, update, v, mu_of=None):
    start = time.perf_counter()
    trace = []
    t = 0
    status = "budget"
    while True:
        v_new = update(v, t)
        if not np.all(np.isfinite(v_new)):
            raise FloatingPointError(f"non-finite baseline iterate at iteration {t}")
        step_res = float(np.linalg.norm(v_new - v))
        v = v_new
        t += 1
        elapsed = time.perf_counter() - start
        done = step_res <= rule.epsilon
        if done:
            status = "converged"
        elif rule.max_iter is not None and t >= rule.max_iter:
            done = True
        elif rule.max_wall_time is not None and elapsed >= rule.max_wall_time:
            done = True
        if done or t % record_every == 0:
            mu = math.nan if mu_of is None else mu_of(t - 1)
            trace.append(_record(prob, elim.q(v), t, elapsed, step_res, mu))
        if done:
            return v, trace, status


def run_subgrad(prob: CompositeProblem, cfg: BaselineConfig, budget: StoppingRule, x0=None, record_every: int = 1) -> BaselineResult:
    """Projected (proximal) subgradient steps ``step0 / (t+1)^decay`` on the eliminated form."""
    elim = _Eliminated(prob)
    h2 = prob.prox[1]
    if h2.subgradient is None:
        raise StructureError(f"last-block term {h2.name!r} has no subgradient oracle")
    f1, f2, h1 = prob.smooth[0], prob.smooth[1], prob.prox[0]
    scale = (prob.c_h or 0.0) + (prob.c_f or 0.0)
    # default step: our choice, about 0.1 in norm for the first move
    step0 = cfg.step0 if cfg.step0 is not None else 0.1 / max(scale, 1e-12)

    def update(v, t):
        eta = step0 / (t + 1) ** cfg.decay
        x2 = elim.second(v)
        g = f1.gradient(v) + elim.pull_back(f2.gradient(x2) + h2.subgradient(x2))
        return np.asarray(h1.prox(v - eta * g, eta), dtype=float)

    v = _start(elim, x0, step0)
    v, trace, status = _loop(prob, elim, budget, record_every, update, v)
    return BaselineResult(trace, elim.q(v), status, dict(method="subgrad", step0=step0, decay=cfg.decay))


def run_spgm(prob: CompositeProblem, cfg: BaselineConfig, budget: StoppingRule, x0=None, record_every: int = 1) -> BaselineResult:
    """Proximal gradient on ``f + h_2(.; mu_t)`` with ``mu_t = mu0 / (t+1)^(1/3)``.

    The step is ``step0 / (L_f + ||A_1 / c||^2 / mu_t)``, the inverse
    smoothness of the smoothed objective.
    """
    elim = _Eliminated(prob)
    f1, f2, h1, h2 = prob.smooth[0], prob.smooth[1], prob.prox[0], prob.prox[1]
    if not h2.is_convex or h2.lipschitz_const is None:
        raise StructureError("SPGM smooths the last-block term; it must be convex with a known C_h")
    ch = h2.lipschitz_const
    # default smoothing and step multiplier: our choice
    mu0 = cfg.mu0 if cfg.mu0 is not None else 1.0 / max(ch, 1e-12)
    step0 = cfg.step0 if cfg.step0 is not None else 1.0
    jac2 = (prob.spectral.op_norms[0] / abs(elim.c)) ** 2
    lf = f1.lipschitz + jac2 * f2.lipschitz

    def mu_of(t):
        return mu0 / (t + 1) ** SPGM_SMOOTHING_EXPONENT

    def update(v, t):
        mu = mu_of(t)
        eta = step0 / (lf + jac2 / mu)
        x2 = elim.second(v)
        g2 = f2.gradient(x2) + envelope_gradient(MoreauEnvelope(h2, mu), x2)
        g = f1.gradient(v) + elim.pull_back(g2)
        return np.asarray(h1.prox(v - eta * g, eta), dtype=float)

    v = _start(elim, x0, 1.0 / (lf + jac2 / mu0))
    v, trace, status = _loop(prob, elim, budget, record_every, update, v, mu_of)
    return BaselineResult(trace, elim.q(v), status, dict(method="spgm", step0=step0, mu0=mu0))


def run_radmm(
    prob: CompositeProblem,
    cfg: BaselineConfig,
    budget: StoppingRule,
    params: RegimeParams,
    x0=None,
    z0=None,
    record_every: int = 1,
    **solve_kwargs,
) -> BaselineResult:
    """The main ADMM loop with ``beta`` and ``mu`` frozen and unit dual step."""
    if prob.n != 2 or not isinstance(prob.coupling[1], ScaledIdentity):
        raise StructureError("fixed-penalty ADMM baseline needs two blocks with an identity-like last map")
    if cfg.beta_fixed is None:
        raise ValueError("beta_fixed is required")
    beta = cfg.beta_fixed
    mu = cfg.mu_fixed if cfg.mu_fixed is not None else 1.0 / (prob.spectral.lambda_up * params.delta * beta)
    fixed = replace(params, sigma=1.0, theory_certified=False)
    res = solve(prob, fixed, FixedSchedule(beta, mu), budget, record_every=record_every, x0=x0, z0=z0, **solve_kwargs)
    return BaselineResult(res.trace, res.final.q, res.status, dict(method="radmm", beta_fixed=beta, mu_fixed=mu), res)
