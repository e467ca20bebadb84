"""Proximal linearized multi-block ADMM with increasing penalty and decreasing smoothing.

The dual variable is stored rescaled, ``z_hat = z / sqrt(beta)``, and ``z`` is
rebuilt on demand. The reported solution at iteration ``t`` is
``q^t = (x_1, ..., x_{n-1}, x_breve_n)`` where ``x_breve_n`` is the inner prox
point of the smoothed last-block step.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .linblock import BlockOperator, DimensionError, SpectralInfo, apply, estimate_spectral
from .moreau import MoreauEnvelope, envelope_value, smoothed_prox_point, smoothed_prox_step
from .schedule import Regime, RegimeParams
from .terms import ProxTerm, SmoothTerm

__all__ = [
    "DivergenceError",
    "PotentialUndefined",
    "ResidualDriftWarning",
    "CompositeProblem",
    "StepCache",
    "SolverState",
    "StoppingRule",
    "TraceRecord",
    "SolveResult",
    "PotentialTerms",
    "objective_value",
    "initial_state",
    "partial_gradient",
    "step",
    "solve",
    "crit_bound",
    "block_subgradients",
    "potential_value",
    "TRACE_FIELDS",
]

RESIDUAL_REFRESH_EVERY = 100
RESIDUAL_DRIFT_TOL = 1e-9


class DivergenceError(FloatingPointError):
    """An iterate became non-finite."""

    def __init__(self, block, iteration: int):
        where = "dual" if block is None else f"block {block}"
        super().__init__(f"non-finite iterate in {where} at iteration {iteration}")
        self.block = block
        self.iteration = iteration


class PotentialUndefined(ValueError):
    """The potential needs one completed step of history."""


class ResidualDriftWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class CompositeProblem:
    """``min sum_i f_i(x_i) + h_i(x_i)  s.t.  sum_i A_i x_i = b``.

    ``h_n`` must be convex; its Lipschitz constant ``C_h`` is read from the
    term. ``c_f`` bounds ``||grad f_n||`` and is informational.
    """

    smooth: tuple
    prox: tuple
    coupling: BlockOperator
    rhs: np.ndarray
    spectral: Optional[SpectralInfo] = None
    c_f: Optional[float] = None
    name: str = "problem"

    def __post_init__(self):
        smooth = tuple(self.smooth)
        prox = tuple(self.prox)
        object.__setattr__(self, "smooth", smooth)
        object.__setattr__(self, "prox", prox)
        n = self.coupling.n
        if len(smooth) != n or len(prox) != n:
            raise DimensionError(f"need {n} smooth and prox terms, got {len(smooth)} and {len(prox)}")
        b = np.array(self.rhs, dtype=float).reshape(-1)
        if b.shape != (self.coupling.output_dim,):
            raise DimensionError(f"rhs has dimension {b.size}, coupling maps into {self.coupling.output_dim}")
        if not np.all(np.isfinite(b)):
            raise ValueError("rhs has non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "rhs", b)
        if not prox[-1].is_convex:
            raise ValueError(f"last-block term {prox[-1].name!r} must be convex")
        ch = prox[-1].lipschitz_const
        if ch is not None and not (math.isfinite(ch) and ch >= 0):
            raise ValueError(f"C_h must be finite and nonnegative, got {ch}")
        if self.c_f is not None and not (math.isfinite(self.c_f) and self.c_f >= 0):
            raise ValueError(f"C_f must be finite and nonnegative, got {self.c_f}")
        if self.spectral is None:
            object.__setattr__(self, "spectral", estimate_spectral(self.coupling))

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def dims(self) -> tuple[int, ...]:
        return self.coupling.dims

    @property
    def c_h(self) -> Optional[float]:
        return self.prox[-1].lipschitz_const

    @property
    def lipschitz_last(self) -> float:
        return self.smooth[-1].lipschitz


def objective_value(prob: CompositeProblem, q: Sequence[np.ndarray]) -> float:
    return float(sum(f.value(x) + h.value(x) for f, h, x in zip(prob.smooth, prob.prox, q)))


@dataclass(frozen=True)
class StepCache:
    """Quantities produced by the step ``t-1 -> t`` and kept with state ``t``.

    ``certs[i]`` is an element of the subdifferential of ``h_i`` at the new
    ``x_i`` (at ``x_breve_n`` for the last block).
    """

    beta: float
    mu: float
    lbar: tuple
    center: np.ndarray
    rho: float
    certs: tuple
    dx: tuple
    dz: np.ndarray
    u_n: np.ndarray
    a_vec: np.ndarray
    step_residual: float


@dataclass(frozen=True)
class SolverState:
    t: int
    x: tuple
    x_breve_n: np.ndarray
    z_hat: np.ndarray
    beta: float
    mu: float
    residual: np.ndarray
    last: Optional[StepCache] = None

    @property
    def z(self) -> np.ndarray:
        return math.sqrt(self.beta) * self.z_hat

    @property
    def q(self) -> tuple:
        """Reported solution: last block replaced by its inner prox point."""
        return self.x[:-1] + (self.x_breve_n,)

    # cached aliases named after the quantities they hold
    @property
    def last_u_n(self):
        return None if self.last is None else self.last.u_n

    @property
    def last_w_n(self):
        return None if self.last is None else self.last.certs[-1]

    @property
    def last_a_vec(self):
        return None if self.last is None else self.last.a_vec


@dataclass(frozen=True)
class StoppingRule:
    epsilon: float = 1e-6
    max_iter: Optional[int] = None
    max_wall_time: Optional[float] = None

    def __post_init__(self):
        if self.max_iter is None and self.max_wall_time is None and not self.epsilon > 0:
            raise ValueError("stopping rule needs a finite bound")
        if self.max_iter is None and self.max_wall_time is None:
            raise ValueError("stopping rule needs max_iter or max_wall_time")


TRACE_FIELDS = ("t", "wall_time", "objective", "feasibility", "crit_bound", "step_residual", "theta", "beta", "mu")


@dataclass(frozen=True)
class TraceRecord:
    """Diagnostics for the reported point ``q^t``; ``beta`` and ``mu`` are the values that produced it."""

    t: int
    wall_time: float
    objective: float
    feasibility: float
    crit_bound: float
    step_residual: float
    theta: float
    beta: float
    mu: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in TRACE_FIELDS)


@dataclass
class SolveResult:
    best: SolverState
    final: SolverState
    trace: list
    status: str
    states: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def initial_state(prob: CompositeProblem, sched, x0=None, z0=None) -> SolverState:
    """State at ``t = 0``; zero primal and dual unless given."""
    if x0 is None:
        x = tuple(np.zeros(d) for d in prob.dims)
    else:
        if len(x0) != prob.n:
            raise DimensionError(f"expected {prob.n} blocks, got {len(x0)}")
        x = tuple(np.array(xi, dtype=float) for xi in x0)
        for i, (xi, d) in enumerate(zip(x, prob.dims)):
            if xi.shape != (d,):
                raise DimensionError(f"expected dimension {d}, got {xi.shape}", block=i)
    beta = sched.beta_at(0)
    z = np.zeros(prob.coupling.output_dim) if z0 is None else np.array(z0, dtype=float)
    residual = apply(prob.coupling, x) - prob.rhs
    return SolverState(
        t=0,
        x=x,
        x_breve_n=x[-1].copy(),
        z_hat=z / math.sqrt(beta),
        beta=beta,
        mu=sched.mu_at(0),
        residual=residual,
    )


def partial_gradient(prob: CompositeProblem, x_mixed, z, beta: float, i: int, residual=None) -> np.ndarray:
    """Gradient of the augmented Lagrangian's smooth part in block ``i``.

    ``x_mixed`` holds already-updated blocks before ``i``. ``residual`` may
    pass the maintained ``sum_j A_j x_j - b``; otherwise it is recomputed.
    """
    if residual is None:
        residual = apply(prob.coupling, x_mixed) - prob.rhs
    A = prob.coupling[i]
    return prob.smooth[i].gradient(x_mixed[i]) + A.adjoint(z + beta * residual)


def _check_finite(arr, block, t):
    # a sum of finite entries is finite unless it overflows, which we also treat as divergence
    if not math.isfinite(float(np.sum(arr))):
        raise DivergenceError(block, t)


def _positive(lbar):
    # a block with no smooth part and a zero coupling map only sees h_i; any step is valid
    return lbar if lbar > 0 else 1.0


def step(prob: CompositeProblem, state: SolverState, params: RegimeParams, sched, debug: bool = False) -> SolverState:
    """One sweep over all blocks followed by the rescaled dual update."""
    t = state.t
    n = prob.n
    beta = sched.beta_at(t)
    mu = sched.mu_at(t)
    sqrt_beta = math.sqrt(beta)
    z = sqrt_beta * state.z_hat
    r = state.residual.copy()
    norms = prob.spectral.op_norms
    theta1, theta2, sigma = params.theta1, params.theta2, params.sigma
    x_new = list(state.x)
    lbar, certs, dx = [], [], []

    if debug:
        lhs = prob.lipschitz_last
        rhs = params.delta * beta * prob.spectral.lambda_up
        if lhs > rhs * (1 + 1e-12):
            raise AssertionError(f"L_n={lhs} exceeds delta*beta*lambda_up={rhs} at t={t}")

    for i in range(n - 1):
        A = prob.coupling[i]
        xi = state.x[i]
        g = prob.smooth[i].gradient(xi) + A.adjoint(z + beta * r)
        L = _positive(prob.smooth[i].lipschitz + beta * norms[i] ** 2)
        tau = 1.0 / (theta1 * L)
        xp = np.asarray(prob.prox[i].prox(xi - tau * g, tau), dtype=float)
        _check_finite(xp, i, t)
        d = xp - xi
        if debug:
            h = prob.prox[i]
            lhs = h.value(xp) + float(d @ g) + 0.5 * theta1 * L * float(d @ d)
            rhs = h.value(xi)
            if lhs > rhs + 1e-9 * max(1.0, abs(lhs)):
                raise AssertionError(f"surrogate increase in block {i} at t={t}: {lhs} > {rhs}")
        certs.append(-g - theta1 * L * d)
        r += A.apply(d)
        x_new[i] = xp
        lbar.append(L)
        dx.append(d)

    An = prob.coupling[n - 1]
    xn = state.x[n - 1]
    g = prob.smooth[n - 1].gradient(xn) + An.adjoint(z + beta * r)
    Ln = _positive(prob.lipschitz_last + beta * norms[n - 1] ** 2)
    rho = theta2 * Ln
    c = xn - g / rho
    h_last = prob.prox[n - 1]
    if debug and h_last.lipschitz_const is not None:
        res = smoothed_prox_step(MoreauEnvelope(h_last, mu), c, rho, check=True)
    else:
        res = smoothed_prox_point(h_last, mu, c, rho)
    _check_finite(res.x_bar, n - 1, t)
    _check_finite(res.x_breve, n - 1, t)
    dn = res.x_bar - xn
    r += An.apply(dn)
    x_new[n - 1] = res.x_bar
    lbar.append(Ln)
    dx.append(dn)
    certs.append(res.subgrad_certificate)

    if (t + 1) % RESIDUAL_REFRESH_EVERY == 0:
        full = apply(prob.coupling, x_new) - prob.rhs
        drift = float(np.linalg.norm(full - r))
        if drift > RESIDUAL_DRIFT_TOL * max(1.0, float(np.linalg.norm(full)), float(np.linalg.norm(prob.rhs))):
            warnings.warn(f"coupling residual drift {drift:.3e} at t={t + 1}", ResidualDriftWarning)
        r = full

    beta_next = sched.beta_at(t + 1)
    z_hat = state.z_hat * math.sqrt(beta / beta_next) + (beta / math.sqrt(beta_next)) * sigma * r
    _check_finite(z_hat, None, t)
    dz = math.sqrt(beta_next) * z_hat - z

    u_n = theta2 * Ln * dn - beta * An.adjoint(An.apply(dn))
    a_vec = An.adjoint(dz)
    if params.regime is Regime.SURJECTIVE:
        a_vec = a_vec + sigma * u_n
    step_res = float(np.linalg.norm(dz)) + beta * math.sqrt(sum(float(d @ d) for d in dx))

    cache = StepCache(
        beta=beta,
        mu=mu,
        lbar=tuple(lbar),
        center=c,
        rho=rho,
        certs=tuple(certs),
        dx=tuple(dx),
        dz=dz,
        u_n=u_n,
        a_vec=a_vec,
        step_residual=step_res,
    )
    return SolverState(
        t=t + 1,
        x=tuple(x_new),
        x_breve_n=res.x_breve,
        z_hat=z_hat,
        beta=beta_next,
        mu=sched.mu_at(t + 1),
        residual=r,
        last=cache,
    )


def _require_step(prev: SolverState, nxt: SolverState):
    if nxt.last is None or nxt.t != prev.t + 1:
        raise PotentialUndefined(f"states t={prev.t} and t={nxt.t} are not consecutive")


def block_subgradients(prob: CompositeProblem, prev: SolverState, nxt: SolverState, params: RegimeParams) -> list:
    """Subgradients of ``h_i`` at ``x_i^{t+1}`` (``i < n``) rebuilt from the dual update.

    Returns ``-u_i - A_i^T z^t - A_i^T (z^{t+1} - z^t) / sigma - grad f_i(x_i^t)``
    with ``u_i = theta1 Lbar_i dx_i - beta A_i^T sum_{j >= i} A_j dx_j``.
    """
    _require_step(prev, nxt)
    cache = nxt.last
    beta = cache.beta
    z_prev = prev.z
    out = []
    tail = np.zeros(prob.coupling.output_dim)
    tails = []
    for j in reversed(range(prob.n)):
        tail = tail + prob.coupling[j].apply(cache.dx[j])
        tails.append(tail)
    tails.reverse()
    for i in range(prob.n - 1):
        A = prob.coupling[i]
        u = params.theta1 * cache.lbar[i] * cache.dx[i] - beta * A.adjoint(tails[i])
        grad_old = prob.smooth[i].gradient(prev.x[i])
        out.append(-u - A.adjoint(z_prev) - A.adjoint(cache.dz) / params.sigma - grad_old)
    return out


def crit_bound(prob: CompositeProblem, state_prev: SolverState, state_next: SolverState, params: RegimeParams) -> float:
    """Certified upper bound on the criticality measure at ``q^{t+1}`` with ``z^{t+1}``.

    ``||A q - b|| + sum_i ||s_i + grad f_i(q_i) + A_i^T z||`` where each
    ``s_i`` is a certified subgradient of ``h_i`` at ``q_i``.
    """
    _require_step(state_prev, state_next)
    q = state_next.q
    z = state_next.z
    subs = block_subgradients(prob, state_prev, state_next, params)
    subs.append(state_next.last.certs[-1])
    total = float(np.linalg.norm(apply(prob.coupling, q) - prob.rhs))
    for i, s in enumerate(subs):
        total += float(np.linalg.norm(s + prob.smooth[i].gradient(q[i]) + prob.coupling[i].adjoint(z)))
    return total


@dataclass(frozen=True)
class PotentialTerms:
    """Potential at ``t`` and the pieces of its decrease inequality.

    ``energy`` is the decrease measure of the step ``t-1 -> t`` and
    ``tail`` the summable error term at ``t``.
    """

    t: int
    theta: float
    theta_base: float
    a_term: float
    b_term: float
    tail: float
    energy: float
    coef_a: float
    coef_b: float


def potential_value(prob: CompositeProblem, state_prev: SolverState, state_next: SolverState, params: RegimeParams, sched=None) -> PotentialTerms:
    """Potential ``Theta^t`` at ``t = state_next.t >= 1``.

    ``Theta^t = L(x^t, z^t; beta^t, mu^t) + C_h^2 mu^t / 2 + a A^t + b B^t`` with
    the last block smoothed inside ``L``. The constant term uses ``C_h^2``,
    which is what the envelope's monotonicity in ``mu`` actually provides.
    """
    if state_next.t < 1 or state_next.last is None:
        raise PotentialUndefined("the potential is defined from t = 1 on")
    _require_step(state_prev, state_next)
    ch = prob.c_h
    if ch is None:
        raise PotentialUndefined("the potential needs the last-block Lipschitz constant C_h")
    lam_down = prob.spectral.lambda_down
    if not lam_down > 0:
        raise PotentialUndefined("the potential needs lambda_down > 0")
    cache = state_next.last
    beta, mu = state_next.beta, state_next.mu
    if sched is not None:
        beta, mu = sched.beta_at(state_next.t), sched.mu_at(state_next.t)
    n = prob.n
    x = state_next.x
    z = state_next.z
    r = apply(prob.coupling, x) - prob.rhs
    lag = sum(prob.prox[i].value(x[i]) for i in range(n - 1))
    lag += envelope_value(MoreauEnvelope(prob.prox[-1], mu), x[-1])
    lag += sum(f.value(xi) for f, xi in zip(prob.smooth, x))
    lag += float(r @ z) + 0.5 * beta * float(r @ r)
    base = lag + 0.5 * ch**2 * mu

    if params.regime is Regime.BIJECTIVE:
        ca = params.omega * params.sigma2 / lam_down
        cb = 3.0 * params.omega * params.sigma1 / lam_down
        u_weight = 1.0
    else:
        ca = 2.0 * params.omega * params.sigma2 / lam_down
        cb = 6.0 * params.omega * params.sigma1 / lam_down
        u_weight = params.sigma
    a_term = float(cache.a_vec @ cache.a_vec) / beta
    dxn = float(np.linalg.norm(cache.dx[-1]))
    b_term = (prob.lipschitz_last * dxn + u_weight * float(np.linalg.norm(cache.u_n))) ** 2 / beta
    tail = ch**2 * (cb / beta) * (cache.mu / mu - 1.0) ** 2

    energy = params.eps1 * sum(L * float(d @ d) for L, d in zip(cache.lbar[:-1], cache.dx[:-1]))
    energy += params.eps2 * cache.lbar[-1] * dxn**2
    energy += params.eps3 / cache.beta * float(cache.dz @ cache.dz)
    return PotentialTerms(
        t=state_next.t,
        theta=base + ca * a_term + cb * b_term,
        theta_base=base,
        a_term=a_term,
        b_term=b_term,
        tail=tail,
        energy=energy,
        coef_a=ca,
        coef_b=cb,
    )


def solve(
    prob: CompositeProblem,
    params: RegimeParams,
    sched,
    rule: StoppingRule,
    record_every: int = 1,
    x0=None,
    z0=None,
    track_potential: bool = False,
    keep_states: bool = False,
    debug: bool = False,
    callback: Optional[Callable[[SolverState, SolverState], None]] = None,
) -> SolveResult:
    """Iterate until the step residual drops to ``rule.epsilon`` or a budget runs out.

    Returns the state after the smallest-residual step, the final state and
    the trace. ``status`` is ``"converged"`` or ``"budget"``.
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    start = time.perf_counter()
    state = initial_state(prob, sched, x0, z0)
    best = state
    best_res = math.inf
    trace = []
    states = [state] if keep_states else []
    status = "budget"
    while True:
        prev = state
        state = step(prob, prev, params, sched, debug=debug)
        if keep_states:
            states.append(state)
        if callback is not None:
            callback(prev, state)
        res = state.last.step_residual
        if res < best_res:
            best, best_res = state, res
        elapsed = time.perf_counter() - start
        done = res <= rule.epsilon
        if done:
            status = "converged"
        elif rule.max_iter is not None and state.t >= rule.max_iter:
            done = True
        elif rule.max_wall_time is not None and elapsed >= rule.max_wall_time:
            done = True
        if done or state.t % record_every == 0:
            theta = math.nan
            if track_potential:
                theta = potential_value(prob, prev, state, params, sched).theta
            q = state.q
            trace.append(
                TraceRecord(
                    t=state.t,
                    wall_time=elapsed,
                    objective=objective_value(prob, q),
                    feasibility=float(np.linalg.norm(apply(prob.coupling, q) - prob.rhs)),
                    crit_bound=crit_bound(prob, prev, state, params),
                    step_residual=res,
                    theta=theta,
                    beta=state.last.beta,
                    mu=state.last.mu,
                )
            )
        if done:
            break
    return SolveResult(best=best, final=state, trace=trace, status=status, states=states)
