"""Penalty/smoothing schedules and regime-dependent parameter selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

__all__ = [
    "Regime",
    "ScheduleError",
    "RegimeViolation",
    "ParameterInfeasible",
    "IpdsSchedule",
    "FixedSchedule",
    "RegimeParams",
    "beta_at",
    "mu_at",
    "derived_constants",
    "select_params",
    "experiment_defaults",
    "BETA0_RHO_MULTIPLIER",
    "RADMM_BETA_RHO_MULTIPLIER",
    "BENCHMARK_THETA2",
]

# penalty multipliers (times rho) used by the sparse PCA benchmark
BETA0_RHO_MULTIPLIER = 50.0
RADMM_BETA_RHO_MULTIPLIER = 100.0
# last-block proximal weight used by the benchmark runs; with the published
# 0.60 the linearized last-block step under-majorizes the penalty term and
# sparse PCA diverges, see scripts/theta2_probe.py
BENCHMARK_THETA2 = 1.01


class Regime(str, Enum):
    BIJECTIVE = "bi"
    SURJECTIVE = "su"

    @classmethod
    def parse(cls, value) -> "Regime":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"bi": cls.BIJECTIVE, "bijective": cls.BIJECTIVE, "su": cls.SURJECTIVE, "surjective": cls.SURJECTIVE}
        if key not in aliases:
            raise ValueError(f"unknown regime {value!r}; use 'bi' or 'su'")
        return aliases[key]


class ScheduleError(ValueError):
    """Invalid schedule parameters."""


class RegimeViolation(ValueError):
    """The coupling spectrum does not fit the requested regime."""


class ParameterInfeasible(ValueError):
    """Selected parameters leave no sufficient-decrease margin on the last block."""

    def __init__(self, message: str, chi: float):
        super().__init__(f"{message} (chi={chi!r})")
        self.chi = chi


@dataclass(frozen=True)
class IpdsSchedule:
    """``beta^t = beta0 (1 + xi t^p)`` and ``mu^t = 1 / (lambda_up delta beta^t)``.

    If ``lipschitz_last`` is given, ``beta0 >= L_n / (delta lambda_up)`` is enforced.
    ``xi = 0`` is accepted and freezes the penalty.
    """

    beta0: float
    xi: float
    p: float
    delta: float
    lambda_up: float
    lipschitz_last: Optional[float] = None

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ScheduleError(f"beta0 must be positive, got {self.beta0}")
        if not self.xi >= 0:
            raise ScheduleError(f"xi must be nonnegative, got {self.xi}")
        if not 0 < self.p < 1:
            raise ScheduleError(f"p must lie in (0, 1), got {self.p}")
        if not 0 < self.delta < 1:
            raise ScheduleError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.lambda_up > 0:
            raise ScheduleError(f"lambda_up must be positive, got {self.lambda_up}")
        if self.lipschitz_last is not None:
            need = self.lipschitz_last / (self.delta * self.lambda_up)
            if self.beta0 < need:
                raise ScheduleError(f"beta0={self.beta0} below L_n/(delta*lambda_up)={need}")

    def beta_at(self, t: int) -> float:
        if t < 0:
            raise ValueError("t must be nonnegative")
        return self.beta0 * (1.0 + self.xi * float(t) ** self.p)

    def mu_at(self, t: int) -> float:
        return 1.0 / (self.lambda_up * self.delta * self.beta_at(t))


@dataclass(frozen=True)
class FixedSchedule:
    """Constant penalty and smoothing (the fixed-penalty ADMM baseline)."""

    beta: float
    mu: float

    def __post_init__(self):
        if not (self.beta > 0 and self.mu > 0):
            raise ScheduleError("fixed beta and mu must be positive")

    def beta_at(self, t: int) -> float:
        return self.beta

    def mu_at(self, t: int) -> float:
        return self.mu


def beta_at(s, t: int) -> float:
    return s.beta_at(t)


def mu_at(s, t: int) -> float:
    return s.mu_at(t)


@dataclass(frozen=True)
class RegimeParams:
    """Algorithm parameters together with the constants of the decrease analysis."""

    regime: Regime
    sigma: float
    theta1: float
    theta2: float
    xi: float
    delta: float
    p: float
    kappa: float
    omega: float
    sigma1: float
    sigma2: float
    varrho: float
    q: float
    chi: float
    eps1: float
    eps2: float
    eps3: float
    theory_certified: bool = field(default=True)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["regime"] = self.regime.value
        return out


def _sigma_consts(sigma: float) -> tuple[float, float]:
    a = abs(1.0 - sigma)
    s1 = sigma / (1.0 - a) ** 2
    s2 = a / (sigma * (1.0 - a))
    return s1, s2


def derived_constants(
    regime,
    sigma: float,
    theta1: float,
    theta2: float,
    xi: float,
    delta: float,
    kappa: float,
    lambda_ratio: Optional[float] = None,
) -> dict:
    """Analysis constants for given algorithm parameters.

    ``lambda_ratio`` is ``lambda_min(A_n^T A_n) / lambda_up``; it only
    enters the reported ``q`` in the bijective regime and defaults to
    ``1 / kappa`` (square last block).
    """
    regime = Regime.parse(regime)
    if not 0 < sigma < 2:
        raise ValueError(f"sigma must lie in (0, 2), got {sigma}")
    omega = 1.0 + xi / (2.0 * sigma) + sigma * xi
    sigma1, sigma2 = _sigma_consts(sigma)
    varrho = 6.0 * omega * sigma1 * kappa
    if regime is Regime.BIJECTIVE:
        ratio = 1.0 / kappa if lambda_ratio is None else lambda_ratio
        q = theta2 * (1.0 + delta) - ratio
        chi = varrho * (delta + theta2 + theta2 * delta - 1.0 / kappa) ** 2
    else:
        q = theta2 + theta2 * delta
        chi = (2.0 * omega * kappa / sigma) * (
            sigma**2 * q**2 + 3.0 * delta**2 + 3.0 * (delta + sigma * q) ** 2
        )
    return dict(
        omega=omega,
        sigma1=sigma1,
        sigma2=sigma2,
        varrho=varrho,
        q=q,
        chi=chi,
        eps1=(theta1 - 1.0) / 2.0,
        eps2=theta2 - 0.5 - chi,
        eps3=xi,
    )


def select_params(
    regime,
    kappa: float,
    lambda_down_prime: Optional[float] = None,
    lambda_up: Optional[float] = None,
    *,
    xi: Optional[float] = None,
    delta: Optional[float] = None,
    sigma: Optional[float] = None,
) -> RegimeParams:
    """Theory-certified parameters for the given regime and condition number."""
    regime = Regime.parse(regime)
    if not kappa >= 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    ratio = None
    if lambda_down_prime is not None and lambda_up is not None:
        ratio = lambda_down_prime / lambda_up
    theta1 = 1.01
    p = 1.0 / 3.0
    if regime is Regime.BIJECTIVE:
        if not kappa < 2.0:
            raise RegimeViolation(
                f"bijective regime needs kappa < 2, got kappa={kappa}; use the surjective regime"
            )
        delta_sup = (2.0 / kappa - 1.0) / 3.0
        delta = 0.9 * delta_sup if delta is None else float(delta)
        if not 0 < delta < delta_sup:
            raise ValueError(f"delta must lie in (0, {delta_sup}), got {delta}")
        sigma = 1.618 if sigma is None else float(sigma)
        sigma = min(max(sigma, 1.0), math.nextafter(2.0, 0.0))
        xi = 0.5 if xi is None else float(xi)
        if not xi > 0:
            raise ValueError(f"xi must be positive, got {xi}")
        omega = 1.0 + xi / (2.0 * sigma) + sigma * xi
        sigma1, _ = _sigma_consts(sigma)
        varrho = 6.0 * omega * sigma1 * kappa
        theta2 = (1.0 / kappa - delta) / (1.0 + delta) + 1.0 / (2.0 * varrho * (1.0 + delta) ** 2)
    else:
        value = 0.01 / kappa
        xi = value if xi is None else float(xi)
        delta = value if delta is None else float(delta)
        sigma = value if sigma is None else float(sigma)
        if not 0 < sigma < 1:
            raise ValueError(f"surjective regime needs sigma in (0, 1), got {sigma}")
        theta2 = 1.5
    consts = derived_constants(regime, sigma, theta1, theta2, xi, delta, kappa, ratio)
    if not consts["eps2"] > 0:
        raise ParameterInfeasible("parameters give eps2 <= 0", consts["chi"])
    return RegimeParams(
        regime=regime,
        sigma=sigma,
        theta1=theta1,
        theta2=theta2,
        xi=xi,
        delta=delta,
        p=p,
        kappa=kappa,
        theory_certified=True,
        **consts,
    )


def experiment_defaults(kappa: float = 1.0, regime=Regime.BIJECTIVE) -> RegimeParams:
    """The empirical settings used for the benchmark runs; never theory-certified."""
    xi, p, delta, theta1, theta2, sigma = 0.5, 1.0 / 3.0, 0.25, 1.01, 0.60, 1.618
    consts = derived_constants(regime, sigma, theta1, theta2, xi, delta, kappa)
    return RegimeParams(
        regime=Regime.parse(regime),
        sigma=sigma,
        theta1=theta1,
        theta2=theta2,
        xi=xi,
        delta=delta,
        p=p,
        kappa=kappa,
        theory_certified=False,
        **consts,
    )
