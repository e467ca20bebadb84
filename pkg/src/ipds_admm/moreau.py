"""Moreau envelope of the convex last-block term and the smoothed prox step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .terms import ProxTerm

__all__ = [
    "MoreauEnvelope",
    "SmoothedProxResult",
    "envelope_value",
    "envelope_gradient",
    "smoothed_prox_step",
    "smoothed_prox_point",
    "envelope_mu_gap",
]


@dataclass(frozen=True)
class MoreauEnvelope:
    """``h(u; mu) = min_v h(v) + ||v - u||^2 / (2 mu)`` for convex ``h``."""

    base: ProxTerm
    mu: float

    def __post_init__(self):
        if not self.base.is_convex:
            raise ValueError(f"{self.base.name}: Moreau smoothing needs a convex term")
        if self.base.lipschitz_const is None:
            raise ValueError(f"{self.base.name}: Lipschitz constant C_h is required")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    def with_mu(self, mu: float) -> "MoreauEnvelope":
        return MoreauEnvelope(self.base, mu)


@dataclass(frozen=True)
class SmoothedProxResult:
    """Output of one smoothed last-block update.

    Attributes
    ----------
    x_bar : ndarray
        Minimizer of ``h(.; mu) + (rho/2)||. - c||^2``.
    x_breve : ndarray
        Inner prox point, where the certificate lives.
    subgrad_certificate : ndarray
        ``rho * (c - x_bar)``, an element of the subdifferential of ``h`` at ``x_breve``.
    """

    x_bar: np.ndarray
    x_breve: np.ndarray
    subgrad_certificate: np.ndarray


def envelope_value(env: MoreauEnvelope, u) -> float:
    u = np.asarray(u, dtype=float)
    p = env.base.prox(u, env.mu)
    return float(env.base.value(p) + np.dot(p - u, p - u) / (2.0 * env.mu))


def envelope_gradient(env: MoreauEnvelope, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return (u - env.base.prox(u, env.mu)) / env.mu


def smoothed_prox_point(h: ProxTerm, mu: float, c, rho: float) -> SmoothedProxResult:
    """Closed-form minimizer of ``h(x; mu) + (rho/2)||x - c||^2``.

    Needs only the prox of ``h``; the Lipschitz constant is not used.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    c = np.asarray(c, dtype=float)
    x_breve = np.asarray(h.prox(c, mu + 1.0 / rho), dtype=float)
    x_bar = (x_breve + (mu * rho) * c) / (1.0 + mu * rho)
    return SmoothedProxResult(x_bar, x_breve, rho * (c - x_bar))


def smoothed_prox_step(env: MoreauEnvelope, c, rho: float, check: bool = False) -> SmoothedProxResult:
    """Minimize ``h(x; mu) + (rho/2)||x - c||^2`` in closed form.

    With ``check=True`` the distance bound ``||x_bar - x_breve|| <= mu * C_h``
    is asserted.
    """
    res = smoothed_prox_point(env.base, env.mu, c, rho)
    if check:
        gap = float(np.linalg.norm(res.x_bar - res.x_breve))
        bound = env.mu * env.base.lipschitz_const
        if gap > bound * (1 + 1e-10) + 1e-14:
            raise AssertionError(f"smoothed step gap {gap} exceeds mu*C_h = {bound}")
    return res


def envelope_mu_gap(env: MoreauEnvelope, u, mu1: float, mu2: float) -> float:
    """``(h(u; mu2) - h(u; mu1)) / (mu1 - mu2)`` for ``0 < mu2 < mu1``."""
    if not 0 < mu2 < mu1:
        raise ValueError(f"need 0 < mu2 < mu1, got mu1={mu1}, mu2={mu2}")
    v2 = envelope_value(env.with_mu(mu2), u)
    v1 = envelope_value(env.with_mu(mu1), u)
    return (v2 - v1) / (mu1 - mu2)
