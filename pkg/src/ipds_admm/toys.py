"""Small seeded test problems with known structure.

``bijective_toy`` couples two blocks through ``-x_1 + x_2 = 0``;
``surjective_toy`` couples ``x_1 + A x_2 = b`` with a wide random ``A``.
Both put a Cauchy-type smooth loss and a weighted l1 term on the last
block so that the last-block subgradients stay nonzero at the solution.
"""

from __future__ import annotations

import math

import numpy as np

from .linblock import BlockOperator, MatrixMap, ScaledIdentity, estimate_spectral
from .schedule import IpdsSchedule, RegimeParams
from .solver import CompositeProblem
from .terms import SmoothTerm, indicator_cardinality, indicator_nonneg, l1

__all__ = ["cauchy_loss", "shifted_quadratic", "bijective_toy", "surjective_toy", "toy_schedule"]


def cauchy_loss(center, weight: float = 1.0) -> SmoothTerm:
    """``weight * sum_j log(1 + (x_j - c_j)^2)``; gradient entries bounded by ``weight``."""
    c = np.asarray(center, dtype=float)

    def value(x):
        return float(weight * np.sum(np.log1p((x - c) ** 2)))

    def gradient(x):
        d = x - c
        return weight * 2.0 * d / (1.0 + d * d)

    return SmoothTerm(value, gradient, lipschitz=2.0 * weight, name="cauchy")


def shifted_quadratic(center, weight: float = 1.0) -> SmoothTerm:
    """``(weight / 2) ||x - c||^2``."""
    c = np.asarray(center, dtype=float)
    return SmoothTerm(
        value=lambda x: float(0.5 * weight * np.sum((x - c) ** 2)),
        gradient=lambda x: weight * (x - c),
        lipschitz=float(weight),
        name="quadratic",
    )


def bijective_toy(
    seed: int = 0, dim: int = 4, rho: float = 0.3, weight: float = 1.0, first_block: str = "l1"
) -> CompositeProblem:
    """Two blocks tied by ``x_1 = x_2``.

    ``first_block`` picks ``h_1``: ``"l1"`` (default) or the nonconvex
    ``"cardinality"`` constraint ``||x_1||_0 <= dim // 2``.
    """
    if first_block == "l1":
        h1 = l1(rho, dim)
    elif first_block == "cardinality":
        h1 = indicator_cardinality(max(dim // 2, 1))
    else:
        raise ValueError(f"unknown first block {first_block!r}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(dim) * 2.0
    c = rng.standard_normal(dim) * 2.0
    coupling = BlockOperator([ScaledIdentity(-1.0, dim), ScaledIdentity(1.0, dim)])
    return CompositeProblem(
        smooth=(shifted_quadratic(a), cauchy_loss(c, weight)),
        prox=(h1, l1(rho, dim)),
        coupling=coupling,
        rhs=np.zeros(dim),
        c_f=weight * math.sqrt(dim),
        name=f"bijective-toy-{first_block}-{seed}",
    )


def surjective_toy(seed: int = 0, m: int = 3, d: int = 5, rho: float = 0.3, weight: float = 1.0) -> CompositeProblem:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, d))
    a = rng.standard_normal(m)
    c = rng.standard_normal(d) * 2.0
    b = rng.standard_normal(m)
    coupling = BlockOperator([ScaledIdentity(1.0, m), MatrixMap(A)])
    return CompositeProblem(
        smooth=(shifted_quadratic(a), cauchy_loss(c, weight)),
        prox=(indicator_nonneg(), l1(rho, d)),
        coupling=coupling,
        rhs=b,
        spectral=estimate_spectral(coupling),
        c_f=weight * math.sqrt(d),
        name=f"surjective-toy-{seed}",
    )


def toy_schedule(prob: CompositeProblem, params: RegimeParams, beta0: float | None = None) -> IpdsSchedule:
    """Schedule with the smallest admissible initial penalty unless one is given."""
    lam = prob.spectral.lambda_up
    floor = prob.lipschitz_last / (params.delta * lam)
    return IpdsSchedule(
        beta0=max(floor, 1.0) if beta0 is None else beta0,
        xi=params.xi,
        p=params.p,
        delta=params.delta,
        lambda_up=lam,
        lipschitz_last=prob.lipschitz_last,
    )
