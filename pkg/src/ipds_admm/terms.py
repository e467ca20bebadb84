"""Per-block objective terms: smooth parts ``f_i`` and prox-friendly parts ``h_i``.

Every prox uses the step-size convention: ``prox(x, tau)`` minimizes
``h(x') + ||x' - x||^2 / (2 tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linblock import mat, vec

__all__ = [
    "ProxError",
    "SmoothTerm",
    "ProxTerm",
    "prox_l1",
    "prox_l0",
    "prox_group_l21",
    "prox_nonneg",
    "prox_cardinality",
    "prox_indicator_orthogonality",
    "prox_generic_check",
    "zero_smooth",
    "quadratic",
    "l1",
    "l0",
    "group_l21",
    "indicator_nonneg",
    "indicator_cardinality",
    "indicator_orthogonality",
    "zero",
]


class ProxError(RuntimeError):
    """A proximal map could not be evaluated."""


@dataclass(frozen=True)
class SmoothTerm:
    """Differentiable term ``f`` with an ``L``-Lipschitz gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    name: str = "smooth"

    def __post_init__(self):
        if not self.lipschitz >= 0:
            raise ValueError("lipschitz constant must be nonnegative")


@dataclass(frozen=True)
class ProxTerm:
    """Possibly nonsmooth, possibly nonconvex term ``h`` with an exact prox.

    ``lipschitz_const`` is ``C_h``; it is required for the last block.
    ``subgradient`` is optional and only used by the subgradient baseline.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    is_convex: bool
    lipschitz_const: Optional[float] = None
    name: str = "prox"
    is_indicator: bool = False
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"step must be positive, got {tau}")


def _finite(x):
    x = np.asarray(x, dtype=float)
    if not math.isfinite(float(np.sum(x))) and not np.all(np.isfinite(x)):
        raise ValueError("prox input has non-finite entries")
    return x


def prox_l1(x, rho, tau):
    """Soft threshold at level ``rho * tau``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_tau(tau)
    x = _finite(x)
    return np.sign(x) * np.maximum(np.abs(x) - rho * tau, 0.0)


def prox_l0(x, rho, tau):
    """Hard threshold for ``rho * ||x||_0``; entries exactly at the threshold are zeroed."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    _check_tau(tau)
    x = _finite(x)
    return np.where(x * x > 2.0 * rho * tau, x, 0.0)


def prox_group_l21(x, rho, tau, rows, cols):
    """Row-wise shrinkage for ``rho * sum_j ||row_j||`` on a column-stacked matrix."""
    _check_tau(tau)
    X = mat(_finite(x), rows, cols)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    scale = np.maximum(1.0 - rho * tau / np.where(norms > 0, norms, 1.0), 0.0)
    return vec(X * scale)


def prox_nonneg(x, tau=1.0):
    _check_tau(tau)
    return np.maximum(_finite(x), 0.0)


def prox_cardinality(x, s, tau=1.0):
    """Keep the ``s`` largest-magnitude entries; ties go to the lowest index."""
    _check_tau(tau)
    x = _finite(x)
    if not 0 <= s <= x.size:
        raise ValueError(f"cardinality {s} outside [0, {x.size}]")
    out = np.zeros_like(x)
    if s == 0:
        return out
    # stable sort on -|x| keeps lower indices first among equal magnitudes
    keep = np.argsort(-np.abs(x), kind="stable")[:s]
    out[keep] = x[keep]
    return out


def prox_indicator_orthogonality(x, d, r, tau=1.0):
    """Nearest matrix with orthonormal columns, returned column-stacked."""
    _check_tau(tau)
    if d < r:
        raise ValueError(f"need d >= r, got d={d}, r={r}")
    x = _finite(x)
    if x.size != d * r:
        raise ValueError(f"expected {d * r} entries, got {x.size}")
    try:
        U, _, Vt = np.linalg.svd(mat(x, d, r), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ProxError(f"SVD did not converge: {exc}") from exc
    return vec(U @ Vt)


def prox_generic_check(h: ProxTerm, x, tau):
    """Evaluate ``h.prox(x, tau)`` after validating the inputs."""
    _check_tau(tau)
    x = _finite(x)
    out = np.asarray(h.prox(x, tau), dtype=float)
    if out.shape != x.shape:
        raise ProxError(f"{h.name}: prox changed shape {x.shape} -> {out.shape}")
    return out


# smooth catalog


def zero_smooth(dim: int) -> SmoothTerm:
    return SmoothTerm(lambda x: 0.0, lambda x: np.zeros(dim), 0.0, name="zero")


def quadratic(Q, c=None, name="quadratic") -> SmoothTerm:
    """``0.5 x^T Q x - c^T x`` for symmetric ``Q``."""
    Q = np.array(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    c = np.zeros(Q.shape[0]) if c is None else np.asarray(c, dtype=float)
    L = float(np.max(np.abs(np.linalg.eigvalsh(Q)))) if Q.size else 0.0
    return SmoothTerm(
        value=lambda x: float(0.5 * x @ Q @ x - c @ x),
        gradient=lambda x: Q @ x - c,
        lipschitz=L,
        name=name,
    )


# prox catalog


def zero() -> ProxTerm:
    return ProxTerm(
        value=lambda x: 0.0,
        prox=lambda x, tau: np.array(x, dtype=float),
        is_convex=True,
        lipschitz_const=0.0,
        name="zero",
        subgradient=lambda x: np.zeros_like(x),
    )


def l1(rho: float, dim: Optional[int] = None) -> ProxTerm:
    """``rho * ||x||_1``; ``C_h = rho * sqrt(dim)`` when ``dim`` is known."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return ProxTerm(
        value=lambda x: float(rho * np.sum(np.abs(x))),
        prox=lambda x, tau: prox_l1(x, rho, tau),
        is_convex=True,
        lipschitz_const=None if dim is None else rho * math.sqrt(dim),
        name="l1",
        subgradient=lambda x: rho * np.sign(x),
    )


def l0(rho: float) -> ProxTerm:
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    return ProxTerm(
        value=lambda x: float(rho * np.count_nonzero(x)),
        prox=lambda x, tau: prox_l0(x, rho, tau),
        is_convex=False,
        name="l0",
    )


def group_l21(rho: float, rows: int, cols: int) -> ProxTerm:
    """``rho * ||X||_{2,1}`` (sum of row norms) for a column-stacked ``rows x cols`` matrix."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")

    def value(x):
        return float(rho * np.sum(np.linalg.norm(mat(x, rows, cols), axis=1)))

    def subgradient(x):
        X = mat(x, rows, cols)
        n = np.linalg.norm(X, axis=1, keepdims=True)
        return vec(rho * X / np.where(n > 0, n, 1.0))

    return ProxTerm(
        value=value,
        prox=lambda x, tau: prox_group_l21(x, rho, tau, rows, cols),
        is_convex=True,
        lipschitz_const=rho * math.sqrt(rows),
        name="group_l21",
        subgradient=subgradient,
    )


def _indicator(member: Callable[[np.ndarray], bool]) -> Callable[[np.ndarray], float]:
    return lambda x: 0.0 if member(x) else math.inf


def indicator_nonneg() -> ProxTerm:
    return ProxTerm(
        value=_indicator(lambda x: bool(np.all(np.asarray(x) >= 0))),
        prox=lambda x, tau: prox_nonneg(x, tau),
        is_convex=True,
        name="nonneg",
        is_indicator=True,
    )


def indicator_cardinality(s: int) -> ProxTerm:
    return ProxTerm(
        value=_indicator(lambda x: int(np.count_nonzero(x)) <= s),
        prox=lambda x, tau: prox_cardinality(x, s, tau),
        is_convex=False,
        name="cardinality",
        is_indicator=True,
    )


def indicator_orthogonality(d: int, r: int, tol: float = 1e-8) -> ProxTerm:
    """Indicator of ``{V in R^{d x r} : V^T V = I}`` on column-stacked vectors."""

    def member(x):
        V = mat(x, d, r)
        return bool(np.linalg.norm(V.T @ V - np.eye(r)) <= tol)

    return ProxTerm(
        value=_indicator(member),
        prox=lambda x, tau: prox_indicator_orthogonality(x, d, r, tau),
        is_convex=False,
        name="orthogonality",
        is_indicator=True,
    )
