"""Builders for sparse PCA, sparse phase retrieval and robust sparse regression, plus data preparation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linblock import (
    BlockOperator,
    MatrixMap,
    ScaledIdentity,
    SpectralInfo,
    estimate_spectral,
    mat,
    read_matrix_csv,
    vec,
)
from .solver import CompositeProblem
from .terms import (
    SmoothTerm,
    indicator_cardinality,
    indicator_nonneg,
    indicator_orthogonality,
    l1,
    zero,
    zero_smooth,
)

__all__ = [
    "RegionWarning",
    "SparsePcaSpec",
    "PhaseRetrievalSpec",
    "RobustRegressionSpec",
    "sparse_pca_loss",
    "build_sparse_pca",
    "build_phase_retrieval",
    "build_robust_regression",
    "prepare_columns",
    "synth_data",
    "load_data",
    "synth_phase_retrieval",
    "sparse_pca_start",
]


class RegionWarning(RuntimeWarning):
    """An iterate left the region where the smoothness estimate is valid."""


@dataclass(frozen=True)
class SparsePcaSpec:
    data: np.ndarray
    r: int
    rho: float
    reg: str = "l1"

    def __post_init__(self):
        D = np.asarray(self.data, dtype=float)
        if D.ndim != 2 or not np.all(np.isfinite(D)):
            raise ValueError("data must be a finite 2-D matrix")
        if not 1 <= self.r <= D.shape[1]:
            raise ValueError(f"need 1 <= r <= {D.shape[1]}, got r={self.r}")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.reg not in ("l1", "l0"):
            raise ValueError(f"unknown regularizer {self.reg!r}")


@dataclass(frozen=True)
class PhaseRetrievalSpec:
    """``radius`` bounds ``||v||`` on the region used for the smoothness estimate."""

    G: np.ndarray
    z: np.ndarray
    D: np.ndarray
    rho: float
    radius: float = 1.0


@dataclass(frozen=True)
class RobustRegressionSpec:
    G: np.ndarray
    z: np.ndarray
    s: int


def _warn_outside(radius: float):
    state = {"warned": False}

    def check(norm: float):
        if norm > radius and not state["warned"]:
            state["warned"] = True
            warnings.warn(
                f"iterate norm {norm:.3g} left the region of radius {radius:.3g}; "
                "the smoothness estimate may not hold",
                RegionWarning,
                stacklevel=3,
            )

    return check


def sparse_pca_loss(D, r: int, radius: Optional[float] = None) -> SmoothTerm:
    """``(1/2m) ||D - D V V^T||_F^2`` on column-stacked ``V`` (``d x r``).

    The Lipschitz estimate ``(||D^T D|| / m) (6 R^2 + 2)`` bounds the Hessian
    on ``||V||_F <= R``, with ``R = sqrt(r) + 1`` by default.
    """
    D = np.asarray(D, dtype=float)
    m, d = D.shape
    S = D.T @ D
    trS = float(np.trace(S))
    R = math.sqrt(r) + 1.0 if radius is None else float(radius)
    s_norm = float(np.linalg.norm(S, 2))
    check = _warn_outside(R)

    def value(x):
        V = mat(x, d, r)
        P = S @ V
        VtV = V.T @ V
        VtP = V.T @ P
        return float((trS - 2.0 * np.trace(VtP) + np.sum(VtP * VtV)) / (2.0 * m))

    def gradient(x):
        V = mat(x, d, r)
        check(float(np.linalg.norm(x)))
        P = S @ V
        return vec((P @ (V.T @ V) + V @ (V.T @ P) - 2.0 * P) / m)

    term = SmoothTerm(value, gradient, lipschitz=s_norm / m * (6.0 * R * R + 2.0), name="pca")
    return term


def build_sparse_pca(spec: SparsePcaSpec) -> CompositeProblem:
    """``x_1 = vec(Y)`` on the orthogonality set, ``x_2 = vec(V)`` carrying loss and l1; ``-Y + V = 0``."""
    if spec.reg == "l0":
        raise ValueError("the l0 penalty is nonconvex and cannot be the smoothed last-block term; use reg='l1'")
    D = np.asarray(spec.data, dtype=float)
    m, d = D.shape
    r = spec.r
    k = d * r
    loss = sparse_pca_loss(D, r)
    R = math.sqrt(r) + 1.0
    s_norm = float(np.linalg.norm(D.T @ D, 2))
    coupling = BlockOperator([ScaledIdentity(-1.0, k), ScaledIdentity(1.0, k)])
    return CompositeProblem(
        smooth=(zero_smooth(k), loss),
        prox=(indicator_orthogonality(d, r), l1(spec.rho, k)),
        coupling=coupling,
        rhs=np.zeros(k),
        spectral=SpectralInfo.identity_like(1.0, (1.0, 1.0)),
        c_f=s_norm / m * (2.0 * R**3 + 2.0 * R),
        name="sparse-pca",
    )


def build_phase_retrieval(spec: PhaseRetrievalSpec) -> CompositeProblem:
    """``x_1 = y >= 0``, ``x_2 = v`` with quartic loss and l1; ``y - D v = 0``."""
    G = np.asarray(spec.G, dtype=float)
    z = np.asarray(spec.z, dtype=float).reshape(-1)
    Dm = np.asarray(spec.D, dtype=float)
    m, d = G.shape
    r = Dm.shape[0]
    if z.shape != (m,) or Dm.shape[1] != d:
        raise ValueError("inconsistent shapes for G, z, D")
    coupling = BlockOperator([ScaledIdentity(1.0, r), MatrixMap(-Dm)])
    spectral = estimate_spectral(coupling)
    if not spectral.lambda_down > 0:
        raise ValueError("D D^T must be positive definite (lambda_down > 0)")
    R = float(spec.radius)
    g_norm = float(np.linalg.norm(G, 2))
    row2 = float(np.max(np.sum(G * G, axis=1)))
    zmax = float(np.max(np.abs(z))) if m else 0.0
    check = _warn_outside(R)

    def value(v):
        Gv = G @ v
        res = Gv * Gv - z
        return float(0.5 * res @ res)

    def gradient(v):
        check(float(np.linalg.norm(v)))
        Gv = G @ v
        return 2.0 * G.T @ (Gv * (Gv * Gv - z))

    # Hessian G^T diag(6 (Gv)^2 - 2 z) G on ||v|| <= R
    lip = g_norm**2 * (6.0 * row2 * R * R + 2.0 * zmax)
    c_f = 2.0 * g_norm * math.sqrt(m) * math.sqrt(row2) * R * (row2 * R * R + zmax)
    loss = SmoothTerm(value, gradient, lipschitz=lip, name="phase")
    return CompositeProblem(
        smooth=(zero_smooth(r), loss),
        prox=(indicator_nonneg(), l1(spec.rho, d)),
        coupling=coupling,
        rhs=np.zeros(r),
        spectral=spectral,
        c_f=c_f,
        name="phase-retrieval",
    )


def build_robust_regression(spec: RobustRegressionSpec) -> CompositeProblem:
    """``x_1 = v`` with ``||v||_0 <= s``, ``x_2 = y`` with ``||y||_1``; ``-G v + y = -z``."""
    G = np.asarray(spec.G, dtype=float)
    z = np.asarray(spec.z, dtype=float).reshape(-1)
    m, d = G.shape
    if not 0 <= spec.s <= d:
        raise ValueError(f"sparsity level {spec.s} outside [0, {d}]")
    if z.shape != (m,):
        raise ValueError("z must have one entry per row of G")
    coupling = BlockOperator([MatrixMap(-G), ScaledIdentity(1.0, m)])
    norm_G = float(np.linalg.norm(G, 2)) if G.size else 0.0
    return CompositeProblem(
        smooth=(zero_smooth(d), zero_smooth(m)),
        prox=(indicator_cardinality(spec.s), l1(1.0, m)),
        coupling=coupling,
        rhs=-z,
        spectral=SpectralInfo(1.0, 1.0, 1.0, (norm_G, 1.0)),
        c_f=0.0,
        name="robust-regression",
    )


def prepare_columns(D) -> np.ndarray:
    """Center each column, then scale it to unit norm (all-zero columns stay zero)."""
    D = np.array(D, dtype=float)
    D -= D.mean(axis=0, keepdims=True)
    assert np.allclose(D.mean(axis=0), 0.0, atol=1e-12 * max(1.0, float(np.abs(D).max(initial=0.0))))
    norms = np.linalg.norm(D, axis=0)
    D /= np.where(norms > 0, norms, 1.0)
    return D


def synth_data(kind: str, m: int, d: int, seed: int) -> np.ndarray:
    """Seeded ``m x d`` data matrix, centered then column-normalized."""
    if kind != "randn":
        raise ValueError(f"unknown synthetic kind {kind!r}")
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    rng = np.random.default_rng(seed)
    return prepare_columns(rng.standard_normal((m, d)))


def load_data(path, rows: Optional[int] = None, cols: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Read a CSV matrix, optionally subsample rows/columns at random, then prepare columns."""
    D = read_matrix_csv(path)
    rng = np.random.default_rng(seed)
    if rows is not None and rows < D.shape[0]:
        D = D[np.sort(rng.choice(D.shape[0], size=rows, replace=False))]
    if cols is not None and cols < D.shape[1]:
        D = D[:, np.sort(rng.choice(D.shape[1], size=cols, replace=False))]
    return prepare_columns(D)


def synth_phase_retrieval(m: int, d: int, r: int, seed: int, rho: float, sparsity: int = 3) -> PhaseRetrievalSpec:
    """Gaussian measurements of a sparse signal and a random wide ``D``."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, d)) / math.sqrt(m)
    v = np.zeros(d)
    support = rng.choice(d, size=min(sparsity, d), replace=False)
    v[support] = rng.standard_normal(support.size)
    z = (G @ v) ** 2
    D = rng.standard_normal((r, d)) / math.sqrt(d)
    return PhaseRetrievalSpec(G=G, z=z, D=D, rho=rho, radius=2.0 * max(1.0, float(np.linalg.norm(v))))


def sparse_pca_start(d: int, r: int, seed: int) -> np.ndarray:
    """Seeded ``d x r`` matrix with orthonormal columns, column-stacked."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, r)))
    return vec(Q)
