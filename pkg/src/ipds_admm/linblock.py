"""Block vectors, block-structured linear operators and spectral constants.

Vectors are 1-D float64 numpy arrays. A block vector is a sequence of such
arrays, one per block. Matrices living inside a block (sparse PCA loadings,
for instance) are stored column-stacked, see :func:`vec` and :func:`mat`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "SpectralError",
    "BlockVector",
    "LinearMap",
    "MatrixMap",
    "ScaledIdentity",
    "FunctionMap",
    "BlockOperator",
    "SpectralInfo",
    "apply",
    "apply_adjoint_block",
    "estimate_spectral",
    "power_iteration",
    "vec",
    "mat",
    "read_matrix_csv",
    "write_matrix_csv",
]

_SPECTRAL_SEED = 20240506


class DimensionError(ValueError):
    """Raised when block dimensions do not line up."""

    def __init__(self, message: str, block: int | None = None):
        super().__init__(message if block is None else f"block {block}: {message}")
        self.block = block


class SpectralError(RuntimeError):
    """Power iteration did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, residual: float):
        super().__init__(f"{message} (estimate={estimate!r}, residual={residual!r})")
        self.estimate = estimate
        self.residual = residual


def vec(V: np.ndarray) -> np.ndarray:
    """Stack the columns of ``V`` into one vector."""
    return np.asarray(V, dtype=float).reshape(-1, order="F")


def mat(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(x, dtype=float).reshape((rows, cols), order="F")


def _as_vector(x, name="x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


class BlockVector:
    """Ordered tuple of dense block vectors ``(x_1, ..., x_n)``."""

    __slots__ = ("blocks",)

    def __init__(self, blocks: Sequence[np.ndarray]):
        if len(blocks) < 1:
            raise DimensionError("a block vector needs at least one block")
        self.blocks = tuple(np.asarray(b, dtype=float) for b in blocks)

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.size for b in self.blocks)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __add__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector([a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, c: float) -> "BlockVector":
        return BlockVector([c * a for a in self.blocks])

    __rmul__ = __mul__

    def dot(self, other: "BlockVector") -> float:
        return float(sum(np.dot(a, b) for a, b in zip(self.blocks, other.blocks)))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.dot(a, a) for a in self.blocks)))

    def copy(self) -> "BlockVector":
        return BlockVector([b.copy() for b in self.blocks])

    def __repr__(self) -> str:
        return f"BlockVector(dims={self.dims})"


class LinearMap:
    """A linear map ``R^in_dim -> R^out_dim`` with an adjoint."""

    in_dim: int
    out_dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gram_max(self, tol: float = 1e-12, max_iter: int = 10000) -> float:
        """Largest eigenvalue of ``A^T A`` (the squared operator norm)."""
        if min(self.in_dim, self.out_dim) == 0:
            return 0.0
        if self.in_dim <= self.out_dim:
            gram = lambda v: self.adjoint(self.apply(v))
            dim = self.in_dim
        else:
            gram = lambda v: self.apply(self.adjoint(v))
            dim = self.out_dim
        return power_iteration(gram, dim, tol=tol, max_iter=max_iter)[0]

    def to_dense(self) -> np.ndarray:
        eye = np.eye(self.in_dim)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.in_dim)])


class MatrixMap(LinearMap):
    """Explicit dense matrix."""

    def __init__(self, matrix):
        M = np.array(matrix, dtype=float, copy=True)
        if M.ndim != 2:
            raise DimensionError(f"matrix must be 2-D, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix has non-finite entries")
        M.setflags(write=False)
        self.matrix = M
        self.out_dim, self.in_dim = M.shape

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y

    def to_dense(self):
        return self.matrix.copy()

    def __neg__(self):
        return MatrixMap(-self.matrix)


class ScaledIdentity(LinearMap):
    """``c * I`` on ``R^dim``; spectral quantities are closed-form."""

    def __init__(self, scale: float, dim: int):
        if dim < 1:
            raise DimensionError("dimension must be positive")
        if not np.isfinite(scale):
            raise ValueError("scale must be finite")
        self.scale = float(scale)
        self.in_dim = self.out_dim = int(dim)

    def apply(self, x):
        return self.scale * x

    def adjoint(self, y):
        return self.scale * y

    def gram_max(self, tol=1e-12, max_iter=10000):
        return self.scale**2

    def to_dense(self):
        return self.scale * np.eye(self.in_dim)

    def __neg__(self):
        return ScaledIdentity(-self.scale, self.in_dim)


class FunctionMap(LinearMap):
    """Matrix-free map given by an ``(apply, adjoint)`` pair."""

    def __init__(self, apply: Callable, adjoint: Callable, in_dim: int, out_dim: int):
        self._apply = apply
        self._adjoint = adjoint
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)

    def apply(self, x):
        return np.asarray(self._apply(x), dtype=float)

    def adjoint(self, y):
        return np.asarray(self._adjoint(y), dtype=float)


def _as_linear_map(A) -> LinearMap:
    if isinstance(A, LinearMap):
        return A
    return MatrixMap(A)


class BlockOperator:
    """The coupling ``x -> sum_i A_i x_i`` with every ``A_i`` mapping into ``R^m``."""

    def __init__(self, blocks: Sequence, output_dim: int | None = None):
        maps = [_as_linear_map(A) for A in blocks]
        if not maps:
            raise DimensionError("a block operator needs at least one block")
        m = maps[0].out_dim if output_dim is None else int(output_dim)
        for i, A in enumerate(maps):
            if A.out_dim != m:
                raise DimensionError(f"codomain {A.out_dim} != {m}", block=i)
        self.blocks = tuple(maps)
        self.output_dim = m

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(A.in_dim for A in self.blocks)

    def __getitem__(self, i: int) -> LinearMap:
        return self.blocks[i]


def apply(op: BlockOperator, x) -> np.ndarray:
    """Return ``sum_i A_i x_i``."""
    blocks = x.blocks if isinstance(x, BlockVector) else x
    if len(blocks) != op.n:
        raise DimensionError(f"expected {op.n} blocks, got {len(blocks)}")
    out = np.zeros(op.output_dim)
    for i, (A, xi) in enumerate(zip(op.blocks, blocks)):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (A.in_dim,):
            raise DimensionError(f"expected dimension {A.in_dim}, got {xi.shape}", block=i)
        out += A.apply(xi)
    return out


def apply_adjoint_block(op: BlockOperator, i: int, y) -> np.ndarray:
    """Return ``A_i^T y``."""
    if not 0 <= i < op.n:
        raise IndexError(f"block index {i} out of range for {op.n} blocks")
    y = np.asarray(y, dtype=float)
    if y.shape != (op.output_dim,):
        raise DimensionError(f"expected dimension {op.output_dim}, got {y.shape}", block=i)
    return op.blocks[i].adjoint(y)


def power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float = 1e-12,
    max_iter: int = 10000,
    seed: int = _SPECTRAL_SEED,
) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric positive semidefinite operator.

    Stops when the eigen-residual ``||Mv - lam v||`` drops below
    ``tol * lam``. The starting vector comes from a fixed seed so that
    repeated calls return identical estimates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam, resid = 0.0, np.inf
    for _ in range(max_iter):
        w = matvec(v)
        lam = float(np.dot(v, w))
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0, v
        resid = float(np.linalg.norm(w - lam * v))
        if resid <= tol * max(abs(lam), np.finfo(float).tiny):
            return lam, v
        v = w / wn
    raise SpectralError("power iteration did not converge", lam, resid)


@dataclass(frozen=True)
class SpectralInfo:
    """Spectral constants of the last coupling block and block norms."""

    lambda_up: float
    lambda_down: float
    lambda_down_prime: float
    op_norms: tuple[float, ...]

    def __post_init__(self):
        if not (self.lambda_up >= self.lambda_down >= 0.0 and self.lambda_down_prime >= 0.0):
            raise ValueError(f"inconsistent spectral constants: {self}")

    @property
    def kappa(self) -> float:
        if self.lambda_down <= 0.0:
            return np.inf
        return max(self.lambda_up / self.lambda_down, 1.0)

    @classmethod
    def identity_like(cls, scale: float, norms: Sequence[float]) -> "SpectralInfo":
        s2 = float(scale) ** 2
        return cls(s2, s2, s2, tuple(float(v) for v in norms))


def _extreme_eigs(gram: Callable, dim: int, tol: float, max_iter: int) -> tuple[float, float]:
    lam_max, _ = power_iteration(gram, dim, tol=tol, max_iter=max_iter)
    if lam_max == 0.0:
        return 0.0, 0.0
    shifted = lambda v: lam_max * v - gram(v)
    gap, _ = power_iteration(shifted, dim, tol=tol, max_iter=max_iter)
    # shift keeps the spectrum of ``shifted`` inside [0, lam_max]
    lam_min = min(max(lam_max - gap, 0.0), lam_max)
    return lam_max, lam_min


def estimate_spectral(op: BlockOperator, tol: float = 1e-12, max_iter: int = 20000) -> SpectralInfo:
    """Estimate ``lambda_max/min(A_n A_n^T)``, ``lambda_min(A_n^T A_n)`` and ``||A_i||``.

    Scaled identities are handled in closed form; everything else goes
    through power iteration (and power iteration on the shifted operator for
    the smallest eigenvalue).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    norms = tuple(float(np.sqrt(A.gram_max(tol, max_iter))) for A in op.blocks)
    last = op.blocks[-1]
    if isinstance(last, ScaledIdentity):
        return SpectralInfo.identity_like(last.scale, norms)
    outer = lambda y: last.apply(last.adjoint(y))
    inner = lambda x: last.adjoint(last.apply(x))
    lam_up, lam_down = _extreme_eigs(outer, last.out_dim, tol, max_iter)
    if last.in_dim > last.out_dim:
        # A^T A has a nontrivial kernel when A is wide
        lam_down_prime = 0.0
    else:
        _, lam_down_prime = _extreme_eigs(inner, last.in_dim, tol, max_iter)
    lam_down = min(lam_down, lam_up)
    return SpectralInfo(lam_up, lam_down, min(lam_down_prime, lam_up), norms)


def read_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix written one row per line with ``.`` decimal points."""
    M = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: matrix has non-finite entries")
    return M


def write_matrix_csv(path, M) -> None:
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")
