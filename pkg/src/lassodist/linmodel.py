"""Linear measurement models and restricted-isometry scans.

A model bundles a sensing matrix with unit-norm columns, a sparse true
parameter, the noise level, and the l1 threshold, plus the derived Gram
matrix used throughout the characteristic-function machinery.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

COLUMN_NORM_TOL = 1e-12
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
# singular values below RANK_RTOL * s_max count as zero
RANK_RTOL = 1e-10
DEFAULT_ENUMERATION_CAP = 10**6


class DimensionError(ValueError):
    """Incompatible or unsupported matrix/vector dimensions."""


class EnumerationCapError(ValueError):
    """Support enumeration would exceed the configured cap."""


class ModelKind(enum.Enum):
    ORTHOGONAL = "orthogonal"
    FULL_RANK = "full_rank"
    SINGULAR = "singular"


@dataclass(frozen=True)
class MeasurementModel:
    """Sensing matrix A (M x N, unit-norm columns), true parameter, and noise scales.

    W = A^T A is the Gram matrix; ``rank`` is its numerical rank and
    ``kind`` classifies W as orthogonal / full rank / singular.
    """

    A: np.ndarray
    x_true: np.ndarray
    sigma: float
    tau: float
    W: np.ndarray
    kind: ModelKind
    rank: int

    @property
    def n_measurements(self) -> int:
        return self.A.shape[0]

    @property
    def n_params(self) -> int:
        return self.A.shape[1]

    @property
    def sparsity(self) -> int:
        return int(np.count_nonzero(self.x_true))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    a.setflags(write=False)
    return a


def _make_model(A: np.ndarray, x: np.ndarray, sigma: float, tau: float) -> MeasurementModel:
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError("A must be a 2-d matrix")
    M, N = A.shape
    if x.shape != (N,):
        raise DimensionError(f"x has length {x.size}, expected {N}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if tau < 0:
        raise ValueError("tau must be nonnegative")

    norms = np.linalg.norm(A, axis=0)
    if np.max(np.abs(norms - 1.0)) > COLUMN_NORM_TOL:
        raise ValueError("columns of A must have unit norm")
    W = A.T @ A
    if np.max(np.abs(W - W.T)) > SYMMETRY_TOL:
        raise ValueError("Gram matrix is not symmetric")

    svals = np.linalg.svd(A, compute_uv=False)
    rank = int(np.count_nonzero(svals > RANK_RTOL * svals[0])) if svals.size else 0
    if np.max(np.abs(W - np.eye(N))) < 1e-10:
        kind = ModelKind.ORTHOGONAL
    elif rank == N:
        kind = ModelKind.FULL_RANK
    else:
        kind = ModelKind.SINGULAR
    return MeasurementModel(
        A=_freeze(A), x_true=_freeze(x), sigma=float(sigma), tau=float(tau),
        W=_freeze(W), kind=kind, rank=rank,
    )


def sylvester_hadamard(M: int) -> np.ndarray:
    """The M x M Sylvester Hadamard matrix (M a power of two), entries +-1."""
    if M < 1 or M & (M - 1) != 0:
        raise DimensionError(f"Hadamard order must be a power of two, got {M}")
    H = np.array([[1.0]])
    while H.shape[0] < M:
        H = np.block([[H, H], [H, -H]])
    return H


def build_hadamard_model(M: int, x, sigma: float, tau: float) -> MeasurementModel:
    """Orthogonal model: A = Hadamard(M) / sqrt(M), so W = I."""
    A = sylvester_hadamard(M) / math.sqrt(M)
    return _make_model(A, x, sigma, tau)


def build_bernoulli_model(M: int, N: int, x, sigma: float, tau: float,
                          seed: int) -> MeasurementModel:
    """Random +-1 matrix with columns rescaled to unit norm.

    Entries are drawn iid uniform on {-1, +1} from a generator seeded with
    ``seed``; the construction is deterministic for a fixed seed.
    """
    if M < 1 or N < 1:
        raise DimensionError("M and N must be positive")
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, size=(M, N)).astype(np.float64) * 2.0 - 1.0
    A /= np.linalg.norm(A, axis=0)
    return _make_model(A, x, sigma, tau)


def sample_measurement(model: MeasurementModel, rng: np.random.Generator) -> np.ndarray:
    """Draw b = A x + v with v ~ N(0, sigma^2 I) from the supplied stream."""
    v = model.sigma * rng.standard_normal(model.n_measurements)
    return model.A @ model.x_true + v


def rip_constant(A: np.ndarray, K: int, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Restricted isometry constant delta_K by exhaustive support enumeration.

    delta_K = max over all supports S with |S| = K of
    max(lambda_max(W_S) - 1, 1 - lambda_min(W_S)) where W_S is the K x K
    Gram submatrix. Exact brute force; raises EnumerationCapError when
    C(N, K) exceeds ``cap`` (no sampling fallback).
    """
    A = np.asarray(A, dtype=np.float64)
    N = A.shape[1]
    if not 1 <= K <= N:
        raise ValueError(f"K must be in 1..{N}, got {K}")
    n_supports = math.comb(N, K)
    if n_supports > cap:
        raise EnumerationCapError(
            f"C({N},{K}) = {n_supports} supports exceeds the enumeration cap {cap}")
    W = A.T @ A
    delta = 0.0
    for support in combinations(range(N), K):
        idx = list(support)
        eigs = np.linalg.eigvalsh(W[np.ix_(idx, idx)])
        delta = max(delta, eigs[-1] - 1.0, 1.0 - eigs[0])
    return max(delta, 0.0)
