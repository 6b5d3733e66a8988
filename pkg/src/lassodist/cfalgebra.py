"""Characteristic-function identities for soft-thresholded estimators.

The central object is the identity linking the estimate x_hat, its
subgradient certificate gamma, and the Gaussian statistic A^T b:
W x_hat + tau * gamma = A^T b holds exactly per replicate, so the CF of
the left side equals the Gaussian CF exp(i u.W x - sigma^2/2 u.W u).
Replacing gamma by the sign vector of x_hat turns the left side into a
2^N expansion over sign subsets with sin/cos coefficients; that expansion
ignores the atom of x_hat at zero and the gap between the two is a
reported diagnostic, not an error.

Hilbert-transform terms are never touched in the frequency domain: each
one equals a sign-weighted sample expectation, which is what the
estimators below compute.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import erfc, ndtr

from .linmodel import MeasurementModel

# 2^N expansion guard
MAX_EXPANSION_DIM = 20
QUERY_TOL = 1e-12
DEFAULT_QUADRATURE_NODES = 128
_DEGENERATE_H_TOL = 1e-12


class SignPolicy(enum.Enum):
    """How the sign of an exactly-zero coordinate is resolved.

    ZERO matches the density-based expansion (the atom contributes no sign
    weight). FROM_GAMMA substitutes the subgradient value, which carries
    the exact per-replicate KKT information.
    """

    ZERO = "zero"
    FROM_GAMMA = "from_gamma"


class ExpansionSizeError(ValueError):
    """Dimension exceeds the 2^N expansion cap."""


class DegenerateHyperplaneError(ValueError):
    """Hyperplane normal too small to orient the sign split."""


@dataclass(frozen=True)
class CfQuery:
    """Frequency vector u, its Gram image c = W u, and the signed subset."""

    u: np.ndarray
    c: np.ndarray
    subset: tuple[int, ...]

    def __post_init__(self):
        if self.u.shape != self.c.shape:
            raise ValueError("u and c must have the same length")
        if any(not 0 <= k < self.u.size for k in self.subset):
            raise ValueError("subset indices out of range")


def make_query(u, model: MeasurementModel, subset=()) -> CfQuery:
    u = np.asarray(u, dtype=np.float64)
    c = model.W @ u
    return CfQuery(u=u, c=c, subset=tuple(int(k) for k in subset))


def check_query(query: CfQuery, model: MeasurementModel) -> None:
    if np.max(np.abs(query.c - model.W @ query.u), initial=0.0) > QUERY_TOL:
        raise ValueError("stored c disagrees with W u")


@dataclass(frozen=True)
class GaussianSurrogate:
    """Gaussian stand-in (mean m, covariance R) plus a hyperplane normal h."""

    m: np.ndarray
    R: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.R - self.R.T)) > 1e-12:
            raise ValueError("R must be symmetric")
        if np.min(np.linalg.eigvalsh(self.R)) < -1e-10:
            raise ValueError("R must be positive semidefinite")
        if self.m.shape != self.h.shape or self.R.shape != (self.m.size, self.m.size):
            raise ValueError("m, R, h dimensions disagree")


def surrogate_for_component(model: MeasurementModel, k: int) -> GaussianSurrogate:
    """Surrogate for z = W x_hat at 1-based component k: m = W x, R = sigma^2 W, h = pinv(W)[:, k]."""
    H = np.linalg.pinv(model.W, hermitian=True)
    return GaussianSurrogate(m=model.W @ model.x_true,
                             R=model.sigma ** 2 * model.W,
                             h=H[:, k - 1])


def gaussian_rhs_cf(u, model: MeasurementModel) -> complex:
    """exp(i u.W x - sigma^2/2 u.W u): the CF of A^T b."""
    u = np.asarray(u, dtype=np.float64)
    wu = model.W @ u
    return complex(np.exp(1j * (u @ (model.W @ model.x_true)) -
                          0.5 * model.sigma ** 2 * (u @ wu)))


def slice_rhs_cf(u: float, model: MeasurementModel, k: int) -> complex:
    """Gaussian slice target for 1-based component k: exp(i u w_k.x - u^2 sigma^2 w_kk / 2)."""
    j = k - 1
    return complex(np.exp(1j * u * (model.W[:, j] @ model.x_true) -
                          0.5 * u * u * model.sigma ** 2 * model.W[j, j]))


def empirical_cf(samples, u) -> complex:
    """Sample mean of exp(i u . y) over the rows of ``samples``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    if samples.ndim == 1:
        phases = samples * float(u)
    else:
        phases = samples @ np.asarray(u, dtype=np.float64)
    return complex(np.mean(np.exp(1j * phases)))


def _signs(samples, policy: SignPolicy, gammas):
    s = np.sign(samples)
    if policy is SignPolicy.FROM_GAMMA:
        if gammas is None:
            raise ValueError("FROM_GAMMA policy needs the gamma samples")
        gammas = np.asarray(gammas, dtype=np.float64)
        if gammas.shape != samples.shape:
            raise ValueError("gamma samples must match the estimate samples in shape")
        s = np.where(samples == 0, gammas, s)
    return s


def signed_cf_term(samples, query: CfQuery, sign_at_zero: SignPolicy = SignPolicy.ZERO,
                   gammas=None) -> complex:
    """Sign-weighted CF term E[prod_{k in subset} i*S(x_k) * exp(i c . x)].

    This is the sample-domain value of the Hilbert-transformed CF along the
    subset dimensions; S(0) follows ``sign_at_zero``.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("signed_cf_term needs at least one sample")
    s = _signs(samples, sign_at_zero, gammas)
    weights = np.ones(samples.shape[0], dtype=np.complex128)
    for k in query.subset:
        weights = weights * (1j * s[:, k])
    return complex(np.mean(weights * np.exp(1j * (samples @ query.c))))


def _check_expansion_dim(N: int) -> None:
    if N > MAX_EXPANSION_DIM:
        raise ExpansionSizeError(
            f"N = {N} implies 2^{N} = {2 ** N} expansion terms; cap is N <= {MAX_EXPANSION_DIM}")


def sign_expansion_cf(samples, u, model: MeasurementModel,
                      sign_at_zero: SignPolicy = SignPolicy.ZERO, gammas=None) -> complex:
    """Sign-expansion CF of W x_hat + tau * S(x_hat) at frequency u.

    With the ZERO policy this is the per-sample product form
    E[prod_j (cos(tau u_j) + i S(x_j) sin(tau u_j)) exp(i c . x)], which
    equals the 2^N subset expansion algebraically. With FROM_GAMMA the
    sign slots carry the exact subgradient phases,
    E[exp(i (c . x + tau u . gamma))], making the value identical to the
    empirical CF of A^T b on the same replicates: interior subgradients
    enter through exp(i tau u gamma), not through the sin/cos split.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("sign_expansion_cf needs at least one sample")
    u = np.asarray(u, dtype=np.float64)
    _check_expansion_dim(samples.shape[1])
    c = model.W @ u
    phases = samples @ c
    if sign_at_zero is SignPolicy.FROM_GAMMA:
        if gammas is None:
            raise ValueError("FROM_GAMMA policy needs the gamma samples")
        gammas = np.asarray(gammas, dtype=np.float64)
        if gammas.shape != samples.shape:
            raise ValueError("gamma samples must match the estimate samples in shape")
        return complex(np.mean(np.exp(1j * (phases + model.tau * (gammas @ u)))))
    s = np.sign(samples)
    factors = np.cos(model.tau * u) + 1j * s * np.sin(model.tau * u)
    return complex(np.mean(np.prod(factors, axis=1) * np.exp(1j * phases)))


@dataclass(frozen=True)
class ExpansionTerm:
    subset: tuple[int, ...]
    coefficient: float
    term: complex


def sign_expansion_terms(samples, u, model: MeasurementModel,
                         sign_at_zero: SignPolicy = SignPolicy.ZERO,
                         gammas=None) -> tuple[complex, list[ExpansionTerm]]:
    """Explicit 2^N subset expansion of the sign-expansion CF.

    Returns the summed value together with every term: for each subset I,
    the coefficient prod_{k in I} sin(tau u_k) * prod_{j not in I} cos(tau u_j)
    and the sign-weighted CF term for I. Agrees with the ZERO-policy
    product form of sign_expansion_cf to machine precision.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("sign_expansion_terms needs at least one sample")
    u = np.asarray(u, dtype=np.float64)
    N = samples.shape[1]
    _check_expansion_dim(N)
    c = model.W @ u
    sin_u = np.sin(model.tau * u)
    cos_u = np.cos(model.tau * u)
    s = _signs(samples, sign_at_zero, gammas)
    base = np.exp(1j * (samples @ c))
    terms = []
    total = 0.0 + 0.0j
    for size in range(N + 1):
        for subset in combinations(range(N), size):
            inside = list(subset)
            outside = [j for j in range(N) if j not in subset]
            coef = float(np.prod(sin_u[inside]) * np.prod(cos_u[outside]))
            weights = np.ones(samples.shape[0], dtype=np.complex128)
            for k in inside:
                weights = weights * (1j * s[:, k])
            term = complex(np.mean(weights * base))
            terms.append(ExpansionTerm(subset=subset, coefficient=coef, term=term))
            total += coef * term
    return total, terms


def slice_lhs_cf(samples, u: float, tau: float) -> complex:
    """Scalar slice estimator E[exp(i u (z + tau * S(z)))] with S(0) = 0.

    For nonzero samples this equals cos(tau u) F_z(u) plus sin(tau u) times
    the sign-weighted transform of z.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("slice_lhs_cf needs at least one sample")
    shifted = samples + tau * np.sign(samples)
    return complex(np.mean(np.exp(1j * float(u) * shifted)))


def _phi_complex(z):
    """Standard normal CDF continued to complex arguments."""
    return 0.5 * erfc(-z / math.sqrt(2.0))


def _gaussian_cdf_fourier(mean: float, var: float, g1: float, k0: float, v: float,
                          u: float, nodes: int) -> complex:
    """integral of N(z; mean, var) * (1 - 2 Phi((g1 z - k0)/sqrt(v))) * e^{iuz} dz.

    Gauss-Hermite at the requested node count resolves the Phi factor only
    while its transition is wide relative to the node spacing; past that the
    exact half-line reduction (complex-erfc form) takes over, since the
    quadrature error there grows to ~1e-3 regardless of sensible node counts.
    """
    denom2 = v + g1 * g1 * var
    if var <= 0:
        # degenerate marginal: point mass at `mean`
        arg = (g1 * mean - k0) / math.sqrt(max(v, 1e-300))
        return complex(np.exp(1j * u * mean) * (1.0 - 2.0 * ndtr(arg)))
    steepness = abs(g1) * math.sqrt(var / max(v, 1e-300))
    if steepness <= 0.2 * math.sqrt(nodes):
        xs, ws = np.polynomial.hermite.hermgauss(nodes)
        z = mean + math.sqrt(2.0 * var) * xs
        sv = math.sqrt(max(v, 1e-300))
        vals = (1.0 - 2.0 * ndtr((g1 * z - k0) / sv)) * np.exp(1j * u * z)
        return complex(np.sum(ws * vals) / math.sqrt(math.pi))
    fz = np.exp(1j * u * mean - 0.5 * u * u * var)
    w = ((g1 * mean - k0) + 1j * u * g1 * var) / math.sqrt(max(denom2, 1e-300))
    return complex(fz * (1.0 - 2.0 * _phi_complex(w)))


def _signed_gaussian_ft(mean: float, var: float, u: float) -> complex:
    """integral of N(z; mean, var) * S(z) * e^{iuz} dz (exact half-line form)."""
    if var <= 0:
        return complex(np.exp(1j * u * mean) * np.sign(mean))
    sd = math.sqrt(var)
    fz = np.exp(1j * u * mean - 0.5 * u * u * var)
    w = (-mean / sd) - 1j * u * sd
    return complex(fz * (1.0 - 2.0 * _phi_complex(w)))


def slice_term_gaussian(surrogate: GaussianSurrogate, k: int, u: float,
                        quadrature_nodes: int = DEFAULT_QUADRATURE_NODES) -> complex:
    """Sign-weighted Fourier slice i * E[S(h . z) exp(i u z_k)] under the surrogate.

    ``k`` is 1-based. Dimensions other than k are removed one at a time by
    Gaussian conditioning: the half-space indicator stays a Phi of an affine
    form whose offset and accumulated variance are updated at every step,
    until a single Fourier integral over z_k remains. Pseudoinverses keep
    the recursion valid for singular covariances. The result flips with the
    sign of the pivot entry of h.
    """
    if quadrature_nodes < 32:
        raise ValueError("quadrature_nodes must be at least 32")
    m = np.asarray(surrogate.m, dtype=np.float64)
    R = np.asarray(surrogate.R, dtype=np.float64)
    h = np.asarray(surrogate.h, dtype=np.float64)
    N = m.size
    if not 1 <= k <= N:
        raise ValueError(f"component k must be in 1..{N}")
    j = k - 1
    if np.max(np.abs(h)) < _DEGENERATE_H_TOL:
        raise DegenerateHyperplaneError("hyperplane normal is numerically zero")

    others = [i for i in range(N) if i != j]
    if N == 1 or max(abs(h[i]) for i in others) < _DEGENERATE_H_TOL:
        # hyperplane aligned with the Fourier axis: S(h . z) = sign(h_k) S(z_k)
        if abs(h[j]) < _DEGENERATE_H_TOL:
            raise DegenerateHyperplaneError(
                "pivot entry of h below 1e-12; cannot orient the sign split")
        return 1j * np.sign(h[j]) * _signed_gaussian_ft(m[j], R[j, j], u)

    # order: Fourier dimension first, remaining dims by |h| so the pivot
    # (largest |h| among them) is eliminated first
    others.sort(key=lambda i: abs(h[i]))
    order = [j] + others
    m = m[order]
    R = R[np.ix_(order, order)]
    h = h[order]
    pivot = h[-1]
    sign_flip = float(np.sign(pivot))
    s_vec = -h[:-1] / pivot  # half-space: z_last vs s_vec . z_rest

    d = N - 1
    R_lead = R[:d, :d]
    r = R[:d, d]
    R_pinv = np.linalg.pinv(R_lead, hermitian=True)
    q = max(float(R[d, d] - r @ R_pinv @ r), 0.0)
    g = s_vec - R_pinv @ r
    k0 = float(m[d] - r @ R_pinv @ m[:d])
    v = q
    while d > 1:
        d -= 1
        R_lead = R[:d, :d]
        r = R[:d, d]
        R_pinv = np.linalg.pinv(R_lead, hermitian=True)
        q_d = max(float(R[d, d] - r @ R_pinv @ r), 0.0)
        g_d = float(g[d])
        g = g[:d] + g_d * (R_pinv @ r)
        k0 = k0 - g_d * float(m[d] - r @ R_pinv @ m[:d])
        # v * (1 + beta_d^2) with beta_d = g_d sqrt(q_d / v)
        v = v + g_d * g_d * q_d

    inner = _gaussian_cdf_fourier(float(m[0]), float(R[0, 0]), float(g[0]), k0, v,
                                  float(u), quadrature_nodes)
    return 1j * sign_flip * inner
