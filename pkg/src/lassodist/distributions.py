"""Closed-form marginal laws of soft-thresholded Gaussian estimates.

Each law describes one scalar component: a Gaussian with mean ``location``
and variance ``scale2``, pushed through the soft-threshold map with
parameter ``tau``. The resulting density splits into two shifted Gaussian
branches on v > 0 and v < 0 plus a point mass at exactly zero. The ML
variant (tau = 0) is the plain Gaussian.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


class LawKind(enum.Enum):
    ORTHOGONAL_COMPONENT = "orthogonal"
    TRANSFORMED_COMPONENT = "transformed"
    ML_COMPONENT = "ml"


class InvalidLawError(ValueError):
    """Law parameters outside their domain."""


@dataclass(frozen=True)
class MarginalLaw:
    kind: LawKind
    location: float
    scale2: float
    tau: float

    def __post_init__(self):
        if self.scale2 <= 0:
            raise InvalidLawError("scale2 must be positive")
        if self.tau < 0:
            raise InvalidLawError("tau must be nonnegative")

    @property
    def scale(self) -> float:
        return math.sqrt(self.scale2)


def orthogonal_law(x_k: float, sigma: float, tau: float) -> MarginalLaw:
    """Law of one estimate component under an orthogonal Gram matrix."""
    return MarginalLaw(LawKind.ORTHOGONAL_COMPONENT, float(x_k), float(sigma) ** 2, float(tau))


def transformed_law(w_dot_x: float, sigma: float, w_kk: float, tau: float) -> MarginalLaw:
    """Approximate law of component k of z = W x_hat: location w_k . x, variance sigma^2 w_kk."""
    if w_kk <= 0:
        raise InvalidLawError(f"w_kk must be positive, got {w_kk}")
    return MarginalLaw(LawKind.TRANSFORMED_COMPONENT, float(w_dot_x),
                       float(sigma) ** 2 * float(w_kk), float(tau))


def transformed_law_for_component(model, k: int) -> MarginalLaw:
    """Transformed law for 1-based component k of a measurement model."""
    j = k - 1
    return transformed_law(float(model.W[:, j] @ model.x_true), model.sigma,
                           float(model.W[j, j]), model.tau)


def ml_law(location: float, scale2: float) -> MarginalLaw:
    return MarginalLaw(LawKind.ML_COMPONENT, float(location), float(scale2), 0.0)


def _branch_pdf(v, law: MarginalLaw):
    # Gaussian branch density: mean location - tau for v > 0, location + tau for v < 0.
    # The branch variance is scale2 itself; this is the unique choice consistent
    # with the slice characteristic function exp(-u^2 * scale2 / 2) and it
    # reduces to the orthogonal law at unit Gram diagonal.
    v = np.asarray(v, dtype=np.float64)
    shift = np.where(v > 0, law.tau, -law.tau)
    z = v + shift - law.location
    return np.exp(-0.5 * z * z / law.scale2) / math.sqrt(2.0 * math.pi * law.scale2)


def pdf_orthogonal(v, law: MarginalLaw):
    """Density of the orthogonal-component law on v != 0."""
    if law.kind is not LawKind.ORTHOGONAL_COMPONENT:
        raise InvalidLawError("pdf_orthogonal requires an orthogonal-component law")
    if np.any(np.asarray(v) == 0):
        raise ValueError("density undefined at v = 0; use point_mass_zero for the atom")
    return _branch_pdf(v, law)


def pdf_transformed(v, law: MarginalLaw):
    """Density of the transformed-component law on v != 0."""
    if law.kind is not LawKind.TRANSFORMED_COMPONENT:
        raise InvalidLawError("pdf_transformed requires a transformed-component law")
    if np.any(np.asarray(v) == 0):
        raise ValueError("density undefined at v = 0; use point_mass_zero for the atom")
    return _branch_pdf(v, law)


def pdf_ml(v, law: MarginalLaw):
    """Plain Gaussian density with mean ``location`` and variance ``scale2``."""
    if law.kind is not LawKind.ML_COMPONENT:
        raise InvalidLawError("pdf_ml requires an ml-component law")
    v = np.asarray(v, dtype=np.float64)
    z = v - law.location
    return np.exp(-0.5 * z * z / law.scale2) / math.sqrt(2.0 * math.pi * law.scale2)


def pdf(v, law: MarginalLaw):
    """Dispatch to the density of the given law kind."""
    if law.kind is LawKind.ORTHOGONAL_COMPONENT:
        return pdf_orthogonal(v, law)
    if law.kind is LawKind.TRANSFORMED_COMPONENT:
        return pdf_transformed(v, law)
    return pdf_ml(v, law)


def point_mass_zero(law: MarginalLaw) -> float:
    """Probability of the atom at exactly zero.

    Phi((tau - location) / scale) - Phi((-tau - location) / scale); zero for
    the ML law.
    """
    if law.kind is LawKind.ML_COMPONENT or law.tau == 0:
        return 0.0
    s = law.scale
    return float(ndtr((law.tau - law.location) / s) - ndtr((-law.tau - law.location) / s))


def cdf_orthogonal(v, law: MarginalLaw):
    """Right-continuous CDF including the atom at zero.

    Phi((v - tau - location) / scale) for v < 0 and
    Phi((v + tau - location) / scale) for v >= 0, so the jump at zero is
    exactly point_mass_zero and the upper limit is 1. The transformed law
    shares this shape with its own location and scale.
    """
    if law.kind is LawKind.ML_COMPONENT:
        return ndtr((np.asarray(v, dtype=np.float64) - law.location) / law.scale)
    v = np.asarray(v, dtype=np.float64)
    shift = np.where(v < 0, -law.tau, law.tau)
    out = ndtr((v + shift - law.location) / law.scale)
    return out if out.ndim else float(out)


def conditional_cdf(v, law: MarginalLaw):
    """CDF of the law conditioned on being nonzero."""
    atom = point_mass_zero(law)
    v = np.asarray(v, dtype=np.float64)
    full = cdf_orthogonal(v, law)
    out = (full - atom * (v >= 0)) / (1.0 - atom)
    return out if out.ndim else float(out)
