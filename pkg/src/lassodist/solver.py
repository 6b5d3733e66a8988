"""Cyclic coordinate descent for the l1-penalized least-squares problem.

Solves  min_x  tau * ||x||_1 + 0.5 * ||b - A x||_2^2  and returns the
estimate together with its subgradient certificate: the vector
gamma = (A^T b - W x_hat) / tau, which must satisfy |gamma_k| <= 1
everywhere and gamma_k = sign(x_hat_k) on the support of x_hat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linmodel import MeasurementModel

DEFAULT_TOL = 1e-10
# |gamma_k| within this of 1 counts as active
ACTIVE_TOL = 1e-6
_SWEEPS_PER_PARAM = 100


class ConvergenceError(RuntimeError):
    """Raised when the sweep budget runs out; carries the last iterate."""

    def __init__(self, message: str, x_hat: np.ndarray, residual: float, iterations: int):
        super().__init__(message)
        self.x_hat = x_hat
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LassoSolution:
    """Estimate, subgradient, active set, and the certificate residual."""

    x_hat: np.ndarray
    gamma: np.ndarray
    active_set: tuple[int, ...]
    kkt_residual: float
    iterations: int


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0), elementwise for arrays."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def kkt_check(model: MeasurementModel, b: np.ndarray, x_hat: np.ndarray):
    """Subgradient and stationarity residual of a candidate solution.

    Returns (gamma, residual) with gamma = (A^T b - W x_hat) / tau and
    residual = max(0, max_k |gamma_k| - 1, max over the support of
    |gamma_k - sign(x_hat_k)|). A residual of zero certifies optimality.
    """
    if model.tau <= 0:
        raise ValueError("kkt_check requires tau > 0")
    x_hat = np.asarray(x_hat, dtype=np.float64)
    gamma = (model.A.T @ b - model.W @ x_hat) / model.tau
    residual = max(0.0, float(np.max(np.abs(gamma))) - 1.0)
    support = x_hat != 0
    if np.any(support):
        residual = max(residual, float(np.max(
            np.abs(gamma[support] - np.sign(x_hat[support])))))
    return gamma, residual


def _objective(b, A, x, tau):
    r = b - A @ x
    return tau * float(np.sum(np.abs(x))) + 0.5 * float(r @ r)


def solve_lasso(model: MeasurementModel, b: np.ndarray, tol: float = DEFAULT_TOL,
                max_iter: int | None = None, x0: np.ndarray | None = None) -> LassoSolution:
    """Solve the lasso instance (model, b) by cyclic coordinate descent.

    Convergence requires both the max coordinate change of a sweep to fall
    below tol * (1 + ||x||_inf) and the KKT residual to fall below
    10 * tol. With tau = 0 the same loop computes the least-squares (ML)
    estimate and the returned gamma is identically zero.

    Raises ConvergenceError when ``max_iter`` sweeps (default 100 * N) are
    exhausted first. The objective is checked to be non-increasing across
    sweeps; an increase signals a broken update and raises RuntimeError.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, W, tau = model.A, model.W, model.tau
    N = model.n_params
    b = np.asarray(b, dtype=np.float64)
    if max_iter is None:
        max_iter = _SWEEPS_PER_PARAM * N
    atb = A.T @ b
    x = np.zeros(N) if x0 is None else np.array(x0, dtype=np.float64)
    q = W @ x  # running W x
    w_diag = np.diag(W).copy()
    prev_obj = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_change = 0.0
        for k in range(N):
            old = x[k]
            rho = atb[k] - q[k] + w_diag[k] * old
            new = soft_threshold(rho, tau) / w_diag[k]
            if new != old:
                x[k] = new
                q += (new - old) * W[:, k]
                max_change = max(max_change, abs(new - old))
        obj = _objective(b, A, x, tau)
        if obj > prev_obj + 1e-12 * (1.0 + abs(prev_obj)):
            raise RuntimeError(
                f"objective increased across sweep {sweeps}: {prev_obj} -> {obj}")
        prev_obj = obj
        if max_change < tol * (1.0 + float(np.max(np.abs(x)))):
            gamma, residual = _certificate(model, atb, x)
            if residual <= 10.0 * tol:
                return _finish(x, gamma, residual, sweeps)
    gamma, residual = _certificate(model, atb, x)
    raise ConvergenceError(
        f"no convergence after {sweeps} sweeps (KKT residual {residual:.3e})",
        x_hat=x, residual=residual, iterations=sweeps)


def _certificate(model, atb, x):
    if model.tau > 0:
        gamma = (atb - model.W @ x) / model.tau
        residual = max(0.0, float(np.max(np.abs(gamma))) - 1.0)
        support = x != 0
        if np.any(support):
            residual = max(residual, float(np.max(
                np.abs(gamma[support] - np.sign(x[support])))))
    else:
        gamma = np.zeros_like(x)
        residual = float(np.max(np.abs(atb - model.W @ x), initial=0.0))
    return gamma, residual


def _finish(x, gamma, residual, sweeps):
    active = tuple(int(k) for k in np.flatnonzero(np.abs(np.abs(gamma) - 1.0) <= ACTIVE_TOL))
    x = x.copy()
    x.setflags(write=False)
    gamma = gamma.copy()
    gamma.setflags(write=False)
    return LassoSolution(x_hat=x, gamma=gamma, active_set=active,
                         kkt_residual=residual, iterations=sweeps)
