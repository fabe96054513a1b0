"""EM point estimation of the transition matrix and/or state noise covariance.

Used to initialise the sampler and to supply a covariance estimate when the
true one is unknown.  The E-step runs the exact filter and smoother; the
M-step applies the closed-form maximisers built from smoothed second moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lgssm import ModelParams, kalman_filter, rts_smoother

__all__ = ["EmError", "EmResult", "em_estimate"]


class EmError(RuntimeError):
    """Raised when an M-step normal matrix is singular."""


@dataclass(frozen=True)
class EmResult:
    """Final estimates and the per-iteration log-likelihood trace."""

    A_hat: np.ndarray
    Q_hat: np.ndarray
    loglik_trace: np.ndarray


def em_estimate(
    y: np.ndarray,
    *,
    H: np.ndarray,
    R: np.ndarray,
    x0_mean: np.ndarray,
    P0: np.ndarray,
    A_init: np.ndarray,
    Q_init: np.ndarray | None = None,
    n_iters: int = 50,
    estimate_A: bool = True,
    estimate_Q: bool = False,
) -> EmResult:
    """Alternate E- and M-steps over the flagged parameters.

    ``loglik_trace[i]`` is the log-likelihood of the parameters entering
    iteration i, so the trace is non-decreasing up to numerical error.
    ``Q_init`` defaults to the identity.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be positive")
    if not (estimate_A or estimate_Q):
        raise ValueError("at least one of estimate_A / estimate_Q must be set")
    A = np.asarray(A_init, dtype=float).copy()
    dx = A.shape[0]
    Q = np.eye(dx) if Q_init is None else np.asarray(Q_init, dtype=float).copy()
    trace = np.zeros(n_iters)
    T = np.asarray(y).shape[0]
    for it in range(n_iters):
        params = ModelParams(A, H, Q, R, x0_mean, P0)
        filt = kalman_filter(params, y)
        trace[it] = filt.log_likelihood
        smooth = rts_smoother(params, filt)
        ms, Ps, lag1 = smooth.smoothed_means, smooth.smoothed_covs, smooth.lag_one_covs
        # Sums over t = 1..T of smoothed second moments.
        sum_prev = np.zeros((dx, dx))  # E[x_{t-1} x_{t-1}^T]
        sum_cross = np.zeros((dx, dx))  # E[x_t x_{t-1}^T]
        sum_curr = np.zeros((dx, dx))  # E[x_t x_t^T]
        for t in range(1, T + 1):
            sum_prev += Ps[t - 1] + np.outer(ms[t - 1], ms[t - 1])
            sum_cross += lag1[t - 1] + np.outer(ms[t], ms[t - 1])
            sum_curr += Ps[t] + np.outer(ms[t], ms[t])
        if estimate_A:
            try:
                A = np.linalg.solve(sum_prev.T, sum_cross.T).T
            except np.linalg.LinAlgError:
                raise EmError(f"singular normal matrix in M-step at iteration {it}") from None
        if estimate_Q:
            Q = (sum_curr - A @ sum_cross.T - sum_cross @ A.T + A @ sum_prev @ A.T) / T
            Q = (Q + Q.T) / 2.0
    return EmResult(A, Q, trace)
