"""Linear-Gaussian state-space model: simulation, exact filtering/smoothing,
and random system generation.

Model:
    x_t = A x_{t-1} + q_t,   q_t ~ N(0, Q)
    y_t = H x_t + r_t,       r_t ~ N(0, R)
with x_0 ~ N(x0_mean, P0) and t = 1..T.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._filtering import loglik_core
from .model_space import SparsityModel

__all__ = [
    "FilterError",
    "FilterResult",
    "ModelParams",
    "SmootherResult",
    "as_rng",
    "kalman_filter",
    "log_likelihood",
    "random_covariance",
    "random_stable_transition",
    "rts_smoother",
    "simulate",
]

_SYM_TOL = 1e-10
_PSD_TOL = 1e-10


class FilterError(ValueError):
    """Raised when the filter or smoother hits a singular covariance.

    ``step`` is the 1-based time index at which the recursion failed,
    or None when the failure is not step-specific.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


def as_rng(seed) -> np.random.Generator:
    """Coerce an int seed, SeedSequence, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_cov(name: str, M: np.ndarray, d: int) -> None:
    if M.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got {M.shape}")
    if np.max(np.abs(M - M.T)) > _SYM_TOL:
        raise ValueError(f"{name} is not symmetric within {_SYM_TOL}")
    if np.min(np.linalg.eigvalsh(M)) < -_PSD_TOL:
        raise ValueError(f"{name} is not positive semi-definite")


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """Factor F with F F^T = M for a (possibly singular) PSD matrix."""
    w, V = np.linalg.eigh(M)
    if w.min() < -1e-8:
        raise ValueError("covariance is not positive semi-definite")
    return V * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class ModelParams:
    """All parameters of the linear-Gaussian state-space model."""

    A: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0_mean: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        for name in ("A", "H", "Q", "R", "x0_mean", "P0"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        A, H = self.A, self.H
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        dx = A.shape[0]
        if H.ndim != 2 or H.shape[1] != dx:
            raise ValueError(f"H must have {dx} columns, got {H.shape}")
        dy = H.shape[0]
        if self.x0_mean.shape != (dx,):
            raise ValueError(f"x0_mean must have length {dx}")
        _check_cov("Q", self.Q, dx)
        _check_cov("R", self.R, dy)
        _check_cov("P0", self.P0, dx)

    @property
    def dx(self) -> int:
        return self.A.shape[0]

    @property
    def dy(self) -> int:
        return self.H.shape[0]

    def with_transition(self, A: np.ndarray) -> "ModelParams":
        return replace(self, A=A)


@dataclass(frozen=True)
class FilterResult:
    """Gaussian filtering distributions and the data log-likelihood.

    Row t-1 of each array corresponds to time step t (t = 1..T).
    """

    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    log_likelihood: float


@dataclass(frozen=True)
class SmootherResult:
    """Gaussian smoothing marginals for x_0..x_T given all data.

    ``lag_one_covs[t-1]`` is Cov(x_t, x_{t-1} | y_{1:T}) for t = 1..T.
    """

    smoothed_means: np.ndarray
    smoothed_covs: np.ndarray
    lag_one_covs: np.ndarray


def _check_series(params: ModelParams, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[1] != params.dy:
        raise ValueError(f"observations must be (T, {params.dy}), got {y.shape}")
    if y.shape[0] < 1:
        raise ValueError("need at least one observation")
    if not np.isfinite(y).all():
        raise ValueError("observations contain non-finite values")
    return y


def simulate(params: ModelParams, T: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw a state trajectory x_0..x_T and observations y_1..y_T.

    Returns
    -------
    states : ndarray (T+1, dx)
    observations : ndarray (T, dy)
    """
    if T < 1:
        raise ValueError("T must be positive")
    rng = as_rng(seed)
    dx, dy = params.dx, params.dy
    Lp = _psd_factor(params.P0)
    Lq = _psd_factor(params.Q)
    Lr = _psd_factor(params.R)
    states = np.zeros((T + 1, dx))
    obs = np.zeros((T, dy))
    states[0] = params.x0_mean + Lp @ rng.standard_normal(dx)
    for t in range(1, T + 1):
        states[t] = params.A @ states[t - 1] + Lq @ rng.standard_normal(dx)
        obs[t - 1] = params.H @ states[t] + Lr @ rng.standard_normal(dy)
    return states, obs


def kalman_filter(params: ModelParams, y: np.ndarray) -> FilterResult:
    """Exact Kalman filter with the prediction-error log-likelihood.

    The innovation covariance is inverted via Cholesky; a failure raises
    :class:`FilterError` with the 1-based step index.  The covariance update
    uses the Joseph form for numerical symmetry.
    """
    y = _check_series(params, y)
    T = y.shape[0]
    dx, dy = params.dx, params.dy
    A, H, Q, R = params.A, params.H, params.Q, params.R
    eye = np.eye(dx)
    m = params.x0_mean.copy()
    P = params.P0.copy()
    fm = np.zeros((T, dx))
    fP = np.zeros((T, dx, dx))
    pm = np.zeros((T, dx))
    pP = np.zeros((T, dx, dx))
    ll = 0.0
    const = dy * np.log(2.0 * np.pi)
    for t in range(T):
        m = A @ m
        P = A @ P @ A.T + Q
        pm[t], pP[t] = m, P
        S = H @ P @ H.T + R
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise FilterError(
                f"singular innovation covariance at step {t + 1}", step=t + 1
            ) from None
        v = y[t] - H @ m
        z = np.linalg.solve(L, v)
        logdet = 0.0
        for i in range(dy):
            logdet += 2.0 * np.log(L[i, i])
        ll += -0.5 * (const + logdet + z @ z)
        K = np.linalg.solve(S, H @ P).T
        m = m + K @ v
        IKH = eye - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
        fm[t], fP[t] = m, P
    return FilterResult(fm, fP, pm, pP, float(ll))


def log_likelihood(params: ModelParams, y: np.ndarray) -> float:
    """log p(y_{1:T} | params), identical to ``kalman_filter(...).log_likelihood``.

    Uses a compiled inner loop that skips moment storage.
    """
    y = _check_series(params, y)
    try:
        ll = loglik_core(
            params.A, params.H, params.Q, params.R, params.x0_mean, params.P0, y
        )
    except np.linalg.LinAlgError:
        raise FilterError("singular innovation covariance") from None
    return float(ll)


def rts_smoother(params: ModelParams, filt: FilterResult) -> SmootherResult:
    """Backward (Rauch-Tung-Striebel) smoothing pass over a filter output.

    ``filt`` must come from ``kalman_filter`` with the same params and series.
    Also returns the lag-one cross-covariances needed by the EM E-step.
    """
    A = params.A
    T, dx = filt.filtered_means.shape
    # Filtered moments for t = 0..T; t = 0 carries the prior.
    fm = np.vstack([params.x0_mean[None, :], filt.filtered_means])
    fP = np.concatenate([params.P0[None, :, :], filt.filtered_covs])
    sm = np.zeros((T + 1, dx))
    sP = np.zeros((T + 1, dx, dx))
    lag1 = np.zeros((T, dx, dx))
    sm[T] = fm[T]
    sP[T] = fP[T]
    gains = np.zeros((T, dx, dx))
    for t in range(T - 1, -1, -1):
        Ppred = filt.predicted_covs[t]  # covariance of x_{t+1} | y_{1:t}
        try:
            G = np.linalg.solve(Ppred, A @ fP[t]).T
        except np.linalg.LinAlgError:
            raise FilterError(
                f"singular predicted covariance at step {t + 1}", step=t + 1
            ) from None
        gains[t] = G
        sm[t] = fm[t] + G @ (sm[t + 1] - filt.predicted_means[t])
        sP[t] = fP[t] + G @ (sP[t + 1] - Ppred) @ G.T
    for t in range(T):
        # Cov(x_{t+1}, x_t | y_{1:T}); exact for the linear-Gaussian model.
        lag1[t] = sP[t + 1] @ gains[t].T
    return SmootherResult(sm, sP, lag1)


def random_stable_transition(
    dx: int, dense_mask: SparsityModel, seed, safety_factor: float = 1.0
) -> np.ndarray:
    """Random transition matrix with unit spectral norm and an exact zero pattern.

    Dense entries are i.i.d. standard normal; the matrix is divided by its
    largest singular value (then multiplied by ``safety_factor``, default 1,
    i.e. marginally stable).  Entries outside the mask are exactly 0.0.
    """
    if dense_mask.dx != dx:
        raise ValueError("mask dimension does not match dx")
    rng = as_rng(seed)
    mask = dense_mask.mask()
    for _ in range(100):
        M = rng.standard_normal((dx, dx))
        M[~mask] = 0.0
        s = np.linalg.norm(M, 2) if dense_mask.n_dense else 0.0
        if s > 0.0:
            return M * (safety_factor / s)
    raise ValueError("could not draw a non-zero matrix in 100 attempts")


def random_covariance(d: int, eig_low: float, eig_high: float, seed) -> np.ndarray:
    """Random covariance G^T diag(e_1 >= ... >= e_d) G with e_i ~ U(eig_low, eig_high).

    G is Haar-orthogonal (QR of a Gaussian matrix with sign-corrected
    diagonal of R).
    """
    if not (0.0 < eig_low <= eig_high):
        raise ValueError("need 0 < eig_low <= eig_high")
    rng = as_rng(seed)
    X = rng.standard_normal((d, d))
    Qm, Rm = np.linalg.qr(X)
    G = Qm * np.sign(np.diag(Rm))
    e = np.sort(rng.uniform(eig_low, eig_high, size=d))[::-1]
    sigma = G.T @ (e[:, None] * G)
    return (sigma + sigma.T) / 2.0
