"""Inner Kalman likelihood loop, optionally JIT-compiled.

The sampler evaluates this function once per iteration, so it dominates the
total runtime.  When numba is importable the loop is compiled (and cached on
disk); otherwise the pure-numpy version is used with identical arithmetic.
"""

import numpy as np

__all__ = ["loglik_core", "JITTED"]


def _loglik_core_py(A, H, Q, R, m0, P0, y):
    T, dy = y.shape
    dx = A.shape[0]
    m = m0.copy()
    P = P0.copy()
    eye = np.eye(dx)
    ll = 0.0
    const = dy * np.log(2.0 * np.pi)
    for t in range(T):
        m = A @ m
        P = A @ P @ A.T + Q
        S = H @ P @ H.T + R
        L = np.linalg.cholesky(S)
        v = y[t] - H @ m
        z = np.linalg.solve(L, v)
        logdet = 0.0
        for i in range(dy):
            logdet += 2.0 * np.log(L[i, i])
        ll += -0.5 * (const + logdet + z @ z)
        K = np.linalg.solve(S, H @ P).T
        m = m + K @ v
        # Joseph form keeps P symmetric over long runs.
        IKH = eye - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
    return ll


try:
    from numba import njit

    loglik_core = njit(cache=True)(_loglik_core_py)
    JITTED = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    loglik_core = _loglik_core_py
    JITTED = False
