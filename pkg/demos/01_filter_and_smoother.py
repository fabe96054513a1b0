"""Simulate a linear-Gaussian state-space model, then filter and smooth it.

The model is

    x_t = A x_{t-1} + q_t,   q_t ~ N(0, Q)
    y_t = H x_t     + r_t,   r_t ~ N(0, R)

The Kalman filter gives the exact posterior of x_t given y_1..y_t and the
exact log-likelihood of the data; the RTS smoother conditions on the whole
series.  Smoothed estimates should track the hidden states more closely
than filtered ones.
"""

import numpy as np

from sparselds import ModelParams, kalman_filter, rts_smoother, simulate

rng = np.random.default_rng(0)

A = np.array([[0.8, 0.2], [0.0, 0.9]])
params = ModelParams(
    A=A,
    H=np.eye(2),
    Q=0.1 * np.eye(2),
    R=0.5 * np.eye(2),
    x0_mean=np.zeros(2),
    P0=np.eye(2),
)

states, y = simulate(params, 200, rng)

filt = kalman_filter(params, y)
smooth = rts_smoother(params, filt)

# filtered means cover x_1..x_T; smoothed means cover x_0..x_T
rmse_filter = np.sqrt(np.mean((filt.filtered_means - states[1:]) ** 2))
rmse_smooth = np.sqrt(np.mean((smooth.smoothed_means[1:] - states[1:]) ** 2))

print(f"log-likelihood of the data : {filt.log_likelihood:.3f}")
print(f"filtered state RMSE        : {rmse_filter:.4f}")
print(f"smoothed state RMSE        : {rmse_smooth:.4f}  (should be lower)")
assert rmse_smooth < rmse_filter
