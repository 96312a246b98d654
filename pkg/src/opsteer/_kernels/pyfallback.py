"""Numpy reference implementations of the per-step kernels.

These are the fallback used when the compiled extension is unavailable;
opsteer._kernels._fast mirrors each function 1:1 in C.
"""

import numpy as np


def mix_step(V, hu, x, d):
    """One opinion update: V @ (x + hu * (d - x)), hu = h * u elementwise."""
    return V @ (x + hu * (d - x))


def predict_opinion(V, x_prev, y, theta):
    """Model prediction V @ (x_prev + y * theta) for regressor weights y."""
    return V @ (x_prev + y * theta)


def regressor_correction(V, y, resid):
    """Estimate correction direction y * (V.T @ resid)."""
    return y * (V.T @ resid)


def schedule_rollout(V, h, x0, d, a, b, T, budget):
    """Roll the dynamics T steps under the decaying-rate control u = a*b^s / h.

    Stops before any step whose cost would push the cumulative spend past
    `budget` (pass np.inf for unconstrained). States are clamped to [0, 1]
    to absorb float noise; the schedule keeps them there mathematically.
    Returns (states, controls) with states[0] = x0.
    """
    n = x0.shape[0]
    states = np.empty((T + 1, n))
    controls = np.empty((T, n))
    states[0] = x0
    x = x0.copy()
    rate = a
    cum = 0.0
    k = 0
    for _ in range(T):
        u = rate / h
        c = float(u.sum())
        if cum + c > budget:
            break
        controls[k] = u
        cum += c
        x = V @ (x + (h * u) * (d - x))
        np.clip(x, 0.0, 1.0, out=x)
        states[k + 1] = x
        k += 1
        rate *= b
    return states[: k + 1].copy(), controls[:k].copy()
