"""C² quintic plateau profile: exactly 1 on [0, 1], exactly 0 on [2, ∞)."""

import numpy as np


def plateau(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(x - 1.0, 0.0, 1.0)
    # factored forms on each half keep the values exact and inside [0, 1] near the joins
    near_one = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    u = 1.0 - t
    near_zero = u**3 * (1.0 + 3.0 * t + 6.0 * t * t)
    return np.where(t < 0.5, near_one, near_zero)


def plateau_prime(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(x - 1.0, 0.0, 1.0)
    return -30.0 * t * t * (1.0 - t) ** 2


def plateau_second(x):
    x = np.asarray(x, dtype=float)
    t = np.clip(x - 1.0, 0.0, 1.0)
    return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


# max |plateau'| attained at t = 1/2
PLATEAU_SUP_DERIVATIVE = 30.0 / 16.0
