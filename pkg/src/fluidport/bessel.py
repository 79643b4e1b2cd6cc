"""Zero-order Bessel function of the first kind.

Power series below ``|x| = 12``, Hankel asymptotic expansion above. Absolute
error stays under 1e-10 on the whole real line.
"""

import math

import numpy as np

_SERIES_LIMIT = 12.0


def _j0_series(x):
    # sum_k (-1)^k (x/2)^(2k) / (k!)^2
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 80):
        term = term * q / (k * k)
        total = total + term
        if np.all(np.abs(term) < 1e-17):
            break
    return total


def _j0_asymptotic(x):
    # |a_k| = prod_{m=1..k} (2m-1)^2 / (k! 8^k), sign of a_k is (-1)^k
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coef = 1.0
    inv = 1.0 / x
    power = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 40):
        coef *= (2 * k - 1) ** 2 / (8.0 * k)
        power = power * inv
        term = coef * power
        # asymptotic series: stop once terms start growing
        active &= np.abs(term) < prev
        prev = np.abs(term)
        sign = -1.0 if (k + k // 2) % 2 else 1.0
        contrib = np.where(active, sign * term, 0.0)
        if k % 2:
            q = q + contrib
        else:
            p = p + contrib
        if not active.any() or np.all(np.abs(term) < 1e-17):
            break
    phase = x - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(phase) - q * np.sin(phase))


def j0(x):
    """Evaluate J0 elementwise.

    Args:
        x: scalar or array-like of real arguments.

    Returns:
        float for scalar input, otherwise an ndarray of the input's shape.
    """
    arr = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    small = arr < _SERIES_LIMIT
    if small.any():
        out[small] = _j0_series(arr[small])
    if (~small).any():
        out[~small] = _j0_asymptotic(arr[~small])
    if out.ndim == 0:
        return float(out)
    return out
