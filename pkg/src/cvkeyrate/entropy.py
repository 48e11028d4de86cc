"""Binary entropy and the two-state mixture entropy ``g``.

All entropies are in bits. Functions accept scalars or numpy arrays and
return the same shape.
"""

import numpy as np

DOMAIN_TOL = 1e-12


def _check_unit_interval(value, name):
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    if np.any(arr < -DOMAIN_TOL) or np.any(arr > 1 + DOMAIN_TOL):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return np.clip(arr, 0.0, 1.0)


def _xlog2x(x):
    # 0 log 0 = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)


def binary_entropy(z):
    """Shannon entropy of a Bernoulli(z) variable in bits.

    Args:
        z: Probability in [0, 1] (scalar or array).

    Raises:
        ValueError: If ``z`` lies outside [0, 1] by more than 1e-12.
    """
    z = _check_unit_interval(z, "z")
    out = -_xlog2x(z) - _xlog2x(1.0 - z)
    return out[()] if out.ndim == 0 else out


def g_function(p, gamma):
    """Entropy of ``p|a><a| + (1-p)|b><b|`` where ``|<a|b>| = gamma``.

    Equals ``h(1/2 - 1/2 sqrt(1 - 4 p (1-p) (1-gamma^2)))``. The smaller
    eigenvalue is evaluated as ``t / (2 (1 + sqrt(1 - t)))`` so it keeps full
    relative precision when ``p`` is close to 0 or 1.
    """
    p = _check_unit_interval(p, "p")
    gamma = _check_unit_interval(gamma, "gamma")
    t = 4.0 * p * (1.0 - p) * (1.0 - gamma * gamma)
    t = np.clip(t, 0.0, 1.0)
    lam = t / (2.0 * (1.0 + np.sqrt(1.0 - t)))
    out = -_xlog2x(lam) - _xlog2x(1.0 - lam)
    return out[()] if out.ndim == 0 else out


def g_unchecked(p, gamma):
    """``g_function`` without domain validation, for hot quadrature loops.

    Inputs must already be clipped into [0, 1].
    """
    t = np.clip(4.0 * p * (1.0 - p) * (1.0 - gamma * gamma), 0.0, 1.0)
    lam = t / (2.0 * (1.0 + np.sqrt(1.0 - t)))
    return -_xlog2x(lam) - _xlog2x(1.0 - lam)
