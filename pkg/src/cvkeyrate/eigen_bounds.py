"""Intervals for the unobservable parameters of the conditional states.

From Bob's conditional moments we bound

* the mixedness ``eps_x = 1 - <beta_x|rho_x|beta_x>`` (fidelity with the
  coherent state at the measured mean) by ``U_x``;
* the overlap of Bob's maximal eigenvectors by ``[c_l, c_u]``;
* the overlap ``gamma`` of Eve's maximal eigenvectors by ``[d_l, d_u]``.

The interval functions are vectorised: every argument may be a numpy array
and broadcasting applies. Scalar wrappers taking :class:`InteriorPoint`
raise :class:`InfeasiblePointError` where the array versions return a mask.
"""

import math
from dataclasses import dataclass

import numpy as np

RADICAND_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9
ZERO_OVERLAP = 1e-12


class UncertaintyViolation(ValueError):
    """Observed variances are incompatible with var_q * var_p >= 1/4."""


class InfeasiblePointError(ValueError):
    """An interior point violates its own constraints."""


@dataclass(frozen=True)
class MomentBounds:
    U: tuple
    kappa: float
    input_overlap: float

    def __post_init__(self):
        object.__setattr__(self, "U", (float(self.U[0]), float(self.U[1])))
        if min(self.U) < 0:
            raise ValueError(f"mixedness bounds must be >= 0, got {self.U}")
        for name in ("kappa", "input_overlap"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class InteriorPoint:
    """Adversary parameters ``(eps_0, eps_1)``, ``(epst_0, epst_1)``, ``gamma``."""

    eps: tuple
    eps_tilde: tuple
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("eps", "eps_tilde"):
            pair = tuple(float(v) for v in getattr(self, name))
            if min(pair) < -RADICAND_TOL:
                raise ValueError(f"{name} must be >= 0, got {pair}")
            # eigen-solver rounding can leave -1e-16 on pure states
            object.__setattr__(self, name, tuple(max(v, 0.0) for v in pair))
        for e, et in zip(self.eps, self.eps_tilde):
            if not et <= e + RADICAND_TOL:
                raise ValueError(f"need 0 <= eps_tilde <= eps, got {self.eps_tilde} vs {self.eps}")
            if not et < 0.5:
                raise ValueError(f"eps_tilde must be < 1/2, got {et}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    def within(self, U):
        return all(e <= u + RADICAND_TOL for e, u in zip(self.eps, U))


@dataclass(frozen=True)
class OverlapInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi <= 1:
            raise ValueError(f"invalid overlap interval [{self.lo}, {self.hi}]")


def mixedness_bound(var_q, var_p):
    """Upper bound ``U = [(var_q + 1/2)(var_p + 1/2) - 1] / 2`` on the mixedness.

    Raises:
        UncertaintyViolation: If ``var_q * var_p < 1/4 - 1e-9``.
    """
    if var_q * var_p < 0.25 - UNCERTAINTY_TOL:
        raise UncertaintyViolation(
            f"observation unphysical: var_q * var_p = {var_q * var_p:.6g} < 1/4"
        )
    return max(0.0, 0.5 * ((var_q + 0.5) * (var_p + 0.5) - 1.0))


def kappa_from_stats(stats, amplitude_scale=1.0):
    """Overlap ``|<beta_0|beta_1>|`` of coherent states at the observed means.

    The amplitude is ``(mean_q + i mean_p) / amplitude_scale``. The default
    of 1 reads the q-mean directly as the coherent amplitude, which is the
    convention of the Gaussian channel model; ``sqrt(2)`` is the
    mean-matched amplitude for ``q = (a + a^dagger) / sqrt(2)``.
    """
    b0 = complex(stats.mean_q[0], stats.mean_p[0]) / amplitude_scale
    b1 = complex(stats.mean_q[1], stats.mean_p[1]) / amplitude_scale
    return math.exp(-abs(b0 - b1) ** 2 / 2.0)


def input_overlap(alpha):
    """``|<-alpha|alpha>|`` for real amplitude ``alpha``."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return math.exp(-2.0 * alpha * alpha)


def moment_bounds(stats, alpha, amplitude_scale=1.0):
    U = tuple(mixedness_bound(stats.var_q[x], stats.var_p[x]) for x in (0, 1))
    return MomentBounds(U=U, kappa=kappa_from_stats(stats, amplitude_scale), input_overlap=input_overlap(alpha))


def _root(radicand, feasible):
    feasible &= radicand >= -RADICAND_TOL
    return np.sqrt(np.maximum(radicand, 0.0))


def bob_overlap_bounds(eps0, eps1, epst0, epst1, kappa):
    """Array form of :func:`bob_overlap_interval`.

    Returns:
        (c_lo, c_hi, feasible): clamped bounds and a boolean mask of points
        whose radicands are all non-negative within 1e-12.
    """
    eps0, eps1, epst0, epst1, kappa = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (eps0, eps1, epst0, epst1, kappa))
    )
    feasible = np.ones(eps0.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        v_hi0 = _root((1 - eps0) / (1 - epst0), feasible)
        v_hi1 = _root((1 - eps1) / (1 - epst1), feasible)
        v_lo0 = _root((1 - eps0 - epst0) / (1 - 2 * epst0), feasible)
        v_lo1 = _root((1 - eps1 - epst1) / (1 - 2 * epst1), feasible)
        w0 = _root((eps0 - epst0) / (1 - 2 * epst0), feasible)
        w1 = _root((eps1 - epst1) / (1 - 2 * epst1), feasible)
        k_perp = _root(1 - kappa * kappa, feasible)
    feasible &= (epst0 < 0.5) & (epst1 < 0.5)
    cross = k_perp * v_hi0 * w1 + k_perp * v_hi1 * w0 + w0 * w1
    c_hi = np.clip(kappa * v_hi0 * v_hi1 + cross, 0.0, 1.0)
    c_lo = np.clip(kappa * v_lo0 * v_lo1 - cross, 0.0, 1.0)
    return c_lo, c_hi, feasible


def eve_overlap_bounds(epst0, epst1, in_ov, c_lo, c_hi):
    """Array form of :func:`eve_overlap_interval`.

    Returns:
        (d_lo, d_hi, feasible). A point is infeasible when the unclamped
        lower bound exceeds 1 or the clamped interval is empty.
    """
    epst0, epst1, in_ov, c_lo, c_hi = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (epst0, epst1, in_ov, c_lo, c_hi))
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = np.sqrt(
            (np.sqrt((1 - epst1) * epst0) + np.sqrt((1 - epst0) * epst1)) ** 2 + epst1 * epst0
        )
        d = np.sqrt((1 - epst0) * (1 - epst1))
        num_lo = in_ov - r
        d_lo_raw = np.where(
            c_hi > 0, num_lo / (d * np.where(c_hi > 0, c_hi, 1.0)), np.where(num_lo > 0, np.inf, 0.0)
        )
        d_hi_raw = (in_ov + r) / (d * np.where(c_lo > ZERO_OVERLAP, c_lo, 1.0))
    d_hi_raw = np.where(c_lo > ZERO_OVERLAP, d_hi_raw, 1.0)
    d_lo = np.clip(d_lo_raw, 0.0, 1.0)
    d_hi = np.clip(d_hi_raw, 0.0, 1.0)
    feasible = (d_lo_raw <= 1.0 + RADICAND_TOL) & (d_lo <= d_hi)
    return d_lo, d_hi, feasible


def bob_overlap_interval(pt, kappa):
    """Bounds ``[c_l, c_u]`` on the overlap of Bob's maximal eigenvectors.

    Raises:
        InfeasiblePointError: If a radicand is negative beyond 1e-12.
    """
    lo, hi, ok = bob_overlap_bounds(pt.eps[0], pt.eps[1], pt.eps_tilde[0], pt.eps_tilde[1], kappa)
    if not ok:
        raise InfeasiblePointError(f"{pt} is infeasible for kappa={kappa}")
    return OverlapInterval(float(lo), float(hi))


def eve_overlap_interval(pt, in_ov, c):
    """Bounds ``[d_l, d_u]`` on ``gamma`` given Bob's overlap interval ``c``.

    Raises:
        InfeasiblePointError: If the interval is empty after clamping.
    """
    lo, hi, ok = eve_overlap_bounds(pt.eps_tilde[0], pt.eps_tilde[1], in_ov, c.lo, c.hi)
    if not ok:
        raise InfeasiblePointError(f"no gamma is compatible with {pt} and {c}")
    return OverlapInterval(float(lo), float(hi))
