"""Homodyne statistics of the binary coherent-state protocol.

Alice sends ``|-alpha>`` for ``x = 0`` and ``|+alpha>`` for ``x = 1``. Bob
measures q or p at random. This module models the resulting conditional
distribution P(y|x), simulates records, estimates moments back from records
and evaluates the Alice-Bob mutual information under the sign/modulus
announcement.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .entropy import binary_entropy
from .quadrature import QuadratureConfig, integrate

VACUUM_VARIANCE = 0.5


class InsufficientDataError(ValueError):
    """A conditional (x, basis) cell has fewer than two samples."""


@dataclass(frozen=True)
class ChannelParams:
    """Physical scenario for simulation.

    ``delta`` is the excess noise relative to the vacuum variance, so the
    conditional quadrature variance is ``(1 + delta) / 2``. ``mean_scale``
    multiplies the conditional q-mean ``sqrt(eta) * alpha``.
    """

    alpha: float
    eta: float = 1.0
    delta: float = 0.0
    mean_scale: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not self.mean_scale > 0:
            raise ValueError(f"mean_scale must be > 0, got {self.mean_scale}")


@dataclass(frozen=True)
class GaussianConditional:
    """P(y|x) = Normal(mu[x], var) for Bob's q-quadrature outcome."""

    mu: tuple
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError(f"conditional variance must be > 0, got {self.var}")
        object.__setattr__(self, "mu", (float(self.mu[0]), float(self.mu[1])))

    @property
    def sigma(self):
        return math.sqrt(self.var)

    @property
    def is_symmetric(self):
        return abs(self.mu[0] + self.mu[1]) <= 1e-12 * max(1.0, abs(self.mu[0]))

    def density(self, y, x):
        y = np.asarray(y, dtype=float)
        z = (y - self.mu[x]) ** 2 / (2.0 * self.var)
        return np.exp(-z) / math.sqrt(2.0 * math.pi * self.var)

    def marginal(self, y):
        """P(y) for the uniform prior over x."""
        return 0.5 * (self.density(y, 0) + self.density(y, 1))

    def support(self, quad):
        width = quad.range_sigmas * self.sigma
        return min(self.mu) - width, max(self.mu) + width


@dataclass(frozen=True)
class ObservedStatistics:
    """Per-bit first and second moments of both quadratures.

    Each field is a pair indexed by Alice's bit. ``n`` holds sample counts as
    ``n[x] = (n_q, n_p)``, or ``None`` for statistics derived analytically.
    """

    mean_q: tuple
    mean_p: tuple
    var_q: tuple
    var_p: tuple
    n: tuple = None

    prior = 0.5

    def __post_init__(self):
        for name in ("mean_q", "mean_p", "var_q", "var_p"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"{name} must have two entries, got {pair}")
            object.__setattr__(self, name, pair)
        if min(self.var_q) <= 0 or min(self.var_p) <= 0:
            raise ValueError("conditional variances must be positive")
        if self.n is not None:
            object.__setattr__(self, "n", tuple(tuple(int(c) for c in row) for row in self.n))

    def to_dict(self):
        return {
            "mean_q": list(self.mean_q),
            "mean_p": list(self.mean_p),
            "var_q": list(self.var_q),
            "var_p": list(self.var_p),
            "n": None if self.n is None else [list(row) for row in self.n],
        }

    @classmethod
    def from_dict(cls, data):
        missing = {"mean_q", "mean_p", "var_q", "var_p"} - set(data)
        if missing:
            raise ValueError(f"statistics are missing keys: {sorted(missing)}")
        return cls(
            mean_q=data["mean_q"],
            mean_p=data["mean_p"],
            var_q=data["var_q"],
            var_p=data["var_p"],
            n=data.get("n"),
        )


@dataclass(frozen=True)
class HomodyneRecord:
    """Column-oriented record of (x, basis, y) triples.

    ``basis`` holds the characters ``"q"`` and ``"p"``.
    """

    x: np.ndarray
    basis: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int8)
        basis = np.asarray(self.basis, dtype="<U1")
        y = np.asarray(self.y, dtype=float)
        if not x.shape == basis.shape == y.shape or x.ndim != 1:
            raise ValueError("record columns must be 1-d and of equal length")
        if np.any((x != 0) & (x != 1)):
            raise ValueError("x entries must be 0 or 1")
        if np.any((basis != "q") & (basis != "p")):
            raise ValueError("basis entries must be 'q' or 'p'")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.x)

    def select(self, mask):
        return HomodyneRecord(self.x[mask], self.basis[mask], self.y[mask])


def conditional_from_params(params):
    m = params.mean_scale * math.sqrt(params.eta) * params.alpha
    return GaussianConditional(mu=(-m, m), var=VACUUM_VARIANCE * (1.0 + params.delta))


def stats_from_params(params):
    """Exact moments implied by ``params``, bypassing sampling."""
    dist = conditional_from_params(params)
    return ObservedStatistics(
        mean_q=dist.mu,
        mean_p=(0.0, 0.0),
        var_q=(dist.var, dist.var),
        var_p=(dist.var, dist.var),
        n=None,
    )


def sample_record(dist, n, seed):
    """Simulate ``n`` rounds of the quantum phase.

    Alice's bit and Bob's basis are uniform. The p quadrature carries no
    modulation, so p outcomes are centred at zero.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n)
    is_p = rng.integers(0, 2, size=n).astype(bool)
    mean = np.where(is_p, 0.0, np.asarray(dist.mu)[x])
    y = rng.normal(mean, dist.sigma)
    return HomodyneRecord(x=x, basis=np.where(is_p, "p", "q"), y=y)


def sift(record):
    """Split into (q-basis key part, p-basis test part)."""
    is_q = record.basis == "q"
    return record.select(is_q), record.select(~is_q)


def _cell(values, name, x):
    if len(values) < 2:
        raise InsufficientDataError(
            f"cell (x={x}, basis={name}) has {len(values)} samples, need at least 2"
        )
    return float(np.mean(values)), float(np.var(values, ddof=1)), len(values)


def estimate_statistics(key_part, test_part):
    """Conditional sample means and unbiased variances per bit.

    q moments come from ``key_part`` and p moments from ``test_part``.

    Raises:
        InsufficientDataError: If any (x, basis) cell has fewer than 2 entries.
    """
    mean_q, mean_p, var_q, var_p, n = [], [], [], [], []
    for x in (0, 1):
        q_vals = key_part.y[(key_part.x == x) & (key_part.basis == "q")]
        p_vals = test_part.y[(test_part.x == x) & (test_part.basis == "p")]
        mq, vq, nq = _cell(q_vals, "q", x)
        mp, vp, np_ = _cell(p_vals, "p", x)
        mean_q.append(mq)
        var_q.append(vq)
        mean_p.append(mp)
        var_p.append(vp)
        n.append((nq, np_))
    return ObservedStatistics(mean_q, mean_p, var_q, var_p, n)


def conditional_from_stats(stats):
    """Gaussian model of P(y|x) fitted to observed q moments (pooled variance)."""
    return GaussianConditional(mu=stats.mean_q, var=0.5 * (stats.var_q[0] + stats.var_q[1]))


def _log_likelihood_ratio(dist, y):
    # log P(y|0) - log P(y|1)
    y = np.asarray(y, dtype=float)
    return ((y - dist.mu[1]) ** 2 - (y - dist.mu[0]) ** 2) / (2.0 * dist.var)


def posterior_p0(dist, y):
    """P(x=0 | y) under the uniform prior."""
    out = expit(_log_likelihood_ratio(dist, y))
    return out[()] if np.ndim(out) == 0 else out


def posterior(dist, y, x):
    """P(x | y) under the uniform prior."""
    llr = _log_likelihood_ratio(dist, y)
    out = expit(llr if x == 0 else -llr)
    return out[()] if np.ndim(out) == 0 else out


def mutual_info_xy(dist, quad=QuadratureConfig()):
    """I(X:Y) in bits, by adaptive quadrature of ``P(y) h(P(0|y))``."""
    if dist.mu[0] == dist.mu[1]:
        return 0.0

    def integrand(y):
        return dist.marginal(y) * binary_entropy(posterior_p0(dist, y))

    lo, hi = dist.support(quad)
    value = 1.0 - float(integrate(integrand, lo, hi, quad))
    return min(1.0, max(0.0, value))


def mutual_info_announced(dist, quad=QuadratureConfig()):
    """I(X:Ytilde|U) for the announcement ``u = |y|``, ``ytilde = sign``.

    Since (ytilde, u) determines y almost surely, this equals
    ``I(X:Y) - I(X:U)``. The second term vanishes for symmetric ``dist``.
    """
    ixy = mutual_info_xy(dist, quad)
    if dist.is_symmetric:
        return ixy

    def p_u_given(u, x):
        return dist.density(u, x) + dist.density(-u, x)

    def integrand(u):
        a, b = p_u_given(u, 0), p_u_given(u, 1)
        total = a + b
        with np.errstate(invalid="ignore", divide="ignore"):
            p0 = np.where(total > 0, a / np.where(total > 0, total, 1.0), 0.5)
        return 0.5 * total * binary_entropy(np.clip(p0, 0.0, 1.0))

    hi = max(abs(m) for m in dist.mu) + quad.range_sigmas * dist.sigma
    ixu = 1.0 - float(integrate(integrand, 0.0, hi, quad))
    return max(0.0, ixy - max(0.0, ixu))


def discretize_announce(y):
    """Map an outcome to ``(ytilde, u)``: sign bit (ties to 1) and modulus."""
    y_arr = np.asarray(y, dtype=float)
    ytilde = np.where(y_arr < 0, 0, 1).astype(np.int8)
    u = np.abs(y_arr)
    if y_arr.ndim == 0:
        return int(ytilde), float(u)
    return ytilde, u


def binned_conditional_mi(x, y, n_bins=200):
    """Plug-in estimate of I(X:Ytilde|U) from samples, with a standard error.

    ``u = |y|`` is binned into ``n_bins`` equal-count bins. The standard error
    is the delta-method value ``std(i_k) / sqrt(N)`` of the pointwise
    information ``i_k = log2 p(x|ytilde,u) - log2 p(x|u)``.

    Returns:
        (estimate, standard_error) in bits.
    """
    x = np.asarray(x, dtype=np.int64)
    ytilde, u = discretize_announce(np.asarray(y, dtype=float))
    ytilde = ytilde.astype(np.int64)
    n = len(x)
    if n < 2 * n_bins:
        raise InsufficientDataError(f"need at least {2 * n_bins} samples, got {n}")
    edges = np.quantile(u, np.linspace(0.0, 1.0, n_bins + 1))
    b = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, n_bins - 1)

    counts = np.zeros((n_bins, 2, 2))
    np.add.at(counts, (b, ytilde, x), 1.0)
    n_b_yt = counts.sum(axis=2, keepdims=True)
    n_b_x = counts.sum(axis=1, keepdims=True)
    n_b = counts.sum(axis=(1, 2), keepdims=True)

    p_x_given_byt = counts / np.where(n_b_yt > 0, n_b_yt, 1.0)
    p_x_given_b = n_b_x / np.where(n_b > 0, n_b, 1.0)
    pointwise = np.log2(p_x_given_byt[b, ytilde, x]) - np.log2(p_x_given_b[b, 0, x])
    return float(pointwise.mean()), float(pointwise.std(ddof=1) / math.sqrt(n))
