"""Secret key rate lower bound under collective attacks.

Eve's information on Bob's outcome is split as

    S(Y:E) = S(E|X) + S(X:E) - S(E|Y)

and each term is bounded separately. ``S(E|X)`` follows from Bob's
conditional variances. The other two depend on interior parameters
(mixedness ``eps_x``, maximal-eigenvalue deficit ``epst_x`` and the overlap
``gamma`` of Eve's maximal eigenvectors) and are collected in ``s``, which
is maximised over all parameters compatible with the observed moments.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import eigen_bounds as eb
from ._kernels import g_terms_contract
from .entropy import binary_entropy, g_function, g_unchecked
from .observation import (
    conditional_from_params,
    mutual_info_announced,
    posterior,
    stats_from_params,
)
from .quadrature import QuadratureConfig, integrate

log = logging.getLogger(__name__)

GAMMA_GUARD = 1e-9
V_ZERO = 1e-15
DEFAULT_ALPHA_GRID = tuple(round(0.05 * i, 10) for i in range(21))


class DivergenceError(ArithmeticError):
    """A correction coefficient diverges because gamma is too close to 1."""


@dataclass(frozen=True)
class SearchConfig:
    n_eps: int = 40
    n_gamma: int = 20
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    symmetric: bool = True
    f_ec: float = 1.0
    strict_divergence: bool = False

    def __post_init__(self):
        if self.n_eps < 2 or self.n_gamma < 2:
            raise ValueError("grid counts must be at least 2")
        if not self.f_ec >= 1:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if any(a < 0 for a in self.alpha_grid):
            raise ValueError("alpha grid entries must be >= 0")

    def refined(self):
        """Grid with every interval halved; contains the current grid."""
        return dataclasses.replace(self, n_eps=2 * self.n_eps - 1, n_gamma=2 * self.n_gamma - 1)


@dataclass(frozen=True)
class BoundBreakdown:
    I_xy: float
    S_E_given_X: float
    s_max: float
    S_YE_bound: float
    G: float
    argmax: object
    alpha_used: float
    f_ec: float = 1.0
    U: tuple = (0.0, 0.0)
    kappa: float = 1.0
    input_overlap: float = 1.0
    d_interval: tuple = field(default=None)
    n_divergent: int = 0

    @property
    def G_floored(self):
        return max(self.G, 0.0)

    @property
    def diverged(self):
        return math.isinf(self.s_max)

    @property
    def status(self):
        if self.diverged:
            return "no certifiable key" + (" (no feasible interior point)" if self.argmax is None else "")
        return "ok" if self.G > 0 else "no certifiable key (negative rate)"

    def to_dict(self):
        pt = self.argmax
        return {
            "alpha": self.alpha_used,
            "I_xy": self.I_xy,
            "S_E_given_X": self.S_E_given_X,
            "s_max": _finite_or_str(self.s_max),
            "S_YE_bound": _finite_or_str(self.S_YE_bound),
            "G": _finite_or_str(self.G),
            "G_floored": self.G_floored,
            "f_ec": self.f_ec,
            "U": list(self.U),
            "kappa": self.kappa,
            "input_overlap": self.input_overlap,
            "argmax": None
            if pt is None
            else {"eps": list(pt.eps), "eps_tilde": list(pt.eps_tilde), "gamma": pt.gamma},
            "gamma_interval": None if self.d_interval is None else list(self.d_interval),
            "n_divergent": self.n_divergent,
            "status": self.status,
        }


def _finite_or_str(v):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def v_x(var_q, var_p):
    """Excess-noise parameter ``sqrt(var_q var_p) - 1/2``, floored at 0."""
    return max(0.0, math.sqrt(var_q * var_p) - 0.5)


def _thermal_entropy(v):
    if v < V_ZERO:
        return 0.0
    return (1.0 + v) * math.log2(1.0 + v) - v * math.log2(v)


def entropy_E_given_X_bound(Vx):
    """Gaussian-extremality bound on S(E|X) for uniform ``P(x)``."""
    return 0.5 * sum(_thermal_entropy(v) for v in Vx)


def mutual_info_AE_bound(pt):
    """Upper bound ``h[(1 - sqrt((1-epst_0)(1-epst_1)) gamma) / 2]`` on S(X:E)."""
    d = math.sqrt((1.0 - pt.eps_tilde[0]) * (1.0 - pt.eps_tilde[1]))
    return float(binary_entropy(0.5 * (1.0 - d * pt.gamma)))


def gamma_integrals(dist, gammas, quad=QuadratureConfig()):
    """Integrals over y needed by ``s`` for each overlap in ``gammas``.

    Returns an array of shape ``(3, len(gammas))`` holding

    * ``int P(y) g(P(0|y), gamma) dy``
    * ``int P(y) g(P(0|y), gamma)^2 / P(0|y) dy``
    * ``int P(y) g(P(0|y), gamma)^2 / P(1|y) dy``

    All components share one adaptive quadrature. For symmetric ``dist``
    only ``y >= 0`` is integrated, using ``P(0|-y) = P(1|y)``.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    omg = 1.0 - gammas * gammas
    folded = dist.is_symmetric

    def contract(ys, wk, wg, n_int):
        return g_terms_contract(
            dist.marginal(ys), posterior(dist, ys, 0), posterior(dist, ys, 1), omg, wk, wg, n_int, folded
        )

    lo, hi = dist.support(quad)
    if folded:
        res = integrate(None, 0.0, hi, quad, contract=contract)
        return np.stack([res[0], res[1], res[1]])
    return integrate(None, lo, hi, quad, contract=contract)


def integral_g(dist, gamma, quad=QuadratureConfig()):
    """``int P(y) g(P(0|y), gamma) dy`` in bits."""
    if gamma >= 1.0:
        return 0.0
    return float(gamma_integrals(dist, [gamma], quad)[0, 0])


def _check_guard(gamma):
    if gamma >= 1.0 - GAMMA_GUARD:
        raise DivergenceError(f"gamma = {gamma!r} is within {GAMMA_GUARD} of 1")


def k_x(dist, gamma, x, quad=QuadratureConfig()):
    """Coefficient of ``sqrt(epst_x)`` in the S(E|Y) correction.

    Raises:
        DivergenceError: If ``gamma >= 1 - 1e-9``.
    """
    _check_guard(gamma)
    j = float(gamma_integrals(dist, [gamma], quad)[1 + x, 0])
    return math.sqrt((1.0 + gamma) / (2.0 * (1.0 - gamma)) * j)


def k_tilde(gamma):
    """Coefficient ``g(1/2, gamma) / (1 - gamma)`` of ``sqrt(epst_0 epst_1)``."""
    _check_guard(gamma)
    return float(g_function(0.5, gamma)) / (1.0 - gamma)


def _s_values(epst0, epst1, gammas, integrals):
    """Vectorised ``s`` on matched arrays; +inf marks divergent points."""
    d = np.sqrt((1.0 - epst0) * (1.0 - epst1))
    z = np.clip(0.5 * (1.0 - d * gammas), 0.0, 1.0)
    s = binary_entropy(z) - integrals[0]
    has_corr = (epst0 > 0) | (epst1 > 0)
    near_one = gammas >= 1.0 - GAMMA_GUARD
    safe = has_corr & ~near_one
    if np.any(safe):
        gs = gammas[safe]
        pref = (1.0 + gs) / (2.0 * (1.0 - gs))
        k0 = np.sqrt(pref * integrals[1][safe])
        k1 = np.sqrt(pref * integrals[2][safe])
        kt = g_unchecked(np.full_like(gs, 0.5), gs) / (1.0 - gs)
        s[safe] += np.sqrt(epst0[safe]) * k0 + np.sqrt(epst1[safe]) * k1 + np.sqrt(epst0[safe] * epst1[safe]) * kt
    s[has_corr & near_one] = np.inf
    return s


def s_function(dist, pt, quad=QuadratureConfig()):
    """Bound on ``S(X:E) - S(E|Y)`` at one interior point.

    For ``gamma >= 1 - 1e-9`` only ``h[(1 - D gamma) / 2]`` is kept when
    both ``epst_x`` vanish, and ``inf`` is returned otherwise.
    """
    gam = np.array([pt.gamma])
    # at the guard the integral term is dropped, which can only raise s
    integrals = gamma_integrals(dist, gam, quad) if pt.gamma < 1.0 - GAMMA_GUARD else np.zeros((3, 1))
    return float(
        _s_values(np.array([pt.eps_tilde[0]]), np.array([pt.eps_tilde[1]]), gam, integrals)[0]
    )


def _axis(upper, n):
    if upper <= 0:
        return np.zeros(1)
    return np.linspace(0.0, upper, n)


def _candidate_points(U, cfg):
    """Grid over ``0 <= epst_x <= eps_x <= U_x`` as four flat arrays."""
    if cfg.symmetric:
        if abs(U[0] - U[1]) > 1e-12:
            log.warning("symmetric search with unequal U=%s; using max(U) for both bits", U)
        eps_rows, epst_rows = [], []
        for e in _axis(max(U), cfg.n_eps):
            et = _axis(e, cfg.n_eps)
            eps_rows.append(np.full_like(et, e))
            epst_rows.append(et)
        e = np.concatenate(eps_rows)
        t = np.concatenate(epst_rows)
        return e, e, t, t
    cols = [[], [], [], []]
    for e0 in _axis(U[0], cfg.n_eps):
        for e1 in _axis(U[1], cfg.n_eps):
            t0, t1 = np.meshgrid(_axis(e0, cfg.n_eps), _axis(e1, cfg.n_eps), indexing="ij")
            cols[0].append(np.full(t0.size, e0))
            cols[1].append(np.full(t0.size, e1))
            cols[2].append(t0.ravel())
            cols[3].append(t1.ravel())
    return tuple(np.concatenate(c) for c in cols)


class SearchResult(NamedTuple):
    s_max: float
    argmax: object
    gamma_interval: tuple
    n_divergent: int


def maximize_s(dist, mb, cfg, quad=QuadratureConfig()):
    """Worst case of ``s`` over all interior points compatible with ``mb``.

    Every grid point ``(eps, epst)`` yields ``[c_l, c_u]`` and then
    ``[d_l, d_u]``; ``gamma`` is scanned on ``n_gamma`` points spanning that
    interval, endpoints included. Infeasible points are skipped. Points
    where ``s`` diverges are counted in ``n_divergent``; the maximum is
    taken over the finite values unless ``cfg.strict_divergence`` is set,
    in which case a single divergent point makes ``s_max`` infinite. If
    every point diverges ``s_max`` is ``inf``. If no point is feasible the
    moments are inconsistent with the channel model and nothing can be
    certified, so ``s_max`` is also ``inf``, with no argmax.
    """
    e0, e1, t0, t1 = _candidate_points(mb.U, cfg)
    ok = (t0 < 0.5) & (t1 < 0.5)
    c_lo, c_hi, feas_c = eb.bob_overlap_bounds(e0, e1, t0, t1, mb.kappa)
    d_lo, d_hi, feas_d = eb.eve_overlap_bounds(t0, t1, mb.input_overlap, c_lo, c_hi)
    ok &= feas_c & feas_d
    if not np.any(ok):
        log.warning("no feasible interior point for %s", mb)
        return SearchResult(math.inf, None, None, 0)
    e0, e1, t0, t1, d_lo, d_hi = (a[ok] for a in (e0, e1, t0, t1, d_lo, d_hi))

    frac = np.linspace(0.0, 1.0, cfg.n_gamma)
    gam = np.minimum(d_lo[:, None] + (d_hi - d_lo)[:, None] * frac[None, :], 1.0).ravel()
    pt_index = np.repeat(np.arange(d_lo.size), cfg.n_gamma)

    uniq, inverse = np.unique(gam, return_inverse=True)
    integrals = np.zeros((3, uniq.size))
    needed = uniq < 1.0 - GAMMA_GUARD
    if np.any(needed):
        integrals[:, needed] = gamma_integrals(dist, uniq[needed], quad)
    s = _s_values(t0[pt_index], t1[pt_index], gam, integrals[:, inverse])

    divergent = np.isinf(s)
    n_div = int(divergent.sum())
    if n_div == s.size or (n_div and cfg.strict_divergence):
        best = int(np.argmax(divergent))
        s_max = math.inf
    else:
        best = int(np.argmax(np.where(divergent, -np.inf, s)))
        s_max = float(s[best])
    i = pt_index[best]
    argmax = eb.InteriorPoint(eps=(e0[i], e1[i]), eps_tilde=(t0[i], t1[i]), gamma=float(gam[best]))
    return SearchResult(s_max, argmax, (float(d_lo[i]), float(d_hi[i])), n_div)


def key_rate(stats, dist, alpha, cfg=SearchConfig(), quad=QuadratureConfig(), amplitude_scale=1.0):
    """Lower bound on the secret key rate (bits per sifted symbol).

    Raises:
        UncertaintyViolation: If the observed variances are unphysical.
    """
    mb = eb.moment_bounds(stats, alpha, amplitude_scale)
    i_xy = mutual_info_announced(dist, quad)
    vx = [v_x(stats.var_q[x], stats.var_p[x]) for x in (0, 1)]
    s_e_x = entropy_E_given_X_bound(vx)
    s_max, argmax, d_int, n_div = maximize_s(dist, mb, cfg, quad)
    s_ye = s_e_x + s_max
    g = i_xy - s_ye - (cfg.f_ec - 1.0) * (1.0 - i_xy)
    if math.isfinite(s_ye) and s_ye < 0:
        log.warning("negative S(Y:E) bound %.3g at alpha=%g", s_ye, alpha)
    return BoundBreakdown(
        I_xy=i_xy,
        S_E_given_X=s_e_x,
        s_max=s_max,
        S_YE_bound=s_ye,
        G=g,
        argmax=argmax,
        alpha_used=float(alpha),
        f_ec=cfg.f_ec,
        U=mb.U,
        kappa=mb.kappa,
        input_overlap=mb.input_overlap,
        d_interval=d_int,
        n_divergent=n_div,
    )


def optimize_alpha(params_template, cfg=SearchConfig(), quad=QuadratureConfig()):
    """Best key rate over ``cfg.alpha_grid``; ties go to the smaller alpha."""
    if not cfg.alpha_grid:
        raise ValueError("alpha grid is empty")
    best = None
    for alpha in sorted(cfg.alpha_grid):
        params = dataclasses.replace(params_template, alpha=alpha)
        result = key_rate(stats_from_params(params), conditional_from_params(params), alpha, cfg, quad)
        if best is None or result.G > best.G:
            best = result
    return best
