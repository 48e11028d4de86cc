"""Truncated Fock-space states for brute-force checks of the moment bounds.

Quadratures follow ``q = (a + a^dagger) / sqrt(2)`` and
``p = (a - a^dagger) / (i sqrt(2))``, so the vacuum has variance 1/2.
Second moments use the normally ordered forms

    q^2 = (a^2 + a^dagger^2 + 2n + 1) / 2,   p^2 = -(a^2 + a^dagger^2 - 2n - 1) / 2,

which are exact for any state supported on the truncated levels (the
truncated ``a a^dagger`` would lose its last diagonal entry).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

DEFAULT_DIM = 12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_TOL = 1e-10
TAIL_TOL = 1e-6
COHERENT_TAIL_TOL = 1e-8
DEGENERACY_TOL = 1e-10


class TruncationError(ValueError):
    """A state or vector has too much weight near the truncation edge."""


class DegenerateSpectrumError(ValueError):
    """The two largest eigenvalues coincide, so no maximal eigenvector is singled out."""


@dataclass(frozen=True, eq=False)
class TruncatedState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError(f"density matrix must be square with dim >= 2, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {np.trace(m).real!r}, expected 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -EIGEN_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def tail_mass(self):
        return float(self.matrix[-1, -1].real)

    def check_truncation(self, tol=TAIL_TOL):
        if self.tail_mass >= tol:
            raise TruncationError(f"tail mass {self.tail_mass:.3g} >= {tol:g} at dim {self.dim}")

    @classmethod
    def pure(cls, vec):
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def mixture(cls, weights, vectors):
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        m = sum(wi * np.outer(v, np.conj(v)) / np.vdot(v, v).real for wi, v in zip(w, vectors))
        return cls(m)


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _decaying_vectors(rng, dim, count, decay):
    env = decay ** np.arange(dim)
    z = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    q, _ = np.linalg.qr(env[:, None] * z)
    return q


def random_state(dim=DEFAULT_DIM, purity_bias=0.5, seed=0, rank=None, decay=None, random_spectrum=False):
    """Random density matrix whose largest eigenvalue is at least ``purity_bias``.

    The spectrum is ``purity_bias`` on one eigenvector plus
    ``1 - purity_bias`` spread over ``rank`` levels, evenly by default or
    with Dirichlet weights when ``random_spectrum`` is set. Eigenvectors are
    Haar random, or, if ``decay`` is given, orthonormalised random vectors
    with amplitude envelope ``decay**k`` so the state stays clear of the
    truncation edge.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if not 0 <= purity_bias <= 1:
        raise ValueError(f"purity_bias must lie in [0, 1], got {purity_bias}")
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}]")
    rng = np.random.default_rng(seed)
    vecs = _decaying_vectors(rng, dim, rank, 1.0 if decay is None else decay)
    spread = rng.dirichlet(np.ones(rank)) if random_spectrum else np.full(rank, 1.0 / rank)
    spec = (1.0 - purity_bias) * spread
    spec[0] += purity_bias
    m = (vecs * spec) @ vecs.conj().T
    return TruncatedState(m / np.trace(m).real)


def coherent_vector(beta, dim=DEFAULT_DIM, normalize=True):
    """Fock amplitudes ``exp(-|beta|^2/2) beta^k / sqrt(k!)`` for ``k < dim``.

    With ``normalize=False`` the truncated amplitudes are returned as is:
    for a state supported on the first ``dim`` levels, ``v^dagger rho v``
    is then exactly the fidelity with the untruncated coherent state.

    Raises:
        TruncationError: If the discarded tail mass is at least 1e-8.
    """
    beta = complex(beta)
    k = np.arange(dim)
    log_fact = np.array([math.lgamma(i + 1.0) for i in k])
    r2 = abs(beta) ** 2
    if beta == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
    else:
        logmag = -0.5 * r2 + k * math.log(abs(beta)) - 0.5 * log_fact
        v = np.exp(logmag) * np.exp(1j * k * np.angle(beta))
    tail = 1.0 - float(np.sum(np.abs(v) ** 2))
    if tail >= COHERENT_TAIL_TOL:
        raise TruncationError(f"coherent state |{beta}> loses {tail:.3g} beyond dim {dim}")
    return v / np.linalg.norm(v) if normalize else v


def moments(state):
    """``(mean_q, mean_p, var_q, var_p)`` of a truncated state."""
    rho = state.matrix
    a = annihilation(state.dim)
    ex_a = np.trace(rho @ a)
    ex_a2 = np.trace(rho @ a @ a)
    ex_n = float(np.real(np.sum(np.diag(rho).real * np.arange(state.dim))))
    mean_q = math.sqrt(2.0) * ex_a.real
    mean_p = math.sqrt(2.0) * ex_a.imag
    q2 = ex_a2.real + ex_n + 0.5
    p2 = -ex_a2.real + ex_n + 0.5
    return mean_q, mean_p, q2 - mean_q**2, p2 - mean_p**2


def displace(state, beta):
    """``D(beta) rho D(beta)^dagger``, computed with headroom and cut back.

    Raises:
        TruncationError: If more than 1e-12 of the weight leaves the space.
    """
    big = state.dim + 40
    a = annihilation(big)
    d = expm(beta * a.conj().T - np.conj(beta) * a)
    rho = np.zeros((big, big), dtype=complex)
    rho[: state.dim, : state.dim] = state.matrix
    out = (d @ rho @ d.conj().T)[: state.dim, : state.dim]
    lost = 1.0 - np.trace(out).real
    if lost > TRACE_TOL:
        raise TruncationError(f"displacement by {beta} pushes {lost:.3g} beyond dim {state.dim}")
    out = 0.5 * (out + out.conj().T)
    return TruncatedState(out / np.trace(out).real)


def beta_bar(state, amplitude_scale=1.0):
    """Amplitude ``(mean_q + i mean_p) / amplitude_scale`` of the reference coherent state."""
    mq, mp, _, _ = moments(state)
    return complex(mq, mp) / amplitude_scale


def fidelity_with_coherent(state, amplitude_scale=1.0):
    """Mixedness ``eps = 1 - <beta_bar|rho|beta_bar>`` and ``beta_bar``.

    ``amplitude_scale=1`` reads the q-mean as the amplitude directly;
    ``sqrt(2)`` picks the coherent state whose quadrature means equal the
    state's.
    """
    b = beta_bar(state, amplitude_scale)
    v = coherent_vector(b, state.dim, normalize=False)
    f = float(np.real(np.vdot(v, state.matrix @ v)))
    return 1.0 - f, b


def max_eigenpair(state, strict=False):
    """Largest eigenvalue, its unit eigenvector and a degeneracy flag.

    Raises:
        DegenerateSpectrumError: If ``strict`` and the top two eigenvalues
            are within 1e-10.
    """
    w, v = np.linalg.eigh(state.matrix)
    degenerate = bool(w[-1] - w[-2] <= DEGENERACY_TOL)
    if degenerate and strict:
        raise DegenerateSpectrumError(f"top eigenvalues {w[-1]:.12g}, {w[-2]:.12g}")
    return float(w[-1]), v[:, -1], degenerate


def coherent_overlap(b0, b1):
    """``|<b0|b1>|`` for untruncated coherent states."""
    return math.exp(-abs(complex(b0) - complex(b1)) ** 2 / 2.0)


def random_oracle_state(seed, dim=DEFAULT_DIM, max_amplitude=0.8):
    """Test state for the moment-bound checks, deterministic per seed.

    Half the draws are low-rank random states with decaying Fock envelope,
    displaced by a random amplitude; the other half are mixtures of nearby
    coherent states with one dominant component. Either kind can fail the
    truncation guard, so callers should be ready to catch
    :class:`TruncationError`.
    """
    rng = np.random.default_rng(seed)
    phase = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    if rng.random() < 0.5:
        base = random_state(
            dim,
            purity_bias=rng.uniform(0.5, 1.0),
            seed=int(rng.integers(2**63)),
            rank=int(rng.integers(1, 5)),
            decay=rng.uniform(0.2, 0.5),
            random_spectrum=True,
        )
        state = displace(base, rng.uniform(0.0, max_amplitude) * phase)
    else:
        k = int(rng.integers(1, 4))
        centre = rng.uniform(0.0, max_amplitude) * phase
        jitter = 0.15 * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
        weights = rng.dirichlet(np.ones(k))
        weights[0] += 2.0
        state = TruncatedState.mixture(weights, [coherent_vector(centre + j, dim) for j in jitter])
    state.check_truncation()
    return state
