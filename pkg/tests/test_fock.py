import math

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from cvkeyrate import fock


def test_state_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        fock.TruncatedState(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValueError, match="trace"):
        fock.TruncatedState(np.diag([0.5, 0.4]))
    with pytest.raises(ValueError, match="positive"):
        fock.TruncatedState(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        fock.TruncatedState(np.ones((1, 1)))


def test_random_state_extremes():
    pure = fock.random_state(8, purity_bias=1.0, seed=1)
    lam, vec, _ = fock.max_eigenpair(pure)
    assert lam == pytest.approx(1.0)
    np.testing.assert_allclose(pure.matrix, np.outer(vec, vec.conj()), atol=1e-12)
    mixed = fock.random_state(6, purity_bias=0.0, seed=2)
    np.testing.assert_allclose(mixed.matrix, np.eye(6) / 6, atol=1e-12)


def test_random_state_deterministic():
    a = fock.random_state(10, 0.7, seed=42, decay=0.4)
    b = fock.random_state(10, 0.7, seed=42, decay=0.4)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, fock.random_state(10, 0.7, seed=43, decay=0.4).matrix)


def test_random_state_top_eigenvalue():
    s = fock.random_state(12, 0.8, seed=3, rank=4, random_spectrum=True)
    assert fock.max_eigenpair(s)[0] >= 0.8 - 1e-12
    with pytest.raises(ValueError):
        fock.random_state(1, 0.5, seed=0)


def test_coherent_vector_basics():
    vac = fock.coherent_vector(0.0, 12)
    assert vac[0] == 1 and np.all(vac[1:] == 0)
    v = fock.coherent_vector(0.7 - 0.2j, 12)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(fock.TruncationError):
        fock.coherent_vector(2.5, 12)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.8, 1.0])
def test_coherent_overlap_closed_form(alpha):
    ov = abs(np.vdot(fock.coherent_vector(alpha, 12), fock.coherent_vector(-alpha, 12)))
    assert ov == pytest.approx(math.exp(-2 * alpha**2), abs=1e-8)
    assert fock.coherent_overlap(alpha, -alpha) == pytest.approx(math.exp(-2 * alpha**2))


def test_moments_vacuum_coherent_number():
    vac = fock.TruncatedState.pure(fock.coherent_vector(0, 6))
    assert fock.moments(vac) == pytest.approx((0, 0, 0.5, 0.5), abs=1e-15)
    beta = 0.6 + 0.3j
    coh = fock.TruncatedState.pure(fock.coherent_vector(beta, 14))
    mq, mp, vq, vp = fock.moments(coh)
    assert (mq, mp) == pytest.approx((math.sqrt(2) * 0.6, math.sqrt(2) * 0.3), abs=1e-7)
    assert (vq, vp) == pytest.approx((0.5, 0.5), abs=1e-7)
    one = np.zeros(6)
    one[1] = 1
    assert fock.moments(fock.TruncatedState.pure(one)) == pytest.approx((0, 0, 1.5, 1.5), abs=1e-15)


def test_moments_thermal_like():
    # diag(p_k): var = <n> + 1/2 in both quadratures
    p = 0.3 ** np.arange(12)
    p /= p.sum()
    s = fock.TruncatedState(np.diag(p))
    n = float(np.dot(p, np.arange(12)))
    assert fock.moments(s) == pytest.approx((0, 0, n + 0.5, n + 0.5), abs=1e-14)


def test_displacement_shifts_means_keeps_variances():
    for seed in range(20):
        s = fock.random_state(18, 0.6, seed=seed, rank=3, decay=0.3)
        beta = 0.4 * np.exp(1j * seed)
        before = fock.moments(s)
        after = fock.moments(fock.displace(s, beta))
        assert after[0] == pytest.approx(before[0] + math.sqrt(2) * beta.real, abs=1e-8)
        assert after[1] == pytest.approx(before[1] + math.sqrt(2) * beta.imag, abs=1e-8)
        assert after[2:] == pytest.approx(before[2:], abs=1e-8)


def test_displacement_truncation_guard():
    with pytest.raises(fock.TruncationError):
        fock.displace(fock.random_state(6, 1.0, seed=0, decay=0.9), 2.0)


def test_fidelity_vacuum_and_coherent():
    vac = fock.TruncatedState.pure(fock.coherent_vector(0, 8))
    assert fock.fidelity_with_coherent(vac) == (pytest.approx(0.0, abs=1e-15), 0j)
    coh = fock.TruncatedState.pure(fock.coherent_vector(0.5j, 14))
    eps, b = fock.fidelity_with_coherent(coh, amplitude_scale=math.sqrt(2))
    assert b == pytest.approx(0.5j, abs=1e-8)
    assert eps == pytest.approx(0.0, abs=1e-12)


def test_fidelity_maximally_mixed_qubit():
    # <a> = 0 so beta_bar = 0 and only the vacuum component counts
    s = fock.TruncatedState(np.eye(2) / 2)
    eps, b = fock.fidelity_with_coherent(s)
    assert b == 0 and eps == pytest.approx(0.5, abs=1e-15)


def test_fidelity_is_exact_for_truncated_support():
    # renormalising the truncated coherent vector would bias the fidelity
    beta = 0.8
    s = fock.TruncatedState.pure(fock.coherent_vector(beta, 12))
    v = fock.coherent_vector(beta, 12, normalize=False)
    exact = abs(np.vdot(v, s.matrix @ v))
    eps, _ = fock.fidelity_with_coherent(s, amplitude_scale=math.sqrt(2))
    assert 1 - eps == pytest.approx(exact, abs=1e-12)


def test_max_eigenpair_examples():
    lam, vec, deg = fock.max_eigenpair(fock.TruncatedState(np.diag([0.7, 0.3])))
    assert lam == pytest.approx(0.7) and abs(vec[0]) == pytest.approx(1.0) and not deg
    psi = fock.coherent_vector(0.3, 6)
    lam, vec, _ = fock.max_eigenpair(fock.TruncatedState.pure(psi))
    assert lam == pytest.approx(1.0) and abs(np.vdot(vec, psi)) == pytest.approx(1.0)


def test_max_eigenpair_matches_lanczos():
    for seed in range(10):
        s = fock.random_state(12, 0.3, seed=seed, random_spectrum=True)
        lam, vec, _ = fock.max_eigenpair(s)
        ref_val, ref_vec = eigsh(s.matrix, k=1, which="LA", tol=1e-14)
        assert lam == pytest.approx(ref_val[0], abs=1e-10)
        assert abs(np.vdot(vec, ref_vec[:, 0])) == pytest.approx(1.0, abs=1e-9)


def test_max_eigenpair_degeneracy_flag():
    s = fock.TruncatedState(np.diag([0.4, 0.4, 0.2]))
    assert fock.max_eigenpair(s)[2]
    with pytest.raises(fock.DegenerateSpectrumError):
        fock.max_eigenpair(s, strict=True)


def test_oracle_states_respect_guard():
    kept = 0
    for seed in range(60):
        try:
            s = fock.random_oracle_state(seed)
        except fock.TruncationError:
            continue
        assert s.tail_mass < fock.TAIL_TOL
        kept += 1
    assert kept > 20
