import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvkeyrate import fock
from cvkeyrate.eigen_bounds import (
    InfeasiblePointError,
    InteriorPoint,
    MomentBounds,
    OverlapInterval,
    UncertaintyViolation,
    bob_overlap_bounds,
    bob_overlap_interval,
    eve_overlap_bounds,
    eve_overlap_interval,
    input_overlap,
    kappa_from_stats,
    mixedness_bound,
    moment_bounds,
)
from cvkeyrate.observation import ChannelParams, ObservedStatistics, stats_from_params


def _stats(m0, m1, var=0.5):
    return ObservedStatistics((m0.real, m1.real), (m0.imag, m1.imag), (var, var), (var, var))


def _cu_formula(e0, e1, t0, t1, k):
    a0, a1 = math.sqrt((1 - e0) / (1 - t0)), math.sqrt((1 - e1) / (1 - t1))
    w0, w1 = math.sqrt((e0 - t0) / (1 - 2 * t0)), math.sqrt((e1 - t1) / (1 - 2 * t1))
    kp = math.sqrt(1 - k * k)
    return k * a0 * a1 + kp * a0 * w1 + kp * a1 * w0 + w1 * w0


def test_mixedness_examples():
    assert mixedness_bound(0.5, 0.5) == 0.0
    assert mixedness_bound(0.501, 0.501) == pytest.approx(0.0010005, rel=1e-12)


def test_mixedness_uncertainty_violation():
    with pytest.raises(UncertaintyViolation, match="unphysical"):
        mixedness_bound(0.2, 0.2)
    # product 1/4 within tolerance is accepted and clamps at 0
    assert mixedness_bound(0.25, 1.0 - 2e-9) >= 0.0


@given(st.floats(0.5, 3), st.floats(0.5, 3), st.floats(0, 1))
def test_mixedness_monotone(vq, vp, dv):
    assert mixedness_bound(vq + dv, vp) >= mixedness_bound(vq, vp)
    assert mixedness_bound(vq, vp + dv) >= mixedness_bound(vq, vp)


def test_kappa_examples():
    assert kappa_from_stats(_stats(-0.3, 0.3)) == pytest.approx(math.exp(-2 * 0.09))
    assert kappa_from_stats(_stats(0.2 + 0.1j, 0.2 + 0.1j)) == 1.0
    s = stats_from_params(ChannelParams(0.7, 0.4, 0.0, mean_scale=1.3))
    assert kappa_from_stats(s) == pytest.approx(math.exp(-2 * 0.4 * 0.49 * 1.69))
    assert kappa_from_stats(s, amplitude_scale=math.sqrt(2)) == pytest.approx(math.exp(-0.4 * 0.49 * 1.69))


def test_input_overlap():
    assert input_overlap(0.0) == 1.0
    assert input_overlap(0.5) == pytest.approx(0.60653065971263342)
    assert input_overlap(1.0) == pytest.approx(math.exp(-2))
    with pytest.raises(ValueError):
        input_overlap(-0.1)


def test_moment_bounds_and_types():
    mb = moment_bounds(stats_from_params(ChannelParams(0.5, 0.5, 0.002)), 0.5)
    assert mb.U == pytest.approx((0.0010005, 0.0010005))
    assert mb.input_overlap == pytest.approx(math.exp(-0.5))
    with pytest.raises(ValueError):
        MomentBounds((-0.1, 0.0), 0.5, 0.5)
    with pytest.raises(ValueError):
        InteriorPoint((0.1, 0.1), (0.2, 0.0))
    with pytest.raises(ValueError):
        InteriorPoint((0.6, 0.1), (0.5, 0.0))
    with pytest.raises(ValueError):
        OverlapInterval(0.7, 0.6)


def test_bob_interval_zero_point():
    c = bob_overlap_interval(InteriorPoint((0, 0), (0, 0)), 0.37)
    assert c.lo == c.hi == 0.37


def test_bob_interval_formula_reevaluation():
    e0, e1, t0, t1, k = 0.01, 0.02, 0.004, 0.015, 0.8
    c = bob_overlap_interval(InteriorPoint((e0, e1), (t0, t1)), k)
    assert c.hi == pytest.approx(_cu_formula(e0, e1, t0, t1, k), rel=1e-14)
    lead = k * math.sqrt((1 - e0 - t0) / (1 - 2 * t0)) * math.sqrt((1 - e1 - t1) / (1 - 2 * t1))
    cross = _cu_formula(e0, e1, t0, t1, k) - k * math.sqrt((1 - e0) / (1 - t0) * (1 - e1) / (1 - t1))
    assert c.lo == pytest.approx(lead - cross, rel=1e-13)


def test_bob_interval_kappa_one_equal_eps():
    # eps == epst kills every cross term and kappa=1 leaves sqrt ratios
    c = bob_overlap_interval(InteriorPoint((0.1, 0.05), (0.1, 0.05)), 1.0)
    assert c.lo == pytest.approx(1.0, abs=1e-15)
    assert c.hi == 1.0


def test_bob_interval_clamps():
    c = bob_overlap_interval(InteriorPoint((0.3, 0.3), (0.0, 0.0)), 0.1)
    assert c.lo == 0.0
    assert 0.0 <= c.hi <= 1.0


def test_bob_infeasible_radicand():
    lo, hi, ok = bob_overlap_bounds(0.01, 0.01, 0.02, 0.0, 0.5)
    assert not ok


def test_bob_randomised_ordering():
    rng = np.random.default_rng(5)
    e = rng.uniform(0, 0.45, (2, 10_000))
    t = e * rng.uniform(0, 1, (2, 10_000))
    k = rng.uniform(0, 1, 10_000)
    lo, hi, ok = bob_overlap_bounds(e[0], e[1], t[0], t[1], k)
    assert ok.all()
    assert np.all(lo <= hi)
    assert np.all((lo >= 0) & (hi <= 1))


def test_bob_nested_boxes_envelope():
    k = 0.7

    def envelope(u):
        grid = np.linspace(0, u, 15)
        e0, e1, t0, t1 = np.meshgrid(grid, grid, grid, grid, indexing="ij")
        m = (t0 <= e0) & (t1 <= e1)
        lo, hi, ok = bob_overlap_bounds(e0[m], e1[m], t0[m], t1[m], k)
        return lo[ok].min(), hi[ok].max()

    small, big = envelope(0.01), envelope(0.02)
    assert big[0] <= small[0] and big[1] >= small[1]


def test_eve_interval_beam_splitter_overlap():
    alpha, eta = 0.6, 0.3
    k = math.exp(-2 * eta * alpha**2)
    d = eve_overlap_interval(InteriorPoint((0, 0), (0, 0)), input_overlap(alpha), OverlapInterval(k, k))
    assert d.lo == d.hi == pytest.approx(math.exp(-2 * (1 - eta) * alpha**2), rel=1e-14)


def test_eve_interval_zero_epst_general_eps():
    c = OverlapInterval(0.55, 0.75)
    d = eve_overlap_interval(InteriorPoint((0.02, 0.03), (0, 0)), 0.4, c)
    assert (d.lo, d.hi) == pytest.approx((0.4 / 0.75, 0.4 / 0.55))


def test_eve_interval_zero_clow():
    d = eve_overlap_interval(InteriorPoint((0.1, 0.1), (0.05, 0.05)), 0.4, OverlapInterval(0.0, 0.9))
    assert d.hi == 1.0


def test_eve_interval_formula():
    t0, t1, in_ov, cl, cu = 0.01, 0.03, 0.4, 0.7, 0.8
    r = math.sqrt((math.sqrt((1 - t1) * t0) + math.sqrt((1 - t0) * t1)) ** 2 + t0 * t1)
    dd = math.sqrt((1 - t0) * (1 - t1))
    lo, hi, ok = eve_overlap_bounds(t0, t1, in_ov, cl, cu)
    assert ok
    assert lo == pytest.approx((in_ov - r) / (dd * cu))
    assert hi == pytest.approx((in_ov + r) / (dd * cl))
    assert hi < 1


def test_eve_interval_infeasible_when_lower_exceeds_one():
    with pytest.raises(InfeasiblePointError):
        eve_overlap_interval(InteriorPoint((0, 0), (0, 0)), 0.9, OverlapInterval(0.5, 0.5))


@given(st.floats(0, 0.2), st.floats(0, 0.2), st.floats(0.01, 1), st.floats(0, 1), st.floats(0, 1))
def test_eve_interval_ordering_and_symmetry(t0, t1, in_ov, c1, c2):
    cl, cu = sorted((c1, c2))
    lo, hi, ok = eve_overlap_bounds(t0, t1, in_ov, cl, cu)
    if ok:
        assert lo <= hi
    lo2, hi2, ok2 = eve_overlap_bounds(t1, t0, in_ov, cl, cu)
    assert ok == ok2 and lo == pytest.approx(lo2) and hi == pytest.approx(hi2)


@given(st.floats(0, 0.1), st.floats(0, 0.1), st.floats(0.01, 0.99), st.floats(0.5, 1))
def test_eve_interval_widens_with_epst(t0, t1, in_ov, c):
    lo0, hi0, _ = eve_overlap_bounds(0.0, 0.0, in_ov, c, c)
    lo, hi, _ = eve_overlap_bounds(t0, t1, in_ov, c, c)
    assert lo <= lo0 + 1e-15 and hi >= hi0 - 1e-15


def _oracle_states(count, start):
    seed = start
    while count:
        seed += 1
        try:
            yield fock.random_oracle_state(seed)
        except fock.TruncationError:
            continue
        count -= 1


def test_mixedness_contains_fock_states():
    for state in _oracle_states(200, 10_000):
        _, _, vq, vp = fock.moments(state)
        eps, _ = fock.fidelity_with_coherent(state, amplitude_scale=math.sqrt(2))
        assert eps <= mixedness_bound(vq, vp) + 1e-9


def test_literal_amplitude_breaks_mixedness_bound():
    # a pure coherent state has U = 0, yet reading mean_q as the amplitude
    # compares it with |sqrt(2) beta>
    state = fock.TruncatedState.pure(fock.coherent_vector(0.6, 14))
    _, _, vq, vp = fock.moments(state)
    eps_literal, b = fock.fidelity_with_coherent(state)
    assert b == pytest.approx(0.6 * math.sqrt(2))
    assert mixedness_bound(vq, vp) == pytest.approx(0.0, abs=1e-12)
    assert eps_literal == pytest.approx(1 - math.exp(-((math.sqrt(2) - 1) * 0.6) ** 2), rel=1e-6)
    assert fock.fidelity_with_coherent(state, math.sqrt(2))[0] == pytest.approx(0.0, abs=1e-12)


def test_bob_interval_contains_fock_pairs():
    states = _oracle_states(400, 20_000)
    checked = 0
    for s0, s1 in zip(states, states):
        l0, v0, deg0 = fock.max_eigenpair(s0)
        l1, v1, deg1 = fock.max_eigenpair(s1)
        if deg0 or deg1 or l0 <= 0.5 or l1 <= 0.5:
            continue
        e0, b0 = fock.fidelity_with_coherent(s0, math.sqrt(2))
        e1, b1 = fock.fidelity_with_coherent(s1, math.sqrt(2))
        c = bob_overlap_interval(InteriorPoint((e0, e1), (1 - l0, 1 - l1)), fock.coherent_overlap(b0, b1))
        assert c.lo - 1e-9 <= abs(np.vdot(v0, v1)) <= c.hi + 1e-9
        checked += 1
    assert checked > 100
