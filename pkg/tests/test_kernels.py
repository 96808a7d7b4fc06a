import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from probe_reduce.errors import GridMismatch, NonPositiveFrequency, OutOfBox
from probe_reduce.field import FieldBox, field_wightman_box
from probe_reduce.geometry import make_grid
from probe_reduce.kernels import (
    KernelSet,
    SourceTrajectory,
    feynman,
    influence_phase,
    smeared_wightman,
    udw_response,
    wightman,
)
from probe_reduce.smearing import GaussianSwitching, time_grid, trapezoid_weights


def test_wightman_equal_times():
    assert wightman(2.0, 0.3, 0.3) == pytest.approx(0.25j)


def test_wightman_modulus(rng):
    om = rng.uniform(0.1, 5, 20)
    t, tp = rng.normal(size=(2, 20)) * 10
    np.testing.assert_allclose(np.abs(wightman(om, t, tp)), 1 / (2 * om), rtol=1e-14)


def test_wightman_conjugate(rng):
    om, t, tp = 1.3, 2.1, -0.4
    assert np.conj(wightman(om, t, tp)) == pytest.approx(-0.5j / om * np.exp(1j * om * (t - tp)), abs=1e-15)


def test_feynman_time_ordering(rng):
    for _ in range(10):
        om = rng.uniform(0.2, 3)
        a, b = sorted(rng.normal(size=2) * 5)
        assert feynman(om, b, a) == wightman(om, b, a)
        assert feynman(om, a, b) == wightman(om, b, a)
        assert feynman(om, a, b) == feynman(om, b, a)


@pytest.mark.parametrize("fn", [wightman, feynman])
def test_kernels_reject_nonpositive(fn):
    with pytest.raises(NonPositiveFrequency):
        fn(0.0, 1.0, 0.0)
    with pytest.raises(NonPositiveFrequency):
        KernelSet([1.0, -2.0])


def _traj(seed, omegas, n=401, t_f=8.0, real=False):
    rng = np.random.default_rng(seed)
    t = time_grid(0.0, t_f, n - 1)
    k = np.arange(1, 5)
    c = rng.normal(size=(len(omegas), 4)) + (0 if real else 1j) * rng.normal(size=(len(omegas), 4))
    s = np.einsum("mk,kt->mt", c, np.cos(np.outer(k, t) / 2 + rng.uniform(0, 6, size=(4, 1))))
    return SourceTrajectory(t, s)


KS = KernelSet([0.7, 1.5, 3.1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_forward_backward_cancellation(seed):
    psi = _traj(seed, KS.omegas)
    v = influence_phase(psi, psi, KS, 0.05)
    assert abs(v.value) < 1e-10 * v.term_scale


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-10, 10).filter(lambda a: abs(a) > 1e-3))
def test_quadratic_scaling(seed, a):
    psi = _traj(seed, KS.omegas)
    psi_p = _traj(seed + 1, KS.omegas)
    base = influence_phase(psi, psi_p, KS, 0.05).value
    scaled = influence_phase(psi.scaled(a), psi_p.scaled(a), KS, 0.05).value
    assert abs(scaled - a * a * base) <= 1e-12 * abs(a * a * base)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_exchange_conjugation(seed):
    psi = _traj(seed, KS.omegas, real=True)
    psi_p = _traj(seed + 7, KS.omegas, real=True)
    fwd = influence_phase(psi, psi_p, KS, 0.05)
    bwd = influence_phase(psi_p, psi, KS, 0.05)
    assert abs(bwd.value + np.conj(fwd.value)) < 1e-12 * fwd.term_scale


def test_zero_coupling_exact():
    psi, psi_p = _traj(1, KS.omegas), _traj(2, KS.omegas)
    assert influence_phase(psi, psi_p, KS, 0.0).value == 0


def test_single_mode_adaptive_oracle():
    n = 4096
    t = time_grid(0.0, 2 * np.pi, n)
    psi = SourceTrajectory(t, np.ones((1, n + 1)))
    zero = SourceTrajectory(t, np.zeros((1, n + 1)))
    lam = 0.3
    got = influence_phase(psi, zero, KernelSet([1.0]), lam).value
    # only the Feynman term survives; integrate each smooth triangle separately
    T = 2 * np.pi
    parts = []
    for f in (np.cos, np.sin):
        lower = dblquad(lambda tp, tt: f(tt - tp), 0, T, 0, lambda tt: tt, epsabs=1e-13, epsrel=1e-13)[0]
        parts.append(2 * lower)
    integral = 0.5j * (parts[0] - 1j * parts[1])
    oracle = 0.5 * lam * lam * integral
    assert abs(got - oracle) < 1e-8 * abs(oracle)


def test_source_trajectory_grid_checks():
    with pytest.raises(GridMismatch):
        SourceTrajectory(np.array([0.0, 1.0, 3.0]), np.zeros((1, 3)))
    with pytest.raises(GridMismatch):
        SourceTrajectory(np.linspace(0, 1, 5), np.zeros((1, 4)))
    a = SourceTrajectory(np.linspace(0, 1, 5), np.zeros((1, 5)))
    b = SourceTrajectory(np.linspace(0, 2, 5), np.zeros((1, 5)))
    with pytest.raises(GridMismatch):
        influence_phase(a, b, KernelSet([1.0]), 1.0)


def test_box_wightman_coincidence_positive():
    v = field_wightman_box(10.0, 1.0, 64, 3.3, 1.0, 3.3, 1.0)
    assert v.imag == 0 and v.real > 0


def test_box_wightman_hermitian(rng):
    x, xp = rng.uniform(0.5, 9.5, 2)
    t, tp = rng.normal(size=2)
    a = field_wightman_box(10.0, 1.0, 64, x, t, xp, tp)
    b = field_wightman_box(10.0, 1.0, 64, xp, tp, x, t)
    assert a == pytest.approx(np.conj(b), abs=1e-15)


def test_box_wightman_rejects_outside():
    with pytest.raises(OutOfBox):
        field_wightman_box(10.0, 1.0, 8, 0.0, 0.0, 5.0, 0.0)
    with pytest.raises(OutOfBox):
        field_wightman_box(10.0, 1.0, 8, 5.0, 0.0, 11.0, 0.0)


def test_smeared_wightman_is_double_integral_of_box_wightman():
    L, M, K = 10.0, 1.0, 12
    grid = make_grid(3.0, 7.0, 41)
    x = grid.points
    pa = np.exp(-((x - 4.5) ** 2))
    pb = np.exp(-((x - 5.5) ** 2) / 0.5)
    t = np.array([0.0, 0.4, 1.1])
    box = FieldBox(L, M, K)
    got = smeared_wightman(box, pa, pb, grid, t)
    w = grid.trapezoid_weights()
    for i in range(3):
        for j in range(3):
            W = field_wightman_box(L, M, K, x[:, None], t[i], x[None, :], t[j])
            ref = (w * pa) @ W @ (w * pb)
            assert got[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_smeared_wightman_truncation_tail():
    # M L = 10; Gaussian-smeared mid-box profiles
    box_lo, box_hi = FieldBox(10.0, 1.0, 32), FieldBox(10.0, 1.0, 64)
    grid = make_grid(0.0, 10.0, 4001)
    x = grid.points
    pa = np.exp(-0.5 * ((x - 5.0) / 0.3) ** 2)
    pb = np.exp(-0.5 * ((x - 5.5) / 0.3) ** 2)
    t = np.array([0.0, 0.7])
    lo = smeared_wightman(box_lo, pa, pb, grid, t)
    hi = smeared_wightman(box_hi, pa, pb, grid, t)
    assert np.max(np.abs(lo - hi) / np.abs(hi)) < 1e-4


@pytest.fixture(scope="module")
def response_setup():
    grid = make_grid(-6, 6, 601)
    box = FieldBox.centered_on(grid, 48.0, 1.0, 96)
    profile = np.exp(-0.5 * grid.points**2)
    t = time_grid(0, 16, 1600)
    return grid, box, profile, t


def test_udw_response_trivial_zeros(response_setup):
    grid, box, profile, t = response_setup
    sw = GaussianSwitching(8.0, 1.0)
    assert udw_response(1.0, sw, t, profile, grid, box, 0.0) == 0
    assert udw_response(1.0, np.zeros_like(t), t, profile, grid, box, 0.1) == 0


def test_udw_response_decreases_with_gap(response_setup):
    grid, box, profile, t = response_setup
    sw = GaussianSwitching(8.0, 1.0)
    gaps = np.linspace(0.2, 4.0, 12)
    r = np.array([udw_response(g, sw, t, profile, grid, box, 0.1) for g in gaps])
    assert np.all(r >= -1e-10)
    assert np.all(np.diff(r) < 0)


def test_udw_response_matches_double_sum(response_setup):
    grid, box, profile, t = response_setup
    sw = GaussianSwitching(8.0, 1.0)
    ts = t[::20]
    W = smeared_wightman(box, profile, profile, grid, ts)
    w = trapezoid_weights(ts) * sw(ts)
    ph = np.exp(-1j * 1.3 * (ts - ts[0]))
    # W(t, t') pairs with exp(-i Omega (t - t'))
    brute = 0.01 * np.real(np.einsum("i,j,ij->", w * ph, w * ph.conj(), W))
    got = udw_response(1.3, sw, ts, profile, grid, box, 0.1)
    assert got == pytest.approx(brute, rel=1e-10)
