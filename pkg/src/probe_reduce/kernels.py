"""Closed-form oscillator kernels, the vacuum influence phase, and
perturbative detector observables used as independent cross-checks."""
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import GridMismatch, NonPositiveFrequency
from .field import field_wightman_box  # noqa: F401  re-exported
from .modes import mode_profile_projection
from .smearing import trapezoid_weights


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise NonPositiveFrequency(f"frequencies must be positive, got {omega}")
    return omega


def wightman(omega, t, t_prime):
    """W(t, t') = (i / 2w) exp(-i w (t - t'))."""
    omega = _check_omega(omega)
    return 0.5j / omega * np.exp(-1j * omega * (np.asarray(t) - np.asarray(t_prime)))


def feynman(omega, t, t_prime):
    """G(t, t') = (i / 2w) exp(-i w |t - t'|)."""
    omega = _check_omega(omega)
    return 0.5j / omega * np.exp(-1j * omega * np.abs(np.asarray(t) - np.asarray(t_prime)))


@dataclass(frozen=True)
class KernelSet:
    """Frequencies of the traced-out modes."""

    omegas: np.ndarray

    def __post_init__(self):
        om = np.atleast_1d(np.array(self.omegas, dtype=float))
        _check_omega(om)
        if om.size == 0:
            raise ValueError("kernel set must contain at least one mode")
        om.setflags(write=False)
        object.__setattr__(self, "omegas", om)


@dataclass(frozen=True)
class SourceTrajectory:
    """Samples psi_n(t_j) on a uniform time grid, shape (n_modes, n_times)."""

    times: np.ndarray
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if s.shape[1] != t.shape[0]:
            raise GridMismatch("samples do not match the time grid")
        dt = np.diff(t)
        if t.size < 2 or np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt.mean():
            raise GridMismatch("time grid must be uniform and increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", s)

    def scaled(self, a):
        return SourceTrajectory(self.times, a * self.samples)


@dataclass(frozen=True)
class InfluencePhaseValue:
    value: complex
    term_scale: float  # sum of |individual kernel terms|, for relative checks


def _influence_terms(psi, psi_p, t, omegas):
    """Per-mode trapezoid values of the four kernel integrals (without lambda^2/2)."""
    w = trapezoid_weights(t)
    tr = t - t[0]
    out = np.zeros((len(omegas), 4), dtype=complex)
    for n, om in enumerate(omegas):
        a = w * psi[n]
        b = w * psi_p[n]
        c = 0.5j / om
        e_minus = np.exp(-1j * om * tr)
        g_aa = c * _backend.abs_exp_double_sum(a, a, t, om)
        w_ba = c * np.sum(b * e_minus) * np.sum(a / e_minus)
        gc_bb = np.conj(c) * _backend.abs_exp_double_sum(b, b, t, -om)
        wc_ab = np.conj(c) * np.sum(a / e_minus) * np.sum(b * e_minus)
        out[n] = (g_aa, -w_ba, -gc_bb, wc_ab)
    return out


def influence_phase(psi, psi_prime, kernels, lam, extrapolate=True):
    """Vacuum influence phase of the traced-out modes.

    Evaluates the double-time quadratic form with the trapezoid rule. With
    ``extrapolate`` and an even number of intervals, one Richardson step
    against the every-other-sample grid removes the O(dt^2) error that the
    kink of the Feynman kernel on the diagonal introduces.
    """
    if psi.times.shape != psi_prime.times.shape or not np.allclose(psi.times, psi_prime.times, rtol=0, atol=0):
        raise GridMismatch("psi and psi_prime must share a time grid")
    om = kernels.omegas
    if psi.samples.shape[0] != om.size or psi_prime.samples.shape[0] != om.size:
        raise GridMismatch("one trajectory row is needed per traced-out mode")
    t = psi.times
    terms = _influence_terms(psi.samples, psi_prime.samples, t, om)
    n_int = t.size - 1
    if extrapolate and n_int % 2 == 0 and n_int >= 4:
        coarse = _influence_terms(psi.samples[:, ::2], psi_prime.samples[:, ::2], t[::2], om)
        terms = (4.0 * terms - coarse) / 3.0
    pref = 0.5 * lam * lam
    return InfluencePhaseValue(complex(pref * terms.sum()), float(abs(pref) * np.abs(terms).sum()))


def smeared_wightman(box, profile_a, profile_b, grid, times):
    """W_ab(t, t') of the box field contracted with two spatial profiles.

    Equal to the double spatial integral of ``field_wightman_box`` against
    the profiles, evaluated mode by mode. Returns an (n_t, n_t) matrix.
    """
    ga = mode_profile_projection(profile_a, grid, box)
    gb = mode_profile_projection(profile_b, grid, box)
    wk = box.frequencies
    e = np.exp(-1j * np.outer(times - times[0], wk))
    return (e * (ga * gb / (2.0 * wk))) @ e.conj().T


def udw_response(detector_omega, switching, times, profile, grid, box, lam):
    """Second-order excitation functional of a detector coupled to the box vacuum.

    lam^2 * double integral of chi(t) chi(t') exp(-i Omega (t - t')) W_s(t, t'),
    with W_s the smeared box Wightman function. The double sum factorizes per
    field mode into |sum_t w chi e^{-i(Omega + w_k) t}|^2, which is evaluated
    directly. For an oscillator detector the mean excitation number is this
    value divided by 2 Omega.
    """
    detector_omega = float(_check_omega(detector_omega))
    chi = np.asarray(switching(times) if callable(switching) else switching, dtype=float)
    if chi.shape != np.shape(times):
        raise GridMismatch("switching samples do not match the time grid")
    gk = mode_profile_projection(profile, grid, box)
    wk = box.frequencies
    wt = trapezoid_weights(times) * chi
    amp = np.exp(-1j * np.outer(detector_omega + wk, times - times[0])) @ wt
    return float(lam * lam * np.sum(gk**2 / (2.0 * wk) * np.abs(amp) ** 2))


def second_order_detector_covariance(omegas, profiles, grid, box, switching, times, lam):
    """Detector covariance to O(lam^2) from the smeared box Wightman function.

    Oscillator detectors j with frequencies ``omegas[j]`` couple through
    ``lam * chi(t) * phi_j(t) * Psi_j(t)``, with Psi_j the field smeared against
    ``profiles[j]``, starting from the joint ground state. The Heisenberg
    solution to second order gives

        sigma = sigma_vac + lam^2 (X + Y + Y^T),
        X_ab = sum_{t,t'} k_a(t) k_b(t') chi chi' Re W_{ab}(t, t'),
        Y_ab = sum_{t > t'} k_a(t) chi chi' R_{ab}(t, t') c_b(t'),

    with k = sin(O(T-t))/O or cos(O(T-t)) the retarded kernels of (phi, pi),
    R = -2 Im W the field commutator and c_b the free detector correlator
    with the final quadrature. Double sums are trapezoid rules, evaluated per
    field mode with running sums. Quadrature order: (phi_0, pi_0, phi_1, ...).
    """
    omegas = _check_omega(np.atleast_1d(omegas))
    nd = omegas.size
    T = times[-1]
    chi = np.asarray(switching(times) if callable(switching) else switching, dtype=float)
    wt = trapezoid_weights(times) * chi
    tr = times - times[0]
    wk = box.frequencies
    gk = np.array([mode_profile_projection(p, grid, box) for p in profiles])  # (nd, K)

    kern = np.empty((2 * nd, times.size))
    corr = np.empty((2 * nd, times.size))
    for j, om in enumerate(omegas):
        kern[2 * j] = np.sin(om * (T - times)) / om
        kern[2 * j + 1] = np.cos(om * (T - times))
        corr[2 * j] = np.cos(om * (T - times)) / (2.0 * om)
        corr[2 * j + 1] = -0.5 * np.sin(om * (T - times))

    ph = np.exp(-1j * np.outer(wk, tr))  # (K, n_t)
    A = (kern * wt) @ ph.T  # (2nd, K): sum_t k_a w chi e^{-i w_k t}
    det = np.repeat(np.arange(nd), 2)
    coup = gk[det]  # (2nd, K)
    X = np.real(((coup * A / (2.0 * wk))) @ (coup * A).conj().T)

    # sum_{t > t'} k_a(t) w(t) sin(w_k (t - t')) w(t') c_b(t') per field mode
    Y = np.zeros((2 * nd, 2 * nd))
    for b in range(2 * nd):
        cum = np.cumsum((wt * corr[b]) * ph, axis=1)
        strict = np.concatenate([np.zeros((wk.size, 1)), cum[:, :-1]], axis=1)  # l < j
        inner = np.imag(ph.conj() * strict)  # sum_{l<j} w c_b sin(w_k (t_j - t_l))
        for a in range(2 * nd):
            gg = coup[a] * coup[b] / wk
            Y[a, b] = np.sum(gg[:, None] * inner * (wt * kern[a])[None, :])
    sigma0 = np.zeros((2 * nd, 2 * nd))
    for j, om in enumerate(omegas):
        sigma0[2 * j, 2 * j] = 0.5 / om
        sigma0[2 * j + 1, 2 * j + 1] = 0.5 * om
    return sigma0 + lam * lam * (X + Y + Y.T)
