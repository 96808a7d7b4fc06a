"""Pure-numpy versions of the hot kernels (fallback when the JIT is off)."""
import numpy as np


def rk4_gaussian(cov_ref, delta, mean, omega_sq, rows, cols, vals, lam_chi, dt):
    """Same contract as the loop kernel: ``delta`` and ``mean`` are updated in place."""
    out_delta, out_mean = delta, mean
    d = omega_sq.shape[0]
    coupling = np.zeros((d, d))
    np.add.at(coupling, (rows, cols), vals)

    def rhs(dev, lc):
        c = cov_ref + dev
        y = np.empty_like(c)
        y[0::2] = c[1::2]
        y[1::2] = -omega_sq[:, None] * c[0::2]
        if lc != 0.0:
            y[1::2] += lc * (coupling @ c[0::2])
        return y + y.T

    def mean_rhs(m, lc):
        out = np.empty_like(m)
        out[0::2] = m[1::2]
        out[1::2] = -omega_sq * m[0::2]
        if lc != 0.0:
            out[1::2] += lc * (coupling @ m[0::2])
        return out

    n_steps = (lam_chi.shape[0] - 1) // 2
    h = 0.5 * dt
    for s in range(n_steps):
        c0, c1, c2 = lam_chi[2 * s], lam_chi[2 * s + 1], lam_chi[2 * s + 2]
        k1 = rhs(delta, c0)
        k2 = rhs(delta + h * k1, c1)
        k3 = rhs(delta + h * k2, c1)
        k4 = rhs(delta + dt * k3, c2)
        delta = delta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        delta = 0.5 * (delta + delta.T)

        m1 = mean_rhs(mean, c0)
        m2 = mean_rhs(mean + h * m1, c1)
        m3 = mean_rhs(mean + h * m2, c1)
        m4 = mean_rhs(mean + dt * m3, c2)
        mean = mean + dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
    out_delta[...] = delta
    out_mean[...] = mean
    return out_delta, out_mean


def abs_exp_double_sum(a, b, t, omega):
    ph = np.exp(1j * omega * (t - t[0]))
    lower = np.cumsum(b * ph)                       # l <= j
    upper = np.cumsum((b / ph)[::-1])[::-1]          # l >= j
    upper = np.append(upper[1:], 0.0)                # l > j
    return np.sum(a * (lower / ph + upper * ph))
