"""Loop-form hot kernels.

Written for ``numba.njit``; ``_backend`` compiles them when the JIT path is
enabled. They stay valid (slow) Python so they can be read and debugged
without numba.
"""
import numpy as np


def _rhs(cov_ref, delta, omega_sq, rows, cols, vals, lam_chi, out, work):
    # work <- A (ref + delta); out <- work + work^T
    n2 = delta.shape[0]
    d = n2 // 2
    for i in range(d):
        for c in range(n2):
            work[2 * i, c] = cov_ref[2 * i + 1, c] + delta[2 * i + 1, c]
            work[2 * i + 1, c] = -omega_sq[i] * (cov_ref[2 * i, c] + delta[2 * i, c])
    if lam_chi != 0.0:
        for p in range(rows.shape[0]):
            i = rows[p]
            j = cols[p]
            g = lam_chi * vals[p]
            for c in range(n2):
                work[2 * i + 1, c] += g * (cov_ref[2 * j, c] + delta[2 * j, c])
    for r in range(n2):
        for c in range(r, n2):
            s = work[r, c] + work[c, r]
            out[r, c] = s
            out[c, r] = s


def _mean_rhs(mean, omega_sq, rows, cols, vals, lam_chi, out):
    d = mean.shape[0] // 2
    for i in range(d):
        out[2 * i] = mean[2 * i + 1]
        out[2 * i + 1] = -omega_sq[i] * mean[2 * i]
    if lam_chi != 0.0:
        for p in range(rows.shape[0]):
            out[2 * rows[p] + 1] += lam_chi * vals[p] * mean[2 * cols[p]]


def rk4_gaussian(cov_ref, delta, mean, omega_sq, rows, cols, vals, lam_chi, dt):
    """Fixed-step RK4 for the covariance deviation and the mean.

    ``lam_chi`` holds lambda*chi at half-step resolution (length 2*n_steps+1).
    ``delta`` and ``mean`` are updated in place and also returned.
    """
    n2 = delta.shape[0]
    n_steps = (lam_chi.shape[0] - 1) // 2
    k1 = np.empty_like(delta)
    k2 = np.empty_like(delta)
    k3 = np.empty_like(delta)
    k4 = np.empty_like(delta)
    tmp = np.empty_like(delta)
    work = np.empty_like(delta)
    m1 = np.empty_like(mean)
    m2 = np.empty_like(mean)
    m3 = np.empty_like(mean)
    m4 = np.empty_like(mean)
    mt = np.empty_like(mean)
    h = 0.5 * dt
    for s in range(n_steps):
        c0 = lam_chi[2 * s]
        c1 = lam_chi[2 * s + 1]
        c2 = lam_chi[2 * s + 2]
        _rhs(cov_ref, delta, omega_sq, rows, cols, vals, c0, k1, work)
        for r in range(n2):
            for c in range(n2):
                tmp[r, c] = delta[r, c] + h * k1[r, c]
        _rhs(cov_ref, tmp, omega_sq, rows, cols, vals, c1, k2, work)
        for r in range(n2):
            for c in range(n2):
                tmp[r, c] = delta[r, c] + h * k2[r, c]
        _rhs(cov_ref, tmp, omega_sq, rows, cols, vals, c1, k3, work)
        for r in range(n2):
            for c in range(n2):
                tmp[r, c] = delta[r, c] + dt * k3[r, c]
        _rhs(cov_ref, tmp, omega_sq, rows, cols, vals, c2, k4, work)
        for r in range(n2):
            for c in range(r, n2):
                a = delta[r, c] + dt / 6.0 * (k1[r, c] + 2.0 * k2[r, c] + 2.0 * k3[r, c] + k4[r, c])
                b = delta[c, r] + dt / 6.0 * (k1[c, r] + 2.0 * k2[c, r] + 2.0 * k3[c, r] + k4[c, r])
                v = 0.5 * (a + b)
                delta[r, c] = v
                delta[c, r] = v

        _mean_rhs(mean, omega_sq, rows, cols, vals, c0, m1)
        for r in range(n2):
            mt[r] = mean[r] + h * m1[r]
        _mean_rhs(mt, omega_sq, rows, cols, vals, c1, m2)
        for r in range(n2):
            mt[r] = mean[r] + h * m2[r]
        _mean_rhs(mt, omega_sq, rows, cols, vals, c1, m3)
        for r in range(n2):
            mt[r] = mean[r] + dt * m3[r]
        _mean_rhs(mt, omega_sq, rows, cols, vals, c2, m4)
        for r in range(n2):
            mean[r] += dt / 6.0 * (m1[r] + 2.0 * m2[r] + 2.0 * m3[r] + m4[r])
    return delta, mean


def abs_exp_double_sum(a, b, t, omega):
    """sum_{j,l} a_j b_l exp(-i omega |t_j - t_l|) in O(n) by running sums."""
    n = a.shape[0]
    total = 0.0 + 0.0j
    # lower triangle incl. diagonal: l <= j
    run = 0.0 + 0.0j
    for j in range(n):
        ph = np.exp(1j * omega * (t[j] - t[0]))
        run += b[j] * ph
        total += a[j] * run / ph
    # strict upper triangle: l > j
    run = 0.0 + 0.0j
    for j in range(n - 1, -1, -1):
        ph = np.exp(-1j * omega * (t[j] - t[0]))
        total += a[j] * run / ph
        run += b[j] * ph
    return total
