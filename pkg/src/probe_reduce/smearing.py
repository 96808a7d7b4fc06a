"""Switching functions chi(t) and the separable smearing zeta(t, x) = chi(t) sigma(x)."""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GaussianSwitching:
    """chi(t) = amplitude * exp(-(t - center)^2 / (2 width^2))."""

    center: float
    width: float
    amplitude: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((t - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class ConstantSwitching:
    value: float = 1.0

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value))


@dataclass(frozen=True)
class SmearingProfile:
    """Separable smearing: switching ``chi`` (callable) and spatial profile ``sigma``."""

    chi: object
    sigma: np.ndarray = field(repr=False)

    def sampled_chi(self, t_i, t_f, n_steps):
        """chi on [t_i, t_f] at half-step resolution; zero outside the window."""
        t = np.linspace(t_i, t_f, 2 * n_steps + 1)
        return t, np.asarray(self.chi(t), dtype=float)


def time_grid(t_i, t_f, n_steps):
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not t_f > t_i:
        raise ValueError("need t_f > t_i")
    return np.linspace(t_i, t_f, n_steps + 1)


def trapezoid_weights(t):
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w
