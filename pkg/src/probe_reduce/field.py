"""The target Klein-Gordon field, quantized in a Dirichlet box.

Box coordinates run over ``(0, length)``; ``left`` places the box on the
probe's x axis so probe grids can sit anywhere inside it.
"""
from dataclasses import dataclass

import numpy as np

from .errors import OutOfBox


@dataclass(frozen=True)
class FieldBox:
    length: float
    mass: float
    k_max: int
    left: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("box length must be positive")
        if not self.mass > 0:
            raise ValueError("field mass must be positive")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValueError("k_max must be a positive integer")

    @classmethod
    def centered_on(cls, grid, length, mass, k_max):
        """Box of the given length sharing its midpoint with ``grid``."""
        mid = 0.5 * (grid.x_min + grid.x_max)
        return cls(float(length), float(mass), int(k_max), mid - 0.5 * length)

    @property
    def wavenumbers(self):
        return np.arange(1, self.k_max + 1) * np.pi / self.length

    @property
    def frequencies(self):
        return np.sqrt(self.mass**2 + self.wavenumbers**2)

    def to_box(self, x):
        return np.asarray(x, dtype=float) - self.left

    def contains(self, x):
        xb = self.to_box(x)
        return bool(np.all((xb >= 0.0) & (xb <= self.length)))

    def mode_functions(self, x):
        """u_k(x) = sqrt(2/L) sin(k pi x_box / L), shape ``x.shape + (k_max,)``."""
        xb = self.to_box(x)
        if np.any(xb < 0.0) or np.any(xb > self.length):
            raise OutOfBox(f"points outside the field box [{self.left}, {self.left + self.length}]")
        return np.sqrt(2.0 / self.length) * np.sin(np.multiply.outer(xb, self.wavenumbers))


def field_wightman_box(length, mass, k_max, x, t, x_prime, t_prime):
    """Truncated vacuum Wightman function of the boxed field, box coordinates.

    sum_k u_k(x) u_k(x') exp(-i w_k (t - t')) / (2 w_k), broadcasting over
    array arguments.
    """
    x, t, x_prime, t_prime = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(t, float), np.asarray(x_prime, float), np.asarray(t_prime, float)
    )
    if np.any((x <= 0) | (x >= length) | (x_prime <= 0) | (x_prime >= length)):
        raise OutOfBox(f"Wightman arguments must lie strictly inside (0, {length})")
    box = FieldBox(length, mass, k_max)
    u = box.mode_functions(x)
    up = box.mode_functions(x_prime)
    w = box.frequencies
    phase = np.exp(-1j * np.multiply.outer(t - t_prime, w))
    return np.sum(u * up * phase / (2.0 * w), axis=-1)
