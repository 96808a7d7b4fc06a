"""Static 1+1 backgrounds, spatial grids and the weighted inner product."""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGrid, NotConfining, ShapeMismatch

CONFINEMENT_FACTOR = 10.0
GAP_FLOOR = 10.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max]`` with Dirichlet ends."""

    x_min: float
    x_max: float
    n_points: int
    boundary: str = "Dirichlet"

    @property
    def spacing(self):
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self):
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def midpoints(self):
        x = self.points
        return 0.5 * (x[1:] + x[:-1])

    @property
    def extent(self):
        return self.x_max - self.x_min

    def trapezoid_weights(self):
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def same_as(self, other):
        return (
            self.n_points == other.n_points
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )


def make_grid(x_min, x_max, n_points):
    """Build a uniform Dirichlet grid.

    Raises
    ------
    InvalidGrid
        If ``n_points < 3`` or ``x_min >= x_max``.
    """
    if int(n_points) != n_points or n_points < 3:
        raise InvalidGrid(f"n_points must be an integer >= 3, got {n_points!r}")
    if not (np.isfinite(x_min) and np.isfinite(x_max)) or not x_min < x_max:
        raise InvalidGrid(f"need x_min < x_max, got [{x_min}, {x_max}]")
    return Grid1D(float(x_min), float(x_max), int(n_points))


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpacetimeBackground:
    """Static metric ``ds^2 = -N(x)^2 dt^2 + h(x) dx^2`` sampled on a grid."""

    grid: Grid1D
    lapse: np.ndarray = field(repr=False)
    metric: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.n_points
        lapse = _readonly(np.broadcast_to(self.lapse, (n,)))
        metric = _readonly(np.broadcast_to(self.metric, (n,)))
        if not np.all(np.isfinite(lapse)) or np.any(lapse <= 0):
            raise ValueError("lapse N(x) must be finite and positive on the grid")
        if not np.all(np.isfinite(metric)) or np.any(metric <= 0):
            raise ValueError("spatial metric h(x) must be finite and positive on the grid")
        object.__setattr__(self, "lapse", lapse)
        object.__setattr__(self, "metric", metric)

    @classmethod
    def flat(cls, grid):
        return cls(grid, np.ones(grid.n_points), np.ones(grid.n_points))

    @classmethod
    def from_functions(cls, grid, lapse, metric=None):
        x = grid.points
        h = np.ones_like(x) if metric is None else metric(x)
        return cls(grid, lapse(x), h)

    @property
    def weight(self):
        """Inner-product density sqrt(h)/N."""
        return np.sqrt(self.metric) / self.lapse

    @property
    def volume_density(self):
        """Spacetime volume density N sqrt(h) used by the coupling projection."""
        return self.lapse * np.sqrt(self.metric)

    def same_as(self, other):
        return (
            self.grid.same_as(other.grid)
            and np.array_equal(self.lapse, other.lapse)
            and np.array_equal(self.metric, other.metric)
        )


@dataclass(frozen=True)
class Potential:
    """Confining potential U(x) sampled on a grid (inverse length squared)."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = _readonly(np.broadcast_to(self.values, (self.grid.n_points,)))
        if not np.all(np.isfinite(u)):
            raise ValueError("potential must be finite on the grid")
        object.__setattr__(self, "values", u)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.points))

    def confinement_margin(self):
        """Smallest endpoint excess over the confinement threshold."""
        u = self.values
        threshold = CONFINEMENT_FACTOR * u.min() + GAP_FLOOR / self.grid.extent**2
        return min(u[0], u[-1]) - threshold

    def is_confining(self):
        return self.confinement_margin() >= 0.0

    def check_confining(self):
        margin = self.confinement_margin()
        if margin < 0.0:
            raise NotConfining(
                f"potential is not confining on [{self.grid.x_min}, {self.grid.x_max}]: "
                f"endpoint values ({self.values[0]:.6g}, {self.values[-1]:.6g}) fall "
                f"short of the gate by {-margin:.6g}"
            )


def harmonic_potential(grid, mass=1.0, stiffness=1.0, center=0.0):
    """U = (m^2 + Omega^4 (x - x0)^2) / 2, whose E^2 spectrum is m^2 + (2n+1) Omega^2."""
    x = grid.points
    return Potential(grid, 0.5 * (mass**2 + stiffness**4 * (x - center) ** 2))


def weighted_inner_product(f, g, bg, grid=None):
    """Trapezoid approximation of the integral of (sqrt(h)/N) f g dx."""
    grid = bg.grid if grid is None else grid
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape[0] != grid.n_points or g.shape[0] != grid.n_points:
        raise ShapeMismatch(
            f"sample counts {f.shape[0]} and {g.shape[0]} do not match grid size {grid.n_points}"
        )
    w = grid.trapezoid_weights() * bg.weight
    # f*g first, so swapping the arguments is bitwise symmetric
    return np.tensordot(w, np.multiply(f.T, g.T).T, axes=(0, 0))
