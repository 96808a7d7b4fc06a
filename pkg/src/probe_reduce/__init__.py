"""Localized quantum probe fields reduced to harmonic-oscillator detectors.

Modules
-------
geometry     static backgrounds, grids, potentials, weighted inner product
modes        the spatial operator E^2, its eigenmodes, coupling projections
kernels      oscillator kernels, influence phase, perturbative detector checks
gaussian     Gaussian states and exact quadratic dynamics, log negativity
experiments  reduction study, double-well harvesting, lapse rescaling
cli          ``probe-reduce`` command-line front end
"""
from ._backend import BACKEND
from .errors import *  # noqa: F401,F403
from .experiments import (
    HarvestConfig,
    ReductionConfig,
    fit_scaling,
    lapse_rescale,
    run_harvesting,
    run_reduction,
)
from .field import FieldBox, field_wightman_box
from .gaussian import (
    QuadraticHamiltonian,
    SymplecticState,
    coupled_hamiltonian,
    evolve,
    log_negativity,
    partial_trace,
    symplectic_check,
    two_mode_squeezed_state,
    vacuum_state,
)
from .geometry import Grid1D, Potential, SpacetimeBackground, harmonic_potential, make_grid, weighted_inner_product
from .kernels import (
    KernelSet,
    SourceTrajectory,
    feynman,
    influence_phase,
    second_order_detector_covariance,
    udw_response,
    wightman,
)
from .modes import (
    CouplingMatrix,
    ModeBasis,
    assemble_E2,
    mode_overlap,
    project_smearing,
    resolution_residual,
    solve_modes,
)
from .smearing import ConstantSwitching, GaussianSwitching, SmearingProfile

__version__ = "0.1.0"
