"""Discrete beta-ensembles at desk scale.

Lattice log-gases with gamma-ratio interaction: exact enumeration and
Metropolis sampling, constrained equilibrium measures, loop-equation
consistency checks, particle/hole duality, deformed Plancherel row
ensembles, and Tracy-Widom edge statistics against a tridiagonal
Gaussian beta-ensemble reference.
"""

__version__ = "0.1.0"

from .ensemble import (
    Configuration,
    EnsembleParams,
    HoleConfiguration,
    dual_log_weight,
    enumerate_configurations,
    exact_distribution,
    holes_of,
    lattice_params,
    log_density_unnormalized,
    log_interaction,
    particles_of,
    stieltjes_empirical,
)
from .weights import ConvexPotential, Krawtchouk, PoissonizedJack, Tabulated
from .sampler import ChainSpec, SampleBatch, exact_sample, mcmc_step, run_chain, total_variation
from .equilibrium import (
    ClassicalLocations,
    EquilibriumMeasure,
    classical_locations,
    dual_measure,
    edge_coefficient,
    hilbert_inv_sqrt_kernel,
    hilbert_sqrt_kernel,
    inverse_hilbert,
    jack_equilibrium,
    jack_measure,
    krawtchouk_density,
    krawtchouk_measure,
    rq_functions,
    solve_constrained,
    stieltjes_measure,
)
from .nekrasov import NekrasovReport, product_minus, product_plus, r_exact, r_monte_carlo
from .gbe import TridiagonalMatrix, extreme_eigenvalues, gbe_edge_samples, sample_gbe
from .stats import EdgeStatistics, KSResult, gap_statistics, ks_distance, rescale_edge, rigidity_profile
from . import jack
