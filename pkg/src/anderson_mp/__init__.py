"""Finite-lattice toolkit for the multi-particle Anderson model.

Builds Dirichlet discretizations of ``-Laplacian + U + V`` for ``n``
particles in ``d`` dimensions, counts eigenvalues below a threshold,
estimates the integrated density of states and its Lifshitz tail, and probes
the lower spectral edge with separated tensor-product trial states.
"""

from anderson_mp.disorder import DisorderSpec, PotentialField, sample_field, stream_realizations
from anderson_mp.edge_probe import (
    build_trial_state,
    edge_scan,
    rayleigh_quotient,
    separated_basepoints,
    weyl_probe,
)
from anderson_mp.eigensolve import count_below, dense_spectrum, smallest_eigenvalue, tridiagonalize
from anderson_mp.errors import (
    AndersonError,
    ConfigError,
    ConvergenceError,
    SizingError,
    WindowError,
)
from anderson_mp.ids import (
    compare_free_vs_interacting,
    estimate_ids,
    fit_lifshitz,
    free_ids_by_convolution,
)
from anderson_mp.lattice import (
    HamiltonianMatrix,
    InteractionKernel,
    LatticeCube,
    LatticeModel,
    ModelParams,
    assemble_hamiltonian,
    build_interaction_diagonal,
    build_laplacian,
    build_potential_diagonal,
    make_grid,
)

__version__ = "0.1.0"
