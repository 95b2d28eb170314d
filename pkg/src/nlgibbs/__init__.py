"""Finite-mode numerics for bosonic Gibbs states, their classical field
limits, and the mean-field limit of distinguishable particles."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (  # noqa: F401
    AssumptionReport,
    GridSpec,
    SpectralModel,
    TwoBodyOperator,
    build_finite_rank_interaction,
    project_multiplication_kernel,
    solve_onebody_spectrum,
    trace_inverse_power,
    verify_assumptions,
)
from .fock import (  # noqa: F401
    FockBasis,
    FockOperator,
    assemble_H,
    assemble_H0,
    assemble_W,
    enumerate_basis,
    ladder_matrix,
    number_operator,
)
from .qgibbs import (  # noqa: F401
    DensityMatrix,
    ThermalResult,
    partial_trace,
    permanent,
    reduced_density_matrix,
    relative_entropy,
    schatten_distance,
    thermal_state,
    truncation_adequacy,
    von_neumann_entropy,
    wick_moment,
)
from .cfield import (  # noqa: F401
    MomentEstimate,
    PartitionEstimate,
    estimate_moments,
    estimate_partition,
    free_moment_exact,
    interaction_energy,
    mean_field_energy,
    rng_stream,
    sample_free,
)
from .boltzon import (  # noqa: F401
    ExactBoltzonResult,
    MeanFieldProblem,
    SCFResult,
    exact_gibbs_distinguishable,
    mean_field_free_energy,
    permutation_conjugate,
    scf_minimize,
)
