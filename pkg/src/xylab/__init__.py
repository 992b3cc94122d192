"""Free-fermion numerics for disordered XY spin chains.

The chain is mapped to quadratic fermions, so transport and bipartite
entanglement after a quench reduce to linear algebra on ``n x n`` or
``2n x 2n`` matrices.  A dense many-body oracle for small chains cross-checks
every reduction.
"""

from .errors import (
    ConfigurationError,
    DegeneracyError,
    EnsembleFailure,
    NumericError,
    SizeGuardError,
    StateCorruptionError,
    StructuralError,
    UnderflowError,
    XYLabError,
)
from .model import (
    BlockMatrix,
    ChainParameters,
    DisorderSpec,
    Distribution,
    Partition,
    Subinterval,
    build_anisotropic,
    build_isotropic,
    realization_seed,
    restrict,
    s_block,
    sample_parameters,
)
from .states import CorrelationMatrix, DensityProfile, OccupationPattern, pattern_battery
from .spectral import (
    CorrelatorProfile,
    DecayFit,
    EigenSystem,
    correlator_profile,
    diagonalize,
    eigencorrelator,
    fit_decay,
    matrix_function,
    spectral_projection,
)
from .dynamics import (
    TimeGrid,
    density_snapshots,
    evolve_correlation,
    propagator,
    transport_bound_rhs,
    transport_expectation,
    transport_series,
)
from .entanglement import (
    entanglement_entropy,
    evolved_entropy_sweep,
    gamma_density_profile,
    gamma_eigenstate_product,
    restrict_gamma,
)
from .ensemble import EnsembleConfig, EnsembleResult, run_ensemble, verification_suite

__version__ = "0.1.0"
