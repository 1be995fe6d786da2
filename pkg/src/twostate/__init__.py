"""Two-state outcome-assignment toolkit.

A pair of quantum states (forward- and backward-evolving) deterministically
fixes measurement outcomes through an overlap-sum rule; averaging over
backward states recovers Born statistics. The package provides the rule and
its mixed-state form, seeded Monte Carlo estimators, Bloch-sphere geometry
with a pair-distinguishing construction, equiangular projector sets with a
numerical fiducial search, stationary-pair solvers, and a reproducible
command-line experiment harness.
"""

from .assignment import (
    AssignmentResult,
    MultipleOutcomesError,
    OrthogonalPostSelectionError,
    TwoStatePairMixed,
    TwoStatePairPure,
    WeakValueResult,
    assign_over_basis,
    collapse,
    satisfies_mixed,
    satisfies_pure,
    time_reverse,
    weak_value,
)
from .blochpbr import (
    BlochVector,
    DegenerateInstanceError,
    PbrGeometricInstance,
    bell_condition,
    bloch_from_state,
    pbr_distinguishing_vector,
    state_from_bloch,
)
from .dynamics import (
    CommutatorTarget,
    InfeasibleKError,
    NotPsdError,
    StationarySolveInput,
    commutator_solve,
    evolve_pair,
    first_order_invariance_check,
    stationarity_check,
    stationary_partner,
)
from .qcore import (
    DEFAULT_TOLERANCES,
    DensityMatrix,
    HermitianOperator,
    OrthonormalBasis,
    Projector,
    SpectralDecomposition,
    StateVector,
    Tolerances,
    UnitaryOperator,
    commutator,
    inner,
    projector_of,
    spectral,
    trace_product,
)
from .sampling import (
    BasisMcResult,
    BornEstimate,
    Fixed,
    HaarPure,
    RngStream,
    UniformOverlap,
    backward_uniform_overlap,
    basis_mc,
    born_mc,
    born_oracle,
    haar_state,
    haar_states,
    haar_unitary,
    uniform_overlap_states,
)
from .sic import (
    FiducialSearchReport,
    InvalidSicError,
    SicCoefficients,
    SicPovm,
    SicValidationReport,
    builtin_fiducial,
    builtin_sic,
    frame_potential,
    search_fiducial,
    sic_distinguish,
    sic_expand,
    sic_from_fiducial,
    sic_reconstruct,
    sic_rule_check,
    validate_sic,
    welch_bound,
    wh_displacements,
)

__version__ = "0.1.0"
