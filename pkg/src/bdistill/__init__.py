"""Entanglement distillation of Bell-diagonal states viewed as local
discrimination of likely strings of Bell pairs."""

from .bellcore import (
    ALL_LABELS,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    BellDiagonalDist,
    BellLabel,
    EdInputs,
    GroupPartition,
    binary_entropy,
    computational_basis_di,
    ed_from_di,
    entropy_bits,
    grouping_di,
    hashing_yield,
    measurement_budget,
    single_copy_mdi,
)
from .errors import CapacityError, ConsistencyError, DomainError, UsageError, ValidationError
from .pairalgebra import (
    PairState,
    RawOutcome,
    bcnot_labels,
    dense_bcnot_oracle,
    dense_bell_vector,
    measure_pair_computational,
)
from .posterior import (
    PosteriorReport,
    exact_posterior,
    predictive_di,
    tail_parity_residual_closed_form,
    xsector_posterior,
)
from .protocol import (
    MeasurementEvent,
    PairString,
    ProtocolPlan,
    execute,
    plan_cascade,
    plan_random_subsets,
    sample_string,
)

__version__ = "0.1.0"
