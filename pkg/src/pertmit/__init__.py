"""Perturbative readout-error mitigation for quantum measurement statistics.

Readout noise on n qubits acts classically: the observed histogram p' is a
column-stochastic response matrix R applied to the true distribution p.
Full inversion of R costs 8^n; this package recovers the quantities people
actually want at perturbative cost instead:

- the all-zeros probability from a truncated low-weight subspace,
- the full distribution from a sparse Neumann series over XOR-distance
  bands of R (with a direct truncated inversion for rates too large for
  the series), and
- any single bitstring's probability from the XOR ball around it.

Each method comes with analytic error bounds, convergence diagnostics,
and a sweep harness that scores everything against dense inversion.
"""

from .bitspace import (
    MAX_QUBITS,
    BitIndex,
    SubspaceSelector,
    WeightOrderedSpace,
    ball_subspace,
    hamming_weight,
    project_matrix,
    project_vector,
    subspace_size,
    weight_ordered_space,
    weight_subspace,
    xor_distance,
)
from .decompose import (
    BandDecomposition,
    WeightBand,
    apply_diagonal_inverse,
    band_matvec,
    band_nnz_bound,
    decompose,
    decomposition_from_bands,
    load_band_json,
    reassemble,
    save_band_json,
    sparsity,
)
from .errors import (
    ConfigError,
    DecompositionError,
    DimensionMismatchError,
    DivergenceError,
    ReadoutMitigationError,
    SingularMatrixError,
    ValidationError,
)
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    MitigationReport,
    PriorSpec,
    audit_bounds,
    build_prior,
    emit,
    load_config,
    load_reports_json,
    reports_text,
    run_sweep,
    save_config,
)
from .metrics import DiagonalObservable, expectation, trace_distance
from .mitigate_full import (
    ConvergenceDiagnostic,
    DirectResult,
    SeriesConfig,
    SeriesResult,
    convergence_norm,
    direct_truncated_mitigate,
    neumann_mitigate,
    relabel_bands,
    relabel_for_target,
    required_order,
    single_bitstring_mitigate,
)
from .mitigate_zero import (
    ProjectionInverseCheck,
    TruncatedResponse,
    approximate_model_guide,
    first_row_closed_form,
    inverse_projection_check,
    inverse_row_magnitude,
    recover_p0,
    tensor_truncation_bound,
    truncate,
    truncation_bound,
)
from .response import (
    DenseMitigationResult,
    ProbabilityVector,
    ResponseMatrix,
    SingleQubitResponse,
    apply_response,
    dense_invert_mitigate,
    estimate_rate,
    load_matrix_json,
    load_vector_json,
    random_tensor,
    relaxation_only,
    save_matrix_json,
    save_vector_json,
    single_qubit_flip,
    single_qubit_relaxation,
    tensor_response,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_QUBITS",
    "BitIndex",
    "SubspaceSelector",
    "WeightOrderedSpace",
    "ball_subspace",
    "hamming_weight",
    "project_matrix",
    "project_vector",
    "subspace_size",
    "weight_ordered_space",
    "weight_subspace",
    "xor_distance",
    "BandDecomposition",
    "WeightBand",
    "apply_diagonal_inverse",
    "band_matvec",
    "band_nnz_bound",
    "decompose",
    "decomposition_from_bands",
    "load_band_json",
    "reassemble",
    "save_band_json",
    "sparsity",
    "ConfigError",
    "DecompositionError",
    "DimensionMismatchError",
    "DivergenceError",
    "ReadoutMitigationError",
    "SingularMatrixError",
    "ValidationError",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "MitigationReport",
    "PriorSpec",
    "audit_bounds",
    "build_prior",
    "emit",
    "load_config",
    "load_reports_json",
    "reports_text",
    "run_sweep",
    "save_config",
    "DiagonalObservable",
    "expectation",
    "trace_distance",
    "ConvergenceDiagnostic",
    "DirectResult",
    "SeriesConfig",
    "SeriesResult",
    "convergence_norm",
    "direct_truncated_mitigate",
    "neumann_mitigate",
    "relabel_bands",
    "relabel_for_target",
    "required_order",
    "single_bitstring_mitigate",
    "ProjectionInverseCheck",
    "TruncatedResponse",
    "approximate_model_guide",
    "first_row_closed_form",
    "inverse_projection_check",
    "inverse_row_magnitude",
    "recover_p0",
    "tensor_truncation_bound",
    "truncate",
    "truncation_bound",
    "DenseMitigationResult",
    "ProbabilityVector",
    "ResponseMatrix",
    "SingleQubitResponse",
    "apply_response",
    "dense_invert_mitigate",
    "estimate_rate",
    "load_matrix_json",
    "load_vector_json",
    "random_tensor",
    "relaxation_only",
    "save_matrix_json",
    "save_vector_json",
    "single_qubit_flip",
    "single_qubit_relaxation",
    "tensor_response",
    "__version__",
]
