"""Entanglement detection with variance sums and covariance matrices."""

from .covariance import (
    CandidateKappa,
    CovarianceMatrix,
    admits_local_blocks,
    covariance_matrix,
    gamma_finite_difference,
    gamma_quadratic_form,
    pauli_cm_check,
    schur_complements,
    witness_to_observables,
)
from .criteria import (
    DetectionReport,
    VarianceCriterion,
    check_variance_criterion,
    lur_evaluate,
    optimizer_criterion,
    schmidt_basis_bound,
    schmidt_basis_criterion,
    schmidt_basis_projectors,
    schmidt_basis_werner_threshold,
    variance_sum,
)
from .kernel import (
    UPB,
    Subspace,
    entangled_basis,
    find_entangled_vector,
    kernel_observables,
    tiles_upb,
    upb_extendibility_value,
    upb_observables,
    upb_state,
)
from .multipartite import (
    classify_tripartite,
    ghz4_report,
    ghz_basis_3,
    ghz_basis_4,
    ghz_variance_from_pauli,
    ghz_variance_sum,
    ghz_witness,
    noise_threshold,
    pauli_means,
)
from .optimize import (
    OptimizerConfig,
    Optimum,
    max_overlap_product_multipartite,
    min_variance_sum_biseparable,
    min_variance_sum_product,
    min_variance_sum_single_system,
)
from .states import (
    DensityMatrix,
    DimensionSpec,
    Ket,
    MixtureDecomposition,
    Observable,
    ObservableSet,
    expectation,
    partial_transpose,
    ppt_min_eigenvalue,
    schmidt_decompose,
    tensor,
    variance,
)

__version__ = "0.1.0"
