"""l4dict: complete orthogonal dictionary learning by elementwise
fourth-power maximization over the orthogonal group.

The solver repeats a stretch-and-project fixed-point step (cube the matched
estimate elementwise, polar-project back onto the group) whose fixed points
are signed permutations of the true dictionary.  The package also ships the
closed-form expectation oracles for the sparse generative model, an
experiment harness for convergence, phase-transition and step-size studies,
and an image-dictionary demo with a PCA baseline.
"""

__version__ = "0.1.0"

from .analysis import (
    CheckResult,
    ExpectationReport,
    concentration_probe,
    critical_point_residual,
    expected_gradient,
    expected_objective,
    monte_carlo_gradient,
    monte_carlo_objective,
    signed_permutation_gap,
    tan_map,
    verification_suite,
    verify_so2_equivalence,
)
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    DimensionOverflowError,
    InvalidParameterError,
    L4DictError,
    MatrixFormatError,
    NonConvergenceError,
    NonFiniteError,
    OrthogonalityError,
    RankDeficientError,
    TruncatedFileError,
    ZeroVarianceError,
)
from .experiments import (
    ConvergenceResult,
    GridResult,
    GridSpec,
    PgaTableResult,
    SweepResult,
    run_2k_sweep,
    run_convergence,
    run_pga_table,
    run_phase_transition,
)
from .imaging import (
    ImageSet,
    learn_image_dictionary,
    load_idx_images,
    pca_basis,
    reconstruct_topk,
    save_idx_images,
)
from .linalg import (
    SvdResult,
    hadamard_power,
    l2k_norm,
    l4_norm_4th,
    matmul,
    nearest_signed_permutation,
    orthogonality_defect,
    project_orthogonal,
    require_orthogonal,
    svd,
)
from .matrixio import load_matrix, save_matrix
from .model import (
    DatasetBundle,
    ModelParams,
    gen_bernoulli_gaussian,
    gen_haar_orthogonal,
    make_rng,
    precondition,
    synthesize,
    trial_seed,
)
from .solver import (
    SolveConfig,
    SolveTrace,
    msp_dl,
    msp_orth,
    msp_step_dl,
    msp_step_orth,
    pga_run,
    pga_step,
)
