"""Two-mode Gaussian entanglement tests and joint-homodyne measurement simulation."""

from .covariance import (
    BlockDecomposition,
    GaussentError,
    PatternMismatch,
    QuadratureMatrix,
    StandardFormV0,
    StandardFormV1,
    SymplecticTransform,
    UnphysicalStateError,
    apply,
    beam_splitter,
    partial_transpose,
    reduce_v0_to_v1,
    rotation,
    squeezer,
    symplectic_eigenvalues,
    tensor,
    thermal,
    to_standard_v0,
    two_mode_squeezer,
    vacuum,
)
from .separability import (
    Verdict,
    lemma1_separability,
    purity,
    purity_inequality,
    quadrature_correlation_form,
    reid_drummond_epr,
    simon_general_ppt,
    simon_v1_factored,
    simon_v1_inequality,
)

__version__ = "0.1.0"
