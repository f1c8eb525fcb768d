"""Finite-depth factorization of the identity on bi-parameter dyadic Hardy spaces.

The hot loops (square-function integral, BMO union search) run in a
compiled extension when it is available; see :mod:`dyadic_factor.kernels`.
"""
from .blocks import BlockBasis, block_projection, embedding_matrix
from .combinatorics import (
    Coloring,
    CoverResult,
    FrequencyWeightContext,
    RamseyResult,
    comb_cover,
    frequency_weight,
    ramsey_extract,
)
from .condensation import (
    bitree_verify,
    condense_1d,
    condense_2d,
    jones_verify,
    unconditionality_factor,
)
from .dyadic import (
    ROOT,
    ROOT_RECT,
    DyadicInterval,
    DyadicRectangle,
    IntervalCollection,
    RectangleCollection,
    carleson_constant,
    dimension,
    order_index,
    order_rect,
    rectangles_upto,
)
from .errors import DyadicFactorError
from .factor import (
    DimensionPlan,
    FactorizationReport,
    color_by_diagonal,
    factor_identity,
    plan_dimensions,
)
from .haar import (
    HaarOperator,
    HaarVector,
    NormEstimate,
    adjoint,
    bmo_norm_exact,
    bmo_norm_lower,
    h1_norm,
    haar_multiplier,
    identity,
    op_norm_lower,
    pairing,
    rademacher_block,
    random_contraction,
    zero,
)
from .kernels import BACKEND
from .quasidiag import (
    BlockSystem,
    annihilating_system,
    block_Q,
    quasi_diagonalize,
    verify_almost_diagonal,
    verify_block_system,
)

__version__ = "0.1.0"
