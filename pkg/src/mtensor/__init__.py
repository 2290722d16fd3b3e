"""Least-squares regression on factorized m-tensors.

Feature tensors built from one-dimensional bases are kept as row-aligned
core matrices.  Fits go through the Gram matrix of the rows (a product of
per-core Gram matrices), so nothing of size ``prod(p_j)`` is ever formed.
"""

from .core import (
    MTensor,
    Rank1Row,
    contract_c,
    contract_r,
    element,
    hadamard,
    inner,
    mprod,
    mprod_row,
    mtensor_from_cores,
    norm,
    row,
    transpose,
    unfold_mode1,
)
from .errors import (
    CapacityError,
    ConditioningError,
    DegenerateAppendError,
    DimensionError,
    DivergenceError,
    NotPositiveDefiniteError,
    RankError,
)
from .features import Basis1D, FeatureMapSet, build_cores, default_scale, eval_basis, feature_row
from .linalg import CholeskyFactor, chol_append, cholesky, solve_spd, sym_eig
from .ali import ALIDecomposition, ald_distance, ali_weights, greedy_ali, optimal_ali, projection_mse
from .regression import (
    RegressionModel,
    coefficients_dense,
    fit,
    fit_ali,
    fit_least_squares,
    fit_spectral,
    fit_tikhonov,
    kernel_eval,
    load_model,
    predict,
    predict_many,
    save_model,
)

__version__ = "0.1.0"
