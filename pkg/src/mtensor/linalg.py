"""Dense linear algebra on Gram matrices.

Cholesky factors with row-append growth, triangular solves and a sorted
symmetric eigendecomposition.  LAPACK (through SciPy) does the heavy lifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import DegenerateAppendError, DimensionError, NotPositiveDefiniteError

JITTER = 1e-12
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to a factored SPD matrix.

    ``jitter`` is the diagonal shift that was added before factorizing
    (0.0 when none was needed).
    """

    L: np.ndarray
    jitter: float = 0.0
    pivot_failed: int | None = field(default=None, compare=False)

    @property
    def k(self) -> int:
        return self.L.shape[0]

    @property
    def jittered(self) -> bool:
        return self.jitter > 0.0

    @classmethod
    def empty(cls) -> "CholeskyFactor":
        return cls(np.zeros((0, 0)))

    def diag_ratio(self) -> float:
        """``(max diag / min diag)^2``, a cheap proxy for the condition number."""
        if self.k == 0:
            return 1.0
        d = np.abs(np.diag(self.L))
        return float((d.max() / d.min()) ** 2)


def _check_symmetric(P, tol=SYMMETRY_TOL):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {P.shape}")
    scale = max(np.abs(P).max(initial=0.0), 1.0)
    if np.abs(P - P.T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return P


def _potrf(P):
    L, info = lapack.dpotrf(P, lower=1, clean=1)
    return L, info


def cholesky(P, jitter=False) -> CholeskyFactor:
    """Cholesky factor of a symmetric positive-definite matrix.

    With ``jitter=True`` a failed factorization is retried once after adding
    ``1e-12 * trace(P) / dim`` to the diagonal; the shift is recorded on the
    returned factor.

    Raises
    ------
    NotPositiveDefiniteError
        With ``.pivot`` set to the zero-based index of the failing pivot.
    """
    P = _check_symmetric(P)
    if P.shape[0] == 0:
        return CholeskyFactor.empty()
    L, info = _potrf(P)
    if info == 0:
        return CholeskyFactor(np.tril(L))
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    first_fail = info - 1
    if jitter:
        shift = JITTER * np.trace(P) / P.shape[0]
        if shift > 0:
            L, info = _potrf(P + shift * np.eye(P.shape[0]))
            if info == 0:
                return CholeskyFactor(np.tril(L), jitter=float(shift), pivot_failed=first_fail)
            first_fail = info - 1
    raise NotPositiveDefiniteError(
        f"matrix is not positive definite (pivot {first_fail} failed)", pivot=first_fail
    )


def forward_solve(F: CholeskyFactor, y):
    """Solve ``L s = y``."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != F.k:
        raise DimensionError(f"right-hand side has {y.shape[0]} rows, factor has {F.k}")
    if F.k == 0:
        return y.copy()
    return solve_triangular(F.L, y, lower=True, check_finite=False)


def backward_solve(F: CholeskyFactor, s):
    """Solve ``L^T w = s``."""
    s = np.asarray(s, dtype=float)
    if s.shape[0] != F.k:
        raise DimensionError(f"right-hand side has {s.shape[0]} rows, factor has {F.k}")
    if F.k == 0:
        return s.copy()
    return solve_triangular(F.L, s, lower=True, trans="T", check_finite=False)


def solve_spd(F: CholeskyFactor, y):
    """Solve ``L L^T z = y``; ``y`` may have several columns."""
    return backward_solve(F, forward_solve(F, y))


def chol_append(F: CholeskyFactor, b, nrm2) -> CholeskyFactor:
    """Grow ``F`` by one row/column.

    The result factors ``[[P, b], [b^T, nrm2]]`` where ``P = L L^T``.
    """
    b = np.asarray(b, dtype=float).ravel()
    s = forward_solve(F, b)
    schur = float(nrm2) - float(s @ s)
    if not schur > 0.0:
        raise DegenerateAppendError(f"non-positive Schur complement {schur:.3e}")
    return _append(F, s, math.sqrt(schur))


def _append(F, s, diag):
    k = F.k
    L = np.zeros((k + 1, k + 1))
    L[:k, :k] = F.L
    L[k, :k] = s
    L[k, k] = diag
    return CholeskyFactor(L, jitter=F.jitter)


def sym_eig(P):
    """Eigenvalues in descending order and matching orthonormal eigenvectors."""
    P = _check_symmetric(P)
    lam, U = np.linalg.eigh(P)
    return lam[::-1].copy(), U[:, ::-1].copy()
