"""Almost-linearly-independent (ALI) row selection for m-tensors.

A row is almost linearly dependent on a set of retained rows when its
squared distance to their span is at most ``eps``.  Two selection
strategies are provided:

* :func:`greedy_ali` sweeps the rows once in order, the kernel-RLS style
  dictionary test with an incrementally grown Cholesky factor.
* :func:`optimal_ali` adds, at every step, the row whose inclusion leaves the
  smallest total residual distance over the remaining rows.

Distances are computed from kernel values only (m-products of rows), so the
cost never depends on the product of the column dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .core import MTensor, mprod, row, mprod_row
from .errors import DimensionError
from .linalg import CholeskyFactor, backward_solve, forward_solve, solve_spd

# candidates whose residual is below this fraction of their squared norm are
# numerically inside the current span and cannot be appended
_SPAN_RTOL = 1e-13
# relative tolerance under which two optimal-ALI scores count as tied
_TIE_RTOL = 1e-12


@dataclass
class ALIDecomposition:
    """Retained rows of an m-tensor and the Cholesky factor of their Gram matrix.

    ``indices`` are in selection order, which is also the row/column order of
    ``factor``.  ``weights`` is ``None`` unless requested.
    """

    indices: np.ndarray
    factor: CholeskyFactor
    epsilon: float
    mode: str = "greedy"
    weights: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def m_tilde(self) -> int:
        return len(self.indices)


def row_norms2(Phi: MTensor) -> np.ndarray:
    """Squared norm of every row, ``prod_j |Psi_j[k]|^2``."""
    out = np.ones(Phi.rdim)
    for c in Phi.cores:
        out *= np.einsum("kp,kp->k", c, c)
    return out


def ald_distance(F: CholeskyFactor, b, nrm2):
    """Squared distance of a row to the span of the rows factored by ``F``.

    Parameters
    ----------
    F : CholeskyFactor
        Factor of the retained rows' Gram matrix.
    b : array_like
        Kernel values between the retained rows and the candidate row.
    nrm2 : float
        Squared norm of the candidate row.

    Returns
    -------
    delta : float
        ``max(0, nrm2 - s.s)``; rounding can push the raw value below zero.
    s : ndarray
        ``L^{-1} b``.
    """
    b = np.asarray(b, dtype=float).ravel()
    if b.size != F.k:
        raise DimensionError(f"b has length {b.size}, factor has size {F.k}")
    s = forward_solve(F, b)
    return max(0.0, float(nrm2) - float(s @ s)), s


class _Growing:
    """Lower-triangular buffer that grows by doubling."""

    def __init__(self, cap):
        self.buf = np.zeros((max(cap, 4), max(cap, 4)))
        self.k = 0

    def append(self, s, diag):
        k = self.k
        if k + 1 > self.buf.shape[0]:
            new = np.zeros((2 * self.buf.shape[0],) * 2)
            new[:k, :k] = self.buf[:k, :k]
            self.buf = new
        self.buf[k, :k] = s
        self.buf[k, k] = diag
        self.k = k + 1

    @property
    def L(self):
        return self.buf[: self.k, : self.k]

    def solve(self, b):
        if self.k == 0:
            return np.zeros(0)
        return solve_triangular(self.L, b, lower=True, check_finite=False)

    def factor(self):
        return CholeskyFactor(self.L.copy())


def greedy_ali(Phi: MTensor, eps: float, want_weights: bool = False) -> ALIDecomposition:
    """Single pass over the rows of ``Phi``; keep row ``k`` iff its distance exceeds ``eps``.

    Row 0 is always kept (unless it is the zero row, which cannot be
    factored; such rows are listed in ``diagnostics["degenerate_rows"]``).
    With ``want_weights`` the ``m x m_tilde`` matrix ``W`` is filled in as the
    pass goes: unit rows for retained rows and ``L^{-T} s`` for rejected rows,
    padded with zeros for dictionary entries added later.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    m = Phi.rdim
    norms2 = row_norms2(Phi)
    L = _Growing(min(m, 64))
    kept: list[int] = []
    # kernel rows of the retained rows against every row of Phi
    K = np.empty((min(m, 64), m))
    deltas = np.zeros(m)
    degenerate: list[int] = []
    W_rows: dict[int, np.ndarray] = {}

    for k in range(m):
        b = K[: len(kept), k]
        s = L.solve(b)
        raw = norms2[k] - float(s @ s)
        delta = max(0.0, raw)
        deltas[k] = delta
        # the first usable row always starts the dictionary
        if delta > eps or not kept:
            if not raw > 0.0 or not math.isfinite(raw):
                degenerate.append(k)
                continue
            L.append(s, math.sqrt(raw))
            if len(kept) == K.shape[0]:
                K = np.concatenate([K, np.empty_like(K)])
            K[len(kept)] = mprod_row(row(Phi, k), Phi)
            kept.append(k)
            deltas[k] = 0.0
        elif want_weights:
            W_rows[k] = backward_solve(CholeskyFactor(L.L), s) if kept else np.zeros(0)

    F = L.factor()
    D = ALIDecomposition(
        indices=np.array(kept, dtype=int),
        factor=F,
        epsilon=float(eps),
        mode="greedy",
        diagnostics={"rejection_distances": deltas, "degenerate_rows": degenerate},
    )
    if want_weights:
        W = np.zeros((m, len(kept)))
        for col, k in enumerate(kept):
            W[k, col] = 1.0
        for k, w in W_rows.items():
            W[k, : w.size] = w
        D.weights = W
    return D


def optimal_ali(
    Phi: MTensor, eps: float, want_weights: bool = False, scoring: str = "exact"
) -> ALIDecomposition:
    """Iterative selection minimizing the summed residual distances.

    At each step every remaining row ``j`` is scored by the sum over the
    remaining rows ``i`` of their squared distance to the span of the
    selected rows augmented with ``j``.  The exact augmented distance is

        delta_i - r_ij**2 / delta_j

    where ``delta`` are the current residual distances and ``r_ij`` the inner
    product of the residuals of rows ``i`` and ``j``; this is what a
    one-row Cholesky extension of the selected Gram matrix gives.  Selection
    stops once every remaining distance in the winning column is ``<= eps``.

    ``scoring="printed"`` replaces the score matrix by
    ``diag(norms) @ ones - S^T S`` (``S = L^{-1} B``, unsquared norms), kept
    for comparison only.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if scoring not in ("exact", "printed"):
        raise ValueError(f"unknown scoring {scoring!r}")
    m = Phi.rdim
    P = mprod(Phi, Phi)
    norms2 = np.diag(P).copy()
    remaining = np.ones(m, dtype=bool)
    selected: list[int] = []
    L = _Growing(min(m, 64))
    S = np.zeros((0, m))  # L^{-1} P[selected, :]
    resid = norms2.copy()  # squared distance of every row to the current span

    while remaining.any():
        R = np.flatnonzero(remaining)
        sR = S[:, R]
        if scoring == "printed" and selected:
            Delta = np.sqrt(np.maximum(norms2[R], 0.0))[:, None] - sR.T @ sR
            ok = resid[R] > _SPAN_RTOL * norms2[R]
        else:
            C = P[np.ix_(R, R)] - sR.T @ sR  # residual inner products
            dj = resid[R]
            ok = dj > _SPAN_RTOL * norms2[R]
            with np.errstate(divide="ignore", invalid="ignore"):
                Delta = dj[:, None] - C**2 / np.where(ok, dj, 1.0)[None, :]
            Delta = np.maximum(Delta, 0.0)
            np.fill_diagonal(Delta, 0.0)
        if not ok.any():
            break
        scores = np.where(ok, Delta.sum(axis=0), np.inf)
        # scores within rounding of the best are ties; the lowest index wins
        tie = _TIE_RTOL * float(resid[R].sum())
        jloc = int(np.flatnonzero(scores <= scores.min() + tie)[0])
        j = int(R[jloc])

        s_j = S[:, j]
        d = math.sqrt(resid[j])
        new_row = (P[j] - s_j @ S) / d
        L.append(s_j, d)
        S = np.vstack([S, new_row])
        resid = np.maximum(norms2 - np.einsum("km,km->m", S, S), 0.0)
        selected.append(j)
        remaining[j] = False

        others = np.delete(np.arange(R.size), jloc)
        if others.size == 0 or np.all(Delta[others, jloc] <= eps):
            break

    D = ALIDecomposition(
        indices=np.array(selected, dtype=int),
        factor=L.factor(),
        epsilon=float(eps),
        mode="optimal",
        diagnostics={"scoring": scoring, "final_distances": resid},
    )
    if want_weights:
        D.weights = ali_weights(D, Phi)
    return D


def ali_weights(D: ALIDecomposition, Phi: MTensor) -> np.ndarray:
    """``W = (Phi ⋉ Phi_tilde^T) P_tilde^{-1}``, shape ``(m, m_tilde)``."""
    B = mprod(Phi, Phi.select_rows(D.indices))
    return solve_spd(D.factor, B.T).T


def residual_distances(D: ALIDecomposition, Phi: MTensor) -> np.ndarray:
    """Squared distance of every row of ``Phi`` to the retained span."""
    B = mprod(Phi.select_rows(D.indices), Phi)
    S = forward_solve(D.factor, B)
    return np.maximum(row_norms2(Phi) - np.einsum("km,km->m", S, S), 0.0)


def projection_mse(D: ALIDecomposition, Phi: MTensor) -> float:
    """Mean squared residual of the rows of ``Phi`` after projection on the retained span."""
    return float(residual_distances(D, Phi).mean())


def ali(Phi: MTensor, eps: float, mode: str = "greedy", want_weights: bool = False):
    if mode == "greedy":
        return greedy_ali(Phi, eps, want_weights)
    if mode == "optimal":
        return optimal_ali(Phi, eps, want_weights)
    raise ValueError(f"unknown ALI mode {mode!r}")


def eps_for_rows(Phi: MTensor, rows: int, mode: str = "greedy", iters: int = 80) -> float:
    """Tolerance for which ALI keeps ``rows`` rows, by bisection on ``log(eps)``.

    The retained count is non-increasing in ``eps`` in practice but not
    guaranteed to hit every value; if ``rows`` is never hit exactly the
    tolerance giving the closest count (ties to the larger count) is returned.
    """
    if rows < 1:
        raise ValueError("rows must be at least 1")
    hi = float(row_norms2(Phi).max()) * (1 + 1e-9)
    if not hi > 0:
        raise ValueError("all rows are zero")
    lo = hi * 1e-16
    best = None
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        got = ali(Phi, mid, mode).m_tilde
        key = (abs(got - rows), -got)
        if best is None or key < best[0]:
            best = (key, mid)
        if got == rows:
            return mid
        if got > rows:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-12:
            break
    return best[1]
