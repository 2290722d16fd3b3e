"""Factorized m-tensor algebra.

An m-tensor of order ``n + 1`` is stored as ``n`` core matrices sharing the
same number of rows ``m``.  Entry ``(k, i_1, ..., i_n)`` of the represented
tensor is ``prod_j cores[j][k, i_j]``; row ``k`` is the rank-1 tensor
``cores[0][k] (x) cores[1][k] (x) ... (x) cores[n-1][k]``.

Everything here works on the cores directly.  The only routines that build
dense arrays of size ``prod(cdims)`` are :func:`contract_c` and
:func:`unfold_mode1`, and both are guarded by :data:`MAX_DENSE_ENTRIES`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import CapacityError, DimensionError

__all__ = [
    "MAX_DENSE_ENTRIES",
    "MTensor",
    "Rank1Row",
    "mtensor_from_cores",
    "element",
    "row",
    "transpose",
    "contract_r",
    "contract_c",
    "contract_general",
    "hadamard",
    "inner",
    "norm",
    "mprod",
    "mprod_row",
    "unfold_mode1",
]

#: Default cap on the number of entries any dense materialization may create.
MAX_DENSE_ENTRIES = 10**6


def _check_cap(size, cap):
    cap = MAX_DENSE_ENTRIES if cap is None else cap
    if size > cap:
        raise CapacityError(
            f"dense result would have {size} entries, above the cap of {cap}"
        )


class MTensor:
    """Row-wise tensor product of core matrices.

    Parameters
    ----------
    cores : sequence of array_like
        ``n`` matrices of shape ``(m, p_j)``.

    Attributes
    ----------
    cores : tuple of ndarray
    rdim : int
        Shared row count ``m``.
    cdims : tuple of int
        Column counts ``(p_1, ..., p_n)``.
    transposed : bool
        Role marker set by :func:`transpose`; the cores are not moved.
    """

    __slots__ = ("cores", "rdim", "cdims", "transposed", "_stacked")

    def __init__(self, cores, transposed=False):
        cores = [np.asarray(c, dtype=float) for c in cores]
        if len(cores) == 0:
            raise ValueError("an m-tensor needs at least one core")
        for j, c in enumerate(cores):
            if c.ndim != 2:
                raise DimensionError(f"core {j} is not a matrix (ndim={c.ndim})")
            if c.shape[0] < 1 or c.shape[1] < 1:
                raise DimensionError(f"core {j} is empty: shape {c.shape}")
        m = cores[0].shape[0]
        bad = [j for j, c in enumerate(cores) if c.shape[0] != m]
        if bad:
            raise DimensionError(
                f"cores {bad} do not have the shared row count {m}: "
                f"{[cores[j].shape[0] for j in bad]}"
            )
        self.cores = tuple(cores)
        self.rdim = m
        self.cdims = tuple(c.shape[1] for c in cores)
        self.transposed = bool(transposed)
        self._stacked = None

    @property
    def order(self) -> int:
        """Number of cores ``n``."""
        return len(self.cores)

    @property
    def T(self) -> "MTensor":
        return transpose(self)

    @property
    def stacked(self):
        """``(n, m, p)`` array of the cores when all widths agree, else ``None``."""
        if self._stacked is None and len(set(self.cdims)) == 1:
            self._stacked = np.stack(self.cores)
        return self._stacked

    def select_rows(self, indices) -> "MTensor":
        """Return the m-tensor made of the given rows, in the given order."""
        idx = np.asarray(indices, dtype=int)
        if idx.size == 0:
            raise ValueError("cannot build an m-tensor with zero rows")
        return MTensor([c[idx] for c in self.cores])

    def scale_core(self, j, alpha) -> "MTensor":
        cores = list(self.cores)
        cores[j] = alpha * cores[j]
        return MTensor(cores, self.transposed)

    def __len__(self):
        return self.rdim

    def __repr__(self):
        flag = ", transposed" if self.transposed else ""
        return f"MTensor(rdim={self.rdim}, cdims={self.cdims}{flag})"


class Rank1Row:
    """Rank-1 tensor ``factors[0] (x) ... (x) factors[n-1]``."""

    __slots__ = ("factors",)

    def __init__(self, factors):
        factors = tuple(np.asarray(f, dtype=float).ravel() for f in factors)
        if len(factors) == 0:
            raise ValueError("a rank-1 row needs at least one factor")
        self.factors = factors

    @property
    def cdims(self):
        return tuple(f.size for f in self.factors)

    def dense(self) -> np.ndarray:
        """Flattened tensor in ``i_1``-slowest order."""
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.outer(out, f).ravel()
        return out

    def as_mtensor(self) -> MTensor:
        return MTensor([f[None, :] for f in self.factors])

    def __repr__(self):
        return f"Rank1Row(cdims={self.cdims})"


def mtensor_from_cores(cores: Sequence) -> MTensor:
    """Wrap ``cores`` into an :class:`MTensor`.

    Raises ``ValueError`` on an empty sequence and :class:`DimensionError`
    when the row counts differ.
    """
    return MTensor(cores)


def element(T: MTensor, k: int, idx: Sequence[int]) -> float:
    """Entry ``(k, i_1, ..., i_n)`` of ``T``.

    For a transposed m-tensor the multi-index is given in the reversed axis
    order ``(i_n, ..., i_1)``, matching ``[T^T]_{i_n..i_1 k}``.
    """
    idx = tuple(idx)
    if T.transposed:
        idx = idx[::-1]
    if len(idx) != T.order:
        raise IndexError(f"expected {T.order} column indices, got {len(idx)}")
    if not 0 <= k < T.rdim:
        raise IndexError(f"row index {k} out of range for rdim {T.rdim}")
    val = 1.0
    for j, (c, i) in enumerate(zip(T.cores, idx)):
        if not 0 <= i < c.shape[1]:
            raise IndexError(f"index {i} out of range on axis {j} (size {c.shape[1]})")
        val *= c[k, i]
    return float(val)


def row(T: MTensor, k: int) -> Rank1Row:
    if not 0 <= k < T.rdim:
        raise IndexError(f"row index {k} out of range for rdim {T.rdim}")
    return Rank1Row([c[k] for c in T.cores])


def transpose(T: MTensor) -> MTensor:
    """Flip the axis-order marker of ``T``; no data is copied."""
    out = MTensor.__new__(MTensor)
    out.cores = T.cores
    out.rdim = T.rdim
    out.cdims = T.cdims
    out.transposed = not T.transposed
    out._stacked = T._stacked
    return out


def contract_r(T: MTensor) -> np.ndarray:
    """Sum of every row over all column axes, ``O(m n p)``."""
    out = np.ones(T.rdim)
    for c in T.cores:
        out *= c.sum(axis=1)
    return out


def contract_c(T: MTensor, cap=None) -> np.ndarray:
    """Sum over the row axis; returns a dense tensor of shape ``cdims``.

    Costs ``O(m prod(p_j))`` and is capped by ``cap`` entries.
    """
    _check_cap(math.prod(T.cdims), cap)
    out = np.zeros(T.cdims)
    for k in range(T.rdim):
        r = T.cores[0][k]
        for c in T.cores[1:]:
            r = np.multiply.outer(r, c[k])
        out += r
    return out


def contract_general(T, axes) -> np.ndarray:
    """Sum a dense tensor over ``axes`` (the summed axes are dropped)."""
    T = np.asarray(T, dtype=float)
    axes = tuple(sorted(set(int(a) for a in axes)))
    for a in axes:
        if not 0 <= a < T.ndim:
            raise IndexError(f"axis {a} invalid for a tensor of order {T.ndim}")
    if not axes:
        return T.copy()
    return np.sum(T, axis=axes)


def _check_same_shape(A: MTensor, B: MTensor):
    if A.rdim != B.rdim or A.cdims != B.cdims:
        raise DimensionError(
            f"shape mismatch: ({A.rdim}, {A.cdims}) vs ({B.rdim}, {B.cdims})"
        )


def hadamard(A: MTensor, B: MTensor) -> MTensor:
    """Entrywise product, computed core by core."""
    _check_same_shape(A, B)
    return MTensor([a * b for a, b in zip(A.cores, B.cores)])


def inner(A: MTensor, B: MTensor) -> float:
    """Frobenius inner product of two m-tensors of equal shape."""
    _check_same_shape(A, B)
    out = np.ones(A.rdim)
    for a, b in zip(A.cores, B.cores):
        out *= np.einsum("kp,kp->k", a, b)
    return float(out.sum())


def norm(T: MTensor) -> float:
    return math.sqrt(max(inner(T, T), 0.0))


def mprod(A: MTensor, B: MTensor) -> np.ndarray:
    """m-product ``A ⋉ B^T``: the Hadamard product of the core Gram matrices.

    Returns an ``(A.rdim, B.rdim)`` matrix whose entry ``(k, l)`` is the
    inner product of row ``k`` of ``A`` with row ``l`` of ``B``.  Whether
    ``B`` carries the transposed marker or not makes no difference.
    """
    if A.cdims != B.cdims:
        raise DimensionError(f"column dimensions differ: {A.cdims} vs {B.cdims}")
    out = A.cores[0] @ B.cores[0].T
    for a, b in zip(A.cores[1:], B.cores[1:]):
        out *= a @ b.T
    return out


def mprod_row(r: Rank1Row, B: MTensor) -> np.ndarray:
    """Kernel vector between one rank-1 row and every row of ``B``."""
    if r.cdims != B.cdims:
        raise DimensionError(f"column dimensions differ: {r.cdims} vs {B.cdims}")
    S = B.stacked
    if S is not None:
        F = np.stack(r.factors)
        return np.prod(np.einsum("jmp,jp->jm", S, F), axis=0)
    out = B.cores[0] @ r.factors[0]
    for c, f in zip(B.cores[1:], r.factors[1:]):
        out *= c @ f
    return out


def unfold_mode1(T: MTensor, cap=None) -> np.ndarray:
    """Mode-1 unfolding (face-splitting product of the cores).

    Columns follow the multi-index with ``i_1`` varying slowest.
    """
    _check_cap(T.rdim * math.prod(T.cdims), cap)
    out = T.cores[0]
    for c in T.cores[1:]:
        out = np.einsum("ka,kb->kab", out, c).reshape(T.rdim, -1)
    return out
