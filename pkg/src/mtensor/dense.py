"""Brute-force dense counterparts of the factorized operations.

These are reference implementations for testing.  They loop over every
multi-index on purpose and share no code with :mod:`mtensor.core`, so a bug
in the fast path cannot be mirrored here.  Dense tensors are plain C-ordered
``ndarray`` objects, i.e. flat data with ``i_1`` varying slowest.
"""

import itertools
import math

import numpy as np

from .errors import CapacityError, DimensionError, RankError

DENSE_CAP = 10**6

#: Seed used for every randomly generated oracle instance.
ORACLE_SEED = 20240531


def _cap(size, cap):
    cap = DENSE_CAP if cap is None else cap
    if size > cap:
        raise CapacityError(f"dense tensor of {size} entries exceeds cap {cap}")


def _core_list(T):
    # accept an MTensor or a plain list of matrices
    cores = getattr(T, "cores", T)
    return [np.asarray(c, dtype=float) for c in cores]


def materialize(T, cap=None):
    """Dense ``(m, p_1, ..., p_n)`` array of an m-tensor, entry by entry."""
    cores = _core_list(T)
    m = cores[0].shape[0]
    shape = (m,) + tuple(c.shape[1] for c in cores)
    _cap(math.prod(shape), cap)
    out = np.empty(shape)
    for k in range(m):
        for idx in itertools.product(*(range(c.shape[1]) for c in cores)):
            v = 1.0
            for c, i in zip(cores, idx):
                v *= c[k, i]
            out[(k,) + idx] = v
    return out


def face_splitting(cores, cap=None):
    """Row-wise Kronecker product of matrices with equal row counts."""
    cores = [np.asarray(c, dtype=float) for c in cores]
    if not cores:
        raise ValueError("need at least one matrix")
    m = cores[0].shape[0]
    if any(c.shape[0] != m for c in cores):
        raise DimensionError("face-splitting product needs equal row counts")
    ncols = math.prod(c.shape[1] for c in cores)
    _cap(m * ncols, cap)
    out = np.empty((m, ncols))
    for k in range(m):
        rowk = np.ones(1)
        for c in cores:
            rowk = np.kron(rowk, c[k])
        out[k] = rowk
    return out


def element(D, k, idx):
    return float(D[(k,) + tuple(idx)])


def contract_r(D):
    m = D.shape[0]
    return np.array([sum(D[k].ravel().tolist()) for k in range(m)])


def contract_c(D):
    out = np.zeros(D.shape[1:])
    for k in range(D.shape[0]):
        out = out + D[k]
    return out


def contract(D, axes):
    """Sum out ``axes`` by explicit iteration over the kept multi-indices."""
    D = np.asarray(D, dtype=float)
    axes = sorted(set(axes))
    keep = [a for a in range(D.ndim) if a not in axes]
    out = np.zeros(tuple(D.shape[a] for a in keep))
    for full in itertools.product(*(range(s) for s in D.shape)):
        out[tuple(full[a] for a in keep)] += D[full]
    return out


def hadamard(D1, D2):
    return D1 * D2


def inner(D1, D2):
    return float(sum((D1 * D2).ravel().tolist()))


def norm(D):
    return math.sqrt(inner(D, D))


def mprod(D1, D2):
    """Matrix of inner products between rows of two dense m-tensors."""
    out = np.empty((D1.shape[0], D2.shape[0]))
    for k in range(D1.shape[0]):
        for l in range(D2.shape[0]):
            out[k, l] = inner(D1[k], D2[l])
    return out


def mprod_row(r, D):
    return np.array([inner(r, D[l]) for l in range(D.shape[0])])


def unfold_mode1(D):
    return D.reshape(D.shape[0], -1)


def outer(vectors):
    """Dense rank-1 tensor from a list of vectors."""
    out = np.ones(())
    for v in vectors:
        out = np.multiply.outer(out, np.asarray(v, dtype=float))
    return out


def dense_lstsq(A, y, branch="auto"):
    """Minimum-norm least-squares coefficients of ``A c = y``.

    ``branch`` selects the pseudoinverse formula: ``"rows"`` uses
    ``A^T (A A^T)^{-1} y`` and ``"cols"`` uses ``(A^T A)^{-1} A^T y``.
    ``"auto"`` picks rows for wide systems and columns otherwise.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, N = A.shape
    if branch == "auto":
        branch = "rows" if m <= N else "cols"
    if branch == "rows":
        G = A @ A.T
        rhs = y
    elif branch == "cols":
        G = A.T @ A
        rhs = A.T @ y
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if np.linalg.matrix_rank(G) < G.shape[0]:
        raise RankError(f"Gram matrix of the {branch} branch is singular")
    sol = np.linalg.solve(G, rhs)
    return A.T @ sol if branch == "rows" else sol


def random_cores(rng, m, cdims):
    """Cores with entries uniform in [-1, 1]."""
    return [rng.uniform(-1.0, 1.0, size=(m, p)) for p in cdims]


def random_instance(rng, max_m=6, max_n=4, max_p=3):
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    cdims = [int(rng.integers(1, max_p + 1)) for _ in range(n)]
    return random_cores(rng, m, cdims)
