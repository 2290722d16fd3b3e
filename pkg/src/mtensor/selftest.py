"""Randomized consistency checks against the dense reference implementation.

Used by ``mtensor selftest`` and by the test suite.  Each group returns a
:class:`GroupResult`; failures carry the seed of the offending instance so
they can be replayed with :func:`numpy.random.default_rng`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core, dense
from .ali import greedy_ali, optimal_ali, projection_mse
from .core import MTensor, Rank1Row
from .errors import NotPositiveDefiniteError, RankError
from .linalg import cholesky
from .regression import fit_least_squares, fit_spectral, fit_tikhonov, fit_ali

ORACLE_TOL = 1e-12
LSTSQ_TOL = 1e-8

TOY_CORES = (
    np.array([[1.0, -1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]]),
    np.array([[1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 0.0, 0.0]]),
)
TOY_SAMPLES = np.array([[-1.0, -1.0], [0.0, 1.0], [1.0, 0.0]])
TOY_Y = np.array([-3.0, 5.0, 3.0])


def toy_mtensor() -> MTensor:
    return MTensor([c.copy() for c in TOY_CORES])


@dataclass
class GroupResult:
    name: str
    total: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> int:
        return self.total - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures and self.total > 0

    def check(self, cond, what):
        self.total += 1
        if not cond:
            self.failures.append(what)


def rel_close(a, b, tol) -> bool:
    """``max|a - b| <= tol * max|b|`` (exact match required when ``b`` is zero)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    ref = np.abs(b).max(initial=0.0)
    return bool(np.abs(a - b).max(initial=0.0) <= tol * ref)


def _instance(seed, **kw):
    rng = np.random.default_rng(seed)
    return rng, dense.random_instance(rng, **kw)


def check_core_ops(count=200, base_seed=dense.ORACLE_SEED, tol=ORACLE_TOL) -> GroupResult:
    """Every factorized core operation against its dense counterpart."""
    g = GroupResult("core operations vs dense oracle")
    for i in range(count):
        seed = base_seed + i
        rng, cores = _instance(seed)
        T = MTensor(cores)
        D = dense.materialize(cores)
        cores2 = dense.random_cores(rng, T.rdim, T.cdims)
        T2, D2 = MTensor(cores2), dense.materialize(cores2)
        k = int(rng.integers(T.rdim))
        idx = [int(rng.integers(p)) for p in T.cdims]
        r = Rank1Row([rng.uniform(-1, 1, p) for p in T.cdims])
        Dr = dense.outer(r.factors)
        checks = {
            "element": (core.element(T, k, idx), dense.element(D, k, idx)),
            "contract_r": (core.contract_r(T), dense.contract_r(D)),
            "contract_c": (core.contract_c(T), dense.contract_c(D)),
            "hadamard": (dense.materialize(core.hadamard(T, T2)), dense.hadamard(D, D2)),
            "inner": (core.inner(T, T2), dense.inner(D, D2)),
            "norm": (core.norm(T), dense.norm(D)),
            "mprod": (core.mprod(T, T2), dense.mprod(D, D2)),
            "mprod_row": (core.mprod_row(r, T), dense.mprod_row(Dr, D)),
            "unfold_mode1": (core.unfold_mode1(T), dense.unfold_mode1(D)),
            "face_splitting": (core.unfold_mode1(T), dense.face_splitting(cores)),
        }
        for name, (fast, ref) in checks.items():
            g.check(rel_close(fast, ref, tol), f"{name} (seed {seed})")
    return g


def check_lstsq_equivalence(count=200, base_seed=dense.ORACLE_SEED + 10_000, tol=LSTSQ_TOL) -> GroupResult:
    """m-tensor least squares predicts like the dense pseudoinverse solution.

    Instances whose Gram matrix is numerically singular (or too badly
    conditioned for a ``tol`` comparison) are redrawn.
    """
    g = GroupResult("least squares vs dense pseudoinverse")
    seed = base_seed
    done = 0
    while done < count:
        rng, cores = _instance(seed, max_m=6, max_n=3, max_p=3)
        seed += 1
        T = MTensor(cores)
        A = core.unfold_mode1(T)
        if T.rdim > A.shape[1] or np.linalg.cond(A @ A.T) > 1e6:
            continue
        y = rng.uniform(-1, 1, T.rdim)
        try:
            M = fit_least_squares(T, y)
            c = dense.dense_lstsq(A, y, branch="rows")
        except (RankError, NotPositiveDefiniteError, np.linalg.LinAlgError):
            continue
        r = Rank1Row([rng.uniform(-1, 1, p) for p in T.cdims])
        fast = core.mprod_row(r, T) @ M.dual[:, 0]
        ref = r.dense() @ c
        train = core.mprod(T, T) @ M.dual[:, 0]
        scale = max(1.0, abs(ref))
        g.check(abs(fast - ref) <= tol * scale, f"prediction (seed {seed - 1})")
        g.check(rel_close(train, y, tol), f"interpolation (seed {seed - 1})")
        done += 1
    return g


def check_regularizers() -> GroupResult:
    """Identities linking the regularized fits to plain least squares on the toy problem."""
    g = GroupResult("regularizer identities")
    T = toy_mtensor()
    ls = fit_least_squares(T, TOY_Y).dual
    g.check(np.allclose(fit_tikhonov(T, TOY_Y, 0.0).dual, ls, rtol=0, atol=1e-10), "tikhonov lam=0")
    g.check(np.allclose(fit_spectral(T, TOY_Y, rank=3).dual, ls, rtol=0, atol=1e-10), "spectral r=m")
    P = core.mprod(T, T)
    lam, U = np.linalg.eigh(P)
    for r in (1, 2):
        Z = fit_spectral(T, TOY_Y, rank=r).dual
        Ur = U[:, ::-1][:, :r]
        g.check(np.abs(Z - Ur @ (Ur.T @ Z)).max() <= 1e-10, f"spectral r={r} eigenspace")
    g.check(np.allclose(fit_ali(T, TOY_Y, 1e-12).dual, ls, rtol=0, atol=1e-9), "ali eps->0")
    norms = [np.linalg.norm(fit_tikhonov(T, TOY_Y, lam).dual) for lam in (0.0, 1.0, 10.0, 100.0)]
    g.check(all(a >= b for a, b in zip(norms, norms[1:])), "tikhonov shrinkage")
    return g


def check_ali_bound(count=50, base_seed=dense.ORACLE_SEED + 20_000) -> GroupResult:
    """ALI: mean projection residual within eps, retained Gram factorable, m_tilde <= m."""
    g = GroupResult("ALI tolerance bound")
    for i in range(count):
        seed = base_seed + i
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 13))
        cdims = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 4)))]
        T = MTensor(dense.random_cores(rng, m, cdims))
        eps = float(10 ** rng.uniform(-4, -0.5))
        for mode, fn in (("greedy", greedy_ali), ("optimal", optimal_ali)):
            D = fn(T, eps)
            sub = T.select_rows(D.indices)
            try:
                F = cholesky(core.mprod(sub, sub))
                chol_ok = not F.jittered
            except NotPositiveDefiniteError:
                chol_ok = False
            g.check(projection_mse(D, T) <= eps, f"{mode} mse <= eps (seed {seed})")
            g.check(chol_ok, f"{mode} retained Gram SPD (seed {seed})")
            g.check(D.m_tilde <= m and len(set(D.indices.tolist())) == D.m_tilde,
                    f"{mode} m_tilde <= m (seed {seed})")
    return g


def check_toy_golden(tol=1e-3) -> GroupResult:
    from .regression import coefficients_dense

    g = GroupResult("toy golden values")
    T = toy_mtensor()
    M = fit_least_squares(T, TOY_Y)
    g.check(np.allclose(M.dual[:, 0], [-0.588, 1.647, 0.647], atol=tol), "dual z")
    C = coefficients_dense(M)
    g.check(abs(C[0, 0] - 1.706) <= tol, "C(0,0)")
    golden = sorted([1.706, 2.235, 1.059, 1.235, -0.588, 0.588, 0.059, 0.588, -0.588])
    g.check(np.allclose(sorted(C.ravel()), golden, atol=tol), "coefficient multiset")
    return g


def run_all(instances=200) -> list[GroupResult]:
    return [
        check_core_ops(instances),
        check_lstsq_equivalence(instances),
        check_regularizers(),
        check_ali_bound(),
        check_toy_golden(),
    ]
