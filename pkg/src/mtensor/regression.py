"""Kernel-form least squares on m-tensors.

A model stores the (possibly reduced) feature m-tensor ``operator`` and the
dual weights ``Z`` solving ``P Z = Y`` with ``P = operator ⋉ operator^T``.
The implicit coefficient tensor ``operator^T Z`` is only formed on request
and only at toy scale (:func:`coefficients_dense`).

Model files
-----------
:func:`save_model` writes a JSON object with the fields

``format``
    Always ``"mtensor-model/1"``.
``maps``
    Output of :meth:`FeatureMapSet.to_dict`.
``samples``
    Raw input rows used to build ``operator`` (list of lists).
``dual``
    The ``Z`` matrix (list of lists, one row per sample).
``regularizer``
    Regularizer dictionary, e.g. ``{"name": "tikhonov", "lam": 0.1}``.
``diagnostics``
    Free-form numbers recorded at fit time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import ali as _ali
from .core import MTensor, mprod, mprod_row, unfold_mode1
from .errors import ConditioningError, DimensionError, NotPositiveDefiniteError
from .features import FeatureMapSet, build_cores, feature_row
from .linalg import cholesky, solve_spd, sym_eig

MODEL_FORMAT = "mtensor-model/1"


@dataclass(frozen=True)
class RegressionModel:
    """Fitted model; immutable once built.

    Attributes
    ----------
    operator : MTensor
        Feature rows the model expands on (all training rows, or the ALI subset).
    dual : ndarray, shape (operator.rdim, d)
    maps : FeatureMapSet or None
        Needed for :func:`predict`; fits straight from an m-tensor may omit it.
    regularizer : dict
        ``{"name": "none"}``, ``{"name": "tikhonov", "lam": ...}``,
        ``{"name": "spectral", "rank": ...}`` or ``{"name": "ali", "eps": ..., "mode": ...}``.
    diagnostics : dict
    samples : ndarray or None
        Raw inputs behind ``operator`` (used when saving).
    """

    operator: MTensor
    dual: np.ndarray
    maps: FeatureMapSet | None = None
    regularizer: dict = field(default_factory=lambda: {"name": "none"})
    diagnostics: dict = field(default_factory=dict)
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.dual.ndim != 2 or self.dual.shape[0] != self.operator.rdim:
            raise DimensionError(
                f"dual has shape {self.dual.shape}, operator has {self.operator.rdim} rows"
            )

    @property
    def output_dim(self) -> int:
        return self.dual.shape[1]


def _targets(Y, m):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != m:
        raise DimensionError(f"targets have shape {Y.shape}, expected {m} rows")
    return Y


def _gram(Phi):
    P = mprod(Phi, Phi)
    # the two factors of every core product are identical, symmetrize rounding
    return 0.5 * (P + P.T)


def _residual(P, Z, Y):
    ny = np.linalg.norm(Y)
    r = np.linalg.norm(P @ Z - Y)
    return float(r / ny) if ny > 0 else float(r)


def _factor(P, jitter):
    try:
        return cholesky(P, jitter=jitter)
    except NotPositiveDefiniteError as exc:
        raise ConditioningError(
            f"Gram matrix is not positive definite: Cholesky pivot {exc.pivot} failed",
            pivot=exc.pivot,
        ) from None


def fit_least_squares(Phi: MTensor, Y, maps=None, samples=None, jitter=False) -> RegressionModel:
    """Interpolating fit ``Z = P^{-1} Y``.

    With ``jitter=True`` a numerically singular ``P`` is shifted by
    ``1e-12 * trace(P) / m`` before factorizing; the shift is reported in
    ``diagnostics["jitter"]``.

    Raises
    ------
    ConditioningError
        If ``P`` is not positive definite (and jitter is off or did not help).
    """
    Y = _targets(Y, Phi.rdim)
    P = _gram(Phi)
    F = _factor(P, jitter)
    Z = solve_spd(F, Y)
    diag = {
        "m": Phi.rdim,
        "retained_rows": Phi.rdim,
        "condition_proxy": F.diag_ratio(),
        "jitter": F.jitter,
        "fit_residual": _residual(P, Z, Y),
    }
    return RegressionModel(Phi, Z, maps, {"name": "none"}, diag, samples)


def fit_tikhonov(Phi: MTensor, Y, lam: float, maps=None, samples=None) -> RegressionModel:
    """Ridge fit ``Z = (P + lam^2 I)^{-1} Y``; ``lam = 0`` is plain least squares."""
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if lam == 0:
        M = fit_least_squares(Phi, Y, maps, samples)
        return RegressionModel(
            M.operator, M.dual, maps, {"name": "tikhonov", "lam": 0.0}, M.diagnostics, samples
        )
    Y = _targets(Y, Phi.rdim)
    P = _gram(Phi)
    F = _factor(P + lam**2 * np.eye(Phi.rdim), False)
    Z = solve_spd(F, Y)
    diag = {
        "m": Phi.rdim,
        "retained_rows": Phi.rdim,
        "condition_proxy": F.diag_ratio(),
        "fit_residual": _residual(P, Z, Y),
    }
    return RegressionModel(Phi, Z, maps, {"name": "tikhonov", "lam": float(lam)}, diag, samples)


def fit_spectral(Phi: MTensor, Y, rank=None, tau=None, maps=None, samples=None) -> RegressionModel:
    """Least squares projected on the top-``rank`` eigenvectors of ``P``.

    ``Z = U_r U_r^T P^{-1} Y``, evaluated as ``U_r diag(1/lambda_r) U_r^T Y``
    which is the same matrix but also defined when ``P`` is singular beyond
    rank ``r``.  When ``tau`` is given instead of ``rank``, ``r`` counts the
    eigenvalues with ``sqrt(lambda) >= tau`` (singular values of the
    unfolded feature matrix).
    """
    if (rank is None) == (tau is None):
        raise ValueError("give exactly one of rank or tau")
    Y = _targets(Y, Phi.rdim)
    m = Phi.rdim
    P = _gram(Phi)
    lam, U = sym_eig(P)
    if tau is not None:
        if not tau >= 0:
            raise ValueError(f"tau must be non-negative, got {tau}")
        rank = int(np.count_nonzero(np.sqrt(np.maximum(lam, 0.0)) >= tau))
    rank = int(rank)
    if not 1 <= rank <= m:
        raise ValueError(f"spectral rank must be in [1, {m}], got {rank}")
    if not lam[rank - 1] > 0:
        raise ConditioningError(
            f"eigenvalue {rank - 1} of the Gram matrix is not positive ({lam[rank - 1]:.3e})",
            pivot=rank - 1,
        )
    Ur = U[:, :rank]
    Z = Ur @ ((Ur.T @ Y) / lam[:rank, None])
    diag = {
        "m": m,
        "retained_rows": m,
        "rank": rank,
        "condition_proxy": float(lam[0] / lam[-1]) if lam[-1] > 0 else float("inf"),
        "fit_residual": _residual(P, Z, Y),
    }
    reg = {"name": "spectral", "rank": rank}
    if tau is not None:
        reg["tau"] = float(tau)
    return RegressionModel(Phi, Z, maps, reg, diag, samples)


def fit_ali(Phi: MTensor, Y, eps: float, mode: str = "greedy", maps=None, samples=None) -> RegressionModel:
    """Least squares on the ALI-retained rows only."""
    Y = _targets(Y, Phi.rdim)
    D = _ali.ali(Phi, eps, mode)
    idx = D.indices
    sub = Phi.select_rows(idx)
    Yt = Y[idx]
    Z = solve_spd(D.factor, Yt)
    P = _gram(sub)
    diag = {
        "m": Phi.rdim,
        "retained_rows": int(idx.size),
        "indices": idx.tolist(),
        "condition_proxy": D.factor.diag_ratio(),
        "fit_residual": _residual(P, Z, Yt),
    }
    sub_samples = None if samples is None else np.asarray(samples)[idx]
    reg = {"name": "ali", "eps": float(eps), "mode": mode}
    return RegressionModel(sub, Z, maps, reg, diag, sub_samples)


def predict(M: RegressionModel, x) -> np.ndarray:
    """Model output at one input vector, shape ``(d,)``."""
    if M.maps is None:
        raise ValueError("model has no feature maps; cannot evaluate at raw inputs")
    k = mprod_row(feature_row(x, M.maps), M.operator)
    return k @ M.dual


def predict_many(M: RegressionModel, X) -> np.ndarray:
    """Outputs at every row of ``X``, shape ``(len(X), d)``."""
    if M.maps is None:
        raise ValueError("model has no feature maps; cannot evaluate at raw inputs")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Q = build_cores(X, M.maps)
    return mprod(Q, M.operator) @ M.dual


def kernel_eval(x, x2, maps: FeatureMapSet) -> float:
    """``<phi(x), phi(x2)>`` as a product of one-dimensional inner products."""
    a = maps.evaluate(np.asarray(x, dtype=float).ravel()[None, :])
    b = maps.evaluate(np.asarray(x2, dtype=float).ravel()[None, :])
    out = 1.0
    for u, v in zip(a, b):
        out *= float(u[0] @ v[0])
    return out


def coefficients_dense(M: RegressionModel, cap=None) -> np.ndarray:
    """Dense coefficient tensor ``sum_k Z[k] * row_k`` of a single-output model."""
    if M.output_dim != 1:
        raise DimensionError("dense coefficients are only defined for a single output")
    Phi1 = unfold_mode1(M.operator, cap)
    return (Phi1.T @ M.dual[:, 0]).reshape(M.operator.cdims)


def parse_regularizer(text: str) -> dict:
    """Parse ``ls``, ``tikhonov:LAM``, ``spectral:R``, ``spectral:tau=T``,
    ``ali:EPS[:MODE]`` or ``ali:rows=N[:MODE]``."""
    parts = [p.strip() for p in text.strip().split(":")]
    name = parts[0].lower()
    try:
        if name in ("ls", "none", "lstsq") and len(parts) == 1:
            return {"name": "none"}
        if name == "tikhonov" and len(parts) == 2:
            lam = float(parts[1])
            if not lam >= 0:
                raise ValueError("lambda must be non-negative")
            return {"name": "tikhonov", "lam": lam}
        if name == "spectral" and len(parts) == 2:
            arg = parts[1]
            if arg.startswith("tau="):
                tau = float(arg[4:])
                if not tau >= 0:
                    raise ValueError("tau must be non-negative")
                return {"name": "spectral", "tau": tau}
            r = int(arg)
            if r < 1:
                raise ValueError("rank must be at least 1")
            return {"name": "spectral", "rank": r}
        if name == "ali" and len(parts) in (2, 3):
            mode = parts[2] if len(parts) == 3 else "greedy"
            if mode not in ("greedy", "optimal"):
                raise ValueError(f"unknown ALI mode {mode!r}")
            arg = parts[1]
            if arg.startswith("rows="):
                rows = int(arg[5:])
                if rows < 1:
                    raise ValueError("rows must be at least 1")
                return {"name": "ali", "rows": rows, "mode": mode}
            eps = float(arg)
            if not eps > 0:
                raise ValueError("eps must be positive")
            return {"name": "ali", "eps": eps, "mode": mode}
    except ValueError as exc:
        raise ValueError(f"bad regularizer {text!r}: {exc}") from None
    raise ValueError(
        f"bad regularizer {text!r}; expected ls, tikhonov:LAM, spectral:R, "
        "spectral:tau=T, ali:EPS[:mode] or ali:rows=N[:mode]"
    )


def fit(samples, Y, maps: FeatureMapSet, reg="ls", jitter=False) -> RegressionModel:
    """Build the feature m-tensor of ``samples`` and fit with ``reg``.

    ``reg`` is a regularizer string or dictionary (see :func:`parse_regularizer`).
    ``jitter`` only affects the unregularized fit.
    """
    if isinstance(reg, str):
        reg = parse_regularizer(reg)
    X = np.asarray(samples, dtype=float)
    Phi = build_cores(X, maps)
    name = reg["name"]
    if name == "none":
        return fit_least_squares(Phi, Y, maps, X, jitter=jitter)
    if name == "tikhonov":
        return fit_tikhonov(Phi, Y, reg["lam"], maps, X)
    if name == "spectral":
        return fit_spectral(Phi, Y, rank=reg.get("rank"), tau=reg.get("tau"), maps=maps, samples=X)
    if name == "ali":
        mode = reg.get("mode", "greedy")
        if "rows" in reg:
            eps = _ali.eps_for_rows(Phi, reg["rows"], mode)
        else:
            eps = reg["eps"]
        return fit_ali(Phi, Y, eps, mode, maps, X)
    raise ValueError(f"unknown regularizer {name!r}")


def save_model(M: RegressionModel, path) -> None:
    if M.samples is None or M.maps is None:
        raise ValueError("only models fitted from raw samples with feature maps can be saved")
    doc = {
        "format": MODEL_FORMAT,
        "maps": M.maps.to_dict(),
        "samples": np.asarray(M.samples).tolist(),
        "dual": M.dual.tolist(),
        "regularizer": M.regularizer,
        "diagnostics": _jsonable(M.diagnostics),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path) -> RegressionModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    maps = FeatureMapSet.from_dict(doc["maps"])
    X = np.asarray(doc["samples"], dtype=float)
    Z = np.asarray(doc["dual"], dtype=float)
    return RegressionModel(
        build_cores(X, maps), Z, maps, doc["regularizer"], doc.get("diagnostics", {}), X
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
