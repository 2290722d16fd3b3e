"""Seeded experiment drivers: Rosenbrock regression, Lorenz and Kuramoto identification.

Every driver takes a plain ``dict`` config (missing keys fall back to the
module-level defaults), returns an :class:`ExperimentReport` and, when
``out_dir`` is set, writes the report JSON and trajectory CSVs there.

Report JSON
-----------
Fields: ``experiment``, ``config``, ``seed``, ``timings``
(``construct_seconds``, ``infer_seconds_per_sample``), ``errors``
(``train_rel_l2``, ``test_rel_l2``), ``model`` (``type``, ``m``,
``m_tilde``, ``n``, ``cdims``) and ``extra`` (experiment specific series).
Timings are the only fields that change between runs with the same seed.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .dynamics import SystemSpec, Trajectory, assemble_derivative_data, euler_integrate, model_rhs
from .errors import ConditioningError
from .features import Basis1D, FeatureMapSet, build_cores
from .regression import fit, parse_regularizer, predict_many

ROSENBROCK_DEFAULTS = {
    "n": 20,
    "alpha": 20,
    "degree": 4,
    "reg": "ls",
    "seed": 0,
    "repeats": 1,
    # inputs in [-5, 10] are multiplied by this before the monomials
    "scale": 0.02,
    "bounds": [-5.0, 10.0],
    "test_factor": 3,
}

LORENZ_DEFAULTS = {
    "sigma": 10.0,
    "rho": 28.0,
    "beta": 2.667,
    "x0": [0.0, 1.0, 1.05],
    "dt": 0.001,
    "train_steps": 500,
    "rollout_steps": 25000,
    "spectral_rank": 8,
    "ali_rows": 8,
    "n_random_ic": 50,
    # box of the random initial conditions, per coordinate
    "ic_low": [-15.0, -15.0, 5.0],
    "ic_high": [15.0, 15.0, 40.0],
    "record_every": 100,
    "source": "exact",
    "seed": 0,
}

KURAMOTO_DEFAULTS = {
    "n": 10,
    "K": 2.0,
    "omega_range": 5.0,
    "dt": 0.01,
    "train_steps": 1000,
    "rollout_steps": 50000,
    "repeats": 5,
    # amplitude of the sin/cos features; None picks 1.0 below 10 oscillators, else 0.05
    "trig_weight": None,
    # ALI tolerance relative to the mean squared row norm; None picks 1e-3
    # below 10 oscillators (unit-amplitude features, badly conditioned Gram
    # matrices) and 1e-6 otherwise
    "ali_rel_eps": None,
    "models": ["ls", "ali"],
    "record_every": 500,
    "seed": 0,
}


def _merge(defaults, config):
    config = dict(config or {})
    unknown = sorted(set(config) - set(defaults) - {"out_dir"})
    if unknown:
        raise KeyError(f"unknown config keys {unknown}; valid keys: {sorted(defaults)}")
    out = dict(defaults)
    out.update(config)
    return out


# --------------------------------------------------------------------------- #
# sampling, test function, metrics


def lhs_sample(n: int, m: int, bounds, seed) -> np.ndarray:
    """Latin hypercube design of ``m`` points in ``n`` dimensions.

    ``bounds`` is one ``(low, high)`` pair for every axis or a list of ``n``
    pairs.  Each axis gets exactly one point per equal-width stratum.
    """
    if m < 1 or n < 1:
        raise ValueError("need n >= 1 and m >= 1")
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (n, 1))
    if b.shape != (n, 2):
        raise ValueError(f"bounds must be a pair or {n} pairs, got shape {b.shape}")
    if np.any(b[:, 1] <= b[:, 0]):
        raise ValueError("every axis needs low < high")
    unit = qmc.LatinHypercube(d=n, rng=np.random.default_rng(seed)).random(m)
    return qmc.scale(unit, b[:, 0], b[:, 1])


def rosenbrock(x) -> np.ndarray | float:
    """Generalized Rosenbrock function; rows of a 2-D ``x`` are evaluated separately."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("the Rosenbrock function needs n >= 2")
    a, b = x[..., :-1], x[..., 1:]
    val = np.sum(100.0 * (b - a**2) ** 2 + (a - 1.0) ** 2, axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def relative_error(truth, approx) -> float:
    """``|truth - approx| / |truth|`` in the Euclidean (Frobenius) norm."""
    truth = np.asarray(truth, dtype=float)
    approx = np.asarray(approx, dtype=float)
    nt = np.linalg.norm(truth)
    if nt == 0:
        raise ZeroDivisionError("relative error against a zero reference")
    return float(np.linalg.norm(truth - approx) / nt)


# --------------------------------------------------------------------------- #
# reports


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    seed: int
    timings: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, d) -> "ExperimentReport":
        return cls(**{k: d[k] for k in ("experiment", "config", "seed", "timings", "errors", "model", "extra")})

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _plain(obj):
    """Recursively convert numpy containers/scalars to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _model_summary(M, n):
    return {
        "type": M.regularizer["name"],
        "regularizer": M.regularizer,
        "m": M.diagnostics.get("m", M.operator.rdim),
        "m_tilde": M.operator.rdim,
        "n": n,
        "cdims": list(M.maps.cdims),
    }


def _timed_fit(X, Y, maps, reg, jitter=False):
    t = time.perf_counter()
    M = fit(X, Y, maps, reg, jitter=jitter)
    return M, time.perf_counter() - t


def _timed_predict(M, X):
    predict_many(M, X[:1])  # warm-up, excluded
    t = time.perf_counter()
    out = predict_many(M, X)
    return out, (time.perf_counter() - t) / len(X)


def _warmup(maps, n):
    # one tiny fit so library initialization is not billed to the first timing
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (4, n))
    try:
        fit(X, np.ones(4), maps, "tikhonov:1")
    except Exception:  # pragma: no cover - warm-up must never fail a run
        pass


def _prepare_out(out_dir):
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    return out_dir


# --------------------------------------------------------------------------- #
# Rosenbrock


def rosenbrock_maps(n, degree=4, scale=0.02) -> FeatureMapSet:
    return FeatureMapSet.per_axis(n, Basis1D.monomial(degree), scale)


def run_rosenbrock(config=None) -> ExperimentReport:
    """Fit the ``n``-dimensional Rosenbrock function from ``alpha * n`` LHS points.

    Test error is measured on ``test_factor * m`` fresh LHS points; errors and
    timings are averaged over ``repeats`` independent samplings (sub-seed
    ``seed + repeat``).
    """
    cfg = _merge(ROSENBROCK_DEFAULTS, config)
    n, alpha = int(cfg["n"]), int(cfg["alpha"])
    if n < 2:
        raise ValueError("Rosenbrock needs n >= 2")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if int(cfg["repeats"]) < 1:
        raise ValueError("repeats must be at least 1")
    reg = parse_regularizer(cfg["reg"]) if isinstance(cfg["reg"], str) else cfg["reg"]
    m = alpha * n
    maps = rosenbrock_maps(n, int(cfg["degree"]), float(cfg["scale"]))
    _warmup(maps, n)

    runs = []
    M = None
    for r in range(int(cfg["repeats"])):
        s = int(cfg["seed"]) + r
        ss = np.random.SeedSequence(s).spawn(2)
        Xtr = lhs_sample(n, m, cfg["bounds"], np.random.default_rng(ss[0]))
        Xte = lhs_sample(n, int(cfg["test_factor"]) * m, cfg["bounds"], np.random.default_rng(ss[1]))
        ytr, yte = rosenbrock(Xtr), rosenbrock(Xte)
        try:
            M, t_fit = _timed_fit(Xtr, ytr, maps, reg)
        except ConditioningError as exc:
            raise ConditioningError(
                f"Rosenbrock fit failed (n={n}, alpha={alpha}, reg={cfg['reg']!r}, repeat={r}): {exc}",
                pivot=exc.pivot,
            ) from None
        pte, t_inf = _timed_predict(M, Xte)
        runs.append(
            {
                "seed": s,
                "construct_seconds": t_fit,
                "infer_seconds_per_sample": t_inf,
                "train_rel_l2": relative_error(ytr, predict_many(M, Xtr)[:, 0]),
                "test_rel_l2": relative_error(yte, pte[:, 0]),
                "m_tilde": M.operator.rdim,
            }
        )

    def avg(key):
        return float(np.mean([run[key] for run in runs]))

    model = _model_summary(M, n)
    model["m_tilde"] = avg("m_tilde")
    report = ExperimentReport(
        "rosenbrock",
        _plain(cfg),
        int(cfg["seed"]),
        timings={k: avg(k) for k in ("construct_seconds", "infer_seconds_per_sample")},
        errors={k: avg(k) for k in ("train_rel_l2", "test_rel_l2")},
        model=model,
        extra={"repeats": runs},
    )
    out = _prepare_out(cfg.get("out_dir"))
    if out:
        report.save(os.path.join(out, "rosenbrock_report.json"))
    return report


# --------------------------------------------------------------------------- #
# dynamics helpers


def _free_rollout(rhs, x0, dt, steps):
    """Euler rollout that keeps going after divergence (bad members become NaN).

    Returns ``(states, first_bad_step)`` where ``first_bad_step`` has one
    entry per batch member (``-1`` if the member stayed finite).
    """
    x = np.array(x0, dtype=float)
    out = np.empty((steps + 1,) + x.shape)
    out[0] = x
    with np.errstate(all="ignore"):
        for k in range(steps):
            x = x + rhs(x) * dt
            out[k + 1] = x
    finite = np.isfinite(out).all(axis=-1)
    bad = np.where(finite.all(axis=0), -1, np.argmin(finite, axis=0))
    return out, bad


def _error_series(truth, approx, every):
    """Relative error of the state vectors at every ``every``-th step."""
    idx = np.arange(0, truth.shape[0], every)
    if idx[-1] != truth.shape[0] - 1:
        idx = np.append(idx, truth.shape[0] - 1)
    with np.errstate(all="ignore"):
        num = np.linalg.norm(truth[idx] - approx[idx], axis=-1)
        den = np.linalg.norm(truth[idx], axis=-1)
        return idx, num / den


# --------------------------------------------------------------------------- #
# Lorenz


def lorenz_maps() -> FeatureMapSet:
    return FeatureMapSet.per_axis(3, Basis1D.monomial(1))


def run_lorenz(config=None) -> tuple[ExperimentReport, dict]:
    """Identify the Lorenz system from one short trajectory.

    Three models (least squares, rank-limited spectral, ALI with a target row
    count) are trained on ``train_steps`` states and rolled out for
    ``rollout_steps`` steps from the training initial condition and from
    ``n_random_ic`` random ones.

    Returns the report and a dict of the trained-IC trajectories (``truth``
    plus one per model).
    """
    cfg = _merge(LORENZ_DEFAULTS, config)
    spec = SystemSpec.lorenz(cfg["sigma"], cfg["rho"], cfg["beta"])
    dt = float(cfg["dt"])
    if not dt > 0 or int(cfg["train_steps"]) < 2 or int(cfg["rollout_steps"]) < 1:
        raise ValueError("need dt > 0, train_steps >= 2 and rollout_steps >= 1")
    x0 = np.asarray(cfg["x0"], dtype=float)
    train = euler_integrate(spec, x0, dt, int(cfg["train_steps"]) - 1)
    X, Y = assemble_derivative_data(train, spec, cfg["source"])
    maps = lorenz_maps()
    _warmup(maps, 3)

    regs = {
        "least_squares": ({"name": "none"}, True),
        "spectral": ({"name": "spectral", "rank": int(cfg["spectral_rank"])}, False),
        "ali": ({"name": "ali", "rows": int(cfg["ali_rows"]), "mode": "greedy"}, False),
    }
    steps = int(cfg["rollout_steps"])
    every = int(cfg["record_every"])
    rng = np.random.default_rng(int(cfg["seed"]))
    ics = rng.uniform(cfg["ic_low"], cfg["ic_high"], size=(int(cfg["n_random_ic"]), 3))
    starts = np.vstack([x0[None, :], ics])
    truth, _ = _free_rollout(spec, starts, dt, steps)

    models, trajectories = {}, {"truth": Trajectory(truth[:, 0], dt)}
    for name, (reg, jitter) in regs.items():
        M, t_fit = _timed_fit(X, Y, maps, reg, jitter=jitter)
        _, t_inf = _timed_predict(M, X)
        states, bad = _free_rollout(model_rhs(M), starts, dt, steps)
        trajectories[name] = Trajectory(states[:, 0], dt)
        own = states[:, 0]
        finite = bool(bad[0] < 0)
        idx, err = _error_series(truth[:, 0], own, every)
        _, err_ic = _error_series(truth[:, 1:], states[:, 1:], every)
        window = min(int(cfg["train_steps"]), steps + 1)
        models[name] = {
            "regularizer": M.regularizer,
            "m_tilde": M.operator.rdim,
            "jitter": M.diagnostics.get("jitter", 0.0),
            "construct_seconds": t_fit,
            "infer_seconds_per_sample": t_inf,
            "train_rel_l2": relative_error(Y, predict_many(M, X)),
            "train_window_rollout_rel_l2": relative_error(truth[:window, 0], own[:window]),
            "rollout_finite": finite,
            "divergence_step": int(bad[0]),
            "rollout_max_abs": float(np.nanmax(np.abs(own))) if finite else None,
            "error_steps": idx,
            "error_series": err,
            "random_ic_diverged": int(np.count_nonzero(bad[1:] >= 0)),
            "random_ic_error_min": np.nanmin(err_ic, axis=1),
            "random_ic_error_mean": np.nanmean(err_ic, axis=1),
            "random_ic_error_max": np.nanmax(err_ic, axis=1),
        }
        if name == "least_squares":
            primary = (M, t_fit, t_inf)

    M, t_fit, t_inf = primary
    ls = models["least_squares"]
    report = ExperimentReport(
        "lorenz",
        _plain(cfg),
        int(cfg["seed"]),
        timings={"construct_seconds": t_fit, "infer_seconds_per_sample": t_inf},
        errors={"train_rel_l2": ls["train_rel_l2"], "test_rel_l2": ls["train_window_rollout_rel_l2"]},
        model=_model_summary(M, 3),
        extra={"models": models},
    )
    out = _prepare_out(cfg.get("out_dir"))
    if out:
        report.save(os.path.join(out, "lorenz_report.json"))
        for name, tr in trajectories.items():
            tr.to_csv(os.path.join(out, f"lorenz_{name}.csv"))
    return report, trajectories


# --------------------------------------------------------------------------- #
# Kuramoto


def kuramoto_maps(n, weight=None) -> FeatureMapSet:
    """``2n`` cores ``[1, w sin(theta_i)]`` and ``[1, w cos(theta_i)]``, per oscillator."""
    if weight is None:
        weight = 1.0 if n < 10 else 0.05
    return FeatureMapSet.per_axis(n, [Basis1D.trig("sin", weight), Basis1D.trig("cos", weight)])


def run_kuramoto(config=None) -> ExperimentReport:
    """Identify Kuramoto oscillators, ``repeats`` times with fresh frequencies.

    Each repeat (sub-seed ``seed + repeat``) draws ``omega`` uniformly in
    ``[-omega_range, omega_range]`` and initial phases in ``[0, 2 pi)``, trains
    on ``train_steps`` states and rolls out ``rollout_steps`` steps.  The
    report holds min/mean/max relative error series over the repeats.  With
    ``out_dir`` set, the first repeat's trajectories (truth and one per
    model, every ``record_every``-th state) are written as CSV.
    """
    cfg = _merge(KURAMOTO_DEFAULTS, config)
    n = int(cfg["n"])
    if n < 1:
        raise ValueError("need at least one oscillator")
    if int(cfg["repeats"]) < 1 or int(cfg["train_steps"]) < 2 or int(cfg["rollout_steps"]) < 1:
        raise ValueError("need repeats >= 1, train_steps >= 2, rollout_steps >= 1")
    dt = float(cfg["dt"])
    maps = kuramoto_maps(n, cfg["trig_weight"])
    _warmup(maps, n)
    steps, every = int(cfg["rollout_steps"]), int(cfg["record_every"])
    wanted = list(cfg["models"])
    for name in wanted:
        if name not in ("ls", "ali"):
            raise ValueError(f"unknown Kuramoto model {name!r}")

    per_model = {name: [] for name in wanted}
    idx = None
    trajectories = {}
    for r in range(int(cfg["repeats"])):
        rng = np.random.default_rng(int(cfg["seed"]) + r)
        omega = rng.uniform(-cfg["omega_range"], cfg["omega_range"], n)
        theta0 = rng.uniform(0.0, 2 * np.pi, n)
        spec = SystemSpec.kuramoto(omega, cfg["K"])
        train = euler_integrate(spec, theta0, dt, int(cfg["train_steps"]) - 1)
        X, Y = assemble_derivative_data(train, spec, "exact")
        truth, _ = _free_rollout(spec, theta0, dt, steps)
        if r == 0:
            trajectories["truth"] = Trajectory(truth[::every], dt * every)
        for name in wanted:
            if name == "ls":
                reg = {"name": "none"}
            else:
                nrm2 = np.mean(np.prod([(c * c).sum(axis=1) for c in build_cores(X, maps).cores], axis=0))
                rel = cfg["ali_rel_eps"]
                if rel is None:
                    rel = 1e-3 if n < 10 else 1e-6
                reg = {"name": "ali", "eps": float(rel) * float(nrm2), "mode": "greedy"}
            M, t_fit = _timed_fit(X, Y, maps, reg, jitter=(name == "ls"))
            _, t_inf = _timed_predict(M, X)
            states, bad = _free_rollout(model_rhs(M), theta0, dt, steps)
            idx, err = _error_series(truth, states, every)
            if r == 0:
                trajectories[name] = Trajectory(states[::every], dt * every)
            per_model[name].append(
                {
                    "seed": int(cfg["seed"]) + r,
                    "m_tilde": M.operator.rdim,
                    "jitter": M.diagnostics.get("jitter", 0.0),
                    "construct_seconds": t_fit,
                    "infer_seconds_per_sample": t_inf,
                    "train_rel_l2": relative_error(Y, predict_many(M, X)),
                    "rollout_rel_l2": relative_error(truth, states) if bad < 0 else None,
                    "divergence_step": int(bad),
                    "error_series": err,
                }
            )

    summary = {}
    for name, runs in per_model.items():
        E = np.array([run["error_series"] for run in runs], dtype=float)
        summary[name] = {
            "runs": runs,
            "error_steps": idx,
            "error_min": np.nanmin(E, axis=0),
            "error_mean": np.nanmean(E, axis=0),
            "error_max": np.nanmax(E, axis=0),
            "max_error": float(np.nanmax(E)) if np.isfinite(E).any() else None,
            "mean_m_tilde": float(np.mean([run["m_tilde"] for run in runs])),
            "train_rel_l2_max": float(max(run["train_rel_l2"] for run in runs)),
        }

    main = wanted[0]
    runs = per_model[main]
    first = summary[main]
    report = ExperimentReport(
        "kuramoto",
        _plain(cfg),
        int(cfg["seed"]),
        timings={
            "construct_seconds": float(np.mean([run["construct_seconds"] for run in runs])),
            "infer_seconds_per_sample": float(np.mean([run["infer_seconds_per_sample"] for run in runs])),
        },
        errors={"train_rel_l2": first["train_rel_l2_max"], "test_rel_l2": first["max_error"]},
        model={
            "type": "none" if main == "ls" else "ali",
            "m": int(cfg["train_steps"]),
            "m_tilde": first["mean_m_tilde"],
            "n": n,
            "cdims": list(maps.cdims),
        },
        extra={"models": summary},
    )
    out = _prepare_out(cfg.get("out_dir"))
    if out:
        report.save(os.path.join(out, f"kuramoto_n{n}_report.json"))
        for name, tr in trajectories.items():
            tr.to_csv(os.path.join(out, f"kuramoto_n{n}_{name}.csv"))
    return report
