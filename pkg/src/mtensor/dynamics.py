"""Lorenz and Kuramoto systems, explicit Euler integration and model rollouts.

Kuramoto phases are integrated without wrapping modulo ``2*pi``; the
sin/cos features are periodic, so wrapping would change nothing for a model
and would only introduce jumps in error curves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DivergenceError

LORENZ_DEFAULTS = {"sigma": 10.0, "rho": 28.0, "beta": 2.667}


def lorenz_rhs(x, sigma=10.0, rho=28.0, beta=2.667):
    """Lorenz vector field; ``x`` may carry leading batch axes."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise DimensionError(f"Lorenz state has 3 components, got {x.shape[-1]}")
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack(
        [sigma * (x2 - x1), rho * x1 - x2 - x1 * x3, x1 * x2 - beta * x3], axis=-1
    )


def kuramoto_rhs(theta, omega, K):
    """``omega_i + (K/n) * sum_j sin(theta_j - theta_i)``.

    Evaluated in ``O(n)`` through
    ``sin(a - b) = sin a cos b - cos a sin b``; ``theta`` may be batched.
    """
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    if theta.shape[-1] != n:
        raise DimensionError(f"theta has {theta.shape[-1]} phases, omega has {n}")
    s, c = np.sin(theta), np.cos(theta)
    S = s.sum(axis=-1, keepdims=True)
    C = c.sum(axis=-1, keepdims=True)
    return omega + (K / n) * (c * S - s * C)


@dataclass(frozen=True)
class SystemSpec:
    """Which system to integrate and its parameters.

    Use :meth:`lorenz` or :meth:`kuramoto` to build one.
    """

    kind: str
    n: int
    params: dict = field(default_factory=dict)

    @classmethod
    def lorenz(cls, sigma=10.0, rho=28.0, beta=2.667) -> "SystemSpec":
        return cls("lorenz", 3, {"sigma": float(sigma), "rho": float(rho), "beta": float(beta)})

    @classmethod
    def kuramoto(cls, omega, K=2.0) -> "SystemSpec":
        omega = np.asarray(omega, dtype=float).ravel()
        if omega.size < 1:
            raise ValueError("need at least one oscillator")
        return cls("kuramoto", omega.size, {"omega": omega, "K": float(K)})

    def __post_init__(self):
        if self.kind == "lorenz" and self.n != 3:
            raise ValueError("the Lorenz system has n = 3")
        if self.kind == "kuramoto" and len(self.params["omega"]) != self.n:
            raise ValueError("omega length must equal n")
        if self.kind not in ("lorenz", "kuramoto"):
            raise ValueError(f"unknown system {self.kind!r}")

    def rhs(self, x):
        if self.kind == "lorenz":
            return lorenz_rhs(x, **self.params)
        return kuramoto_rhs(x, self.params["omega"], self.params["K"])

    __call__ = rhs


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states ``t0, t0 + dt, ...``.

    ``states`` has shape ``(steps + 1, n)``, or ``(steps + 1, B, n)`` for a
    batch of ``B`` trajectories integrated together.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.states.shape[0])

    def member(self, b) -> "Trajectory":
        """Trajectory ``b`` of a batch."""
        return Trajectory(self.states[:, b, :], self.dt, self.t0)

    def to_csv(self, path) -> None:
        """Write ``t,x1,...,xn`` rows with full double precision."""
        if self.states.ndim != 2:
            raise DimensionError("only a single trajectory can be written to CSV")
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(data[:, 1:], dt, float(t[0]))


def euler_integrate(rhs, x0, dt: float, steps: int, t0: float = 0.0) -> Trajectory:
    """Explicit Euler: ``x_{k+1} = x_k + rhs(x_k) * dt``.

    ``rhs`` is a callable (a :class:`SystemSpec` works) mapping a state array
    to its derivative.  ``x0`` may be a batch of shape ``(B, n)``.

    Raises
    ------
    DivergenceError
        When a state stops being finite.  ``exc.step`` is the index of the
        first bad state and ``exc.states`` holds the finite prefix.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    x = np.array(x0, dtype=float)
    out = np.empty((steps + 1,) + x.shape)
    out[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            x = x + rhs(x) * dt
            if not np.isfinite(x).all():
                raise DivergenceError(
                    f"state became non-finite at step {k + 1}", step=k + 1, states=out[: k + 1].copy()
                )
            out[k + 1] = x
    return Trajectory(out, float(dt), float(t0))


def assemble_derivative_data(traj: Trajectory, spec: SystemSpec | None = None, source: str = "exact"):
    """Training pairs ``(states, targets)`` from a single trajectory.

    ``source="exact"`` evaluates ``spec`` at every state (``steps + 1``
    rows); ``"fd"`` uses forward differences ``(x_{k+1} - x_k) / dt``
    (``steps`` rows).
    """
    X = traj.states
    if X.ndim != 2:
        raise DimensionError("expected a single trajectory")
    if source == "exact":
        if spec is None:
            raise ValueError("exact derivatives need the system spec")
        return X.copy(), spec.rhs(X)
    if source in ("fd", "finite-difference"):
        if X.shape[0] < 2:
            raise ValueError("finite differences need at least two states")
        return X[:-1].copy(), (X[1:] - X[:-1]) / traj.dt
    raise ValueError(f"unknown derivative source {source!r}")


def model_rhs(M):
    """Derivative callable backed by a fitted regression model."""
    from .regression import predict, predict_many

    def f(x):
        if x.ndim == 1:
            return predict(M, x)
        return predict_many(M, x)

    return f


def rollout(M, x0, dt: float, steps: int) -> Trajectory:
    """Integrate the learned vector field of ``M`` from ``x0`` (single or batched)."""
    x0 = np.asarray(x0, dtype=float)
    if M.output_dim != x0.shape[-1]:
        raise DimensionError(
            f"model has {M.output_dim} outputs but the state has {x0.shape[-1]} components"
        )
    return euler_integrate(model_rhs(M), x0, dt, steps)
