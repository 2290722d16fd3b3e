"""One-dimensional bases and their assembly into m-tensor cores.

A :class:`FeatureMapSet` lists ``(axis, basis)`` pairs, one per core.  The
same input axis may feed several cores (the Kuramoto model uses a sine core
and a cosine core per phase).  Inputs are multiplied by ``scale`` before any
basis is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import MTensor, Rank1Row
from .errors import DimensionError

#: Dimension from which :func:`default_scale` shrinks the inputs.
SCALED_FROM_DIM = 10
HIGH_DIM_SCALE = 1e-7


@dataclass(frozen=True)
class Basis1D:
    """A vector of ``p`` scalar functions.

    Build instances with :meth:`monomial`, :meth:`trig` or :meth:`custom`.
    ``kind`` is ``"monomial"``, ``"sin"``, ``"cos"`` or ``"custom"``.
    For the trigonometric kinds the basis is ``[1, w*sin(x)]`` or
    ``[1, w*cos(x)]`` where ``w`` is ``weight``.
    """

    kind: str
    degree: int = 0
    weight: float = 1.0
    funcs: tuple = ()

    @classmethod
    def monomial(cls, degree: int) -> "Basis1D":
        if degree < 0:
            raise ValueError("degree must be non-negative")
        return cls("monomial", degree=int(degree))

    @classmethod
    def trig(cls, which: str, weight: float = 1.0) -> "Basis1D":
        if which not in ("sin", "cos"):
            raise ValueError(f"trig basis is 'sin' or 'cos', not {which!r}")
        return cls(which, weight=float(weight))

    @classmethod
    def custom(cls, funcs: Sequence[Callable[[np.ndarray], np.ndarray]]) -> "Basis1D":
        if not funcs:
            raise ValueError("a custom basis needs at least one function")
        return cls("custom", funcs=tuple(funcs))

    @property
    def size(self) -> int:
        if self.kind == "monomial":
            return self.degree + 1
        if self.kind in ("sin", "cos"):
            return 2
        return len(self.funcs)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at an array of points; output has a trailing axis of length ``size``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "monomial":
            return x[..., None] ** np.arange(self.degree + 1)
        if self.kind == "sin":
            return np.stack([np.ones_like(x), self.weight * np.sin(x)], axis=-1)
        if self.kind == "cos":
            return np.stack([np.ones_like(x), self.weight * np.cos(x)], axis=-1)
        cols = [np.broadcast_to(np.asarray(f(x), dtype=float), x.shape) for f in self.funcs]
        return np.stack(cols, axis=-1)

    def spec(self) -> str:
        """Textual form understood by :func:`parse_basis`."""
        if self.kind == "monomial":
            return f"monomial:{self.degree}"
        if self.kind in ("sin", "cos"):
            return self.kind if self.weight == 1.0 else f"{self.kind}:{self.weight!r}"
        raise ValueError("custom bases have no textual form")


def eval_basis(b: Basis1D, x: float, scale: float = 1.0) -> np.ndarray:
    """``[psi_1(scale*x), ..., psi_p(scale*x)]``."""
    return b(scale * float(x))


def parse_basis(text: str) -> list[Basis1D]:
    """Parse one basis token.

    ``monomial:D``, ``sin[:W]``, ``cos[:W]`` give one basis; ``trig[:W]``
    expands to the ``sin`` and ``cos`` pair.
    """
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    try:
        if name in ("monomial", "poly"):
            return [Basis1D.monomial(int(arg))]
        if name in ("sin", "cos"):
            return [Basis1D.trig(name, float(arg) if arg else 1.0)]
        if name == "trig":
            w = float(arg) if arg else 1.0
            return [Basis1D.trig("sin", w), Basis1D.trig("cos", w)]
    except ValueError as exc:
        raise ValueError(f"bad basis parameter in {text!r}: {exc}") from None
    raise ValueError(f"unknown basis {text!r}; expected monomial:D, sin, cos or trig")


class FeatureMapSet:
    """Ordered ``(axis, basis)`` entries plus an input scale.

    Parameters
    ----------
    entries : sequence of (int, Basis1D)
        One entry per core of the resulting m-tensor.
    scale : float
        Positive multiplier applied to every input before evaluation.
    """

    def __init__(self, entries, scale: float = 1.0):
        entries = tuple((int(a), b) for a, b in entries)
        if not entries:
            raise ValueError("feature map set needs at least one entry")
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.entries = entries
        self.scale = float(scale)
        # group entries sharing a basis so evaluation is vectorized per group
        groups: dict = {}
        for pos, (axis, b) in enumerate(entries):
            groups.setdefault(b, ([], []))
            groups[b][0].append(pos)
            groups[b][1].append(axis)
        self._groups = [(b, np.array(p), np.array(a)) for b, (p, a) in groups.items()]
        self._max_axis = max(a for a, _ in entries)

    @classmethod
    def per_axis(cls, n: int, bases, scale: float = 1.0) -> "FeatureMapSet":
        """Apply each basis in ``bases`` to every axis, axis-major.

        With ``bases = [sin, cos]`` the cores are ordered
        ``sin(x_1), cos(x_1), sin(x_2), cos(x_2), ...``.
        """
        if isinstance(bases, Basis1D):
            bases = [bases]
        return cls([(i, b) for i in range(n) for b in bases], scale)

    @classmethod
    def from_spec(cls, n: int, spec: str, scale: float = 1.0) -> "FeatureMapSet":
        """Build from a comma-separated token list such as ``"trig:0.05"``."""
        bases = [b for tok in spec.split(",") if tok.strip() for b in parse_basis(tok)]
        return cls.per_axis(n, bases, scale)

    @property
    def cdims(self):
        return tuple(b.size for _, b in self.entries)

    @property
    def n_inputs(self) -> int:
        """Minimum length of an input vector."""
        return self._max_axis + 1

    def _check_width(self, width):
        if width < self.n_inputs:
            raise IndexError(
                f"inputs have {width} coordinates but the maps use axis {self._max_axis}"
            )

    def evaluate(self, samples) -> list:
        """Per-entry arrays of shape ``(m, p_j)`` for an ``(m, n)`` sample matrix."""
        X = np.atleast_2d(np.asarray(samples, dtype=float))
        self._check_width(X.shape[1])
        Xs = self.scale * X
        out = [None] * len(self.entries)
        for b, pos, axes in self._groups:
            vals = b(Xs[:, axes])  # (m, len(axes), p)
            for q, j in enumerate(pos):
                out[j] = vals[:, q, :]
        return out

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "entries": [{"axis": a, "basis": b.spec()} for a, b in self.entries],
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureMapSet":
        entries = []
        for e in d["entries"]:
            (b,) = parse_basis(e["basis"])
            entries.append((e["axis"], b))
        return cls(entries, d["scale"])

    def __eq__(self, other):
        return (
            isinstance(other, FeatureMapSet)
            and self.entries == other.entries
            and self.scale == other.scale
        )

    def __hash__(self):
        return hash((self.entries, self.scale))

    def __repr__(self):
        return f"FeatureMapSet({len(self.entries)} entries, cdims={self.cdims}, scale={self.scale:g})"


def build_cores(samples, maps: FeatureMapSet) -> MTensor:
    """m-tensor whose row ``k`` is the feature row of ``samples[k]``."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"samples must be an (m, n) matrix, got shape {X.shape}")
    if X.shape[0] < 1:
        raise DimensionError("need at least one sample")
    return MTensor(maps.evaluate(X))


def feature_row(x, maps: FeatureMapSet) -> Rank1Row:
    x = np.asarray(x, dtype=float).ravel()
    return Rank1Row([c[0] for c in maps.evaluate(x[None, :])])


def default_scale(n: int) -> float:
    """Input scale used for an ``n``-dimensional problem (1 below 10, else 1e-7)."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return 1.0 if n < SCALED_FROM_DIM else HIGH_DIM_SCALE
