"""Finite-dimensional vectors, norms, functionals and sequence containers.

Vectors are plain 1-D float64 numpy arrays; a sequence of ``n`` vectors in
R^d is stored as a read-only ``(n, d)`` array.  Every user-facing accessor
speaks 1-indexed ``k`` (entry ``k`` is ``x_k``); ``k = 0`` is never a
sequence index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, LacunaError


class NormKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, value: "NormKind | str") -> "NormKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise LacunaError(f"unknown norm {value!r}; expected l1, l2 or linf") from None

    @property
    def dual(self) -> "NormKind":
        return {NormKind.L1: NormKind.LINF, NormKind.LINF: NormKind.L1, NormKind.L2: NormKind.L2}[self]


def as_vector(coords: Any) -> np.ndarray:
    """Validate and freeze ``coords`` as a finite 1-D float vector."""
    v = np.array(coords, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise LacunaError(f"a vector needs at least one coordinate, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise LacunaError("vector coordinates must be finite")
    v.flags.writeable = False
    return v


def norm(v: np.ndarray, kind: NormKind | str = NormKind.L2) -> float:
    return float(norms(np.asarray(v, dtype=float).reshape(1, -1), kind)[0])


def norms(values: np.ndarray, kind: NormKind | str = NormKind.L2) -> np.ndarray:
    """Row-wise norms of an ``(n, d)`` array."""
    kind = NormKind.parse(kind)
    values = np.asarray(values, dtype=float)
    if kind is NormKind.L1:
        return np.abs(values).sum(axis=1)
    if kind is NormKind.LINF:
        return np.abs(values).max(axis=1)
    return np.sqrt(np.einsum("ij,ij->i", values, values))


@dataclass(frozen=True)
class Functional:
    """Linear functional ``f(x) = <weights, x>`` on R^d."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", as_vector(self.weights))

    @property
    def dim(self) -> int:
        return self.weights.size

    def __call__(self, v) -> float:
        return apply(self, v)

    def dual_norm(self, kind: NormKind | str) -> float:
        """Operator norm of ``f`` when R^d carries the ``kind`` norm."""
        return norm(self.weights, NormKind.parse(kind).dual)

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.dim:
            raise DimensionMismatch(f"functional of dimension {self.dim} applied to shape {values.shape}")
        return values @ self.weights

    @classmethod
    def coordinate(cls, j: int, dim: int) -> "Functional":
        """The coordinate functional ``e_j*`` (``j`` is 1-indexed)."""
        w = np.zeros(dim)
        w[j - 1] = 1.0
        return cls(w)


def apply(f: Functional, v) -> float:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != f.dim:
        raise DimensionMismatch(f"functional of dimension {f.dim} applied to vector of dimension {v.size}")
    return float(np.dot(f.weights, v))


@dataclass(frozen=True)
class VectorSequence:
    """Finite prefix ``x_1, ..., x_n`` of a sequence in R^d."""

    values: np.ndarray
    source: str | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        frozen = isinstance(self.values, np.ndarray) and not vals.flags.writeable
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2 or vals.shape[0] == 0 or vals.shape[1] == 0:
            raise LacunaError(f"sequence values must be a non-empty (n, d) array, got shape {vals.shape}")
        if not frozen:
            # copied once, then shared by read-only views (prefix, slicing)
            vals = np.array(vals)
            if not np.all(np.isfinite(vals)):
                raise LacunaError("sequence values must be finite")
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def at(self, k: int) -> np.ndarray:
        if not 1 <= k <= len(self):
            raise IndexError(f"k={k} outside 1..{len(self)}")
        return self.values[k - 1]

    def prefix(self, n: int) -> "VectorSequence":
        return VectorSequence(self.values[:n], self.source)

    def deviations(self, limit, kind: NormKind | str) -> np.ndarray:
        """``||x_k - limit||`` for k = 1..n."""
        limit = np.asarray(limit, dtype=float).reshape(-1)
        if limit.size != self.dim:
            raise DimensionMismatch(f"limit of dimension {limit.size} for a sequence in R^{self.dim}")
        return norms(self.values - limit, kind)

    @classmethod
    def from_scalars(cls, xs: Iterable[float], source: str | None = None) -> "VectorSequence":
        return cls(np.fromiter(xs, dtype=float).reshape(-1, 1), source)

    @classmethod
    def from_json(cls, obj: dict) -> "VectorSequence":
        values = obj["values"]
        seq = cls(values, obj.get("source"))
        if "dim" in obj and int(obj["dim"]) != seq.dim:
            raise DimensionMismatch(f"declared dim {obj['dim']} but entries have dimension {seq.dim}")
        return seq

    def to_json(self) -> dict:
        out: dict[str, Any] = {"dim": self.dim, "values": self.values.tolist()}
        if self.source is not None:
            out["source"] = self.source
        return out


@dataclass(frozen=True)
class StabilizationPolicy:
    """Finite-horizon stand-in for a limit over blocks.

    ``stabilized`` tests the spread of the last ``window`` values;
    ``vanishes`` tests that each of the last ``window`` values is below ``tol``.
    Traces shorter than the window are judged on all their values.
    """

    window: int = 5
    tol: float = 1e-4

    def __post_init__(self):
        if self.window < 1:
            raise LacunaError("policy window must be at least 1")
        if not self.tol > 0:
            raise LacunaError("policy tolerance must be positive")

    def tail(self, values: Sequence[float]) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        return arr[-self.window:]

    def stabilized(self, values: Sequence[float]) -> bool:
        t = self.tail(values)
        return t.size > 0 and bool(t.max() - t.min() < self.tol)

    def vanishes(self, values: Sequence[float]) -> bool:
        t = self.tail(values)
        return t.size > 0 and bool(np.all(t < self.tol))

    def to_json(self) -> dict:
        return {"window": self.window, "tol": self.tol}


__all__ = [
    "NormKind",
    "Functional",
    "VectorSequence",
    "StabilizationPolicy",
    "as_vector",
    "norm",
    "norms",
    "apply",
]
