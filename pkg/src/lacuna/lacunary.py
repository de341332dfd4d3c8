"""Lacunary cutoff sequences, their blocks, and theta-density of index sets."""

from __future__ import annotations

import bisect
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import StabilizationPolicy
from .errors import (
    BadGeneratorParam,
    LacunaError,
    LacunaryWarning,
    NotStartingAtZero,
    NotStrictlyIncreasing,
    OutOfHorizon,
)

DENSITY_POLICY = StabilizationPolicy(window=5, tol=1e-6)


@dataclass(frozen=True)
class LacunarySequence:
    """Cutoffs ``k_0 = 0 < k_1 < ... < k_R``.

    Block ``I_r = (k_{r-1}, k_r]`` has length ``h[r-1]``; ``q[r-1]`` is
    ``k_r / k_{r-1}`` and ``q[0]`` is ``None`` because ``k_0 = 0``.
    """

    cutoffs: tuple[int, ...]
    source: str | None = field(default=None, compare=False)

    @property
    def blocks(self) -> int:
        return len(self.cutoffs) - 1

    @property
    def horizon(self) -> int:
        return self.cutoffs[-1]

    @property
    def h(self) -> tuple[int, ...]:
        c = self.cutoffs
        return tuple(c[r] - c[r - 1] for r in range(1, len(c)))

    @property
    def q(self) -> tuple[float | None, ...]:
        c = self.cutoffs
        return (None,) + tuple(c[r] / c[r - 1] for r in range(2, len(c)))

    @property
    def starts(self) -> np.ndarray:
        """0-based array offsets of the first index of every block."""
        return np.asarray(self.cutoffs[:-1], dtype=np.int64)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(np.asarray(self.cutoffs, dtype=np.int64))

    def block(self, r: int) -> range:
        """Indices ``k`` of ``I_r`` (1-indexed ``r`` and ``k``)."""
        if not 1 <= r <= self.blocks:
            raise OutOfHorizon(f"block {r} outside 1..{self.blocks}")
        return range(self.cutoffs[r - 1] + 1, self.cutoffs[r] + 1)

    def truncate(self, horizon: int) -> "LacunarySequence":
        """Largest prefix whose last cutoff does not exceed ``horizon``."""
        keep = bisect.bisect_right(self.cutoffs, horizon)
        if keep < 2:
            raise OutOfHorizon(f"horizon {horizon} shorter than the first block end {self.cutoffs[1]}")
        return LacunarySequence(self.cutoffs[:keep], self.source)

    def to_json(self) -> dict:
        out: dict = {"cutoffs": list(self.cutoffs)}
        if self.source is not None:
            out["source"] = self.source
        return out


def make_lacunary(cutoffs: Sequence[int], source: str | None = None) -> LacunarySequence:
    cut = tuple(int(k) for k in cutoffs)
    if len(cut) < 2:
        raise LacunaError("a lacunary sequence needs k_0 = 0 and at least one more cutoff")
    if cut[0] != 0:
        raise NotStartingAtZero(f"k_0 must be 0, got {cut[0]}")
    for a, b in zip(cut, cut[1:]):
        if b <= a:
            raise NotStrictlyIncreasing(f"cutoffs must strictly increase: {a} then {b}")
    theta = LacunarySequence(cut, source)
    h = theta.h
    # h_r -> infinity cannot be decided on a prefix; only flag a prefix with no growth at all.
    if h[-1] <= h[0]:
        if len(set(h)) == 1:
            msg = f"h_r constant = {h[0]}, h_r->inf implausible"
        else:
            msg = f"h_R = {h[-1]} <= h_1 = {h[0]}, h_r->inf implausible"
        warnings.warn(msg, LacunaryWarning, stacklevel=2)
    return theta


def _ceil_power(base: Fraction, r: int) -> int:
    return math.ceil(base**r)


def isqrt_array(n) -> np.ndarray:
    """Exact elementwise integer square root for nonnegative int64 input."""
    n = np.asarray(n, dtype=np.int64)
    root = np.floor(np.sqrt(n.astype(float))).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    root -= (root * root > n).astype(np.int64)
    root += ((root + 1) * (root + 1) <= n).astype(np.int64)
    return root


def generate_lacunary(
    kind: str,
    blocks: int | None = None,
    *,
    ratio: float | None = None,
    alpha: float | None = None,
    cutoffs: Sequence[int] | None = None,
    horizon: int | None = None,
) -> LacunarySequence:
    """Build a cutoff sequence from a descriptor.

    ``kind`` is ``"geometric"`` (``k_r = ceil(ratio**r)``, duplicates dropped),
    ``"power"`` (``k_r = ceil(r**alpha)``) or ``"explicit"``.  Give either
    ``blocks`` (number of blocks ``R``) or ``horizon`` (use as many blocks as
    fit with ``k_R <= horizon``).
    """
    kind = {"geom": "geometric", "pow": "power"}.get(kind, kind)
    if kind == "explicit":
        if cutoffs is None:
            raise BadGeneratorParam("explicit theta needs cutoffs")
        theta = make_lacunary(cutoffs, source="explicit")
        return theta.truncate(horizon) if horizon is not None else theta
    if (blocks is None) == (horizon is None):
        raise BadGeneratorParam("give exactly one of blocks or horizon")
    if blocks is not None and blocks < 1:
        raise BadGeneratorParam(f"blocks must be >= 1, got {blocks}")

    if kind == "geometric":
        if ratio is None or not ratio > 1:
            raise BadGeneratorParam(f"geometric theta needs ratio > 1, got {ratio}")
        # exact rational power of the float ratio, so ceil() is free of rounding
        base = Fraction(ratio)
        term = lambda r: _ceil_power(base, r)
        source = f"geometric(ratio={ratio})"
    elif kind == "power":
        if alpha is None or not alpha > 1:
            raise BadGeneratorParam(f"power theta needs alpha > 1, got {alpha}")
        if float(alpha).is_integer():
            a = int(alpha)
            term = lambda r: r**a
        else:
            term = lambda r: math.ceil(r**alpha)
        source = f"power(alpha={alpha})"
    else:
        raise BadGeneratorParam(f"unknown theta generator {kind!r}")

    cut = [0]
    r = 0
    while True:
        r += 1
        k = term(r)
        if k <= cut[-1]:
            continue
        if horizon is not None and k > horizon:
            break
        cut.append(k)
        if blocks is not None and len(cut) - 1 == blocks:
            break
    if len(cut) < 2:
        raise BadGeneratorParam(f"horizon {horizon} too short for a single block")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LacunaryWarning)
        return make_lacunary(cut, source=source)


def theta_from_json(obj: dict | str) -> LacunarySequence:
    """Parse ``{"cutoffs": [...]}`` or ``{"generator": "geom", "ratio": 2, "blocks": 20}``.

    A string is read as inline JSON, or as the compact form ``geom:2:12`` /
    ``power:2:30`` (generator, parameter, blocks).
    """
    if isinstance(obj, str):
        text = obj.strip()
        if text.startswith("{"):
            obj = json.loads(text)
        else:
            parts = text.split(":")
            if len(parts) != 3:
                raise LacunaError(f"cannot parse theta spec {obj!r}")
            gen, param, blocks = parts
            key = "alpha" if gen.startswith("pow") else "ratio"
            obj = {"generator": gen, key: float(param), "blocks": int(blocks)}
    if "cutoffs" in obj:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LacunaryWarning)
            return make_lacunary(obj["cutoffs"], source=obj.get("source"))
    gen = obj.get("generator")
    if gen is None:
        raise LacunaError("theta JSON needs 'cutoffs' or 'generator'")
    return generate_lacunary(
        gen,
        obj.get("blocks"),
        ratio=obj.get("ratio"),
        alpha=obj.get("alpha"),
        horizon=obj.get("horizon"),
    )


def block_of(theta: LacunarySequence, k: int) -> int:
    """The unique ``r`` with ``k_{r-1} < k <= k_r``."""
    if k < 1:
        raise OutOfHorizon(f"k must be >= 1, got {k}")
    if k > theta.horizon:
        raise OutOfHorizon(f"k={k} beyond k_R={theta.horizon}")
    return bisect.bisect_left(theta.cutoffs, k)


# --------------------------------------------------------------------------
# index sets


@dataclass(frozen=True)
class IndexSet:
    """A subset of the positive integers, decidable up to any horizon.

    ``kind`` is one of ``even``, ``odd``, ``squares``, ``multiples`` (with
    ``param``) or ``explicit`` (with sorted ``members``).
    """

    kind: str
    param: int | None = None
    members: tuple[int, ...] = ()

    @classmethod
    def parse(cls, descriptor: str) -> "IndexSet":
        d = descriptor.strip()
        if d in ("even", "odd", "squares"):
            return cls(d)
        m = re.fullmatch(r"multiples:(\d+)", d)
        if m:
            step = int(m.group(1))
            if step < 1:
                raise LacunaError("multiples:m needs m >= 1")
            return cls("multiples", step)
        if d.startswith("explicit:"):
            return cls.explicit(json.loads(d[len("explicit:"):]))
        raise LacunaError(f"unknown index set descriptor {descriptor!r}")

    @classmethod
    def explicit(cls, members) -> "IndexSet":
        ks = sorted({int(k) for k in members})
        if ks and ks[0] < 1:
            raise LacunaError("index sets contain positive integers only")
        return cls("explicit", None, tuple(ks))

    @property
    def descriptor(self) -> str:
        if self.kind == "multiples":
            return f"multiples:{self.param}"
        if self.kind == "explicit":
            return "explicit:" + json.dumps(list(self.members))
        return self.kind

    def contains(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if self.kind == "even":
            return ks % 2 == 0
        if self.kind == "odd":
            return ks % 2 == 1
        if self.kind == "multiples":
            return ks % self.param == 0
        if self.kind == "squares":
            roots = isqrt_array(ks)
            return roots * roots == ks
        return np.isin(ks, np.asarray(self.members, dtype=np.int64))

    def count_upto(self, n) -> np.ndarray:
        """``card(K intersect [1, n])`` for each entry of ``n``, exactly."""
        n = np.asarray(n, dtype=np.int64)
        if self.kind == "even":
            return n // 2
        if self.kind == "odd":
            return (n + 1) // 2
        if self.kind == "multiples":
            return n // self.param
        if self.kind == "squares":
            return isqrt_array(n)
        return np.searchsorted(np.asarray(self.members, dtype=np.int64), n, side="right").astype(np.int64)

    def indicator(self, n: int) -> np.ndarray:
        """0/1 array of length ``n``; entry ``k-1`` is ``1[k in K]``."""
        return self.contains(np.arange(1, n + 1)).astype(float)


@dataclass(frozen=True)
class DensityTrace:
    counts: np.ndarray
    fractions: np.ndarray
    estimate: float | None
    stabilized: bool
    policy: StabilizationPolicy
    cutoffs: tuple[int, ...]
    index_set: str

    def to_json(self) -> dict:
        return {
            "index_set": self.index_set,
            "cutoffs": list(self.cutoffs),
            "counts": self.counts.tolist(),
            "fractions": self.fractions.tolist(),
            "estimate": self.estimate if self.stabilized else "did-not-stabilize",
            "tail_mean": self.estimate,
            "stabilized": self.stabilized,
            "policy": self.policy.to_json(),
        }


def block_counts(theta: LacunarySequence, K: IndexSet) -> np.ndarray:
    upto = K.count_upto(np.asarray(theta.cutoffs, dtype=np.int64))
    return np.diff(upto)


def theta_density(
    theta: LacunarySequence, K: IndexSet | str, policy: StabilizationPolicy = DENSITY_POLICY
) -> DensityTrace:
    """Per-block fractions of ``K`` and a tail estimate of its theta-density.

    The estimate is the mean of the last ``policy.window`` fractions; the
    trace counts as stabilized when their spread is below ``policy.tol``.
    ``estimate`` holds the tail mean either way; serialized output reports
    ``"did-not-stabilize"`` in its place when the policy fails.
    """
    if isinstance(K, str):
        K = IndexSet.parse(K)
    counts = block_counts(theta, K)
    fractions = counts / theta.lengths
    tail = policy.tail(fractions)
    return DensityTrace(
        counts=counts,
        fractions=fractions,
        estimate=float(tail.mean()),
        stabilized=policy.stabilized(fractions),
        policy=policy,
        cutoffs=theta.cutoffs,
        index_set=K.descriptor,
    )


__all__ = [
    "LacunarySequence",
    "IndexSet",
    "DensityTrace",
    "DENSITY_POLICY",
    "make_lacunary",
    "generate_lacunary",
    "theta_from_json",
    "block_of",
    "block_counts",
    "theta_density",
]
