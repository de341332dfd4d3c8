"""Test-corpus generators for sequences and functional values.

Every generated sequence carries a ``source`` string that records the
descriptor and seed, so a file written by ``lacuna gen`` says how to rebuild it.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import VectorSequence
from .errors import BadGeneratorParam
from .lacunary import IndexSet

SEQUENCE_KINDS = ("const", "inv", "alt", "geom", "noise", "char:<set>", "spike:<set>")
FUNCTIONAL_KINDS = ("harmonic", "ones", "geometric", "alt-harmonic")


def sequence(
    kind: str,
    n: int,
    *,
    value: float = 0.0,
    ratio: float = 0.5,
    dim: int = 1,
    seed: int = 0,
) -> VectorSequence:
    """Generate ``x_1..x_n``.

    ``const``: every term ``value``.  ``inv``: ``value + 1/k``.
    ``alt``: ``(-1)^k``.  ``geom``: ``value + ratio^k``.
    ``noise``: ``value + g_k / k`` with seeded standard normal ``g_k``.
    ``char:SET``: indicator of an index set.  ``spike:SET``: ``k`` on the set, 0 elsewhere.
    Scalar kinds are broadcast to ``dim`` coordinates except ``noise``,
    which draws independent coordinates.
    """
    if n < 1:
        raise BadGeneratorParam(f"n must be >= 1, got {n}")
    if dim < 1:
        raise BadGeneratorParam(f"dim must be >= 1, got {dim}")
    k = np.arange(1, n + 1, dtype=float)
    if kind == "const":
        x = np.full(n, float(value))
        source = f"const(value={value!r})"
    elif kind == "inv":
        x = value + 1.0 / k
        source = f"inv(value={value!r})"
    elif kind == "alt":
        x = np.where(np.arange(1, n + 1) % 2 == 0, 1.0, -1.0)
        source = "alt"
    elif kind == "geom":
        if not 0 < abs(ratio) < 1:
            raise BadGeneratorParam(f"geometric decay needs 0 < |ratio| < 1, got {ratio}")
        x = value + np.power(float(ratio), k)
        source = f"geom(ratio={ratio!r}, value={value!r})"
    elif kind == "noise":
        rng = np.random.default_rng(seed)
        vals = value + rng.standard_normal((n, dim)) / k[:, None]
        return VectorSequence(vals, source=f"noise(value={value!r}, dim={dim}, seed={seed})")
    elif kind.startswith("char:") or kind.startswith("spike:"):
        prefix, desc = kind.split(":", 1)
        K = IndexSet.parse(desc)
        ind = K.indicator(n)
        x = ind if prefix == "char" else ind * k
        source = f"{prefix}:{K.descriptor}"
    else:
        raise BadGeneratorParam(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")
    vals = np.repeat(x.reshape(-1, 1), dim, axis=1)
    if dim > 1:
        source += f" dim={dim}"
    return VectorSequence(vals, source=source)


def functional_values(kind: str, n: int, exact: bool = False):
    """Values ``f(x_1), ..., f(x_n)`` of a functional along a series.

    With ``exact`` the values are Fractions (a lazily indexed sequence),
    otherwise a float array.
    """
    if n < 1:
        raise BadGeneratorParam(f"n must be >= 1, got {n}")
    if kind not in FUNCTIONAL_KINDS:
        raise BadGeneratorParam(f"unknown functional {kind!r}; expected one of {FUNCTIONAL_KINDS}")
    i = np.arange(1, n + 1, dtype=float)
    if kind == "harmonic":
        floats = 1.0 / i
        term = lambda j: Fraction(1, j)
    elif kind == "ones":
        floats = np.ones(n)
        term = lambda j: Fraction(1)
    elif kind == "geometric":
        floats = np.power(0.5, i)
        term = lambda j: Fraction(1, 2**j)
    else:
        floats = np.where(np.arange(1, n + 1) % 2 == 0, 1.0, -1.0) / i
        term = lambda j: Fraction((-1) ** j, j)
    if not exact:
        return floats
    return _LazyValues(n, term, floats)


class _LazyValues:
    """Sequence of exact values built on access, with a float view for screening."""

    def __init__(self, n, term, floats):
        self._n = n
        self._term = term
        self.floats = floats

    def __len__(self):
        return self._n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self._term(j + 1) for j in range(*i.indices(self._n))]
        if not -self._n <= i < self._n:
            raise IndexError(i)
        return self._term((i % self._n) + 1)

    def __iter__(self):
        return (self._term(j) for j in range(1, self._n + 1))


__all__ = ["sequence", "functional_values", "SEQUENCE_KINDS", "FUNCTIONAL_KINDS"]
