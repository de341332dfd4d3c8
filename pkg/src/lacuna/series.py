"""Series machinery: partial sums, the wuC supremum, summability-space membership,
and the divergent-coefficient construction.

For a series ``sum x_i`` with bounded coefficients ``(a_i)``, membership of
``(a_i)`` in the space attached to a method means the partial sums
``S_k = sum_{i<=k} a_i x_i`` are summable by that method.  All verdicts here
are relative to the working horizon.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .core import Functional, NormKind, StabilizationPolicy, VectorSequence, norms
from .errors import EmptyBattery, HorizonTooShort, LacunaError, NotMonotone, PrefixExhausted
from .lacunary import LacunarySequence
from .summability import (
    DEFAULT_GRID,
    DEFAULT_POLICY,
    EpsilonGrid,
    SummabilityVerdict,
    block_means,
    default_sampling,
    ntheta,
    sigma1,
    stheta,
    wp,
)

COEFF_CLASSES = ("c00", "c0", "linf")


@dataclass(frozen=True)
class SeriesContext:
    """Terms ``x_i``, coefficients ``a_i`` and the cached partial sums ``S_k``.

    A ``c00`` coefficient list shorter than the terms is padded with zeros.
    The declared class is checked at the horizon: ``linf`` needs
    ``|a_i| <= bound``, ``c0`` additionally needs the last ``policy.window``
    magnitudes below ``policy.tol``, ``c00`` needs that window exactly zero.
    """

    terms: VectorSequence
    coeffs: np.ndarray
    coeff_class: str = "linf"
    bound: float | None = None
    norm: NormKind = NormKind.L2
    policy: StabilizationPolicy = DEFAULT_POLICY
    partial: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.terms)
        a = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if self.coeff_class not in COEFF_CLASSES:
            raise LacunaError(f"coefficient class must be one of {COEFF_CLASSES}, got {self.coeff_class!r}")
        if a.size < n:
            if self.coeff_class != "c00":
                raise HorizonTooShort(f"{a.size} coefficients for {n} terms")
            a = np.concatenate([a, np.zeros(n - a.size)])
        a = a[:n].copy()
        if not np.all(np.isfinite(a)):
            raise LacunaError("coefficients must be finite")
        bound = float(np.abs(a).max()) if self.bound is None else float(self.bound)
        if np.abs(a).max() > bound:
            raise LacunaError(f"coefficients exceed the declared bound {bound}")
        tail = np.abs(self.policy.tail(a))
        if self.coeff_class == "c0" and not np.all(tail < self.policy.tol):
            raise LacunaError("coefficients declared c0 but the tail window is not below tol")
        if self.coeff_class == "c00" and np.any(tail != 0):
            raise LacunaError("coefficients declared c00 but the tail window is not zero")
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        # S_k = S_{k-1} + a_k x_k, accumulated sequentially
        S = np.cumsum(a[:, None] * self.terms.values, axis=0)
        S.flags.writeable = False
        object.__setattr__(self, "partial", S)

    @property
    def horizon(self) -> int:
        return len(self.terms)

    def partial_sequence(self) -> VectorSequence:
        return VectorSequence(self.partial, source="partial sums")

    @classmethod
    def from_json(cls, obj: dict, norm: NormKind | str = NormKind.L2) -> "SeriesContext":
        if "series" in obj:
            obj = obj["series"]
        terms = VectorSequence.from_json(obj["terms"])
        c = obj.get("coeffs", {"class": "linf", "values": [1.0] * len(terms)})
        return cls(terms, np.asarray(c["values"], dtype=float), c.get("class", "linf"), c.get("bound"), norm)

    def to_json(self) -> dict:
        return {
            "terms": self.terms.to_json(),
            "coeffs": {"class": self.coeff_class, "values": self.coeffs.tolist(), "bound": self.bound},
        }


def partial_sums(ctx: SeriesContext, upto: int | None = None) -> np.ndarray:
    """``S_1 .. S_upto`` as an ``(upto, d)`` array."""
    if upto is None:
        upto = ctx.horizon
    if not 0 <= upto <= ctx.horizon:
        raise HorizonTooShort(f"requested S_{upto} but the series has {ctx.horizon} terms")
    return ctx.partial[:upto]


# --------------------------------------------------------------------------
# weakly unconditionally Cauchy


@dataclass(frozen=True)
class WucReport:
    H_estimate: float
    method: str
    abs_sums: list[np.ndarray]
    sample_points: np.ndarray
    divergent: list[bool]
    signs: np.ndarray | None = None

    def to_json(self) -> dict:
        return {
            "H_estimate": self.H_estimate,
            "method": self.method,
            "abs_sums": [s.tolist() for s in self.abs_sums],
            "sample_points": self.sample_points.tolist(),
            "divergent": list(self.divergent),
        }


def wuc_supremum(terms: VectorSequence, norm: NormKind | str = NormKind.LINF) -> tuple[float, str, np.ndarray | None]:
    """``sup ||sum_{i<=n} a_i x_i||`` over ``|a_i| <= 1`` and ``n`` up to the horizon.

    Exact for the sup norm, where the coordinate functionals attain it and the
    value is ``max_j sum_i |x_i[j]|`` (summed with ``math.fsum``).  Other norms
    get the greedy lower bound that picks each sign to grow the running norm.
    """
    kind = NormKind.parse(norm)
    X = terms.values
    if kind is NormKind.LINF:
        return max(math.fsum(np.abs(X[:, j])) for j in range(X.shape[1])), "exact-linf", None
    running = np.zeros(X.shape[1])
    best = 0.0
    signs = np.empty(len(X))
    for i, x in enumerate(X):
        plus, minus = running + x, running - x
        n_plus, n_minus = norms(plus[None], kind)[0], norms(minus[None], kind)[0]
        if n_plus >= n_minus:
            running, signs[i], cur = plus, 1.0, n_plus
        else:
            running, signs[i], cur = minus, -1.0, n_minus
        best = max(best, cur)
    return float(best), "greedy", signs


def wuc_check(
    terms: VectorSequence,
    norm: NormKind | str = NormKind.LINF,
    battery: Sequence[Functional] = (),
    policy: StabilizationPolicy = DEFAULT_POLICY,
    sampling: LacunarySequence | None = None,
) -> WucReport:
    """Absolute-sum traces ``sum_{i<=n} |f(x_i)|`` for each functional, plus the supremum ``H``.

    Traces are sampled at the cutoffs of ``sampling`` (dyadic by default); a
    functional is flagged divergent when its trace fails to stabilize.
    """
    if not battery:
        raise EmptyBattery("wuc_check needs at least one functional")
    sampling = sampling if sampling is not None else default_sampling(len(terms))
    points = np.asarray(sampling.cutoffs[1:], dtype=np.int64)
    abs_sums = []
    flags = []
    for f in battery:
        trace = np.cumsum(np.abs(f.evaluate(terms.values)))[points - 1]
        abs_sums.append(trace)
        flags.append(not policy.stabilized(trace))
    H, method, signs = wuc_supremum(terms, norm)
    return WucReport(H, method, abs_sums, points, flags, signs)


# --------------------------------------------------------------------------
# membership


def membership(
    ctx: SeriesContext,
    method: str = "stheta",
    theta: LacunarySequence | None = None,
    grid: EpsilonGrid = DEFAULT_GRID,
    policy: StabilizationPolicy = DEFAULT_POLICY,
    p: float = 2.0,
) -> SummabilityVerdict:
    """Decide whether the coefficients belong to the space of ``method`` at the horizon."""
    S = ctx.partial_sequence()
    if theta is None:
        theta = default_sampling(len(S))
    elif theta.horizon > len(S):
        theta = theta.truncate(len(S))
    if method == "stheta":
        v = stheta(S, "auto", theta, ctx.norm, grid, policy)
    elif method == "ntheta":
        v = ntheta(S, "auto", theta, ctx.norm, policy)
    elif method == "wp":
        v = wp(S, "auto", p, ctx.norm, policy, theta)
    elif method == "sigma1":
        v = sigma1(S, "auto", ctx.norm, policy, theta)
    else:
        raise LacunaError(f"unknown membership method {method!r}")
    verdict = "member" if v.summable else "non-member"
    note = f"{verdict} at horizon {v.horizon} under policy window={policy.window} tol={policy.tol}"
    return SummabilityVerdict(
        method=f"membership:{v.method}",
        summable=v.summable,
        limit=v.limit,
        residuals=v.residuals,
        policy=v.policy,
        horizon=v.horizon,
        sample_points=v.sample_points,
        densities=v.densities,
        grid=v.grid,
        cutoffs=v.cutoffs,
        params={**v.params, "coeff_class": ctx.coeff_class},
        note=note,
    )


# --------------------------------------------------------------------------
# divergent-coefficient construction


def block_threshold(p: int) -> int:
    """Absolute mass block ``p`` must exceed: ``2^p * 2^p``."""
    return 2**p * 2**p


def _format_coeff(sign: int, p: int) -> str:
    return f"{'+' if sign > 0 else '-'}1/{2**p}"


@dataclass(frozen=True)
class CounterexampleResult:
    """Blocks ``m_1 < ... < m_P`` and coefficients ``a_i = +-2^{-p}`` on block ``p``.

    ``coeffs`` holds Fractions in exact mode and floats otherwise;
    ``block_sums[p-1]`` is ``sum_{i in block p} a_i f(x_i)``.  In float mode
    ``error_bounds`` bound the rounding error of each block sum.
    """

    blocks: tuple[int, ...]
    coeffs: tuple
    fvals: tuple
    block_sums: tuple
    mode: str
    error_bounds: tuple[float, ...] = ()

    @property
    def P(self) -> int:
        return len(self.blocks)

    def block_ranges(self) -> list[range]:
        starts = (0,) + self.blocks[:-1]
        return [range(s, e) for s, e in zip(starts, self.blocks)]

    def check(self) -> dict[str, bool]:
        """Re-verify the construction's postconditions in the arithmetic of ``mode``."""
        nonneg = all(a * f >= 0 for a, f in zip(self.coeffs, self.fvals))
        if self.mode == "exact":
            exceeds = all(s > 2**p for p, s in enumerate(self.block_sums, start=1))
            magnitudes = all(
                all(abs(self.coeffs[i]) == Fraction(1, 2**p) for i in rng)
                for p, rng in enumerate(self.block_ranges(), start=1)
            )
        else:
            exceeds = all(
                s - err > 2**p for p, (s, err) in enumerate(zip(self.block_sums, self.error_bounds), start=1)
            )
            magnitudes = all(
                all(abs(self.coeffs[i]) == 2.0**-p for i in rng) for p, rng in enumerate(self.block_ranges(), start=1)
            )
        return {"nonnegative_products": nonneg, "block_sums_exceed": exceeds, "block_magnitudes": magnitudes}

    def float_coeffs(self) -> np.ndarray:
        return np.array([float(a) for a in self.coeffs], dtype=float)

    def coeffs_rle(self) -> list[list]:
        runs: list[list] = []
        for p, rng in enumerate(self.block_ranges(), start=1):
            for i in rng:
                label = _format_coeff(1 if self.coeffs[i] > 0 else -1, p)
                if runs and runs[-1][0] == label:
                    runs[-1][1] += 1
                else:
                    runs.append([label, 1])
        return runs

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "blocks": list(self.blocks),
            "coeffs_rle": self.coeffs_rle(),
            "block_sums": [str(s) if self.mode == "exact" else repr(float(s)) for s in self.block_sums],
            "mode": self.mode,
            "checks": self.check(),
        }
        if self.mode == "float":
            out["error_bounds"] = [repr(e) for e in self.error_bounds]
        return out


def build_counterexample(fvals: Sequence, P: int, mode: str = "exact") -> CounterexampleResult:
    """Coefficients in c0 whose series against ``fvals`` has block sums ``> 2^p``.

    ``m_p`` is the smallest index with ``sum_{m_{p-1} < i <= m_p} |f(x_i)| > 2^p * 2^p``;
    on that block ``a_i = 2^{-p}`` if ``f(x_i) >= 0`` else ``-2^{-p}``.
    Raises :class:`PrefixExhausted` when the values run out first.
    """
    if P < 0:
        raise LacunaError("number of blocks must be nonnegative")
    if mode not in ("exact", "float"):
        raise LacunaError(f"mode must be 'exact' or 'float', got {mode!r}")
    n = len(fvals)
    if getattr(fvals, "floats", None) is not None:
        floats = np.asarray(fvals.floats, dtype=float)
    elif isinstance(fvals, np.ndarray) and fvals.dtype.kind == "f":
        floats = fvals.astype(float).reshape(-1)
    else:
        floats = np.array([float(v) for v in fvals], dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(np.abs(floats))])
    exact_vals: list[Fraction] = []

    def exact(i: int) -> Fraction:
        # converted on demand: only the scanned prefix is ever needed
        while len(exact_vals) <= i:
            exact_vals.append(Fraction(fvals[len(exact_vals)]))
        return exact_vals[i]

    blocks: list[int] = []
    coeffs: list = []
    sums: list = []
    errs: list[float] = []
    start = 0
    for p in range(1, P + 1):
        T = block_threshold(p)
        # float screen: a block that cannot complete even with generous rounding slack is exhausted
        remaining = cum[-1] - cum[start]
        slack = (n + 1) * sys.float_info.epsilon * cum[-1] + sys.float_info.min
        if remaining + slack <= T:
            raise PrefixExhausted(
                f"block {p} needs absolute mass > {T} but only {remaining:.6g} remains after index {start} "
                f"of {n}; completed {p - 1} block(s)"
            )
        if mode == "exact":
            acc = Fraction(0)
            end = None
            for i in range(start, n):
                acc += abs(exact(i))
                if acc > T:
                    end = i + 1
                    break
            if end is None:
                raise PrefixExhausted(f"block {p} not completed within {n} values")
            scale = Fraction(1, 2**p)
            for i in range(start, end):
                coeffs.append(scale if exact(i) >= 0 else -scale)
            sums.append(scale * acc)
        else:
            acc = 0.0
            end = None
            for i in range(start, n):
                acc += abs(floats[i])
                if acc > T:
                    end = i + 1
                    break
            if end is None:
                raise PrefixExhausted(f"block {p} not completed within {n} values")
            scale = 2.0**-p
            for i in range(start, end):
                coeffs.append(scale if floats[i] >= 0 else -scale)
            sums.append(scale * acc)
            errs.append((end - start) * sys.float_info.epsilon * scale * acc)
        blocks.append(end)
        start = end

    used = tuple(exact_vals[:start]) if mode == "exact" else tuple(float(v) for v in floats[:start])
    return CounterexampleResult(tuple(blocks), tuple(coeffs), used, tuple(sums), mode, tuple(errs))


# --------------------------------------------------------------------------
# divergence witnesses


@dataclass(frozen=True)
class DivergenceWitness:
    """Per-level first blocks from which the divergence pattern holds to the horizon.

    For ``stheta`` a level is a candidate limit ``L`` and its block is the
    first ``r0`` with ``|S_k - L| >= eps`` on every later block.  For
    ``ntheta`` (and the Cesaro methods) a level is a bound ``A`` and its
    block is the first ``r_A`` with every later block average above ``A``.
    """

    method: str
    entries: tuple[tuple[float, int | None], ...]
    found: bool
    cutoffs: tuple[int, ...]
    eps: float | None = None

    @property
    def note(self) -> str:
        return "witness found at horizon" if self.found else "no witness at horizon"

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "method": self.method,
            "found": self.found,
            "note": self.note,
            "entries": [[lvl, blk] for lvl, blk in self.entries],
            "horizon": self.cutoffs[-1],
        }
        if self.eps is not None:
            out["eps"] = self.eps
        return out


def _first_block_of_tail(mask: np.ndarray) -> int | None:
    """1-indexed first ``r`` such that ``mask[r-1:]`` is all True."""
    if mask.size == 0 or not mask[-1]:
        return None
    bad = np.flatnonzero(~mask)
    return int(bad[-1]) + 2 if bad.size else 1


def _ladder(top: float, base: float = 1.0) -> list[float]:
    out = [base]
    while out[-1] * 2 < top:
        out.append(out[-1] * 2)
    return out


def divergence_witness(
    S,
    theta: LacunarySequence,
    method: str = "stheta",
    limits: Sequence[float] = (0.0,),
    eps: float = 1.0,
    ladder: Sequence[float] | None = None,
    p: float = 1.0,
) -> DivergenceWitness:
    """Exhibit the divergence argument for a nondecreasing scalar sequence ``S_k``.

    ``found`` for ``stheta`` means some candidate limit is eventually missed
    by every index of every block.  For the averaging methods it means a
    ladder rung is first exceeded after block 1, i.e. the block averages grow
    within the horizon.
    """
    s = np.asarray(S.values[:, 0] if isinstance(S, VectorSequence) else S, dtype=float).reshape(-1)
    if len(s) < theta.horizon:
        raise HorizonTooShort(f"{len(s)} terms for k_R = {theta.horizon}")
    s = s[: theta.horizon]
    if np.any(np.diff(s) < 0):
        raise NotMonotone("divergence witness needs a nondecreasing sequence")

    if method == "stheta":
        entries = []
        for L in limits:
            hits = (np.abs(s - L) >= eps).astype(np.int64)
            full = np.add.reduceat(hits, theta.starts) == theta.lengths
            entries.append((float(L), _first_block_of_tail(full)))
        found = any(blk is not None for _, blk in entries)
        return DivergenceWitness("stheta", tuple(entries), found, theta.cutoffs, eps)

    if method == "ntheta":
        averages = block_means(np.abs(s), theta)
    elif method in ("wp", "sigma1"):
        q = 1.0 if method == "sigma1" else p
        points = np.asarray(theta.cutoffs[1:], dtype=np.int64)
        averages = np.cumsum(np.abs(s) ** q)[points - 1] / points
    else:
        raise LacunaError(f"unknown witness method {method!r}")
    rungs = list(ladder) if ladder is not None else _ladder(float(averages.max()))
    entries = [(float(A), _first_block_of_tail(averages > A)) for A in rungs]
    found = any(blk is not None and blk > 1 for _, blk in entries)
    return DivergenceWitness(method, tuple(entries), found, theta.cutoffs)


def run_counterexample(
    fvals: Sequence,
    P: int,
    mode: str = "exact",
    theta: LacunarySequence | None = None,
    grid: EpsilonGrid = DEFAULT_GRID,
    policy: StabilizationPolicy = DEFAULT_POLICY,
    methods: Sequence[tuple[str, float]] = (("stheta", 1.0), ("ntheta", 1.0), ("wp", 1.0), ("wp", 2.0)),
) -> dict[str, Any]:
    """Build the coefficients, form ``sum a_i f(x_i)`` and test it against each method.

    The series lives on the constructed prefix (``m_P`` terms); with ``P = 0``
    the coefficients are all zero over the supplied values.
    """
    result = build_counterexample(fvals, P, mode)
    if P > 0:
        n_used = result.blocks[-1]
        coeffs = result.float_coeffs()
        terms = np.array([float(v) for v in result.fvals])
    else:
        n_used = len(fvals)
        coeffs = np.zeros(n_used)
        terms = np.array([float(v) for v in fvals])
    ctx = SeriesContext(VectorSequence(terms.reshape(-1, 1), source="functional values"), coeffs, "linf")
    th = theta.truncate(n_used) if theta is not None else default_sampling(n_used)

    verdicts = []
    witnesses = []
    S = ctx.partial[:, 0]
    for method, p in methods:
        verdicts.append(membership(ctx, method, th, grid, policy, p))
        if P > 0:
            if method == "stheta":
                witnesses.append(divergence_witness(S, th, "stheta", limits=(0.0,), eps=grid.eps0))
            else:
                witnesses.append(divergence_witness(S, th, method, p=p))
    return {"result": result, "series": ctx, "theta": th, "verdicts": verdicts, "witnesses": witnesses}


__all__ = [
    "SeriesContext",
    "WucReport",
    "CounterexampleResult",
    "DivergenceWitness",
    "partial_sums",
    "wuc_supremum",
    "wuc_check",
    "membership",
    "block_threshold",
    "build_counterexample",
    "divergence_witness",
    "run_counterexample",
]
