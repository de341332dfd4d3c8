"""Finite-horizon evaluators for ordinary, |sigma_1|, w_p, N_theta and S_theta limits.

Each evaluator returns a :class:`SummabilityVerdict` carrying the per-block
trace it judged, the candidate limit, and the policy/grid used, so a verdict
can be re-derived from its own record.

Limits over blocks are replaced by a window rule (see
:class:`~lacuna.core.StabilizationPolicy`): a trace "tends to zero" when each
of its last ``window`` entries is below the tolerance.  The "for every
epsilon" quantifier of statistical convergence is sampled on a geometric
:class:`EpsilonGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import NormKind, StabilizationPolicy, VectorSequence, as_vector, norms
from .errors import BadExponent, HorizonTooShort, LacunaError
from .lacunary import LacunarySequence, generate_lacunary

DEFAULT_POLICY = StabilizationPolicy(window=5, tol=1e-4)


@dataclass(frozen=True)
class EpsilonGrid:
    """``eps_j = eps0 * ratio**j`` for ``j = 0..steps`` and a density threshold."""

    eps0: float = 1e-1
    ratio: float = 0.5
    steps: int = 6
    delta_tol: float = 1e-3

    def __post_init__(self):
        if not self.eps0 > 0 or not 0 < self.ratio < 1 or self.steps < 0:
            raise LacunaError("epsilon grid needs eps0 > 0, 0 < ratio < 1, steps >= 0")
        if not self.delta_tol > 0:
            raise LacunaError("delta_tol must be positive")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self.eps0 * self.ratio**j for j in range(self.steps + 1))

    @property
    def finest(self) -> float:
        return self.values[-1]

    def density_policy(self, policy: StabilizationPolicy) -> StabilizationPolicy:
        return StabilizationPolicy(window=policy.window, tol=self.delta_tol)

    def to_json(self) -> dict:
        return {"eps0": self.eps0, "ratio": self.ratio, "steps": self.steps, "delta_tol": self.delta_tol}


DEFAULT_GRID = EpsilonGrid()


@dataclass(frozen=True)
class SummabilityVerdict:
    method: str
    summable: bool
    limit: np.ndarray | None
    residuals: np.ndarray
    policy: StabilizationPolicy
    horizon: int
    sample_points: np.ndarray
    densities: dict[float, np.ndarray] | None = None
    grid: EpsilonGrid | None = None
    cutoffs: tuple[int, ...] | None = None
    params: dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if self.summable and self.limit is None:
            raise LacunaError("a summable verdict needs a candidate limit")

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1]) if len(self.residuals) else float("nan")

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "method": self.method,
            "summable": self.summable,
            "limit": None if self.limit is None else self.limit.tolist(),
            "residuals": np.asarray(self.residuals).tolist(),
            "sample_points": np.asarray(self.sample_points).tolist(),
            "policy": self.policy.to_json(),
            "horizon": self.horizon,
        }
        if self.params:
            out["params"] = dict(self.params)
        if self.cutoffs is not None:
            out["cutoffs"] = list(self.cutoffs)
        if self.grid is not None:
            out["grid"] = self.grid.to_json()
        if self.densities is not None:
            out["densities"] = {repr(eps): d.tolist() for eps, d in self.densities.items()}
        if self.note:
            out["note"] = self.note
        return out

    def trace_rows(self) -> tuple[list[str], list[list]]:
        """Header and rows for CSV export (``r, k_r, h_r, residual, density@eps...``)."""
        header = ["r", "k_r", "h_r", "residual"]
        eps_list = list(self.densities) if self.densities else []
        header += [f"density@{eps!r}" for eps in eps_list]
        points = np.asarray(self.sample_points)
        prev = np.concatenate([[0], points[:-1]])
        rows = []
        for i, k in enumerate(points):
            row = [i + 1, int(k), int(k - prev[i]), repr(float(self.residuals[i]))]
            row += [repr(float(self.densities[eps][i])) for eps in eps_list]
            rows.append(row)
        return header, rows


# --------------------------------------------------------------------------
# block helpers


def _require_horizon(x: VectorSequence, theta: LacunarySequence) -> None:
    if len(x) < theta.horizon:
        raise HorizonTooShort(f"sequence has {len(x)} terms but theta needs k_R = {theta.horizon}")


def block_means(values: np.ndarray, theta: LacunarySequence) -> np.ndarray:
    """``(1/h_r) * sum_{k in I_r} values[k-1]`` for every block."""
    values = np.asarray(values, dtype=float)[: theta.horizon]
    return np.add.reduceat(values, theta.starts) / theta.lengths


def block_exceedance_counts(devs: np.ndarray, theta: LacunarySequence, eps: float) -> np.ndarray:
    """``card{k in I_r : devs[k-1] >= eps}`` for every block (exact integers)."""
    hits = (np.asarray(devs)[: theta.horizon] >= eps).astype(np.int64)
    return np.add.reduceat(hits, theta.starts)


def candidate_limit(x: VectorSequence, theta: LacunarySequence) -> np.ndarray:
    """Coordinate-wise median of ``x_k`` over the final block ``I_R``."""
    _require_horizon(x, theta)
    last = x.values[theta.cutoffs[-2] : theta.cutoffs[-1]]
    # one contiguous row per coordinate: partitioning strided columns is several times slower
    return as_vector(np.median(np.ascontiguousarray(last.T), axis=1))


def _resolve_limit(x: VectorSequence, limit, theta: LacunarySequence) -> np.ndarray:
    if limit is None or (isinstance(limit, str) and limit == "auto"):
        return candidate_limit(x, theta)
    v = as_vector(limit)
    if v.size == 1 and x.dim > 1:
        v = as_vector(np.full(x.dim, v[0]))
    if v.size != x.dim:
        raise LacunaError(f"limit of dimension {v.size} for a sequence in R^{x.dim}")
    return v


def default_sampling(n: int) -> LacunarySequence:
    """Dyadic sample points ``2, 4, 8, ... <= n`` used when no theta is given."""
    if n < 2:
        return LacunarySequence((0, n))
    return generate_lacunary("geometric", ratio=2.0, horizon=n)


# --------------------------------------------------------------------------
# evaluators


def ordinary_limit(
    x: VectorSequence, norm: NormKind | str = NormKind.L2, policy: StabilizationPolicy = DEFAULT_POLICY
) -> SummabilityVerdict:
    """Candidate ``L = x_n``; summable when the last ``window`` terms sit within ``tol`` of it."""
    n = len(x)
    L = as_vector(x.values[-1])
    start = max(0, n - policy.window)
    devs = norms(x.values[start:] - L, norm)
    return SummabilityVerdict(
        method="ordinary",
        summable=policy.vanishes(devs),
        limit=L,
        residuals=devs,
        policy=policy,
        horizon=n,
        sample_points=np.arange(start + 1, n + 1),
        params={"norm": NormKind.parse(norm).value},
    )


def ntheta(
    x: VectorSequence,
    limit="auto",
    theta: LacunarySequence | None = None,
    norm: NormKind | str = NormKind.L2,
    policy: StabilizationPolicy = DEFAULT_POLICY,
) -> SummabilityVerdict:
    if theta is None:
        raise LacunaError("ntheta needs a lacunary sequence")
    _require_horizon(x, theta)
    L = _resolve_limit(x, limit, theta)
    devs = x.prefix(theta.horizon).deviations(L, norm)
    residuals = block_means(devs, theta)
    return SummabilityVerdict(
        method="ntheta",
        summable=policy.vanishes(residuals),
        limit=L,
        residuals=residuals,
        policy=policy,
        horizon=theta.horizon,
        sample_points=np.asarray(theta.cutoffs[1:]),
        cutoffs=theta.cutoffs,
        params={"norm": NormKind.parse(norm).value, "limit": "auto" if _is_auto(limit) else "given"},
    )


def stheta(
    x: VectorSequence,
    limit="auto",
    theta: LacunarySequence | None = None,
    norm: NormKind | str = NormKind.L2,
    grid: EpsilonGrid = DEFAULT_GRID,
    policy: StabilizationPolicy = DEFAULT_POLICY,
) -> SummabilityVerdict:
    """Lacunary statistical convergence on the epsilon grid.

    ``densities[eps][r-1]`` is ``(1/h_r) card{k in I_r : ||x_k - L|| >= eps}``;
    ``residuals`` repeats the trace at the finest epsilon.
    """
    if theta is None:
        raise LacunaError("stheta needs a lacunary sequence")
    _require_horizon(x, theta)
    L = _resolve_limit(x, limit, theta)
    devs = x.prefix(theta.horizon).deviations(L, norm)
    dens_policy = grid.density_policy(policy)
    densities = {eps: block_exceedance_counts(devs, theta, eps) / theta.lengths for eps in grid.values}
    summable = all(dens_policy.vanishes(d) for d in densities.values())
    return SummabilityVerdict(
        method="stheta",
        summable=summable,
        limit=L,
        residuals=densities[grid.finest],
        policy=policy,
        horizon=theta.horizon,
        sample_points=np.asarray(theta.cutoffs[1:]),
        densities=densities,
        grid=grid,
        cutoffs=theta.cutoffs,
        params={"norm": NormKind.parse(norm).value, "limit": "auto" if _is_auto(limit) else "given"},
    )


def _is_auto(limit) -> bool:
    return limit is None or (isinstance(limit, str) and limit == "auto")


def _cesaro_trace(powered: np.ndarray, points: np.ndarray) -> np.ndarray:
    # sequential cumulative sum: the summation order is part of the wp(p=1) == sigma1 contract
    cums = np.cumsum(powered)
    return cums[points - 1] / points


def _cesaro(method: str, x, limit, theta, norm, policy, p: float) -> SummabilityVerdict:
    sampling = theta if theta is not None else default_sampling(len(x))
    _require_horizon(x, sampling)
    L = _resolve_limit(x, limit, sampling)
    devs = x.prefix(sampling.horizon).deviations(L, norm)
    powered = devs if method == "sigma1" else np.power(devs, p)
    points = np.asarray(sampling.cutoffs[1:], dtype=np.int64)
    trace = _cesaro_trace(powered, points)
    params: dict[str, Any] = {"norm": NormKind.parse(norm).value, "limit": "auto" if _is_auto(limit) else "given"}
    if method == "wp":
        params["p"] = p
    return SummabilityVerdict(
        method=method,
        summable=policy.vanishes(trace),
        limit=L,
        residuals=trace,
        policy=policy,
        horizon=sampling.horizon,
        sample_points=points,
        cutoffs=sampling.cutoffs,
        params=params,
    )


def sigma1(
    x: VectorSequence,
    limit="auto",
    norm: NormKind | str = NormKind.L2,
    policy: StabilizationPolicy = DEFAULT_POLICY,
    theta: LacunarySequence | None = None,
) -> SummabilityVerdict:
    """Strong Cesaro means ``(1/n) sum_{k<=n} ||x_k - L||`` sampled at the cutoffs of ``theta``.

    Without ``theta`` the means are sampled at ``n = 2, 4, 8, ...``.
    """
    return _cesaro("sigma1", x, limit, theta, norm, policy, 1.0)


def wp(
    x: VectorSequence,
    limit="auto",
    p: float = 2.0,
    norm: NormKind | str = NormKind.L2,
    policy: StabilizationPolicy = DEFAULT_POLICY,
    theta: LacunarySequence | None = None,
) -> SummabilityVerdict:
    if not p > 0:
        raise BadExponent(f"w_p needs p > 0, got {p}")
    return _cesaro("wp", x, limit, theta, norm, policy, float(p))


def theta_norm(x: VectorSequence, theta: LacunarySequence, norm: NormKind | str = NormKind.L2) -> float:
    """``sup_r (1/h_r) sum_{k in I_r} ||x_k||`` over the blocks of ``theta``."""
    _require_horizon(x, theta)
    return float(block_means(norms(x.values[: theta.horizon], norm), theta).max())


# --------------------------------------------------------------------------
# S_theta-Cauchy subsequence construction


@dataclass(frozen=True)
class CauchyCertificate:
    """Outcome of the representative-subsequence construction.

    ``selected[r-1]`` is ``k'(r)``; ``levels[r-1]`` is the level ``p`` in
    force at block ``r`` (0 before ``m_1``, where the pick is unconstrained);
    ``thresholds`` are ``m_1 < m_2 < ...``.  ``certified`` is False for a
    NotCauchy outcome, with ``reason`` saying which check failed.
    """

    selected: np.ndarray
    levels: np.ndarray
    thresholds: tuple[int, ...]
    limit: np.ndarray
    subsequence_deviation: np.ndarray
    densities: dict[float, np.ndarray]
    certified: bool
    reason: str | None
    cutoffs: tuple[int, ...]
    grid: EpsilonGrid
    policy: StabilizationPolicy

    def __bool__(self) -> bool:
        return self.certified

    @property
    def max_level(self) -> int:
        return int(self.levels.max()) if self.levels.size else 0

    def to_json(self) -> dict:
        return {
            "method": "stheta_cauchy",
            "certified": self.certified,
            "reason": self.reason,
            "limit": self.limit.tolist(),
            "selected": self.selected.tolist(),
            "levels": self.levels.tolist(),
            "thresholds": list(self.thresholds),
            "max_level": self.max_level,
            "subsequence_deviation": self.subsequence_deviation.tolist(),
            "densities": {repr(eps): d.tolist() for eps, d in self.densities.items()},
            "cutoffs": list(self.cutoffs),
            "grid": self.grid.to_json(),
            "policy": self.policy.to_json(),
        }


def _level_capacity(d: float, cap: int) -> int:
    """Largest ``p <= cap`` with ``d < 1/p`` (0 if none)."""
    if d < 1.0 / cap:
        return cap
    p = min(cap, int(1.0 / d))
    while p >= 1 and not d < 1.0 / p:
        p -= 1
    while p < cap and d < 1.0 / (p + 1):
        p += 1
    return p


def level_schedule(block_min_dev: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """Levels per block and thresholds ``m_p`` from per-block minimal deviations.

    ``m_p`` is the first block from which every later block meets
    ``K_p = {k : dev_k < 1/p}``, pushed to ``m_{p-1} + 1`` when smaller.  When
    no further threshold fits in the horizon the level freezes.
    """
    R = len(block_min_dev)
    capacity = np.array([_level_capacity(float(d), R) for d in block_min_dev], dtype=np.int64)
    suffix_min = np.minimum.accumulate(capacity[::-1])[::-1]

    def first_block_reaching(p: int) -> int | None:
        # suffix_min is nondecreasing, so the eligible blocks form a tail
        idx = int(np.searchsorted(suffix_min, p, side="left"))
        return idx + 1 if idx < R else None

    thresholds: list[int] = []
    m = first_block_reaching(1)
    p = 1
    while m is not None and m <= R:
        thresholds.append(m)
        nxt = first_block_reaching(p + 1)
        if nxt is None:
            break
        m = max(m + 1, nxt)
        p += 1

    levels = np.zeros(R, dtype=np.int64)
    for level, start in enumerate(thresholds, start=1):
        levels[start - 1 :] = level
    return levels, tuple(thresholds)


def stheta_cauchy(
    x: VectorSequence,
    theta: LacunarySequence,
    norm: NormKind | str = NormKind.L2,
    grid: EpsilonGrid = DEFAULT_GRID,
    policy: StabilizationPolicy = DEFAULT_POLICY,
    limit="auto",
) -> CauchyCertificate:
    """Select ``k'(r) in I_r`` converging to the candidate limit and test deviations against it.

    At level ``p`` the pick is the smallest ``k in I_r`` with
    ``||x_k - L|| < 1/p``.  The outcome is certified when the last ``window``
    blocks all run at level >= 1, the picked terms there lie within the
    finest epsilon of ``L``, and every deviation density
    ``(1/h_r) card{k in I_r : ||x_k - x_{k'(r)}|| >= eps}`` vanishes under the
    density threshold.
    """
    _require_horizon(x, theta)
    L = _resolve_limit(x, limit, theta)
    vals = x.values[: theta.horizon]
    devs = norms(vals - L, norm)
    starts = theta.starts
    levels, thresholds = level_schedule(np.minimum.reduceat(devs, starts))

    selected = np.empty(theta.blocks, dtype=np.int64)
    for r in range(theta.blocks):
        lo, hi = theta.cutoffs[r], theta.cutoffs[r + 1]
        if levels[r] == 0:
            selected[r] = lo + 1
        else:
            eligible = devs[lo:hi] < 1.0 / levels[r]
            selected[r] = lo + 1 + int(np.argmax(eligible))

    rep = np.repeat(selected - 1, theta.lengths)
    spread = norms(vals - vals[rep], norm)
    densities = {eps: block_exceedance_counts(spread, theta, eps) / theta.lengths for eps in grid.values}
    sub_dev = devs[selected - 1]

    dens_policy = grid.density_policy(policy)
    reason = None
    if np.any(policy.tail(levels) < 1):
        reason = "schedule stalled before the verdict window"
    elif not np.all(policy.tail(sub_dev) < grid.finest):
        reason = "selected subsequence does not reach the candidate limit"
    elif not all(dens_policy.vanishes(d) for d in densities.values()):
        reason = "deviation densities do not vanish"

    return CauchyCertificate(
        selected=selected,
        levels=levels,
        thresholds=thresholds,
        limit=L,
        subsequence_deviation=sub_dev,
        densities=densities,
        certified=reason is None,
        reason=reason,
        cutoffs=theta.cutoffs,
        grid=grid,
        policy=policy,
    )


__all__ = [
    "EpsilonGrid",
    "SummabilityVerdict",
    "CauchyCertificate",
    "DEFAULT_POLICY",
    "DEFAULT_GRID",
    "block_means",
    "block_exceedance_counts",
    "candidate_limit",
    "default_sampling",
    "level_schedule",
    "ordinary_limit",
    "ntheta",
    "stheta",
    "sigma1",
    "wp",
    "theta_norm",
    "stheta_cauchy",
]
