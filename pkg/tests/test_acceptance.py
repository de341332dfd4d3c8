"""Acceptance gate: one marked group per criterion, summarised at the end of the run."""

from __future__ import annotations

import json
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from battery import battery, thetas
from lacuna import (
    IndexSet,
    NormKind,
    PrefixExhausted,
    SeriesContext,
    VectorSequence,
    build_counterexample,
    candidate_limit,
    generate_lacunary,
    ntheta,
    ordinary_limit,
    run_counterexample,
    sigma1,
    stheta,
    stheta_cauchy,
    theta_density,
    wp,
    wuc_supremum,
)
from lacuna.cli import main
from lacuna.generators import functional_values
from lacuna.lacunary import block_counts
from lacuna.summability import DEFAULT_GRID, block_exceedance_counts

REGULARITY_HORIZON = 2**19


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# --------------------------------------------------------------------------
# 1


def _convergent_battery(n):
    rng = np.random.default_rng(1)
    k = np.arange(1, n + 1, dtype=float)[:, None]
    out = []
    for i in range(13):
        c = rng.uniform(-2, 2, 3)
        out.append((f"const{i}", np.tile(c, (n, 1))))
        out.append((f"inv{i}", c + 1.0 / k))
        out.append((f"geom{i}", c + np.power(rng.uniform(0.3, 0.95), k)))
        out.append((f"noise{i}", c + rng.standard_normal((n, 3)) / k))
    return out


@criterion(1, "regularity of N_theta and S_theta")
def test_regularity_suite():
    n = REGULARITY_HORIZON
    seqs = _convergent_battery(n)
    assert len(seqs) >= 50
    ths = thetas(n)
    failures = []
    ordinary_ok = 0
    t0 = time.perf_counter()
    for name, values in seqs:
        full = VectorSequence(values)
        for tname, th in ths.items():
            x = full.prefix(th.horizon)
            o = ordinary_limit(x)
            if not o.summable:
                continue
            ordinary_ok += 1
            for v in (ntheta(x, "auto", th), stheta(x, "auto", th)):
                gap = float(np.linalg.norm(v.limit - o.limit))
                if not v.summable or gap > 1e-3:
                    failures.append((name, tname, v.method, v.summable, gap, v.final_residual))
    elapsed = time.perf_counter() - t0
    assert ordinary_ok == len(seqs) * len(ths)
    assert not failures, failures[:10]
    assert elapsed < 10.0, f"regularity suite took {elapsed:.2f}s"


# --------------------------------------------------------------------------
# 2


@criterion(2, "per-block inequalities between N_theta residuals and S_theta densities")
def test_per_block_inequalities():
    eps_values = list(DEFAULT_GRID.values) + [0.5, 1.0, 2.0]
    violations = []
    checked = 0
    for name, x in battery():
        for tname, th in thetas().items():
            L = candidate_limit(x, th)
            devs = x.prefix(th.horizon).deviations(L, NormKind.L2)
            M = float(devs.max())
            block_sums = np.add.reduceat(devs, th.starts)
            residual = ntheta(x, L, th).residuals
            np.testing.assert_allclose(residual, block_sums / th.lengths, rtol=1e-12, atol=0)
            for eps in eps_values:
                counts = block_exceedance_counts(devs, th, eps)
                density = counts / th.lengths
                # eps * card <= sum over the block
                lhs_ok = counts * eps <= block_sums * (1 + 1e-12) + 1e-12
                # residual <= M * density + eps
                rhs_ok = residual <= M * density + eps + 1e-12
                checked += counts.size
                for r in np.flatnonzero(~(lhs_ok & rhs_ok)):
                    violations.append((name, tname, eps, int(r) + 1))
    assert checked > 0
    assert not violations, violations[:10]


# --------------------------------------------------------------------------
# 3


def _spike_setup():
    n = 2**16
    k = np.arange(1, n + 1)
    x = VectorSequence(np.where(IndexSet.parse("squares").contains(k), k, 0).astype(float))
    return x, generate_lacunary("geometric", ratio=2.0, horizon=n)


@criterion(3, "separation witness: unbounded spikes on the squares")
def test_spike_is_stheta_summable():
    x, th = _spike_setup()
    v = stheta(x, 0.0, th)
    tail = {eps: d[-5:].tolist() for eps, d in v.densities.items()}
    assert v.summable, f"S_theta densities over the last blocks: {tail}"


@criterion(3, "separation witness: unbounded spikes on the squares")
def test_spike_is_not_ntheta_summable():
    x, th = _spike_setup()
    v = ntheta(x, 0.0, th)
    assert not v.summable
    # block averages grow without bound
    assert np.all(np.diff(v.residuals[-5:]) > 0)


# --------------------------------------------------------------------------
# 4


@criterion(4, "S_theta convergence iff an S_theta-Cauchy certificate")
def test_cauchy_criterion_suite():
    mismatches = []
    certified = 0
    for name, x in battery():
        for tname, th in thetas().items():
            v = stheta(x, "auto", th)
            cert = stheta_cauchy(x, th)
            if v.summable != cert.certified:
                mismatches.append((name, tname, v.summable, cert.reason))
            if not cert.certified:
                continue
            certified += 1
            for r in range(1, th.blocks + 1):
                kp = int(cert.selected[r - 1])
                lo, hi = th.cutoffs[r - 1], th.cutoffs[r]
                assert lo < kp <= hi, (name, tname, r, kp)
                level = int(cert.levels[r - 1])
                if level >= 1:
                    dev = float(np.linalg.norm(x.at(kp) - cert.limit))
                    assert dev < 1.0 / level, (name, tname, r, level, dev)
            assert cert.max_level >= 1
    assert certified > 0
    assert not mismatches, mismatches


# --------------------------------------------------------------------------
# 5


@criterion(5, "counterexample certification for the harmonic functional")
def test_counterexample_first_block_harmonic():
    m1, H = oracles.first_harmonic_exceeding(4)
    assert m1 == 31
    res = build_counterexample(functional_values("harmonic", 64, exact=True), 1, "exact")
    assert res.blocks == (m1,)
    assert res.block_sums[0] == H / 2 and res.block_sums[0] > 2


@criterion(5, "counterexample certification for the harmonic functional")
def test_counterexample_harmonic_eight_blocks():
    t0 = time.perf_counter()
    fvals = functional_values("harmonic", 2**20, exact=True)
    try:
        out = run_counterexample(fvals, 8, "exact", methods=(("stheta", 1.0), ("ntheta", 1.0), ("wp", 1.0), ("wp", 2.0)))
    except PrefixExhausted as exc:
        pytest.fail(f"harmonic values cannot fill 8 blocks: {exc}")
    elapsed = time.perf_counter() - t0
    res = out["result"]
    assert res.blocks[0] == 31
    checks = res.check()
    assert all(checks.values()), checks
    for p, s in enumerate(res.block_sums, start=1):
        assert s > 2**p
    for a, f in zip(res.coeffs, res.fvals):
        assert a * f >= 0
    for p, rng in enumerate(res.block_ranges(), start=1):
        assert all(abs(res.coeffs[i]) == Fraction(1, 2**p) for i in rng)
    assert not any(v.summable for v in out["verdicts"])
    assert all(w.found for w in out["witnesses"])
    assert elapsed < 5.0


# --------------------------------------------------------------------------
# 6

DENSITY_HORIZON = 10**6


def _density_sets():
    rng = np.random.default_rng(6)
    members = sorted(set(rng.integers(1, DENSITY_HORIZON + 1, size=20000).tolist()))
    return {
        "even": (IndexSet.parse("even"), lambda k: k % 2 == 0),
        "squares": (IndexSet.parse("squares"), oracles.is_square),
        "multiples:3": (IndexSet.parse("multiples:3"), lambda k: k % 3 == 0),
        "explicit": (IndexSet.explicit(members), set(members).__contains__),
    }


@criterion(6, "theta-density against naive counting")
@pytest.mark.parametrize("name", ["even", "squares", "multiples:3", "explicit"])
def test_density_counts_match_naive_loop(name):
    K, member = _density_sets()[name]
    for th in (
        generate_lacunary("power", alpha=2, blocks=1000),
        generate_lacunary("geometric", ratio=3.0, horizon=DENSITY_HORIZON),
    ):
        assert th.horizon <= DENSITY_HORIZON
        assert block_counts(th, K).tolist() == oracles.count_in_blocks(th.cutoffs, member)


@criterion(6, "theta-density against naive counting")
def test_density_estimates():
    th = generate_lacunary("power", alpha=2, blocks=1000)
    assert th.horizon == DENSITY_HORIZON
    even = theta_density(th, IndexSet.parse("even"))
    squares = theta_density(th, IndexSet.parse("squares"))
    assert abs(even.estimate - 0.5) <= 1e-3
    assert abs(squares.estimate - 0.0) <= 1e-3


# --------------------------------------------------------------------------
# 7


@criterion(7, "wuC supremum against brute-force sign patterns")
def test_wuc_supremum_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 16))
        rows = rng.integers(-50, 51, size=(n, 3))
        H, method, _ = wuc_supremum(VectorSequence(rows.astype(float)), NormKind.LINF)
        assert method == "exact-linf"
        assert H == oracles.brute_force_H(rows.tolist())


# --------------------------------------------------------------------------
# 8


@criterion(8, "perturbation bound for partial sums")
def test_perturbation_bound():
    rng = np.random.default_rng(8)
    violations = []
    for i in range(120):
        n = int(rng.integers(5, 400))
        scale = rng.uniform(0.5, 1.0) ** np.arange(1, n + 1)
        terms = VectorSequence(rng.standard_normal((n, 3)) * scale[:, None])
        H, _, _ = wuc_supremum(terms, NormKind.LINF)
        eta = float(rng.uniform(1e-6, 0.5))
        a = rng.uniform(-1, 1, n)
        b = a + rng.uniform(-eta, eta, n)
        Sa = SeriesContext(terms, a, "linf", norm=NormKind.LINF).partial
        Sb = SeriesContext(terms, b, "linf", norm=NormKind.LINF).partial
        gap = float(np.abs(Sa - Sb).max())
        if gap > eta * H + 1e-9:
            violations.append((i, gap, eta * H))
    assert not violations, violations


# --------------------------------------------------------------------------
# 9


@criterion(9, "w_1 and sigma_1 traces coincide bitwise")
def test_wp_one_matches_sigma1():
    for name, x in battery():
        for th in list(thetas().values()) + [None]:
            a = wp(x, "auto", 1.0, theta=th).residuals
            b = sigma1(x, "auto", theta=th).residuals
            assert a.tobytes() == b.tobytes(), name


# --------------------------------------------------------------------------
# 10


def _write(path, seq):
    path.write_text(json.dumps(seq))
    return str(path)


@criterion(10, "CLI round-trip, determinism and exit codes")
def test_cli_round_trip_and_determinism(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["gen", "seq", "--kind", "spike:squares", "--n", "4096", "-o", "spike.json"]) == 0
    assert main(["gen", "series", "--kind", "geometric", "--n", "256", "-o", "series.json"]) == 0
    assert main(["gen", "theta", "--kind", "geom", "--ratio", "2", "--blocks", "12", "-o", "theta.json"]) == 0
    runs = [
        ["analyze", "-i", "spike.json", "--method", "stheta", "--theta", "theta.json", "--limit", "0"],
        ["analyze", "-i", "spike.json", "--method", "ntheta", "--format", "csv"],
        ["analyze", "-i", "spike.json", "--method", "cauchy"],
        ["compare", "-i", "spike.json", "--theta", "theta.json", "--theta", "geom:1.5:20", "--format", "table"],
        ["density", "--set", "squares", "--theta", "theta.json"],
        ["membership", "-i", "series.json", "--method", "ntheta"],
        ["counterexample", "--functional", "ones", "--blocks", "3"],
    ]
    for i, argv in enumerate(runs):
        first, second, replay = (f"{i}-{tag}.out" for tag in ("a", "b", "r"))
        code = main(argv + ["-o", first])
        assert code in (0, 1), argv
        assert main(argv + ["-o", second]) == code
        assert (tmp_path / first).read_bytes() == (tmp_path / second).read_bytes(), argv
        assert main(["analyze", "--replay", first, "-o", replay]) == code
        assert (tmp_path / first).read_bytes() == (tmp_path / replay).read_bytes(), argv
    # generated artifacts are valid inputs again, and regenerating them is byte-identical
    assert main(["gen", "seq", "--kind", "spike:squares", "--n", "4096", "-o", "spike2.json"]) == 0
    assert (tmp_path / "spike.json").read_bytes() == (tmp_path / "spike2.json").read_bytes()
    assert main(["analyze", "--replay", "spike.json", "-o", "spike3.json"]) == 0
    assert (tmp_path / "spike.json").read_bytes() == (tmp_path / "spike3.json").read_bytes()


@criterion(10, "CLI round-trip, determinism and exit codes")
def test_cli_exit_code_contract(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    n = 4096
    _write(tmp_path / "const.json", {"dim": 1, "values": [[3.0]] * n})
    _write(tmp_path / "alt.json", {"dim": 1, "values": [[(-1.0) ** k] for k in range(1, n + 1)]})
    _write(tmp_path / "short.json", {"dim": 1, "values": [[3.0]] * 100})
    assert main(["analyze", "-i", "const.json", "--method", "stheta"]) == 0
    assert main(["analyze", "-i", "alt.json", "--method", "stheta"]) == 1
    assert main(["analyze", "-i", "short.json", "--theta", "geom:2:12"]) == 2
    assert "HorizonTooShort" in capsys.readouterr().err
