"""Command-line front end.

Subcommands: gen | analyze | density | compare | membership | counterexample.

Every command first resolves its arguments into a :class:`RunConfig`, which
is embedded in the artifact it writes (a ``config`` key in JSON, a leading
``# config=`` line in CSV and table output).  ``--replay ARTIFACT`` re-runs a
stored config and reproduces the artifact byte for byte.

Exit codes: 0 summable / member / stabilized / success, 1 not summable /
non-member / did not stabilize, 2 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import generators
from .core import NormKind, StabilizationPolicy, VectorSequence
from .errors import LacunaError
from .lacunary import IndexSet, generate_lacunary, theta_density, theta_from_json, LacunarySequence
from .series import SeriesContext, membership, run_counterexample
from .summability import (
    EpsilonGrid,
    ordinary_limit,
    ntheta,
    sigma1,
    stheta,
    stheta_cauchy,
    theta_norm,
    wp,
)

THETA_ENV = "LACUNA_DEFAULT_THETA"
ANALYZE_METHODS = ("ordinary", "sigma1", "wp", "ntheta", "stheta", "cauchy", "theta-norm")
COMPARE_METHODS = ("ordinary", "sigma1", "wp", "ntheta", "stheta")
MEMBERSHIP_METHODS = ("stheta", "ntheta", "wp", "sigma1")
CONFIG_PREFIX = "# config="


@dataclass
class RunConfig:
    command: str
    target: str | None = None
    input: str | None = None
    theta: list | None = None
    thetas: list | None = None
    method: str | None = None
    p: float = 2.0
    limit: str = "auto"
    norm: str = "l2"
    eps0: float = 0.1
    eps_ratio: float = 0.5
    eps_steps: int = 6
    delta_tol: float = 1e-3
    tol: float = 1e-4
    window: int = 5
    format: str = "json"
    seed: int = 0
    gen: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in names})

    @property
    def policy(self) -> StabilizationPolicy:
        return StabilizationPolicy(window=self.window, tol=self.tol)

    @property
    def grid(self) -> EpsilonGrid:
        return EpsilonGrid(self.eps0, self.eps_ratio, self.eps_steps, self.delta_tol)


class CliError(LacunaError):
    pass


# --------------------------------------------------------------------------
# input resolution


def _read_json(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return json.loads(text)


def _resolve_theta_spec(spec: str | None) -> list | None:
    """Turn a --theta argument (path, inline JSON, or compact form) into explicit cutoffs."""
    if spec is None:
        spec = os.environ.get(THETA_ENV)
    if spec is None:
        return None
    path = Path(spec)
    obj = _read_json(spec) if path.is_file() else spec
    if isinstance(obj, dict) and "config" in obj and "cutoffs" not in obj and "generator" not in obj:
        raise CliError(f"{spec} is not a theta artifact")
    return list(theta_from_json(obj).cutoffs)


def _theta_for(cfg: RunConfig, horizon: int) -> LacunarySequence:
    if cfg.theta is not None:
        return theta_from_json({"cutoffs": cfg.theta})
    return generate_lacunary("geometric", ratio=2.0, horizon=horizon)


def _load_sequence(path: str) -> VectorSequence:
    obj = _read_json(path)
    if "values" not in obj:
        raise CliError(f"{path} is not a sequence file (no 'values')")
    return VectorSequence.from_json(obj)


def _parse_limit(text: str):
    if text == "auto":
        return "auto"
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise CliError(f"--limit must be 'auto' or comma-separated numbers, got {text!r}") from None


# --------------------------------------------------------------------------
# rendering


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(CONFIG_PREFIX + json.dumps(cfg.to_json(), separators=(",", ":")) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    cells = [header] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [CONFIG_PREFIX + json.dumps(cfg.to_json(), separators=(",", ":"))]
    for i, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, payload: dict, header: list[str], rows: list[list]) -> str:
    if cfg.format == "json":
        return _dumps({**payload, "config": cfg.to_json()})
    if cfg.format == "csv":
        return _csv_text(cfg, header, rows)
    if cfg.format == "table":
        return _table_text(cfg, header, rows)
    raise CliError(f"unknown format {cfg.format!r}")


# --------------------------------------------------------------------------
# commands


def cmd_gen(cfg: RunConfig) -> tuple[str, int]:
    g = cfg.gen
    if cfg.target == "seq":
        seq = generators.sequence(
            g["kind"], int(g["n"]), value=g.get("value", 0.0), ratio=g.get("ratio", 0.5),
            dim=int(g.get("dim", 1)), seed=cfg.seed,
        )
        source = f"gen seq kind={g['kind']} n={g['n']} seed={cfg.seed}: {seq.source}"
        payload = VectorSequence(seq.values, source).to_json()
    elif cfg.target == "theta":
        kind = g["kind"]
        theta = generate_lacunary(
            kind, g.get("blocks"), ratio=g.get("ratio"), alpha=g.get("alpha"),
            cutoffs=g.get("cutoffs"), horizon=g.get("horizon"),
        )
        payload = theta.to_json()
    elif cfg.target == "series":
        n = int(g["n"])
        terms = generators.functional_values(g["kind"], n)
        coeffs = g.get("coeffs", "ones")
        if coeffs == "ones":
            a, cls = np.ones(n), "linf"
        elif coeffs == "first":
            a, cls = np.zeros(n), "c00"
            a[0] = 1.0
        elif coeffs == "alt":
            a, cls = np.where(np.arange(1, n + 1) % 2 == 0, 1.0, -1.0), "linf"
        else:
            raise CliError(f"unknown coefficient pattern {coeffs!r}")
        ctx = SeriesContext(VectorSequence(terms.reshape(-1, 1), source=f"gen series kind={g['kind']}"), a, cls)
        payload = ctx.to_json()
    else:
        raise CliError(f"unknown gen target {cfg.target!r}")
    return _dumps({**payload, "config": cfg.to_json()}), 0


def cmd_analyze(cfg: RunConfig) -> tuple[str, int]:
    x = _load_sequence(cfg.input)
    method = cfg.method
    limit = _parse_limit(cfg.limit)
    norm = NormKind.parse(cfg.norm)
    if method not in ANALYZE_METHODS:
        raise CliError(f"unknown method {method!r}; expected one of {ANALYZE_METHODS}")
    if method == "ordinary":
        v = ordinary_limit(x, norm, cfg.policy)
    else:
        theta = _theta_for(cfg, len(x))
        if method == "ntheta":
            v = ntheta(x, limit, theta, norm, cfg.policy)
        elif method == "stheta":
            v = stheta(x, limit, theta, norm, cfg.grid, cfg.policy)
        elif method == "sigma1":
            v = sigma1(x, limit, norm, cfg.policy, theta)
        elif method == "wp":
            v = wp(x, limit, cfg.p, norm, cfg.policy, theta)
        elif method == "cauchy":
            cert = stheta_cauchy(x, theta, norm, cfg.grid, cfg.policy, limit)
            header = ["r", "k_r", "selected", "level", "subsequence_deviation"]
            rows = [
                [r + 1, theta.cutoffs[r + 1], int(cert.selected[r]), int(cert.levels[r]),
                 repr(float(cert.subsequence_deviation[r]))]
                for r in range(theta.blocks)
            ]
            return _emit(cfg, cert.to_json(), header, rows), 0 if cert.certified else 1
        else:
            value = theta_norm(x, theta, norm)
            payload = {"method": "theta-norm", "value": value, "cutoffs": list(theta.cutoffs), "norm": norm.value}
            return _emit(cfg, payload, ["method", "value"], [["theta-norm", repr(value)]]), 0
    header, rows = v.trace_rows()
    return _emit(cfg, v.to_json(), header, rows), 0 if v.summable else 1


def cmd_density(cfg: RunConfig) -> tuple[str, int]:
    if cfg.theta is None:
        raise CliError("density needs --theta (or LACUNA_DEFAULT_THETA)")
    theta = theta_from_json({"cutoffs": cfg.theta})
    trace = theta_density(theta, IndexSet.parse(cfg.gen["set"]), cfg.policy)
    header = ["r", "k_r", "h_r", "count", "fraction"]
    rows = [
        [r + 1, theta.cutoffs[r + 1], theta.h[r], int(trace.counts[r]), repr(float(trace.fractions[r]))]
        for r in range(theta.blocks)
    ]
    return _emit(cfg, trace.to_json(), header, rows), 0 if trace.stabilized else 1


def _fmt_limit(limit) -> str:
    return "" if limit is None else ";".join(repr(float(c)) for c in limit)


def cmd_compare(cfg: RunConfig) -> tuple[str, int]:
    x = _load_sequence(cfg.input)
    norm = NormKind.parse(cfg.norm)
    limit = _parse_limit(cfg.limit)
    thetas = [theta_from_json({"cutoffs": c}) for c in (cfg.thetas or [])]
    if not thetas:
        thetas = [_theta_for(cfg, len(x))]
    rows = []
    records = []
    for theta in thetas:
        xs = x.prefix(theta.horizon)
        label = theta.source or f"k_R={theta.horizon},R={theta.blocks}"
        for method in COMPARE_METHODS:
            if method == "ordinary":
                v = ordinary_limit(xs, norm, cfg.policy)
            elif method == "sigma1":
                v = sigma1(xs, limit, norm, cfg.policy, theta)
            elif method == "wp":
                v = wp(xs, limit, cfg.p, norm, cfg.policy, theta)
            elif method == "ntheta":
                v = ntheta(xs, limit, theta, norm, cfg.policy)
            else:
                v = stheta(xs, limit, theta, norm, cfg.grid, cfg.policy)
            rows.append([label, method, str(v.summable).lower(), _fmt_limit(v.limit), repr(v.final_residual)])
            records.append({
                "theta": list(theta.cutoffs), "method": method, "summable": v.summable,
                "limit": None if v.limit is None else v.limit.tolist(), "final_residual": v.final_residual,
            })
    header = ["theta", "method", "summable", "limit", "final_residual"]
    return _emit(cfg, {"rows": records}, header, rows), 0


def cmd_membership(cfg: RunConfig) -> tuple[str, int]:
    ctx = SeriesContext.from_json(_read_json(cfg.input), NormKind.parse(cfg.norm))
    if cfg.method not in MEMBERSHIP_METHODS:
        raise CliError(f"unknown membership method {cfg.method!r}; expected one of {MEMBERSHIP_METHODS}")
    theta = _theta_for(cfg, ctx.horizon) if cfg.theta is not None else None
    v = membership(ctx, cfg.method, theta, cfg.grid, cfg.policy, cfg.p)
    header, rows = v.trace_rows()
    return _emit(cfg, v.to_json(), header, rows), 0 if v.summable else 1


def cmd_counterexample(cfg: RunConfig) -> tuple[str, int]:
    g = cfg.gen
    exact = g.get("mode", "exact") == "exact"
    fvals = generators.functional_values(g["functional"], int(g["n"]), exact=exact)
    theta = theta_from_json({"cutoffs": cfg.theta}) if cfg.theta is not None else None
    out = run_counterexample(fvals, int(g["blocks"]), g.get("mode", "exact"), theta, cfg.grid, cfg.policy,
                             methods=(("stheta", 1.0), ("ntheta", 1.0), ("wp", 1.0), ("wp", 2.0)))
    result = out["result"]
    payload = {
        **result.to_json(),
        "series": out["series"].to_json(),
        "membership": [v.to_json() for v in out["verdicts"]],
        "witnesses": [w.to_json() for w in out["witnesses"]],
    }
    header = ["method", "member", "final_residual", "witness"]
    rows = []
    for i, v in enumerate(out["verdicts"]):
        w = out["witnesses"][i].note if out["witnesses"] else "-"
        rows.append([v.method, str(v.summable).lower(), repr(v.final_residual), w])
    ok = all(result.check().values())
    return _emit(cfg, payload, header, rows), 0 if ok else 1


COMMANDS = {
    "gen": cmd_gen,
    "analyze": cmd_analyze,
    "density": cmd_density,
    "compare": cmd_compare,
    "membership": cmd_membership,
    "counterexample": cmd_counterexample,
}


def run(cfg: RunConfig) -> tuple[str, int]:
    return COMMANDS[cfg.command](cfg)


# --------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, theta: bool = True) -> None:
    if theta:
        p.add_argument("--theta", help=f"theta file, inline JSON or geom:RATIO:BLOCKS (default: ${THETA_ENV})")
    p.add_argument("--method")
    p.add_argument("--p", type=float, default=2.0, help="exponent for w_p")
    p.add_argument("--limit", default="auto", help="'auto' or comma-separated coordinates")
    p.add_argument("--norm", default="l2", choices=["l1", "l2", "linf"])
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--eps-ratio", type=float, default=0.5)
    p.add_argument("--eps-steps", type=int, default=6)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--delta-tol", type=float, default=1e-3)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--format", default="json", choices=["json", "csv", "table"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="write the artifact here instead of stdout")
    p.add_argument("--replay", help="re-run the config stored in an earlier artifact")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lacuna", description="Lacunary summability toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate sequences, thetas and series")
    gen.add_argument("target", choices=["seq", "theta", "series"])
    gen.add_argument("--kind", required=False)
    gen.add_argument("--n", type=int)
    gen.add_argument("--value", type=float, default=0.0)
    gen.add_argument("--ratio", type=float)
    gen.add_argument("--alpha", type=float)
    gen.add_argument("--blocks", type=int)
    gen.add_argument("--horizon", type=int)
    gen.add_argument("--cutoffs", help="comma-separated cutoffs for --kind explicit")
    gen.add_argument("--dim", type=int, default=1)
    gen.add_argument("--coeffs", default="ones", choices=["ones", "first", "alt"])
    _add_common(gen, theta=False)

    for name, helptext in (
        ("analyze", "run one summability evaluator on a sequence"),
        ("compare", "side-by-side verdicts across methods and thetas"),
        ("membership", "test coefficients of a series against a summability space"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", "-i")
        _add_common(p, theta=name != "compare")
        if name == "compare":
            p.add_argument("--theta", action="append", help="repeatable; one comparison block per theta")

    den = sub.add_parser("density", help="theta-density of an index set")
    den.add_argument("--set", dest="index_set", default=None, help="even | odd | squares | multiples:m | explicit:[...]")
    _add_common(den)

    ce = sub.add_parser("counterexample", help="build divergent c0 coefficients and test membership")
    ce.add_argument("--functional", default="harmonic", choices=list(generators.FUNCTIONAL_KINDS))
    ce.add_argument("--blocks", type=int, default=1)
    ce.add_argument("--mode", default="exact", choices=["exact", "float"])
    ce.add_argument("--n", type=int, default=1 << 20, help="number of functional values available")
    _add_common(ce)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    default_tol = 1e-6 if cmd == "density" else 1e-4
    cfg = RunConfig(
        command=cmd,
        method=args.method,
        p=args.p,
        limit=args.limit,
        norm=args.norm,
        eps0=args.eps0,
        eps_ratio=args.eps_ratio,
        eps_steps=args.eps_steps,
        delta_tol=args.delta_tol,
        tol=args.tol if args.tol is not None else default_tol,
        window=args.window,
        format=args.format,
        seed=args.seed,
    )
    if cmd == "gen":
        cfg.target = args.target
        if args.kind is None:
            raise CliError("gen needs --kind")
        if args.target == "seq":
            if args.n is None:
                raise CliError("gen seq needs --n")
            cfg.gen = {"kind": args.kind, "n": args.n, "value": args.value, "dim": args.dim}
            if args.ratio is not None:
                cfg.gen["ratio"] = args.ratio
        elif args.target == "theta":
            cfg.gen = {"kind": args.kind}
            for key in ("ratio", "alpha", "blocks", "horizon"):
                if getattr(args, key) is not None:
                    cfg.gen[key] = getattr(args, key)
            if args.cutoffs:
                cfg.gen["cutoffs"] = [int(c) for c in args.cutoffs.split(",")]
        else:
            if args.n is None:
                raise CliError("gen series needs --n")
            cfg.gen = {"kind": args.kind, "n": args.n, "coeffs": args.coeffs}
        return cfg

    if cmd in ("analyze", "compare", "membership"):
        if not args.input:
            raise CliError(f"{cmd} needs --input")
        cfg.input = args.input
        if cmd == "analyze" and cfg.method is None:
            cfg.method = "ntheta"
        if cmd == "membership" and cfg.method is None:
            cfg.method = "stheta"
    if cmd == "compare":
        specs = args.theta or ([os.environ[THETA_ENV]] if THETA_ENV in os.environ else [])
        cfg.thetas = [_resolve_theta_spec(s) for s in specs] or None
    else:
        cfg.theta = _resolve_theta_spec(args.theta)
    if cmd == "density":
        if not args.index_set:
            raise CliError("density needs --set")
        cfg.gen = {"set": args.index_set}
    if cmd == "counterexample":
        cfg.gen = {"functional": args.functional, "blocks": args.blocks, "mode": args.mode, "n": args.n}
    return cfg


def _load_replay(path: str) -> RunConfig:
    text = Path(path).read_text()
    if text.startswith(CONFIG_PREFIX):
        return RunConfig.from_json(json.loads(text.splitlines()[0][len(CONFIG_PREFIX):]))
    obj = json.loads(text)
    if "config" not in obj:
        raise CliError(f"{path} carries no config to replay")
    return RunConfig.from_json(obj["config"])


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "replay", None):
            cfg = _load_replay(args.replay)
        else:
            cfg = _config_from_args(args)
        text, code = run(cfg)
    except (LacunaError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"lacuna: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
