"""Command-line front end: verification suites, determinant reports,
density verdicts, Monte Carlo runs, inequality sweeps, and input generation.

Exit codes: 0 success (all checks passed / report produced), 1 a
verification check or sweep trial failed, 2 invalid configuration or
input file.  Reports are JSON by default, CSV on request; every
randomized run records the seeds needed to replay it.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from io import StringIO
from typing import Optional

import numpy as np

from . import io as kio
from . import malliavin as mal
from .mc import DEFAULT_SAMPLES, estimate_expected_det
from .tensor import random_symmetric
from .verify import SUITES, VerifyConfig, instance_seed, run_suites

__all__ = ["main", "RunConfig"]


@dataclass(frozen=True)
class RunConfig:
    """Validated common options for one CLI invocation."""

    subcommand: str
    dim: int
    max_order: int
    trials: int
    samples: int
    seed: int
    tol_rel: float
    tol_abs: Optional[float]
    output: str
    out_path: Optional[str]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"--dim must be >= 1, got {self.dim}")
        if self.max_order < 1:
            raise ValueError(f"--max-order must be >= 1, got {self.max_order}")
        if self.trials < 1:
            raise ValueError(f"--trials must be >= 1, got {self.trials}")
        if self.samples < 2:
            raise ValueError(f"--samples must be >= 2, got {self.samples}")
        if self.seed < 0:
            raise ValueError(f"--seed must be >= 0, got {self.seed}")
        if self.tol_rel <= 0:
            raise ValueError(f"--tol-rel must be > 0, got {self.tol_rel}")
        if self.tol_abs is not None and self.tol_abs <= 0:
            raise ValueError(f"--tol-abs must be > 0, got {self.tol_abs}")


def _default_seed() -> int:
    raw = os.environ.get("CHAOSKIT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"CHAOSKIT_SEED must be an integer, got {raw!r}") from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=3, help="basis dimension d")
    p.add_argument("--max-order", type=int, default=4, help="largest chaos order")
    p.add_argument("--trials", type=int, default=20, help="random instances per check")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="base seed (default: CHAOSKIT_SEED env var, else 0)",
    )
    p.add_argument("--tol-rel", type=float, default=1e-9, help="relative tolerance")
    p.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("-o", dest="out_path", metavar="PATH", default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaoskit",
        description=(
            "Finite-dimensional Wiener chaos toolkit: verify tensor and chaos "
            "identities, compute expected Malliavin determinants, check density "
            "of a pair of multiple integrals, and run Monte Carlo estimates."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify", help="run randomized invariant suites")
    p.add_argument(
        "--suite",
        default="all",
        help=f"comma list from {sorted(SUITES)} or 'all'",
    )
    _add_common(p)

    p = sub.add_parser("edet", help="expected determinant report for a pair file")
    p.add_argument("--pair", required=True, metavar="FILE")
    p.add_argument("--k", default="all", help="comma list of orders k, or 'all'")
    p.add_argument("--mc", action="store_true", help="attach a Monte Carlo estimate")
    _add_common(p)

    p = sub.add_parser("density", help="density/degeneracy verdict for a pair file")
    p.add_argument("--pair", required=True, metavar="FILE")
    _add_common(p)

    p = sub.add_parser("mc", help="Monte Carlo estimate of one expected determinant")
    p.add_argument("--pair", required=True, metavar="FILE")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--dump", metavar="PATH", default=None, help="raw sample CSV dump")
    _add_common(p)

    p = sub.add_parser("sweep", help="covariance-inequality sweep over random pairs")
    p.add_argument("--order", type=int, required=True, help="common chaos order n >= 2")
    _add_common(p)

    p = sub.add_parser("gen", help="write a random tensor or pair file")
    p.add_argument("--kind", choices=("pair", "tensor"), default="pair")
    p.add_argument("--order", type=int, default=2, help="order of f")
    p.add_argument("--order-g", type=int, default=None, help="order of g (default: order)")
    p.add_argument(
        "--proportional",
        type=float,
        default=None,
        metavar="C",
        help="write g = C * f instead of an independent draw",
    )
    _add_common(p)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        subcommand=args.subcommand,
        dim=args.dim,
        max_order=args.max_order,
        trials=args.trials,
        samples=args.samples if args.samples is not None else DEFAULT_SAMPLES,
        seed=args.seed if args.seed is not None else _default_seed(),
        tol_rel=args.tol_rel,
        tol_abs=args.tol_abs,
        output=args.output,
        out_path=args.out_path,
    )


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def _emit(report: dict, rows: list[dict], cfg: RunConfig) -> None:
    if cfg.output == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        fields: list[str] = []
        for row in rows:
            for key in row:
                if key not in fields:
                    fields.append(key)
        buf = StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        text = buf.getvalue()
    if cfg.out_path:
        with open(cfg.out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config(args)
    suites = [s.strip() for s in args.suite.split(",") if s.strip()]
    vcfg = VerifyConfig(
        dim=max(cfg.dim, 2),
        max_order=cfg.max_order,
        trials=cfg.trials,
        samples=cfg.samples if args.samples is not None else 20000,
        seed=cfg.seed,
        tol_rel=cfg.tol_rel,
        tol_abs=cfg.tol_abs if cfg.tol_abs is not None else 1e-12,
    )
    results = run_suites(vcfg, suites)
    passed = all(r.passed for r in results)
    rows = []
    for r in results:
        row = r.to_dict()
        row["failures"] = "; ".join(r.failures)
        rows.append(row)
    report = {
        "command": "verify",
        "config": {
            "suite": suites,
            "dim": vcfg.dim,
            "max_order": vcfg.max_order,
            "trials": vcfg.trials,
            "samples": vcfg.samples,
            "seed": vcfg.seed,
            "tol_rel": vcfg.tol_rel,
            "tol_abs": vcfg.tol_abs,
        },
        "checks": [r.to_dict() for r in results],
        "passed": passed,
    }
    _emit(report, rows, cfg)
    return 0 if passed else 1


def _parse_k_list(raw: str, kmax: int) -> list[int]:
    if raw.strip().lower() == "all":
        return list(range(1, kmax + 1))
    try:
        ks = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"--k must be 'all' or a comma list of integers: {raw!r}") from exc
    if not ks:
        raise ValueError("--k must name at least one order")
    for k in ks:
        if not 1 <= k <= kmax:
            raise ValueError(f"k = {k} out of range [1, {kmax}]")
    return ks


def _cmd_edet(args: argparse.Namespace) -> int:
    cfg = _config(args)
    pair = kio.load_pair(args.pair)
    ks = _parse_k_list(args.k, min(pair.n, pair.m))
    results = []
    for k in ks:
        breakdown = mal.expected_det_closed_form(pair, k)
        if args.mc:
            est = estimate_expected_det(pair, k, n_samples=cfg.samples, seed=cfg.seed)
            breakdown = mal.DetBreakdown(
                k=breakdown.k,
                t0=breakdown.t0,
                tr=breakdown.tr,
                remainder=breakdown.remainder,
                closed_form=breakdown.closed_form,
                symbolic=breakdown.symbolic,
                mc=est,
            )
        results.append(breakdown)
    dicts = [kio.breakdown_to_dict(b) for b in results]
    rows = []
    for d in dicts:
        row = dict(d)
        row["tr"] = "|".join(_fmt(v) for v in d["tr"])
        mcd = row.pop("mc")
        row["mc_mean"] = mcd["mean"] if mcd else ""
        row["mc_stderr"] = mcd["stderr"] if mcd else ""
        row["mc_samples"] = mcd["samples"] if mcd else ""
        row["mc_seed"] = mcd["seed"] if mcd else ""
        rows.append(row)
    report = {
        "command": "edet",
        "pair": {"dim": pair.dim, "n": pair.n, "m": pair.m},
        "results": dicts,
    }
    _emit(report, rows, cfg)
    return 0


def _cmd_density(args: argparse.Namespace) -> int:
    cfg = _config(args)
    pair = kio.load_pair(args.pair)
    report = mal.density_check(pair, tol_abs=cfg.tol_abs)
    payload = {
        "command": "density",
        "pair": {"dim": pair.dim, "n": pair.n, "m": pair.m},
        "verdict": report.verdict.value,
        "cov_det": report.cov_det,
        "tol_abs": report.tol_abs,
        "expected_dets": [
            {"k": k, "value": v} for k, v in enumerate(report.expected_dets, start=1)
        ],
        "consistent": report.consistent,
    }
    rows = [
        {
            "k": k,
            "expected_det": v,
            "cov_det": report.cov_det,
            "tol_abs": report.tol_abs,
            "verdict": report.verdict.value,
            "consistent": report.consistent,
        }
        for k, v in enumerate(report.expected_dets, start=1)
    ]
    _emit(payload, rows, cfg)
    return 0


def _cmd_mc(args: argparse.Namespace) -> int:
    cfg = _config(args)
    pair = kio.load_pair(args.pair)
    k = args.k
    closed = mal.expected_det(pair, k)  # validates k
    est = estimate_expected_det(
        pair, k, n_samples=cfg.samples, seed=cfg.seed, dump_path=args.dump
    )
    within = abs(est.mean - closed) <= 4 * est.stderr
    payload = {
        "command": "mc",
        "pair": {"dim": pair.dim, "n": pair.n, "m": pair.m},
        "k": k,
        "estimate": {
            "mean": est.mean,
            "stderr": est.stderr,
            "samples": est.samples,
            "seed": est.seed,
        },
        "closed_form": closed,
        "abs_error": abs(est.mean - closed),
        "within_4_stderr": within,
    }
    rows = [
        {
            "k": k,
            "mean": est.mean,
            "stderr": est.stderr,
            "samples": est.samples,
            "seed": est.seed,
            "closed_form": closed,
            "within_4_stderr": within,
        }
    ]
    _emit(payload, rows, cfg)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config(args)
    n = args.order
    if n < 2:
        raise ValueError(f"--order must be >= 2 for the inequality sweep, got {n}")
    constants = {2: 4.0, 3: 9.0 / 4.0, 4: 16.0 / 9.0}
    rows = []
    violations = 0
    min_ratio = float("inf")
    for trial in range(cfg.trials):
        seed = instance_seed(cfg.seed, 90, trial)
        pair = mal.random_pair(cfg.dim, n, n, seed)
        res = mal.covariance_inequality(pair, tol_rel=cfg.tol_rel)
        ratio = res.lhs / res.rhs if res.rhs > 0 else float("inf")
        min_ratio = min(min_ratio, ratio)
        row = {
            "trial": trial,
            "seed": seed,
            "lhs": res.lhs,
            "rhs": res.rhs,
            "ratio": ratio,
            "holds": res.holds,
        }
        if n in constants:
            e1 = mal.expected_det(pair, 1)
            bound = constants[n] * mal.cov_det(pair)
            scale = max(1.0, abs(e1), abs(bound))
            row["edet1"] = e1
            row["direct_bound"] = bound
            row["direct_holds"] = e1 >= bound - cfg.tol_rel * scale
            if not row["direct_holds"]:
                violations += 1
        if not res.holds:
            violations += 1
        rows.append(row)
    payload = {
        "command": "sweep",
        "config": {
            "order": n,
            "dim": cfg.dim,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "tol_rel": cfg.tol_rel,
        },
        "rows": rows,
        "min_ratio": min_ratio,
        "violations": violations,
        "passed": violations == 0,
    }
    _emit(payload, rows, cfg)
    return 0 if violations == 0 else 1


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if cfg.out_path is None:
        raise ValueError("gen requires an output path (-o PATH)")
    order = args.order
    if order < 1:
        raise ValueError(f"--order must be >= 1, got {order}")
    if args.kind == "tensor":
        t = random_symmetric(cfg.dim, order, cfg.seed)
        doc = kio.tensor_to_dict(t)
        doc["seed"] = cfg.seed
        with open(cfg.out_path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        order_g = args.order_g if args.order_g is not None else order
        if args.proportional is not None:
            if order_g != order:
                raise ValueError("--proportional requires equal orders for f and g")
            f = random_symmetric(cfg.dim, order, cfg.seed)
            pair = mal.MalliavinPair(f, f.scaled(args.proportional))
        else:
            if order_g < 1:
                raise ValueError(f"--order-g must be >= 1, got {order_g}")
            f = random_symmetric(cfg.dim, order, np.random.SeedSequence([cfg.seed, 0]))
            g = random_symmetric(cfg.dim, order_g, np.random.SeedSequence([cfg.seed, 1]))
            pair = mal.MalliavinPair(f, g)
        kio.save_pair(pair, cfg.out_path, seed=cfg.seed)
    sys.stdout.write(json.dumps({"written": cfg.out_path, "seed": cfg.seed}) + "\n")
    return 0


_DISPATCH = {
    "verify": _cmd_verify,
    "edet": _cmd_edet,
    "density": _cmd_density,
    "mc": _cmd_mc,
    "sweep": _cmd_sweep,
    "gen": _cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.subcommand](args)
    except (kio.SchemaError, ValueError, OSError) as exc:
        print(f"chaoskit {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
