"""Command-line entry point: ``fastcoreset <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .centers import CenterGenConfig, center_set_gen
from .core import ClusteringParams, InputError, cost_z
from .data import (
    gen_gaussian_mixture,
    load_coreset,
    load_points,
    save_coreset,
    save_points,
    save_report,
)
from .evaluation import STRATEGIES, EvalReport, bench, empirical_distortion
from .groups import GroupCoresetConfig, coreset_gen_group
from .importance import CoresetConfig, coreset_gen


def _params(args) -> ClusteringParams:
    return ClusteringParams(k=args.k, z=args.z, eps=getattr(args, "eps", 0.1),
                            delta=getattr(args, "delta", 0.1))


def cmd_gen_data(args) -> dict:
    pts = gen_gaussian_mixture(args.n, args.d, args.k_true, args.spread, args.sigma, args.seed)
    save_points(pts, args.out)
    return {"n": pts.n, "d": pts.d, "out": args.out}


def cmd_center_set(args) -> dict:
    U = load_points(args.inp)
    cfg = CenterGenConfig(alpha=args.alpha, beta=args.beta, eps0=args.eps0, delta0=args.delta0, seed=args.seed)
    res = center_set_gen(U, args.k, args.z, cfg)
    save_points(res.V.centers, args.out)
    return {
        "num_centers": res.V.k,
        "rounds": res.rounds,
        "radii": res.radii,
        "cost": cost_z(U, res.V, args.z),
        "out": args.out,
    }


def cmd_coreset(args) -> dict:
    U = load_points(args.inp)
    params = _params(args)
    if args.method == "is":
        coreset, diag = coreset_gen(U, params, CoresetConfig(N=args.n_samples, seed=args.seed))
    else:
        coreset, diag = coreset_gen_group(U, params, GroupCoresetConfig(seed=args.seed))
    save_coreset(coreset, args.out)
    diag = dict(diag)
    diag["out"] = args.out
    return diag


def cmd_evaluate(args) -> dict:
    U = load_points(args.inp)
    coreset = load_coreset(args.coreset)
    params = ClusteringParams(k=args.k, z=args.z)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    stats = empirical_distortion(U, coreset, params, args.trials, strategies, args.seed)
    report = EvalReport(method=args.method, n=U.n, d=U.d, k=args.k, z=args.z, eps=params.eps,
                        N=coreset.n, distortion=asdict(stats), strategies=strategies, seed=args.seed,
                        extra={"coreset_total_weight": float(coreset.weights.sum())})
    if args.report:
        save_report(report, args.report)
    return report.to_dict()


def cmd_bench(args) -> dict:
    U = load_points(args.inp)
    params = _params(args)
    cfg = CoresetConfig(N=args.n_samples, seed=args.seed) if args.method == "is" else GroupCoresetConfig(seed=args.seed)
    report = bench(U, params, cfg, repeats=args.repeats, baseline=args.baseline, method=args.method)
    if args.report:
        save_report(report, args.report)
    return report.to_dict()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastcoreset", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic Gaussian mixture")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--k-true", type=int, required=True)
    g.add_argument("--spread", type=float, default=10.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    c = sub.add_parser("center-set", help="successive-sampling center set")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--z", type=float, default=2.0)
    c.add_argument("--alpha", type=float, default=8.0)
    c.add_argument("--beta", type=float, default=0.5)
    c.add_argument("--eps0", type=float, default=0.1)
    c.add_argument("--delta0", type=float, default=0.01)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_center_set)

    s = sub.add_parser("coreset", help="build a weighted coreset")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--method", choices=("is", "group"), default="is")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--z", type=float, default=2.0)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--n-samples", type=int, default=None, help="override the sample count N (is only)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_coreset)

    e = sub.add_parser("evaluate", help="empirical distortion of a coreset")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--coreset", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--z", type=float, default=2.0)
    e.add_argument("--trials", type=int, default=50)
    e.add_argument("--strategies", default=",".join(STRATEGIES))
    e.add_argument("--method", default="unknown", help="method tag recorded in the report")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--report", default=None)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="time the sketch pipeline against the exact baseline")
    b.add_argument("--in", dest="inp", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--z", type=float, default=2.0)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--method", choices=("is", "group"), default="is")
    b.add_argument("--n-samples", type=int, default=None)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--baseline", choices=("sketch", "exact", "both"), default="both")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--report", default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    json.dump(summary, sys.stdout, indent=2, sort_keys=True, default=float)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
