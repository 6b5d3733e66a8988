"""Command-line front end: simulate, cf-check, rip, pdf.

Exit codes: 0 success, 1 hard-invariant violation (KKT budget), 2 bad
configuration or parameters, 3 exclusion budget exceeded, 4 strict scoring
failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import distributions, harness
from .linmodel import (DimensionError, EnumerationCapError, build_bernoulli_model,
                       sylvester_hadamard, rip_constant)

EXIT_OK = 0
EXIT_HARD_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_EXCLUSION = 3
EXIT_STRICT = 4


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment JSON config")
    parser.add_argument("--L", type=int, default=None, help="override replicate count")
    parser.add_argument("--seed", type=int, default=None, help="override seed")
    parser.add_argument("--tau", type=float, default=None, help="override tau")
    parser.add_argument("--sigma", type=float, default=None, help="override sigma")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for the replicate phase")
    parser.add_argument("--emit-samples", action="store_true",
                        help="also write samples_<component>.csv")
    parser.add_argument("--strict", action="store_true",
                        help="nonzero exit when reported CF scoring fails")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")


def _load_config(args) -> harness.ExperimentConfig:
    config = harness.load_config(args.config)
    if args.L is not None:
        config.L = args.L
    if args.seed is not None:
        config.seed = args.seed
    if args.tau is not None:
        config.tau = args.tau
    if args.sigma is not None:
        config.sigma = args.sigma
    config.validate()
    return config


def _strict_failures(report: harness.ExperimentReport) -> list[str]:
    failures = []
    bad_exact = [r for r in report.cf_rows if r.gap_exact > 1e-12]
    if bad_exact:
        failures.append(f"{len(bad_exact)} grid points with exact-identity gap > 1e-12")
    ball = [r for r in report.cf_rows if r.kind == "ball"]
    if ball:
        L = report.solver_stats["included"]
        bound = 4.0 / math.sqrt(L)
        ok = sum(1 for r in ball if r.gap_mc <= bound)
        if ok < math.ceil(0.95 * len(ball)):
            failures.append(
                f"Monte-Carlo CF gap <= 4/sqrt(L) at only {ok}/{len(ball)} ball points")
    return failures


def _run_and_score(args, write_histograms: bool) -> int:
    try:
        config = _load_config(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = harness.run_experiment(config, workers=max(1, args.threads))
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except harness.ExclusionBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXCLUSION

    outdir = Path(args.out)
    harness.write_report_files(report, outdir, emit_samples=args.emit_samples,
                               include_histograms=write_histograms)
    if not args.no_figures:
        from . import figures
        figures.render_report_figures(report, outdir, include_histograms=write_histograms)

    print(f"wrote {outdir}/report.json "
          f"(L={report.solver_stats['included']}, "
          f"excluded={report.solver_stats['excluded']}, "
          f"wall={report.wall_clock_s:.2f}s)")
    for comp in report.components:
        ks = "n/a" if comp.ks.distance is None else f"{comp.ks.distance:.4f}"
        flag = " [insufficient]" if comp.ks.insufficient else ""
        print(f"  component {comp.component}: KS={ks}{flag} "
              f"zero_fraction={comp.distribution.zero_fraction:.4f} "
              f"(theory {comp.point_mass:.4f})")
    worst_exact = max((r.gap_exact for r in report.cf_rows), default=0.0)
    worst_mc = max((r.gap_mc for r in report.cf_rows), default=0.0)
    print(f"  cf grid: max exact gap {worst_exact:.3e}, max mc gap {worst_mc:.3e}")

    if not report.hard_invariants_ok():
        print(f"hard invariant violated: max KKT residual "
              f"{report.solver_stats['max_kkt_residual']:.3e} > {harness.KKT_BUDGET:.1e}",
              file=sys.stderr)
        return EXIT_HARD_INVARIANT
    if args.strict:
        failures = _strict_failures(report)
        if failures:
            for msg in failures:
                print(f"strict: {msg}", file=sys.stderr)
            return EXIT_STRICT
    return EXIT_OK


def _cmd_simulate(args) -> int:
    return _run_and_score(args, write_histograms=True)


def _cmd_cf_check(args) -> int:
    return _run_and_score(args, write_histograms=False)


def _cmd_rip(args) -> int:
    try:
        if args.hadamard is not None:
            A = sylvester_hadamard(args.hadamard) / math.sqrt(args.hadamard)
        else:
            M, N = args.bernoulli
            x = np.zeros(N)
            A = build_bernoulli_model(M, N, x, 1.0, 1.0, seed=args.seed).A
        kmax = args.K if args.K is not None else min(4, A.shape[1])
        print("K,delta_K")
        for K in range(1, kmax + 1):
            print(f"{K},{format(rip_constant(A, K, cap=args.cap), '.17g')}")
    except (DimensionError, EnumerationCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_pdf(args) -> int:
    try:
        if args.law == "orthogonal":
            law = distributions.orthogonal_law(args.location, args.sigma, args.tau)
        elif args.law == "transformed":
            law = distributions.transformed_law(args.location, args.sigma,
                                                args.w_kk, args.tau)
        else:
            law = distributions.ml_law(args.location, args.sigma ** 2)
        lo, hi = args.range
        if not lo < hi or args.points < 2:
            raise ValueError("need range lo < hi and at least 2 points")
        grid = np.linspace(lo, hi, args.points)
        grid = grid[grid != 0] if law.tau > 0 else grid
        dens = distributions.pdf(grid, law)
    except (distributions.InvalidLawError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lines = [f"# law={args.law} location={args.location} sigma={args.sigma} "
             f"tau={law.tau} point_mass_zero={format(distributions.point_mass_zero(law), '.17g')}",
             "v,density"]
    for v, d in zip(grid, dens):
        lines.append(f"{format(v, '.17g')},{format(d, '.17g')}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lassodist",
        description="finite-sample lasso distribution experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo experiment")
    _add_overrides(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_cf = sub.add_parser("cf-check", help="run the CF identity comparison")
    _add_overrides(p_cf)
    p_cf.set_defaults(func=_cmd_cf_check)

    p_rip = sub.add_parser("rip", help="restricted isometry constants by brute force")
    src = p_rip.add_mutually_exclusive_group(required=True)
    src.add_argument("--hadamard", type=int, metavar="M")
    src.add_argument("--bernoulli", type=int, nargs=2, metavar=("M", "N"))
    p_rip.add_argument("--seed", type=int, default=0)
    p_rip.add_argument("--K", type=int, default=None, help="largest sparsity (default min(4, N))")
    p_rip.add_argument("--cap", type=int, default=10**6, help="support enumeration cap")
    p_rip.set_defaults(func=_cmd_rip)

    p_pdf = sub.add_parser("pdf", help="tabulate a marginal law")
    p_pdf.add_argument("--law", choices=["orthogonal", "transformed", "ml"], required=True)
    p_pdf.add_argument("--location", type=float, required=True,
                       help="x_k (orthogonal) or w_k.x (transformed) or the mean (ml)")
    p_pdf.add_argument("--sigma", type=float, required=True)
    p_pdf.add_argument("--tau", type=float, default=0.0)
    p_pdf.add_argument("--w-kk", type=float, default=1.0, dest="w_kk")
    p_pdf.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p_pdf.add_argument("--points", type=int, default=201)
    p_pdf.add_argument("--out", default=None, help="CSV path (default stdout)")
    p_pdf.set_defaults(func=_cmd_pdf)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
