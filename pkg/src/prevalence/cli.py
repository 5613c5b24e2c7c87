"""Command-line front end: density grids, summaries, and baselines as CSV/JSON.

Exit status: 0 on success, 2 on argument validation failure (the message names
the violated invariant), 3 when the computation itself fails (vanishing mass,
rejection budget, unusable support).
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ComputationError
from .inference import CalibrationCounts, McConfig, PriorSet, SurveyCounts
from .numerics import ShapePair
from .pipeline import EstimateResult, EstimateSpec, run_estimate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prevalence",
        description=(
            "Posterior prevalence density from an imperfect-test survey, "
            "marginalized over test characteristics estimated from calibration counts."
        ),
    )
    parser.add_argument("--k", type=int, required=True, help="positive tests in the survey")
    parser.add_argument("--n", type=int, required=True, help="subjects tested in the survey")
    parser.add_argument("--ku", type=int, required=True, help="false positives among known negatives")
    parser.add_argument("--nu", type=int, required=True, help="known negative samples")
    parser.add_argument("--kv", type=int, required=True, help="true positives among known positives")
    parser.add_argument("--nv", type=int, required=True, help="known positive samples")
    parser.add_argument("--alpha-u", type=float, default=1.0, help="beta prior shape a on the false-positive rate (default 1)")
    parser.add_argument("--beta-u", type=float, default=1.0, help="beta prior shape b on the false-positive rate (default 1)")
    parser.add_argument("--alpha-v", type=float, default=1.0, help="beta prior shape a on the sensitivity (default 1)")
    parser.add_argument("--beta-v", type=float, default=1.0, help="beta prior shape b on the sensitivity (default 1)")
    parser.add_argument("--samples", type=int, default=10_000, help="Monte Carlo sample count N (default 10000)")
    parser.add_argument("--grid", type=int, default=10_000, help="grid size M: densities at j/M, j=0..M (default 10000)")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--reweight", type=float, default=None, help="optional population-reweighting factor on theta")
    parser.add_argument("--population", type=int, default=None, help="optional population size for infected-count output")
    parser.add_argument("--level", type=float, default=0.95, help="credible level (default 0.95)")
    parser.add_argument("--format", choices=("csv", "json"), default="json", help="output format (default json)")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--oracle", action="store_true", help="use deterministic quadrature instead of Monte Carlo")
    return parser


def spec_from_args(args: argparse.Namespace) -> EstimateSpec:
    return EstimateSpec(
        survey=SurveyCounts(k=args.k, n=args.n),
        calibration=CalibrationCounts(k_u=args.ku, n_u=args.nu, k_v=args.kv, n_v=args.nv),
        priors=PriorSet(
            prior_u=ShapePair(args.alpha_u, args.beta_u),
            prior_v=ShapePair(args.alpha_v, args.beta_v),
        ),
        mc=McConfig(n_samples=args.samples, grid_m=args.grid, seed=args.seed),
        level=args.level,
        reweight_factor=args.reweight,
        population=args.population,
        use_quadrature=args.oracle,
    )


def result_document(spec: EstimateSpec, result: EstimateResult) -> dict:
    """The JSON document; field names are part of the CLI contract."""
    doc = {
        "survey": {"k": spec.survey.k, "n": spec.survey.n},
        "calibration": {
            "k_u": spec.calibration.k_u,
            "n_u": spec.calibration.n_u,
            "k_v": spec.calibration.k_v,
            "n_v": spec.calibration.n_v,
        },
        "priors": {
            "u": {"a": spec.priors.prior_u.a, "b": spec.priors.prior_u.b},
            "v": {"a": spec.priors.prior_v.a, "b": spec.priors.prior_v.b},
        },
        "mc": {
            "n_samples": spec.mc.n_samples,
            "grid_m": spec.mc.grid_m,
            "seed": spec.mc.seed,
            "oracle": spec.use_quadrature,
        },
        "grid": {
            "m": result.grid.grid_m,
            "densities": [float(x) for x in result.grid.densities],
        },
        "summary": {
            "mean": result.summary.mean,
            "median": result.summary.median,
            "ci_low": result.summary.ci_low,
            "ci_high": result.summary.ci_high,
            "level": result.summary.level,
        },
        "delta": {
            "point": result.delta.point,
            "se": result.delta.se,
            "ci_low": result.delta.ci_low,
            "ci_high": result.delta.ci_high,
        },
        "diagnostics": {
            "rejection_rate": result.rejection_rate,
            "runtime_ms": result.runtime_ms,
            "seed": result.seed,
        },
    }
    if result.counts is not None:
        doc["counts"] = {
            "low": result.counts.low,
            "median": result.counts.median,
            "high": result.counts.high,
        }
    return doc


def density_csv(result: EstimateResult) -> str:
    lines = ["theta,density"]
    thetas = result.grid.thetas
    densities = result.grid.densities
    for j in range(result.grid.grid_m + 1):
        lines.append(f"{float(thetas[j])!r},{float(densities[j])!r}")
    return "\n".join(lines) + "\n"


def _bps(x: float) -> str:
    return f"{x * 10_000:.1f} bps"


def _pct(x: float) -> str:
    return f"{x * 100:.2f}%"


def summary_text(spec: EstimateSpec, result: EstimateResult) -> str:
    s = result.summary
    d = result.delta
    level_pct = f"{s.level * 100:g}%"
    lines = [
        f"median    {_pct(s.median)} ({_bps(s.median)})",
        f"mean      {_pct(s.mean)} ({_bps(s.mean)})",
        f"{level_pct} CI    [{_pct(s.ci_low)}, {_pct(s.ci_high)}]"
        f" ([{_bps(s.ci_low)}, {_bps(s.ci_high)}])",
        f"delta     point {_pct(d.point)}, se {_pct(d.se)},"
        f" CI [{_pct(d.ci_low)}, {_pct(d.ci_high)}]",
    ]
    if result.counts is not None:
        c = result.counts
        lines.append(f"infected  {c.low:,} - {c.high:,} (median {c.median:,})")
    lines.append(
        f"diag      rejection_rate={result.rejection_rate:.3g}"
        f" runtime_ms={result.runtime_ms:.0f} seed={result.seed}"
        f" N={spec.mc.n_samples} M={spec.mc.grid_m}"
    )
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
    except ValueError as exc:
        print(f"invalid arguments: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_estimate(spec)
    except ComputationError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 3

    if args.format == "json":
        payload = json.dumps(result_document(spec, result), indent=2) + "\n"
    else:
        payload = density_csv(result)
        print(summary_text(spec, result), end="", file=sys.stderr)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
