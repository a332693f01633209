"""Command-line interface.

Exit-code contract: 0 = accept / success, 1 = reject / failed assertion /
infeasible calibration, 2 = usage or configuration error.  Identical command
line + seed + constants file produces byte-identical outputs, and every
output file embeds its full resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import exact
from .constants import CONSTANTS_ENV_VAR, resolve_constants, save_constants
from .distributions import InstanceSpec, Pmf, make_instance
from .harness import (
    CalibrationError,
    acceptance_sweep,
    barrier_experiment,
    calibrate,
    correctness_experiment,
    replicability_experiment,
    write_report_json,
    write_rows_csv,
    CSV_COLUMNS,
)
from .rng import DEFAULT_SEED, ROLE_INTERNAL, ROLE_SAMPLE, SeedSplit, stream
from .tester import TesterParams, run_tester

__all__ = ["main"]


def _parse_instance(text: str) -> InstanceSpec:
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        return InstanceSpec.uniform()
    if kind == "point-mass":
        return InstanceSpec.heavy(1.0)
    if kind == "paired-bias":
        return InstanceSpec.paired_bias(float(rest))
    if kind == "heavy":
        return InstanceSpec.heavy(float(rest))
    if kind == "local-swap":
        xi, _, bits = rest.partition(":")
        return InstanceSpec.local_swap(float(xi), [int(b) for b in bits])
    raise ValueError(
        f"unknown instance {text!r} (use uniform, point-mass, "
        "paired-bias:XI, heavy:PMASS, or local-swap:XI:BITS)"
    )


def _load_pmf_file(path: str) -> Pmf:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return Pmf.from_json(text)
    return Pmf.from_text(text)


def _parse_grid(text: str) -> list[float]:
    lo, hi, count = text.split(":")
    return list(np.linspace(float(lo), float(hi), int(count)))


def _params(args, constants) -> TesterParams:
    return TesterParams.from_constants(args.n, args.eps, args.rho, constants)


def cmd_test(args) -> int:
    constants = resolve_constants(args.constants)
    if args.pmf_file:
        pmf = _load_pmf_file(args.pmf_file)
        if pmf.n != args.n:
            raise ValueError(f"--n {args.n} disagrees with pmf file domain {pmf.n}")
        instance_desc = args.pmf_file
    else:
        spec = _parse_instance(args.instance)
        pmf = make_instance(spec, args.n)
        instance_desc = spec.describe()
    params = _params(args, constants)
    seeds = SeedSplit(
        internal=stream(args.seed, ROLE_INTERNAL),
        sample=stream(args.seed, ROLE_SAMPLE),
    )
    verdict = run_tester(pmf, params, seeds)
    payload = verdict.to_dict()
    payload["config"] = {
        "instance": instance_desc, "seed": args.seed, "eps": args.eps,
        "rho": args.rho, "constants": constants,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if verdict.accept else 1


def _emit(report, rows, columns, args, label) -> None:
    if args.out_prefix:
        write_rows_csv(args.out_prefix + ".csv", columns, rows, report["config_echo"])
        write_report_json(args.out_prefix + ".json", report)
    brief = {k: v for k, v in report.items() if k != "config_echo"}
    print(f"{label}: {json.dumps(brief, sort_keys=True)}")


def cmd_experiment(args) -> int:
    constants = resolve_constants(args.constants)
    status = 0
    if args.subkind == "correctness":
        params = _params(args, constants)
        spec = _parse_instance(args.instance)
        rep = correctness_experiment(spec, params, args.trials, args.seed,
                                     expect=args.expect, workers=args.workers)
        _emit(rep.to_dict(), rep.per_trial, CSV_COLUMNS, args, "correctness")
        if args.assert_rate is not None and rep.rate < args.assert_rate:
            status = 1
    elif args.subkind == "replicability":
        params = _params(args, constants)
        rep = replicability_experiment(None, params, args.pairs, args.seed,
                                       workers=args.workers)
        _emit(rep.to_dict(), rep.per_trial, CSV_COLUMNS, args, "replicability")
        if args.assert_rate is not None and rep.rate < args.assert_rate:
            status = 1
    elif args.subkind == "sweep":
        params = _params(args, constants)
        curve = acceptance_sweep(params, _parse_grid(args.grid), args.trials,
                                 args.seed, fixed_internal=args.fixed_internal,
                                 workers=args.workers)
        rows = [
            {"experiment_id": "sweep", "grid_index": g, "xi": repr(xi),
             "trials": curve.trials_per_point, "rate": repr(acc),
             "wilson_lo": repr(iv[0]), "wilson_hi": repr(iv[1])}
            for g, (xi, acc, iv) in enumerate(zip(curve.xi_grid, curve.acc_estimates, curve.intervals))
        ]
        columns = ["experiment_id", "grid_index", "xi", "trials", "rate", "wilson_lo", "wilson_hi"]
        _emit(curve.to_dict(), rows, columns, args, "sweep")
    elif args.subkind == "barrier":
        if args.m_grid:
            m_grid = [int(x) for x in args.m_grid.split(",")]
        else:
            base = 4 * math.sqrt(args.n)
            m_grid = [int(round(base * 2**k)) for k in range(5)]
        result = barrier_experiment(args.stat, args.n, m_grid, args.runs_per_m,
                                    args.seed, eps=args.eps, workers=args.workers)
        rows = [
            {"experiment_id": f"barrier-{args.stat}", "m": r.m, "runs": r.runs,
             "mean": repr(r.mean), "sd": repr(r.sd), "gap": repr(r.gap),
             "sd_over_gap": repr(r.sd_over_gap)}
            for r in result.rows
        ]
        columns = ["experiment_id", "m", "runs", "mean", "sd", "gap", "sd_over_gap"]
        _emit(result.to_dict(), rows, columns, args, f"barrier-{args.stat} slope={result.slope:.4f}")
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown experiment {args.subkind!r}")
    return status


def cmd_calibrate(args) -> int:
    if args.default_grid:
        grid = [(500, 0.3), (1000, 0.25), (2000, 0.2)]
    elif args.grid:
        grid = []
        for part in args.grid.split(","):
            n_text, _, eps_text = part.partition(":")
            grid.append((int(n_text), float(eps_text)))
    else:
        raise ValueError("pass --default-grid or --grid N:EPS[,N:EPS...]")
    constants, provenance = calibrate(grid, args.rho, args.trials, args.seed,
                                      c_m1=args.c_m1, c_m2=args.c_m2,
                                      c_m0=args.c_m0, workers=args.workers)
    if args.out:
        save_constants(args.out, constants, provenance)
    for line in provenance:
        print(f"# {line}")
    print(json.dumps(constants, sort_keys=True))
    return 0


def cmd_oracle(args) -> int:
    if args.oracle_kind == "reduction-check":
        scan = exact.reduction_check(args.max_n, args.max_denominator)
        print(json.dumps({
            "num_pmfs": scan.num_pmfs, "num_pairs": scan.num_pairs,
            "max_uniform_error": scan.max_uniform_error,
            "min_margin": scan.min_margin, "passed": scan.passed,
        }, sort_keys=True))
        return 0 if scan.passed else 1
    if args.oracle_kind == "mi-grid":
        lambdas = [float(x) for x in args.lambdas.split(",")]
        epss = [float(x) for x in args.epss.split(",")]
        deltas = [float(x) for x in args.deltas.split(",")]
        rows = []
        for lam in lambdas:
            for eps in epss:
                for delta in deltas:
                    d = exact.pair_joint(lam, eps - delta, eps)
                    mi = exact.mutual_info_pair(d)
                    rows.append({
                        "lambda": repr(lam), "eps0": repr(eps - delta),
                        "eps1": repr(eps), "K": d.truncation,
                        "tail_mass": repr(d.tail_mass),
                        "mi_nats": repr(mi.value),
                        "error_budget": repr(mi.error_budget),
                    })
        columns = ["lambda", "eps0", "eps1", "K", "tail_mass", "mi_nats", "error_budget"]
        config = {"experiment": "mi-grid", "lambdas": lambdas, "epss": epss, "deltas": deltas}
        if args.out:
            write_rows_csv(args.out, columns, rows, config)
        for row in rows:
            print(json.dumps(row, sort_keys=True))
        return 0
    raise ValueError(f"unknown oracle {args.oracle_kind!r}")  # pragma: no cover


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repunif",
        description="Replicable uniformity testing: testers, experiments, and exact oracles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_eps=True):
        p.add_argument("--n", type=int, required=True, help="domain size")
        if need_eps:
            p.add_argument("--eps", type=float, required=True, help="TV tolerance")
            p.add_argument("--rho", type=float, required=True, help="replicability parameter")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--constants", default=None,
                       help=f"constants file (default: ${CONSTANTS_ENV_VAR} or packaged)")

    p_test = sub.add_parser("test", help="run the tester once")
    add_common(p_test)
    p_test.add_argument("--instance", default="uniform")
    p_test.add_argument("--pmf-file", default=None)
    p_test.set_defaults(func=cmd_test)

    p_exp = sub.add_parser("experiment", help="Monte Carlo experiments")
    exp_sub = p_exp.add_subparsers(dest="subkind", required=True)

    p_corr = exp_sub.add_parser("correctness")
    add_common(p_corr)
    p_corr.add_argument("--instance", default="uniform")
    p_corr.add_argument("--expect", choices=["accept", "reject"], default="accept")
    p_corr.add_argument("--trials", type=int, default=400)
    p_corr.add_argument("--workers", type=int, default=1)
    p_corr.add_argument("--assert-rate", type=float, default=None)
    p_corr.add_argument("--out-prefix", default=None)
    p_corr.set_defaults(func=cmd_experiment)

    p_rep = exp_sub.add_parser("replicability")
    add_common(p_rep)
    p_rep.add_argument("--pairs", type=int, default=1000)
    p_rep.add_argument("--workers", type=int, default=1)
    p_rep.add_argument("--assert-rate", type=float, default=None)
    p_rep.add_argument("--out-prefix", default=None)
    p_rep.set_defaults(func=cmd_experiment)

    p_sweep = exp_sub.add_parser("sweep")
    add_common(p_sweep)
    p_sweep.add_argument("--grid", default=None, help="lo:hi:count (default 0:2*eps:11)")
    p_sweep.add_argument("--trials", type=int, default=200, dest="trials")
    p_sweep.add_argument("--fixed-internal", action="store_true")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out-prefix", default=None)
    p_sweep.set_defaults(func=cmd_experiment)

    p_bar = exp_sub.add_parser("barrier")
    p_bar.add_argument("--stat", choices=["collision", "chi2", "tvstat"], required=True)
    p_bar.add_argument("--n", type=int, required=True)
    p_bar.add_argument("--eps", type=float, default=0.5)
    p_bar.add_argument("--m-grid", default=None, help="comma-separated (default 4*sqrt(n)*2^k, k<5)")
    p_bar.add_argument("--runs-per-m", type=int, default=2000)
    p_bar.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_bar.add_argument("--constants", default=None)
    p_bar.add_argument("--workers", type=int, default=1)
    p_bar.add_argument("--out-prefix", default=None)
    p_bar.set_defaults(func=cmd_experiment)

    p_cal = sub.add_parser("calibrate", help="derive constants from pilot runs")
    p_cal.add_argument("--default-grid", action="store_true")
    p_cal.add_argument("--grid", default=None, help="N:EPS[,N:EPS...]")
    p_cal.add_argument("--rho", type=float, required=True)
    p_cal.add_argument("--trials", type=int, default=200)
    p_cal.add_argument("--c-m1", type=float, default=1.0)
    p_cal.add_argument("--c-m2", type=float, default=1.0)
    p_cal.add_argument("--c-m0", type=float, default=3.0)
    p_cal.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_cal.add_argument("--workers", type=int, default=1)
    p_cal.add_argument("--out", default=None)
    p_cal.set_defaults(func=cmd_calibrate)

    p_orc = sub.add_parser("oracle", help="exact small-instance oracles")
    orc_sub = p_orc.add_subparsers(dest="oracle_kind", required=True)
    p_red = orc_sub.add_parser("reduction-check")
    p_red.add_argument("--max-n", type=int, default=4)
    p_red.add_argument("--max-denominator", type=int, default=8)
    p_red.set_defaults(func=cmd_oracle)
    p_mi = orc_sub.add_parser("mi-grid")
    p_mi.add_argument("--lambdas", default="0.1,0.5,1")
    p_mi.add_argument("--epss", default="0.1,0.2")
    p_mi.add_argument("--deltas", default="0.01,0.02")
    p_mi.add_argument("--out", default=None)
    p_mi.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "subkind", None) == "sweep" and args.grid is None:
        args.grid = f"0:{2 * args.eps}:11"
    try:
        return args.func(args)
    except CalibrationError as err:
        print(f"calibration infeasible: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
