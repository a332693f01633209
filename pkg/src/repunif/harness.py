"""Monte Carlo experiment engine.

Estimates the probabilities in the correctness and replicability protocols,
sweeps acceptance probability over the paired-bias family, runs the
heavy-element barrier studies for the baseline statistics, and calibrates
the tester constants.

Determinism contract: every trial's randomness is a pure function of
``(master_seed, experiment tag, trial index, run index, role)``, reports are
assembled in trial order, and the worker count never changes any output
byte.  Trials are independent work items; the report accumulator is a plain
ordered merge.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    InstanceSpec,
    Pmf,
    draw_batch,
    draw_poissonized_batch,
    make_instance,
)
from .rng import ROLE_INSTANCE, ROLE_INTERNAL, ROLE_SAMPLE, SeedSplit, stream
from .stats import chi2_statistic, collision_statistic, exact_uniform_mean, expectation_gap, tv_statistic
from .tester import TesterParams, Verdict, derive_sizes, run_tester

# Experiment tags keep the derived streams of different experiments disjoint.
EXP_CORRECTNESS = 1
EXP_REPLICABILITY = 2
EXP_SWEEP = 3
EXP_BARRIER = 4
EXP_CALIBRATE = 5

CSV_COLUMNS = [
    "experiment_id", "trial", "run", "instance_kind", "xi", "n", "m", "m0",
    "statistic", "threshold", "r0", "decision", "agree",
]

__all__ = [
    "ExperimentReport",
    "SweepCurve",
    "BarrierRow",
    "BarrierResult",
    "CalibrationError",
    "wilson_interval",
    "PairedBiasPrior",
    "FixedPrior",
    "correctness_experiment",
    "replicability_experiment",
    "acceptance_sweep",
    "barrier_experiment",
    "calibrate",
    "write_rows_csv",
    "write_report_json",
]


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a Bernoulli rate."""
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2 * trials)
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials))
    return (max(0.0, (center - half) / denom), min(1.0, (center + half) / denom))


@dataclass
class ExperimentReport:
    """Trial tally with a Wilson interval and the full config echo."""

    trials: int
    successes: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    config_echo: dict
    per_trial: list[dict] | None = None

    @classmethod
    def from_counts(cls, successes, trials, config, per_trial=None):
        lo, hi = wilson_interval(successes, trials)
        return cls(trials=trials, successes=successes, rate=successes / trials,
                   wilson_lo=lo, wilson_hi=hi, config_echo=config, per_trial=per_trial)

    def to_dict(self, include_trials: bool = False) -> dict:
        d = {
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "wilson_lo": self.wilson_lo,
            "wilson_hi": self.wilson_hi,
            "config_echo": self.config_echo,
        }
        if include_trials and self.per_trial is not None:
            d["per_trial"] = self.per_trial
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class SweepCurve:
    """Acceptance-probability estimates over a bias grid."""

    xi_grid: list[float]
    acc_estimates: list[float]
    trials_per_point: int
    intervals: list[tuple[float, float]]
    config_echo: dict

    def to_dict(self) -> dict:
        return {
            "xi_grid": self.xi_grid,
            "acc_estimates": self.acc_estimates,
            "trials_per_point": self.trials_per_point,
            "intervals": [list(iv) for iv in self.intervals],
            "config_echo": self.config_echo,
        }


# ---------------------------------------------------------------------------
# Priors over instances (picklable callables for the replicability protocol)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairedBiasPrior:
    """Draw paired-bias instances with xi uniform on [0, xi_max].

    With ``xi_max = 2 eps`` the TV distance from uniform spans exactly
    [0, eps], the gap region of the testing definition.
    """

    xi_max: float

    def __call__(self, rng: np.random.Generator) -> InstanceSpec:
        return InstanceSpec.paired_bias(float(rng.uniform(0.0, self.xi_max)))


@dataclass(frozen=True)
class FixedPrior:
    spec: InstanceSpec

    def __call__(self, rng: np.random.Generator) -> InstanceSpec:
        return self.spec


# ---------------------------------------------------------------------------
# Worker functions (module level so process pools can pickle them)
# ---------------------------------------------------------------------------


def _verdict_row(experiment_id: str, trial: int, run, spec: InstanceSpec, v: Verdict) -> dict:
    return {
        "experiment_id": experiment_id,
        "trial": trial,
        "run": "" if run is None else run,
        "instance_kind": spec.kind,
        "xi": "" if spec.xi is None else repr(spec.xi),
        "n": v.n,
        "m": v.m,
        "m0": v.m0,
        "statistic": repr(v.statistic),
        "threshold": repr(v.threshold),
        "r0": repr(v.r0),
        "decision": v.decision,
        "agree": "",
    }


def _correctness_trial(args) -> dict:
    pmf, spec, params, master_seed, trial = args
    seeds = SeedSplit(
        internal=stream(master_seed, EXP_CORRECTNESS, trial, ROLE_INTERNAL),
        sample=stream(master_seed, EXP_CORRECTNESS, trial, ROLE_SAMPLE),
    )
    v = run_tester(pmf, params, seeds)
    return _verdict_row("correctness", trial, None, spec, v)


def _replicability_pair(args) -> list[dict]:
    prior, params, master_seed, pair, shared_sample_seeds = args
    instance_rng = stream(master_seed, EXP_REPLICABILITY, pair, ROLE_INSTANCE)
    spec = prior(instance_rng)
    pmf = make_instance(spec, params.n)
    rows = []
    decisions = []
    for run in (0, 1):
        sample_run = 0 if shared_sample_seeds else run
        seeds = SeedSplit(
            internal=stream(master_seed, EXP_REPLICABILITY, pair, ROLE_INTERNAL),
            sample=stream(master_seed, EXP_REPLICABILITY, pair, sample_run, ROLE_SAMPLE),
        )
        v = run_tester(pmf, params, seeds)
        decisions.append(v.decision)
        rows.append(_verdict_row("replicability", pair, run, spec, v))
    agree = int(decisions[0] == decisions[1])
    for row in rows:
        row["agree"] = agree
    return rows


def _sweep_trial(args) -> bool:
    pmf, params, master_seed, grid_index, trial, fixed_internal = args
    if fixed_internal:
        internal = stream(master_seed, EXP_SWEEP, ROLE_INTERNAL)
    else:
        internal = stream(master_seed, EXP_SWEEP, grid_index, trial, ROLE_INTERNAL)
    seeds = SeedSplit(
        internal=internal,
        sample=stream(master_seed, EXP_SWEEP, grid_index, trial, ROLE_SAMPLE),
    )
    return run_tester(pmf, params, seeds).accept


def _barrier_point(args) -> list[float]:
    """All runs for one (statistic, m) grid point; each run owns a stream."""
    pmf, kind, m, runs, master_seed, grid_index = args
    values = []
    for run in range(runs):
        rng = stream(master_seed, EXP_BARRIER, grid_index, run, ROLE_SAMPLE)
        if kind == "collision":
            values.append(float(collision_statistic(draw_batch(pmf, m, rng))))
        elif kind == "chi2":
            values.append(chi2_statistic(draw_poissonized_batch(pmf, m, rng), m))
        elif kind == "tvstat":
            values.append(tv_statistic(draw_batch(pmf, m, rng)))
        else:
            raise ValueError(f"unknown barrier statistic {kind!r}")
    return values


def _smedian_draw(args) -> float:
    pmf, m, m0, master_seed, pilot, side, trial = args
    rng = stream(master_seed, EXP_CALIBRATE, pilot, side, trial, ROLE_SAMPLE)
    values = sorted(tv_statistic(draw_batch(pmf, m, rng)) for _ in range(m0))
    return values[m0 // 2]


def _map_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _params_echo(params: TesterParams) -> dict:
    m, m0 = derive_sizes(params)
    return {
        "n": params.n, "eps": params.eps, "rho": params.rho,
        "c_m1": params.c_m1, "c_m2": params.c_m2, "c_m0": params.c_m0,
        "c_gap": params.c_gap, "m": m, "m0": m0,
    }


def correctness_experiment(
    instance: InstanceSpec,
    params: TesterParams,
    trials: int,
    master_seed: int,
    expect: str = "accept",
    workers: int = 1,
) -> ExperimentReport:
    """Estimate the probability the tester gives the declared answer.

    ``expect`` is the caller-declared correct decision for the instance
    ("accept" for uniform-family instances, "reject" for far ones).
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    if expect not in ("accept", "reject"):
        raise ValueError("expect must be 'accept' or 'reject'")
    pmf = make_instance(instance, params.n)
    jobs = [(pmf, instance, params, master_seed, t) for t in range(trials)]
    rows = _map_jobs(_correctness_trial, jobs, workers)
    successes = sum(1 for row in rows if row["decision"] == expect)
    config = {
        "experiment": "correctness", "instance": instance.describe(),
        "expect": expect, "trials": trials, "master_seed": master_seed,
        "params": _params_echo(params),
    }
    return ExperimentReport.from_counts(successes, trials, config, per_trial=rows)


def replicability_experiment(
    prior,
    params: TesterParams,
    pairs: int,
    master_seed: int,
    workers: int = 1,
    shared_sample_seeds: bool = False,
) -> ExperimentReport:
    """Two-run agreement rate with a shared internal coin stream.

    Per pair: an instance is drawn from ``prior``, the internal stream is
    derived once and replayed in both runs, and the sample streams are
    independent (unless ``shared_sample_seeds`` asks for the degenerate
    control where both runs see identical samples).  Success is identical
    decisions.
    """
    if pairs < 1:
        raise ValueError("need pairs >= 1")
    if prior is None:
        prior = PairedBiasPrior(xi_max=2.0 * params.eps)
    jobs = [(prior, params, master_seed, k, shared_sample_seeds) for k in range(pairs)]
    row_pairs = _map_jobs(_replicability_pair, jobs, workers)
    rows = [row for pair_rows in row_pairs for row in pair_rows]
    successes = sum(pair_rows[0]["agree"] for pair_rows in row_pairs)
    config = {
        "experiment": "replicability", "prior": repr(prior), "pairs": pairs,
        "shared_sample_seeds": shared_sample_seeds, "master_seed": master_seed,
        "params": _params_echo(params),
    }
    return ExperimentReport.from_counts(successes, pairs, config, per_trial=rows)


def acceptance_sweep(
    params: TesterParams,
    xi_grid,
    trials_per_point: int,
    master_seed: int,
    fixed_internal: bool = False,
    workers: int = 1,
) -> SweepCurve:
    """Estimate Acc(xi) on paired-bias instances over a bias grid.

    With ``fixed_internal`` the internal stream state is frozen across the
    whole sweep (every trial replays the same coin, so the tester is the
    deterministic fixed-seed algorithm of the lower-bound argument).
    """
    xi_grid = [float(x) for x in xi_grid]
    if any(not 0.0 <= x <= 1.0 for x in xi_grid):
        raise ValueError("xi grid must lie within [0, 1]")
    if any(b <= a for a, b in zip(xi_grid, xi_grid[1:])):
        raise ValueError("xi grid must be strictly increasing")
    if trials_per_point < 1:
        raise ValueError("need trials_per_point >= 1")
    estimates, intervals = [], []
    for g, xi in enumerate(xi_grid):
        pmf = make_instance(InstanceSpec.paired_bias(xi), params.n)
        jobs = [(pmf, params, master_seed, g, t, fixed_internal) for t in range(trials_per_point)]
        accepts = sum(_map_jobs(_sweep_trial, jobs, workers))
        estimates.append(accepts / trials_per_point)
        intervals.append(wilson_interval(accepts, trials_per_point))
    config = {
        "experiment": "sweep", "trials_per_point": trials_per_point,
        "fixed_internal": fixed_internal, "master_seed": master_seed,
        "params": _params_echo(params),
    }
    return SweepCurve(xi_grid=xi_grid, acc_estimates=estimates,
                      trials_per_point=trials_per_point, intervals=intervals,
                      config_echo=config)


@dataclass
class BarrierRow:
    m: int
    runs: int
    mean: float
    sd: float
    gap: float

    @property
    def sd_over_gap(self) -> float:
        return self.sd / self.gap


@dataclass
class BarrierResult:
    kind: str
    n: int
    rows: list[BarrierRow]
    slope: float
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "n": self.n, "slope": self.slope,
            "rows": [{"m": r.m, "runs": r.runs, "mean": r.mean, "sd": r.sd,
                      "gap": r.gap, "sd_over_gap": r.sd_over_gap} for r in self.rows],
            "config_echo": self.config_echo,
        }


def _barrier_gap(kind: str, m: int, n: int, eps: float) -> float:
    if kind == "collision":
        return m * m * eps * eps / n
    if kind == "chi2":
        return m * eps * eps
    if kind == "tvstat":
        return eps * eps * m * m / (n * n)
    raise ValueError(f"unknown barrier statistic {kind!r}")


def barrier_experiment(
    kind: str,
    n: int,
    m_grid,
    runs_per_m: int,
    master_seed: int,
    eps: float = 0.5,
    workers: int = 1,
) -> BarrierResult:
    """Inter-run deviation of a statistic on the single-heavy-element instance.

    The instance puts mass ``n**-0.5`` on one element.  For each m the
    statistic is recomputed on ``runs_per_m`` independent batches; the
    report carries the run-to-run standard deviation and the ratio to the
    statistic's uniform-vs-far expectation gap scale.  The log-log slope of
    sd against m is the quantity the barrier arguments predict (3/2 for
    collisions, 1/2 for chi-square).
    """
    m_grid = [int(m) for m in m_grid]
    if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError("m grid must be strictly increasing")
    if runs_per_m < 2:
        raise ValueError("need runs_per_m >= 2 for a standard deviation")
    heavy_mass = n ** -0.5
    pmf = make_instance(InstanceSpec.heavy(heavy_mass), n)
    jobs = [(pmf, kind, m, runs_per_m, master_seed, g) for g, m in enumerate(m_grid)]
    per_point = _map_jobs(_barrier_point, jobs, workers)
    rows = []
    for m, point_values in zip(m_grid, per_point):
        values = np.array(point_values)
        rows.append(BarrierRow(
            m=m, runs=runs_per_m, mean=float(values.mean()),
            sd=float(values.std(ddof=1)), gap=_barrier_gap(kind, m, n, eps),
        ))
    slope = float(np.polyfit(np.log([r.m for r in rows]), np.log([r.sd for r in rows]), 1)[0])
    config = {
        "experiment": f"barrier-{kind}", "n": n, "eps": eps,
        "heavy_mass": heavy_mass, "m_grid": m_grid, "runs_per_m": runs_per_m,
        "master_seed": master_seed,
    }
    return BarrierResult(kind=kind, n=n, rows=rows, slope=slope, config_echo=config)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


class CalibrationError(RuntimeError):
    """Raised when no gap constant satisfies every pilot instance."""


def calibrate(
    pilot_grid,
    rho: float,
    trials: int,
    master_seed: int,
    c_m1: float = 1.0,
    c_m2: float = 1.0,
    c_m0: float = 3.0,
    workers: int = 1,
) -> tuple[dict[str, float], list[str]]:
    """Pick the gap constant from pilot Monte Carlo quantiles.

    For each pilot ``(n, eps)`` the far instance is the paired-bias
    distribution at ``2 eps`` (TV distance exactly eps).  Feasibility per
    pilot: the far S_median must exceed ``mu + c_gap * base`` at its
    ``rho/4`` quantile (upper bound on ``c_gap``) while the uniform S_median
    stays below ``mu + c_gap * base / 4`` at its ``1 - rho/4`` quantile
    (lower bound).  The Monte Carlo draws do not depend on ``c_gap``, so the
    bisection over pass/fail collapses to direct quantile inversion; the
    returned constant is the log-midpoint of the intersected feasible
    interval across the grid — the most conservative choice that every
    pilot admits.

    Returns ``(constants, provenance_lines)`` or raises
    :class:`CalibrationError` with a per-pilot diagnostic.
    """
    pilot_grid = list(pilot_grid)
    if not pilot_grid:
        raise ValueError("pilot grid must be non-empty")
    if trials < 8:
        raise ValueError("need trials >= 8 for usable quantiles")
    lo_mult = 4.0  # uniform threshold sits at R/4
    provenance = [
        "calibrated constants for the TV-median uniformity tester",
        f"grid={pilot_grid!r} rho={rho!r} trials={trials} master_seed={master_seed}",
    ]
    c_lo_all, c_hi_all = 0.0, math.inf
    for pilot, (n, eps) in enumerate(pilot_grid):
        params = TesterParams(n=n, eps=eps, rho=rho, c_m1=c_m1, c_m2=c_m2, c_m0=c_m0)
        m, m0 = derive_sizes(params)
        mu = exact_uniform_mean(n, m)
        _, base = expectation_gap(n, m, eps, 1.0)
        uniform = make_instance(InstanceSpec.uniform(), n)
        far = make_instance(InstanceSpec.paired_bias(2.0 * eps), n)
        sides = {}
        for side, pmf in ((0, uniform), (1, far)):
            jobs = [(pmf, m, m0, master_seed, pilot, side, t) for t in range(trials)]
            sides[side] = np.array(_map_jobs(_smedian_draw, jobs, workers))
        uni_hi = float(np.quantile(sides[0], 1.0 - rho / 4.0))
        far_lo = float(np.quantile(sides[1], rho / 4.0))
        c_lo = max(0.0, lo_mult * (uni_hi - mu) / base)
        c_hi = (far_lo - mu) / base
        provenance.append(
            f"pilot n={n} eps={eps}: m={m} m0={m0} mu={mu:.6g} base={base:.6g} "
            f"c_range=[{c_lo:.6g}, {c_hi:.6g}]"
        )
        if c_hi <= max(c_lo, 0.0):
            raise CalibrationError(
                f"pilot (n={n}, eps={eps}) admits no gap constant: "
                f"uniform needs c_gap > {c_lo:.6g} but far rejection needs c_gap < {c_hi:.6g}; "
                "increase c_m1/c_m2 or trials"
            )
        c_lo_all = max(c_lo_all, c_lo)
        c_hi_all = min(c_hi_all, c_hi)
    if c_hi_all <= c_lo_all:
        raise CalibrationError(
            f"pilot intervals are pairwise feasible but their intersection "
            f"[{c_lo_all:.6g}, {c_hi_all:.6g}] is empty across the grid"
        )
    lo_eff = max(c_lo_all, c_hi_all / 9.0, 1e-6)
    c_gap = math.sqrt(lo_eff * c_hi_all)
    provenance.append(
        f"intersection=[{c_lo_all:.6g}, {c_hi_all:.6g}] -> c_gap={c_gap!r} "
        "(log-midpoint with floor at one ninth of the ceiling)"
    )
    constants = {"c_gap": c_gap, "c_m1": c_m1, "c_m2": c_m2, "c_m0": c_m0}
    return constants, provenance


# ---------------------------------------------------------------------------
# File output
# ---------------------------------------------------------------------------


def write_rows_csv(path: str, fieldnames: list[str], rows: list[dict], config: dict) -> None:
    """CSV with a config-echo comment header; bytes depend only on content."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_report_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
