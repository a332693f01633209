"""Replicable uniformity tester, baseline testers, and the identity reduction.

The main tester compares the median of several TV statistics against a
random threshold ``mu(U_n) + r0 * R`` where ``r0 ~ Unif(1/4, 3/4)`` comes
from the internal coin stream and ``R`` is the expectation-gap schedule.
Fixing the internal stream fixes the threshold; sample randomness only
enters through the median statistic, which is what makes the two-run
replicability protocol meaningful.

Baseline testers over the collision and chi-square statistics exist to
reproduce the heavy-element barrier experiments; they are not tuned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Callable, Union

import numpy as np

from .distributions import Pmf, SampleBatch, draw_batch, draw_poissonized_batch, draw_samples
from .rng import SeedSplit
from .stats import (
    GapRegime,
    chi2_statistic,
    collision_statistic,
    exact_uniform_mean,
    expectation_gap,
    tv_statistic,
)

__all__ = [
    "TesterParams",
    "Verdict",
    "derive_sizes",
    "batch_oracle",
    "run_tester",
    "run_baseline_tester",
    "IdentityReducer",
    "run_identity_tester",
]

# An oracle maps (batch size, rng) to one SampleBatch.
BatchOracle = Callable[[int, np.random.Generator], SampleBatch]


@dataclass(frozen=True)
class TesterParams:
    """Domain size, tolerances, and the calibrated constants.

    ``m = ceil(c_m1 * sqrt(n)/(rho eps^2) * sqrt(ln(n/rho)) + c_m2/(rho^2 eps^2))``
    floored at 6, and ``m0`` is the smallest odd integer >= ``c_m0 * ln(4/rho)``.
    """

    n: int
    eps: float
    rho: float
    c_m1: float = 1.0
    c_m2: float = 1.0
    c_m0: float = 3.0
    c_gap: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("domain size must be >= 2")
        if not 0.0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if not 0.0 < self.rho < 0.5:
            raise ValueError("rho must lie in (0, 1/2)")
        for name in ("c_m1", "c_m2", "c_m0", "c_gap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_constants(cls, n: int, eps: float, rho: float, constants) -> "TesterParams":
        return cls(n=n, eps=eps, rho=rho, c_m1=constants["c_m1"],
                   c_m2=constants["c_m2"], c_m0=constants["c_m0"],
                   c_gap=constants["c_gap"])

    def constants(self) -> dict[str, float]:
        return {"c_gap": self.c_gap, "c_m1": self.c_m1,
                "c_m2": self.c_m2, "c_m0": self.c_m0}


def derive_sizes(params: TesterParams) -> tuple[int, int]:
    """Batch size m and repetition count m0 (odd) from the size formulas."""
    n, eps, rho = params.n, params.eps, params.rho
    raw = (
        params.c_m1 * (math.sqrt(n) / (rho * eps * eps)) * math.sqrt(math.log(n / rho))
        + params.c_m2 / (rho * rho * eps * eps)
    )
    m = max(6, math.ceil(raw))
    k = max(1, math.ceil(params.c_m0 * math.log(4.0 / rho)))
    m0 = k if k % 2 == 1 else k + 1
    return m, m0


@dataclass(frozen=True)
class Verdict:
    """One tester decision with every intermediate needed to replay it."""

    decision: str            # "accept" | "reject"
    statistic: float         # median TV statistic, or the baseline statistic
    threshold: float
    r0: float                # the Unif(1/4, 3/4) coin from the internal stream
    regime: GapRegime | None
    mu_uniform: float | None
    gap: float | None
    n: int
    m: int
    m0: int
    kind: str                # "tv-median" | "collision" | "chi2"

    @property
    def accept(self) -> bool:
        return self.decision == "accept"

    @property
    def s_median(self) -> float:
        return self.statistic

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value if self.regime is not None else None
        return d

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def batch_oracle(p_access: Union[Pmf, BatchOracle]) -> BatchOracle:
    """Adapt an explicit pmf (or pass through a callable) as a batch oracle."""
    if isinstance(p_access, Pmf):
        pmf = p_access
        return lambda m, rng: draw_batch(pmf, m, rng)
    return p_access


def run_tester(p_access, params: TesterParams, seeds: SeedSplit) -> Verdict:
    """The replicable uniformity tester.

    Draws m0 batches of m samples from the sample stream, takes the median
    TV statistic, and accepts iff it falls below
    ``mu(U_n) + r0 * R`` with ``r0`` the first draw of the internal stream.
    """
    m, m0 = derive_sizes(params)
    r0 = float(seeds.internal.uniform(0.25, 0.75))
    regime, gap = expectation_gap(params.n, m, params.eps, params.c_gap)
    mu = exact_uniform_mean(params.n, m)
    threshold = mu + r0 * gap
    oracle = batch_oracle(p_access)
    s_values = []
    for _ in range(m0):
        batch = oracle(m, seeds.sample)
        if batch.n != params.n:
            raise ValueError("oracle produced a batch on the wrong domain")
        s_values.append(tv_statistic(batch))
    s_median = sorted(s_values)[m0 // 2]
    decision = "accept" if s_median < threshold else "reject"
    return Verdict(
        decision=decision, statistic=s_median, threshold=threshold, r0=r0,
        regime=regime, mu_uniform=mu, gap=gap, n=params.n, m=m, m0=m0,
        kind="tv-median",
    )


def run_baseline_tester(
    statistic_kind: str,
    p_access,
    n: int,
    m: int,
    eps: float,
    seeds: SeedSplit,
) -> Verdict:
    """Random-threshold tester over the collision or chi-square statistic.

    The threshold is uniform between the statistic's uniform-case and
    far-case expectation extrema.  The internal coin is the same
    ``r0 ~ Unif(1/4, 3/4)`` draw as the main tester, mapped affinely onto
    the extrema interval so the threshold is uniform over all of it.
    """
    if m < 2:
        raise ValueError("baseline testers need m >= 2")
    r0 = float(seeds.internal.uniform(0.25, 0.75))
    unit = 2.0 * (r0 - 0.25)  # uniform on [0, 1)
    if statistic_kind == "collision":
        batch = batch_oracle(p_access)(m, seeds.sample)
        value = float(collision_statistic(batch))
        pairs = m * (m - 1) / 2.0
        lo, hi = pairs / n, pairs * (1.0 + eps * eps) / n
    elif statistic_kind == "chi2":
        # Poissonized usage: an explicit pmf is sampled at rate m; a callable
        # oracle must produce the Poissonized batch itself.
        if isinstance(p_access, Pmf):
            batch = draw_poissonized_batch(p_access, m, seeds.sample)
        else:
            batch = p_access(m, seeds.sample)
        value = chi2_statistic(batch, m)
        lo, hi = m * eps * eps / 500.0, m * eps * eps / 5.0
    else:
        raise ValueError(f"unknown baseline statistic {statistic_kind!r}")
    threshold = lo + unit * (hi - lo)
    decision = "reject" if value >= threshold else "accept"
    return Verdict(
        decision=decision, statistic=value, threshold=threshold, r0=r0,
        regime=None, mu_uniform=None, gap=None, n=n, m=m, m0=1,
        kind=statistic_kind,
    )


class IdentityReducer:
    """Randomized per-sample map taking q-identity testing to uniformity.

    Built once from the reference distribution q on [n].  Each input sample
    is mixed with uniform (probability 1/2 each way), then spread over the
    cell block assigned to the mixed element, or over the shared overflow
    block, inside a domain of size 6n.  Feeding samples of q itself makes
    the output exactly uniform on [6n]; a p that is eps-far from q maps to
    an output at least eps/3-far from uniform.

    Table construction is O(n); each mapped sample costs O(1).
    """

    def __init__(self, q: Pmf):
        n = q.n
        big = 6 * n
        qbar = 0.5 * (q.probs + 1.0 / n)
        cells = np.floor(big * qbar).astype(np.int64)  # >= 3 per element
        self.q = q
        self.n = n
        self.big = big
        self.cells = cells
        self.start = np.concatenate(([0], np.cumsum(cells)[:-1]))
        self.used = int(cells.sum())
        self.overflow = big - self.used
        spread = cells / (big * qbar)
        if self.overflow == 0:
            # all blocks exact: the overflow branch must have probability 0
            spread = np.ones_like(spread)
        self.spread = spread

    def map_one(self, sample: int, rng: np.random.Generator) -> int:
        """Map one 0-based sample of [n] to a 0-based element of [6n]."""
        mixed = int(sample) if rng.random() < 0.5 else int(rng.integers(self.n))
        if rng.random() < self.spread[mixed]:
            return int(self.start[mixed] + rng.integers(self.cells[mixed]))
        return int(self.used + rng.integers(self.overflow))

    def map_many(self, samples: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Vectorized map of a sample vector; same per-sample law as map_one."""
        m = samples.shape[0]
        keep = rng.random(m) < 0.5
        replacement = rng.integers(0, self.n, size=m)
        mixed = np.where(keep, samples, replacement)
        in_block = rng.random(m) < self.spread[mixed]
        cell = self.start[mixed] + rng.integers(0, self.cells[mixed])
        if self.overflow > 0:
            over = self.used + rng.integers(0, self.overflow, size=m)
        else:
            over = cell
        return np.where(in_block, cell, over).astype(np.int64)


def run_identity_tester(p_access, q: Pmf, params: TesterParams, seeds: SeedSplit) -> Verdict:
    """Test p = q vs TV(p, q) >= eps by reduction to uniformity on [6n].

    ``params`` describes the original problem (domain n, tolerance eps); the
    reduced tester runs on domain 6n with tolerance eps/3 and the same rho.
    Reduction randomness is drawn from the sample stream: it does not need
    to be shared across paired runs.
    """
    if params.n != q.n:
        raise ValueError("params.n must match q's domain")
    reducer = IdentityReducer(q)
    reduced_params = TesterParams(
        n=reducer.big, eps=params.eps / 3.0, rho=params.rho,
        c_m1=params.c_m1, c_m2=params.c_m2, c_m0=params.c_m0, c_gap=params.c_gap,
    )

    if isinstance(p_access, Pmf):
        pmf = p_access

        def raw_samples(m, rng):
            return draw_samples(pmf, m, rng)
    else:
        raw_samples = p_access

    def reduced_oracle(m, rng):
        raw = raw_samples(m, rng)
        mapped = reducer.map_many(np.asarray(raw, dtype=np.int64), rng)
        return SampleBatch(np.bincount(mapped, minlength=reducer.big))

    return run_tester(reduced_oracle, reduced_params, seeds)
