"""Exact small-instance oracles.

These routines compute quantities the Monte Carlo side can only estimate:
brute-force expectations over all sample outcomes, the exact output
distribution of the identity-to-uniformity reduction, and the mutual
information carried by a truncated pair of mixed Poisson counts.  They are
deliberately independent of the sampling implementations they check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats as sps

from .distributions import Pmf, SampleBatch

ENUMERATION_GUARD = 10**7

__all__ = [
    "brute_force_mean_statistic",
    "rational_pmfs",
    "ReductionScan",
    "reduction_check",
    "exact_mean_tv",
    "exact_pushforward",
    "PairJointDist",
    "pair_joint",
    "MutualInfoValue",
    "mutual_info_pair",
]


def _compositions(m: int, n: int):
    """Yield all length-n tuples of nonnegative ints summing to m."""
    for bars in itertools.combinations(range(m + n - 1), n - 1):
        parts = []
        prev = -1
        for b in (*bars, m + n - 1):
            parts.append(b - prev - 1)
            prev = b
        yield tuple(parts)


def brute_force_mean_statistic(
    p: Pmf,
    m: int,
    statistic: Callable[[SampleBatch], float],
    assume_symmetric: bool = True,
) -> float:
    """Exact E[statistic] over all outcomes of m draws from p.

    With ``assume_symmetric`` (valid for every statistic in this package)
    the enumeration runs over count vectors weighted by multinomial
    coefficients, costing ``C(m+n-1, n-1)`` evaluations instead of ``n^m``.
    """
    n = p.n
    if m < 1:
        raise ValueError("need m >= 1")
    if assume_symmetric:
        if math.comb(m + n - 1, n - 1) > ENUMERATION_GUARD:
            raise ValueError("enumeration guard exceeded")
        probs = p.probs
        total = []
        for counts in _compositions(m, n):
            weight = 1.0
            coeff = 1
            remaining = m
            for c, prob in zip(counts, probs):
                if c:
                    if prob == 0.0:
                        weight = 0.0
                        break
                    coeff *= math.comb(remaining, c)
                    remaining -= c
                    weight *= prob**c
            if weight == 0.0:
                continue
            batch = SampleBatch(np.array(counts, dtype=np.int64))
            total.append(coeff * weight * statistic(batch))
        return math.fsum(total)
    if n**m > ENUMERATION_GUARD:
        raise ValueError("enumeration guard exceeded")
    total = []
    for seq in itertools.product(range(n), repeat=m):
        weight = 1.0
        for t in seq:
            weight *= p.probs[t]
        if weight == 0.0:
            continue
        counts = np.bincount(np.array(seq, dtype=np.int64), minlength=n)
        total.append(weight * statistic(SampleBatch(counts)))
    return math.fsum(total)


def exact_mean_tv(p: Pmf, m: int) -> float:
    """Exact E[TV statistic] for m draws from p, via binomial marginals.

    Linearity of expectation gives ``(1/2) sum_i E|K_i/m - 1/n|`` with
    ``K_i ~ Binomial(m, p_i)``; no enumeration needed.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    k = np.arange(m + 1)
    pmf = sps.binom.pmf(k[None, :], m, p.probs[:, None])
    dev = np.abs(k[None, :] / m - 1.0 / p.n)
    return 0.5 * math.fsum((pmf * dev).ravel().tolist())


# ---------------------------------------------------------------------------
# Identity-to-uniformity reduction, analytic route
# ---------------------------------------------------------------------------


def exact_pushforward(q: Pmf, p: Pmf) -> Pmf:
    """Exact output distribution of the reduction built from q, fed p-samples.

    The reduction mixes the input with uniform (``pbar = (p + U_n)/2``),
    assigns element i a block of ``floor(6n * qbar_i)`` cells, and spreads a
    mixed sample over its block with probability ``cells_i / (6n * qbar_i)``,
    otherwise over the shared overflow block.  Feeding q itself yields the
    uniform distribution on [6n] exactly.
    """
    if q.n != p.n:
        raise ValueError("p and q must share a domain")
    n = q.n
    big = 6 * n
    qbar = 0.5 * (q.probs + 1.0 / n)
    pbar = 0.5 * (p.probs + 1.0 / n)
    cells = np.floor(big * qbar).astype(np.int64)
    spread = cells / (big * qbar)
    used = int(cells.sum())
    overflow_size = big - used

    out = np.zeros(big, dtype=np.float64)
    per_cell = np.where(cells > 0, pbar * spread / np.maximum(cells, 1), 0.0)
    out[:used] = np.repeat(per_cell, cells)
    overflow_mass = math.fsum((pbar * (1.0 - spread)).tolist())
    if overflow_size > 0:
        out[used:] = overflow_mass / overflow_size
    return Pmf(out)


def rational_pmfs(n: int, max_denominator: int) -> list[Pmf]:
    """All pmfs on [n] whose entries are rationals with denominator <= D."""
    from fractions import Fraction

    seen: set[tuple] = set()
    out: list[Pmf] = []
    for d in range(1, max_denominator + 1):
        for counts in _compositions(d, n):
            key = tuple(Fraction(c, d) for c in counts)
            if key in seen:
                continue
            seen.add(key)
            out.append(Pmf(np.array([c / d for c in counts], dtype=np.float64)))
    return out


@dataclass(frozen=True)
class ReductionScan:
    """Outcome of the exhaustive small-instance reduction check."""

    num_pmfs: int
    num_pairs: int
    max_uniform_error: float   # worst |pushforward(q,q)_i - 1/(6n)|
    min_margin: float          # worst tv(pushforward, U) - tv(p,q)/3

    @property
    def passed(self) -> bool:
        return self.max_uniform_error <= 1e-12 and self.min_margin >= -1e-12


def reduction_check(max_n: int, max_denominator: int = 8) -> ReductionScan:
    """Exhaustively verify both reduction guarantees at small scale.

    For every rational q on domains up to ``max_n``: feeding q itself must
    give the uniform pushforward entrywise to 1e-12, and feeding any other
    p of the family must give a pushforward at least ``tv(p, q)/3`` from
    uniform (within 1e-12).
    """
    from .distributions import tv_distance

    num_pmfs = num_pairs = 0
    max_err = 0.0
    min_margin = math.inf
    for n in range(1, max_n + 1):
        family = rational_pmfs(n, max_denominator)
        num_pmfs += len(family)
        target = 1.0 / (6 * n)
        uniform_big = Pmf(np.full(6 * n, target))
        for q in family:
            push_q = exact_pushforward(q, q)
            max_err = max(max_err, float(np.max(np.abs(push_q.probs - target))))
            for p in family:
                if p is q:
                    continue
                num_pairs += 1
                dist = tv_distance(p, q)
                if dist == 0.0:
                    continue
                push = exact_pushforward(q, p)
                margin = tv_distance(push, uniform_big) - dist / 3.0
                min_margin = min(min_margin, margin)
    if not math.isfinite(min_margin):
        min_margin = 0.0
    return ReductionScan(num_pmfs=num_pmfs, num_pairs=num_pairs,
                         max_uniform_error=max_err, min_margin=min_margin)


# ---------------------------------------------------------------------------
# Truncated-Poisson pair mutual information
# ---------------------------------------------------------------------------

TRUNCATION_CAP = 10**4


@dataclass(frozen=True)
class PairJointDist:
    """Truncated joint law of one count pair under the two-sided bias bit.

    ``joint[x]`` is the (K+1)x(K+1) matrix of ``Pr(M1=a, M2=b | X=x)`` where,
    conditioned on the bit x, the pair is an even mixture of
    ``Poi(lam(1+eps_x)) (x) Poi(lam(1-eps_x))`` and its swap.  Both matrices
    miss at most ``tail_mass`` of their mass to the discarded tail.
    """

    lam: float
    eps0: float
    eps1: float
    truncation: int
    joint: tuple[np.ndarray, np.ndarray]
    tail_mass: float


def _mixture_matrix(lam: float, eps: float, K: int) -> np.ndarray:
    a = np.arange(K + 1)
    hi = sps.poisson.pmf(a, lam * (1.0 + eps))
    lo = sps.poisson.pmf(a, lam * (1.0 - eps))
    return 0.5 * (np.outer(hi, lo) + np.outer(lo, hi))


def pair_joint(
    lam: float, eps0: float, eps1: float, tail_tol: float = 1e-14
) -> PairJointDist:
    """Build the truncated conditional joints, choosing K to meet tail_tol."""
    if not (0.0 <= eps0 <= eps1 < 1.0):
        raise ValueError("need 0 <= eps0 <= eps1 < 1")
    if lam <= 0:
        raise ValueError("need lam > 0")
    K = max(8, int(math.ceil(lam * (1.0 + eps1))))
    while True:
        tails = []
        for eps in (eps0, eps1):
            f_hi = sps.poisson.cdf(K, lam * (1.0 + eps))
            f_lo = sps.poisson.cdf(K, lam * (1.0 - eps))
            tails.append(1.0 - f_hi * f_lo)
        if max(tails) <= tail_tol:
            break
        if K >= TRUNCATION_CAP:
            raise ValueError(f"truncation would exceed {TRUNCATION_CAP}")
        K = min(TRUNCATION_CAP, 2 * K)
    joints = tuple(_mixture_matrix(lam, eps, K) for eps in (eps0, eps1))
    tail_mass = max(1.0 - float(j.sum()) for j in joints)
    return PairJointDist(
        lam=lam, eps0=eps0, eps1=eps1, truncation=K, joint=joints,
        tail_mass=max(tail_mass, 0.0),
    )


@dataclass(frozen=True)
class MutualInfoValue:
    """Mutual information (nats) between the bias bit and a count pair."""

    value: float
    error_budget: float
    bound_rhs: float


def mutual_info_pair(d: PairJointDist, bound_const: float = 1.0) -> MutualInfoValue:
    """I(X : M1, M2) for an unbiased bit X selecting between the joints.

    Computed as the average KL divergence of each conditional to their
    mixture; terms with zero joint mass contribute zero.  The truncation
    contributes at most ``2 * tail_mass * |ln tail_mass|``, reported as the
    error budget.  ``bound_rhs`` is the quadratic comparator
    ``bound_const * eps^2 * delta^2 * lam^2`` with ``eps = eps1`` and
    ``delta = eps1 - eps0``.
    """
    p0, p1 = d.joint
    mix = 0.5 * (p0 + p1)
    terms = []
    for cond in (p0, p1):
        with np.errstate(divide="ignore", invalid="ignore"):
            contrib = np.where(cond > 0, cond * np.log(cond / mix), 0.0)
        terms.append(0.5 * math.fsum(contrib.ravel().tolist()))
    value = max(0.0, math.fsum(terms))
    tail = d.tail_mass
    budget = 2.0 * tail * abs(math.log(tail)) if tail > 0 else 0.0
    delta = d.eps1 - d.eps0
    rhs = bound_const * (d.eps1 * delta * d.lam) ** 2
    return MutualInfoValue(value=value, error_budget=budget, bound_rhs=rhs)
