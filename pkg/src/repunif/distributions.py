"""Explicit finite distributions, exact TV distance, and batch samplers.

The distribution families here are the instance constructions used
throughout the test suite and experiments:

* ``uniform`` on ``[n]``,
* ``paired_bias(xi)``: odd 1-based positions carry mass ``(1+xi)/n`` and
  even positions ``(1-xi)/n`` (TV distance from uniform is exactly
  ``xi/2``),
* ``local_swap(xi, bits)``: ``paired_bias(xi)`` with each adjacent pair
  exchanged according to a bit vector (a relabeling, so every member is a
  permutation of the same mass multiset),
* ``heavy(pmass)``: a single heavy element with the rest uniform,
* ``custom(probs)``: any validated explicit pmf.

Sampling uses the conditional-binomial multinomial method (via numpy) when
``m >= n`` and a Walker alias table otherwise, so a batch costs
``O(n + min(m, n))`` setup plus vectorized draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

NORMALIZATION_TOL = 1e-12

__all__ = [
    "NORMALIZATION_TOL",
    "Pmf",
    "InstanceSpec",
    "SampleBatch",
    "make_instance",
    "tv_distance",
    "AliasTable",
    "draw_batch",
    "draw_poissonized_batch",
]


@dataclass(frozen=True)
class Pmf:
    """An explicit probability mass function over ``{1, ..., n}``.

    Entries must be nonnegative and sum to 1 within ``NORMALIZATION_TOL``;
    inputs inside tolerance are renormalized exactly once on construction.
    Instances are immutable (the array is frozen) and safe to share across
    workers.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("pmf must be a nonempty 1-d vector")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("pmf entries must be finite and >= 0")
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"pmf sums to {total!r}, not 1 within {NORMALIZATION_TOL}")
        if total != 1.0:
            arr /= total
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    def alias_table(self) -> "AliasTable":
        """Categorical sampler for this pmf, built once and cached."""
        table = getattr(self, "_alias", None)
        if table is None:
            table = AliasTable(self.probs)
            object.__setattr__(self, "_alias", table)
        return table

    # -- serialization ----------------------------------------------------
    # Both formats round-trip bit-exactly: Python float repr is the
    # shortest string that parses back to the same 64-bit value.

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "probs": list(self.probs)})

    @classmethod
    def from_json(cls, text: str) -> "Pmf":
        obj = json.loads(text)
        pmf = cls(np.array(obj["probs"], dtype=np.float64))
        if pmf.n != obj["n"]:
            raise ValueError("pmf json: n field disagrees with probs length")
        return pmf

    def to_text(self) -> str:
        return "\n".join(repr(float(x)) for x in self.probs) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Pmf":
        values = [float(tok) for tok in text.split()]
        return cls(np.array(values, dtype=np.float64))


def uniform_pmf(n: int) -> Pmf:
    return Pmf(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class InstanceSpec:
    """Parametric description of an instance family member.

    ``kind`` is one of ``uniform``, ``paired_bias``, ``local_swap``,
    ``heavy``, ``custom``; only the parameters relevant to the kind are set.
    """

    kind: str
    xi: float | None = None
    swap_bits: tuple[int, ...] | None = None
    pmass: float | None = None
    probs: tuple[float, ...] | None = None

    @classmethod
    def uniform(cls) -> "InstanceSpec":
        return cls(kind="uniform")

    @classmethod
    def paired_bias(cls, xi: float) -> "InstanceSpec":
        return cls(kind="paired_bias", xi=xi)

    @classmethod
    def local_swap(cls, xi: float, swap_bits) -> "InstanceSpec":
        return cls(kind="local_swap", xi=xi, swap_bits=tuple(int(b) for b in swap_bits))

    @classmethod
    def heavy(cls, pmass: float) -> "InstanceSpec":
        return cls(kind="heavy", pmass=pmass)

    @classmethod
    def custom(cls, probs) -> "InstanceSpec":
        return cls(kind="custom", probs=tuple(float(p) for p in probs))

    def describe(self) -> str:
        if self.kind == "paired_bias":
            return f"paired_bias(xi={self.xi!r})"
        if self.kind == "local_swap":
            return f"local_swap(xi={self.xi!r}, bits={''.join(map(str, self.swap_bits))})"
        if self.kind == "heavy":
            return f"heavy(pmass={self.pmass!r})"
        if self.kind == "custom":
            return "custom"
        return self.kind


def make_instance(spec: InstanceSpec, n: int) -> Pmf:
    """Materialize an instance description as an explicit pmf on ``[n]``."""
    if n < 1:
        raise ValueError("domain size must be >= 1")
    if spec.kind == "uniform":
        return uniform_pmf(n)
    if spec.kind in ("paired_bias", "local_swap"):
        xi = spec.xi
        if xi is None or not 0.0 <= xi <= 1.0:
            raise ValueError("paired kinds need a bias xi in [0, 1]")
        if n % 2 != 0:
            raise ValueError("paired kinds require an even domain size")
        probs = np.empty(n, dtype=np.float64)
        probs[0::2] = (1.0 + xi) / n  # odd 1-based positions are heavy
        probs[1::2] = (1.0 - xi) / n
        if spec.kind == "local_swap":
            bits = spec.swap_bits
            if bits is None or len(bits) != n // 2:
                raise ValueError("swap_bits must have length n/2")
            if any(b not in (0, 1) for b in bits):
                raise ValueError("swap_bits entries must be 0 or 1")
            for k, b in enumerate(bits):
                if b:
                    j = 2 * k
                    probs[j], probs[j + 1] = probs[j + 1], probs[j]
        return Pmf(probs)
    if spec.kind == "heavy":
        pmass = spec.pmass
        if pmass is None or not (1.0 / n <= pmass <= 1.0):
            raise ValueError("heavy-element mass must lie in [1/n, 1]")
        probs = np.empty(n, dtype=np.float64)
        probs[0] = pmass
        if n > 1:
            probs[1:] = (1.0 - pmass) / (n - 1)
        return Pmf(probs)
    if spec.kind == "custom":
        if spec.probs is None or len(spec.probs) != n:
            raise ValueError("custom instance needs probs of length n")
        return Pmf(np.array(spec.probs, dtype=np.float64))
    raise ValueError(f"unknown instance kind {spec.kind!r}")


def tv_distance(p: Pmf, q: Pmf) -> float:
    """Total variation distance ``(1/2) sum_i |p_i - q_i|``."""
    if p.n != q.n:
        raise ValueError(f"domain mismatch: {p.n} vs {q.n}")
    return 0.5 * math.fsum(np.abs(p.probs - q.probs).tolist())


@dataclass(frozen=True)
class SampleBatch:
    """The frequency vector of one batch of samples.

    ``counts[i]`` is the number of occurrences of element ``i+1``; ``m`` is
    the realized total (for Poissonized batches this is the random sum).
    """

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("counts must be integers")
        if arr.ndim != 1 or arr.size == 0 or np.any(arr < 0):
            raise ValueError("counts must be a nonempty vector of nonnegative ints")
        arr = arr.astype(np.int64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def m(self) -> int:
        return int(self.counts.sum())


class AliasTable:
    """Walker alias table for O(1)-per-draw categorical sampling."""

    def __init__(self, probs: np.ndarray):
        n = probs.shape[0]
        scaled = probs * n
        self.accept = np.ones(n, dtype=np.float64)
        self.alias = np.arange(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            g = large.pop()
            self.accept[s] = scaled[s]
            self.alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1.0 up to rounding; keep accept=1, alias=self

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.accept.shape[0], size=size)
        take_alias = rng.random(size) >= self.accept[idx]
        return np.where(take_alias, self.alias[idx], idx)


def draw_batch(p: Pmf, m: int, rng: np.random.Generator) -> SampleBatch:
    """Draw one multinomial(m, p) frequency vector.

    Deterministic given the stream state.  Uses numpy's conditional-binomial
    multinomial when ``m >= n`` (cost ``O(n)``) and an alias-table
    categorical sampler when ``m < n`` (cost ``O(n + m)``).
    """
    if m < 0:
        raise ValueError("sample count must be >= 0")
    if m == 0:
        return SampleBatch(np.zeros(p.n, dtype=np.int64))
    if m >= p.n:
        counts = rng.multinomial(m, p.probs)
    else:
        idx = p.alias_table().draw(m, rng)
        counts = np.bincount(idx, minlength=p.n)
    return SampleBatch(counts.astype(np.int64))


def draw_samples(p: Pmf, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ordered sequence of ``m`` i.i.d. samples (0-based indices)."""
    if m < 0:
        raise ValueError("sample count must be >= 0")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    return p.alias_table().draw(m, rng).astype(np.int64)


def draw_poissonized_batch(p: Pmf, m: float, rng: np.random.Generator) -> SampleBatch:
    """Draw each count independently as Poisson(m * p_i)."""
    if m <= 0:
        raise ValueError("poisson rate must be > 0")
    counts = rng.poisson(m * p.probs)
    return SampleBatch(counts.astype(np.int64))
