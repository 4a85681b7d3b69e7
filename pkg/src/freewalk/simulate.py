"""Monte Carlo simulation of nearest-neighbour walks on a free product.

All trials advance together: the normal form of every walker is a row of
a letter-index stack, so one step is a handful of vectorised table
lookups.  Each trial draws its steps from its own Philox stream spawned
from the seed, which makes results independent of trial batching.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import GeneratorSet, Letter
from .equations import StepDistribution

CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    steps: int = 100_000
    trials: int = 200
    seed: int = 0
    burn_in: float = 0.5  # first letters changing after this fraction of steps are reported

    def __post_init__(self):
        if self.steps < 1 or self.trials < 1:
            raise ValueError("steps and trials must be at least 1")
        if not 0 <= self.burn_in <= 1:
            raise ValueError("burn_in must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimEstimate:
    value: float
    stderr: float
    trials: int

    def agrees(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.value - target) <= sigmas * self.stderr


@dataclass(frozen=True)
class FirstLetterEstimate:
    freq: np.ndarray
    stderr: np.ndarray
    trials: int
    empty_fraction: float
    unstable_fraction: float


@dataclass
class WalkRecord:
    syllables: np.ndarray  # |X_n|_Sigma per trial
    s_lengths: np.ndarray  # |X_n|_S per trial
    first: np.ndarray  # first letter index of X_n, -1 for the identity
    changed_late: np.ndarray  # first letter changed after the burn-in step
    hit: np.ndarray | None  # target visited during steps 1..n


def _streams(seed: int, trials: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def run_walks(
    mu: StepDistribution,
    cfg: SimConfig,
    S: GeneratorSet | None = None,
    target: Letter | None = None,
) -> WalkRecord:
    fp = mu.fp
    S = S if S is not None else GeneratorSet.full(fp)
    T, n = cfg.trials, cfg.steps
    cdf = np.cumsum(mu.weights)
    cdf[-1] = 1.0
    fac = fp.factor_of
    prod = fp.product_index
    slen = S.length_vector().astype(np.int64)
    target_idx = -1 if target is None else fp.index[target]
    burn = int(cfg.burn_in * n)

    stack = np.zeros((T, n + 1), dtype=np.int16)
    length = np.zeros(T, dtype=np.int64)
    s_total = np.zeros(T, dtype=np.int64)
    hit = np.zeros(T, dtype=bool)
    first_at_burn = np.full(T, -1, dtype=np.int64)
    rows = np.arange(T)
    rngs = _streams(cfg.seed, T)

    t = 0
    while t < n:
        m = min(CHUNK, n - t)
        block = np.stack([np.searchsorted(cdf, g.random(m), side="right") for g in rngs], axis=1)
        for x in block:
            nonempty = length > 0
            top = stack[rows, np.maximum(length - 1, 0)]
            same = nonempty & (fac[top] == fac[x])
            z = prod[top, x]
            cancel = same & (z == -1)
            merge = same & (z >= 0)
            push = ~same
            # push writes x at position length; merge overwrites the top
            pos = np.where(push, length, length - 1)
            val = np.where(merge, z, x)
            write = push | merge
            stack[rows[write], pos[write]] = val[write]
            s_total += np.where(push, slen[x], 0)
            s_total += np.where(cancel, -slen[top], 0)
            s_total += np.where(merge, slen[np.maximum(z, 0)] - slen[top], 0)
            length += push.astype(np.int64) - cancel.astype(np.int64)
            if target_idx >= 0:
                hit |= (length == 1) & (stack[:, 0] == target_idx)
            t += 1
            if t == burn:
                first_at_burn = np.where(length > 0, stack[:, 0], -1)
    first = np.where(length > 0, stack[:, 0], -1).astype(np.int64)
    return WalkRecord(length.copy(), s_total, first, first != first_at_burn, hit if target_idx >= 0 else None)


def _mean(values: np.ndarray) -> SimEstimate:
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else float("inf")
    return SimEstimate(float(values.mean()), se, len(values))


def drift_from(record: WalkRecord, steps: int, metric: str = "sigma") -> SimEstimate:
    if metric == "sigma":
        return _mean(record.syllables / steps)
    if metric == "s":
        return _mean(record.s_lengths / steps)
    raise ValueError(f"metric must be 'sigma' or 's', got {metric!r}")


def first_letter_from(record: WalkRecord, size: int) -> FirstLetterEstimate:
    T = len(record.first)
    counts = np.bincount(record.first[record.first >= 0], minlength=size).astype(float)
    freq = counts / T
    empty = float(np.mean(record.first < 0))
    if empty > 0.01:
        warnings.warn(f"{empty:.1%} of trials ended at the identity; increase steps", RuntimeWarning)
    return FirstLetterEstimate(freq, np.sqrt(freq * (1 - freq) / T), T, empty, float(np.mean(record.changed_late)))


def estimate_drift(mu: StepDistribution, cfg: SimConfig, S: GeneratorSet | None = None, metric: str = "sigma") -> SimEstimate:
    """Mean of |X_n| / n over independent trials, n = cfg.steps."""
    return drift_from(run_walks(mu, cfg, S), cfg.steps, metric)


def estimate_first_letter(mu: StepDistribution, cfg: SimConfig) -> FirstLetterEstimate:
    """Empirical law of the first syllable of X_n."""
    return first_letter_from(run_walks(mu, cfg), len(mu.fp.sigma))


def estimate_hit_probability(mu: StepDistribution, target: Letter, cfg: SimConfig) -> SimEstimate:
    """Fraction of trials visiting the one-syllable element ``target`` within cfg.steps steps."""
    rec = run_walks(mu, cfg, target=target)
    p = float(rec.hit.mean())
    return SimEstimate(p, float(np.sqrt(p * (1 - p) / cfg.trials)), cfg.trials)
