"""Markovian multiplicative harmonic measure built from a traffic solution.

The exit law of the walk gives the cylinder of ``u_1 ... u_k`` the mass
``r(u_1) P(u_1, u_2) ... P(u_{k-1}, u_k)`` with
``P(x, y) = r(y) / r(Sigma - Sigma_{factor(x)})`` whenever y and x lie in
different factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FreeProduct, InvalidWord, Letter, NormalForm
from .equations import TrafficSolution

STATIONARY_THRESHOLD = 1e-9


@dataclass(frozen=True)
class StationarityReport:
    pi: np.ndarray
    deviation: float
    is_stationary: bool


class HarmonicMeasure:
    def __init__(self, fp: FreeProduct, r):
        r = np.asarray(r.r if isinstance(r, TrafficSolution) else r, dtype=float)
        if r.shape != (len(fp.sigma),) or np.any(r <= 0):
            raise ValueError("r must be a strictly positive vector over sigma")
        self.fp = fp
        self.r = r
        self.tail_mass = r.sum() - fp.factor_mask @ r
        other = fp.factor_of[:, None] != fp.factor_of[None, :]
        self.kernel = np.where(other, r[None, :] / self.tail_mass[fp.factor_of][:, None], 0.0)

    def transition(self, x: Letter, y: Letter) -> float:
        i = self.fp.index
        return float(self.kernel[i[x], i[y]])

    def first_letter(self, x: Letter) -> float:
        return float(self.r[self.fp.index[x]])


def cylinder_probability(hm: HarmonicMeasure, u: NormalForm) -> float:
    syl = u.syllables if isinstance(u, NormalForm) else tuple(u)
    if not syl:
        return 1.0
    idx = hm.fp.index
    try:
        path = [idx[x] for x in syl]
    except KeyError as err:
        raise InvalidWord(f"unknown letter {err.args[0]}") from None
    for a, b in zip(syl, syl[1:]):
        if a.factor == b.factor:
            raise InvalidWord(f"adjacent syllables {a} and {b} lie in the same factor")
    prob = hm.r[path[0]]
    for a, b in zip(path, path[1:]):
        prob *= hm.kernel[a, b]
    return float(prob)


def stationary_distribution(hm: HarmonicMeasure, tol: float = 1e-14, max_iterations: int = 100_000) -> StationarityReport:
    # With two factors the letter chain alternates between factors and is
    # periodic, so iterate the lazy chain (I + P)/2 which has the same
    # stationary law.
    lazy = 0.5 * (np.eye(len(hm.r)) + hm.kernel)
    pi = np.full(len(hm.r), 1 / len(hm.r))
    for _ in range(max_iterations):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            pi = nxt
            break
        pi = nxt
    deviation = float(np.max(np.abs(hm.r - pi)))
    return StationarityReport(pi, deviation, deviation < STATIONARY_THRESHOLD)


def rn_log_ratio(hm: HarmonicMeasure, x: Letter, u1: Letter) -> float:
    """log of mu_inf(x C) / mu_inf(C) for any cylinder C whose first letter is u1."""
    return float(rn_log_matrix(hm)[hm.fp.index[x], hm.fp.index[u1]])


def rn_log_matrix(hm: HarmonicMeasure) -> np.ndarray:
    """Matrix of log Radon-Nikodym ratios indexed by (x, u1)."""
    fp = hm.fp
    r = hm.r
    tail = hm.tail_mass[fp.factor_of]
    size = len(r)
    out = np.empty((size, size))
    for a in range(size):
        for b in range(size):
            if fp.factor_of[a] != fp.factor_of[b]:
                out[a, b] = math.log(r[a] / tail[a])
            else:
                c = fp.product_index[a, b]
                if c == -1:
                    out[a, b] = math.log(tail[a] / r[b])
                else:
                    out[a, b] = math.log(r[c] / r[b])
    return out
