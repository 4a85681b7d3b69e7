"""Recursive polynomial families for the simple walks.

``F_n`` parameterises the harmonic measure of the simple walk on
Z/k * Z/k and ``G_n`` that of Z/2 * Z/k; each family has a distinguished
root (``x_k`` resp. ``y_k``) from which the whole first-letter vector and
the drift follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .core import FreeProduct, GeneratorSet, make_cyclic_free_product
from .equations import StepDistribution

GRID_STEP = 1e-3
CLOSED_FORM_CUTOFF = 1 - 1e-8


def eval_F(n: int, x):
    """F_0 = 1, F_1 = x, F_n = 2(2 - x) F_{n-1} - F_{n-2}; x may be an array."""
    if n < 0:
        raise ValueError("n must be non-negative")
    # x * 0 + 1 keeps the input's number type (float, array or Fraction)
    prev, cur = x * 0 + 1, x
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, 2 * (2 - x) * cur - prev
    return cur


def F_values(n: int, x) -> list:
    """[F_0(x), ..., F_n(x)] in the number type of x."""
    out = [x * 0 + 1, x]
    for _ in range(2, n + 1):
        out.append(2 * (2 - x) * out[-1] - out[-2])
    return out[: n + 1]


def eval_F_closed(n: int, x: float) -> float:
    """Eigenvalue form of F_n; not defined at x = 1 where the eigenvalues merge."""
    if x > CLOSED_FORM_CUTOFF:
        raise ValueError("closed form of F_n requires x < 1")
    root = math.sqrt((1 - x) * (3 - x))
    l1 = 2 - x + root
    l2 = 1 / l1  # det A = 1
    # x - l2 rewritten to avoid cancellation near x = 1/3
    x_minus_l2 = (1 - x) * (3 * x - 1) / (root + 2 * (1 - x))
    return (x_minus_l2 * l1**n + (l1 - x) * l2**n) / (2 * root)


def eval_G(n: int, x):
    """G_0 = 1/4 + x/2, G_1 = x, G_n = 8(1 - x)/(3 - 2x) G_{n-1} - G_{n-2}; x may be an array."""
    if n < 0:
        raise ValueError("n must be non-negative")
    c = 8 * (1 - x) / (3 - 2 * x)
    prev, cur = x / 2 + (x * 0 + 1) / 4, x
    if n == 0:
        return prev
    for _ in range(n - 1):
        prev, cur = cur, c * cur - prev
    return cur


def G_values(n: int, x) -> list:
    """[G_0(x), ..., G_n(x)] in the number type of x."""
    c = 8 * (1 - x) / (3 - 2 * x)
    out = [x / 2 + (x * 0 + 1) / 4, x]
    for _ in range(2, n + 1):
        out.append(c * out[-1] - out[-2])
    return out[: n + 1]


def _first_upcrossing(f, lo: float, hi: float) -> tuple[float, float]:
    grid = np.arange(lo, hi + GRID_STEP / 2, GRID_STEP)
    vals = f(grid)
    ups = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if len(ups) != 1:
        raise ArithmeticError(f"expected exactly one sign change, found {len(ups)}")
    j = ups[0]
    # one extra step each side: a root sitting on a grid point can show
    # the wrong sign in double precision
    return max(grid[j] - GRID_STEP, lo), min(grid[j + 1] + GRID_STEP, hi)


def _refine(f, lo: float, hi: float, dps: int):
    """Bracketed root of f on [lo, hi] to about dps digits (Illinois method)."""
    with mp.workdps(dps):
        a, b = mp.mpf(lo), mp.mpf(hi)
        fa, fb = f(a), f(b)
        if fa * fb > 0:
            raise ArithmeticError("bracket does not straddle a root")
        tol = mp.mpf(10) ** (-(dps - 5))
        side = 0
        c = a
        for _ in range(50 * dps):
            c = (a * fb - b * fa) / (fb - fa)
            fc = f(c)
            if fc == 0:
                break
            if fc * fb > 0:
                b, fb = c, fc
                if side == -1:
                    fa /= 2
                side = -1
            else:
                a, fa = c, fc
                if side == 1:
                    fb /= 2
                side = 1
            if abs(b - a) < tol:
                break
        return c


def working_digits(k: int, rate: float) -> int:
    # F_k near its root mixes modes lambda^k and lambda^-k; keep
    # 2 k log10(lambda) digits of headroom beyond double precision
    return 30 + int(math.ceil(2 * k * math.log10(rate)))


def xk_mp(k: int):
    """x_k as an mpmath number, accurate well beyond double precision."""
    if k < 3:
        raise ValueError("k must be at least 3")
    lo, hi = _first_upcrossing(lambda x: eval_F(k, x) - 1, GRID_STEP, 1 - GRID_STEP)
    dps = working_digits(k, 3)
    with mp.workdps(dps):
        return _refine(lambda x: eval_F(k, x) - 1, lo, hi, dps)


def yk_mp(k: int):
    if k < 3:
        raise ValueError("k must be at least 3")
    lo, hi = _first_upcrossing(lambda y: eval_G(k - 1, y) - y, GRID_STEP, 0.5 - GRID_STEP)
    dps = working_digits(k, 2)
    with mp.workdps(dps):
        return _refine(lambda y: eval_G(k - 1, y) - y, lo, hi, dps)


def solve_xk(k: int) -> float:
    """Unique root in (0, 1) of F_k(x) = 1.

    F_k increases then decreases on [0, 1] with F_k(1/3) = 3^-k and
    F_k(1) = 1, so F_k - 1 has exactly one upward sign change inside.  The
    grid scan runs in double precision; the root is refined in extended
    precision because x_k approaches 1/3 like 3^-k.
    """
    return float(xk_mp(k))


def solve_yk(k: int) -> float:
    """Unique root in (0, 1/2) of G_{k-1}(y) = y."""
    return float(yk_mp(k))


def zkzk_drift_mp(k: int):
    x = xk_mp(k)
    with mp.workdps(working_digits(k, 3)):
        return (1 - x) / 2


def z2zk_drift_mp(k: int):
    y = yk_mp(k)
    with mp.workdps(working_digits(k, 2)):
        return (1 - 2 * y) / 3


@dataclass(frozen=True)
class Profile:
    k: int
    root: float
    r: np.ndarray
    drift: float
    fp: FreeProduct


def zkzk_profile(k: int) -> Profile:
    """Harmonic measure and drift of the simple walk on Z/k * Z/k."""
    x = xk_mp(k)
    with mp.workdps(working_digits(k, 3)):
        half = [float(v / 2) for v in F_values(k - 1, x)[1:]]
        drift = float((1 - x) / 2)
    return Profile(k, float(x), np.array(half + half), drift, make_cyclic_free_product([k, k]))


def z2zk_profile(k: int) -> Profile:
    """Harmonic measure and drift of the simple walk on Z/2 * Z/k."""
    y = yk_mp(k)
    with mp.workdps(working_digits(k, 2)):
        r = [float(v) for v in G_values(k - 1, y)]
        drift = float((1 - 2 * y) / 3)
    return Profile(k, float(y), np.array(r), drift, make_cyclic_free_product([2, k]))


def simple_walk(fp: FreeProduct) -> StepDistribution:
    """Uniform step law on the minimal symmetric generators."""
    return StepDistribution.uniform_on(fp, GeneratorSet.minimal_symmetric(fp).generators())
