"""Polynomial systems attached to a nearest-neighbour walk.

Three systems are solved here, all indexed by the alphabet ``fp.sigma``:

* the traffic equations, whose solution ``r`` is the law of the first
  letter of the limit normal form;
* the stationary traffic equations, the same system restricted to the
  case where ``r`` is also the stationary law of the induced letter chain;
* the first-passage equations for ``q(x)``, the probability of ever
  visiting the letter ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .core import FreeProduct, Letter


class InvalidMeasure(ValueError):
    pass


class DegenerateDenominator(ArithmeticError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-13
    max_iterations: int = 10**6
    damping: float = 1.0
    newton_polish: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


DEFAULT_OPTIONS = SolverOptions()


def _generates(group, support: Sequence[int]) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        g = frontier.pop()
        for s in support:
            h = group.mul(g, s)
            if h not in seen:
                seen.add(h)
                frontier.append(h)
    return len(seen) == group.order


class StepDistribution:
    """Step law mu of the walk, a probability vector over ``fp.sigma``."""

    def __init__(self, fp: FreeProduct, weights):
        w = np.array(weights, dtype=float)
        if w.shape != (len(fp.sigma),):
            raise InvalidMeasure(f"expected {len(fp.sigma)} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or w.min() < 0:
            raise InvalidMeasure("weights must be finite and non-negative")
        if abs(w.sum() - 1) > 1e-10:
            raise InvalidMeasure(f"weights sum to {w.sum():.15g}, not 1")
        mass = fp.factor_mask @ w
        for i, group in enumerate(fp.factors):
            if mass[i] <= 0:
                raise InvalidMeasure(f"factor {i} carries no mass; the walk is confined")
            support = [x.element for x, wx in zip(fp.sigma, w) if x.factor == i and wx > 0]
            if not _generates(group, support):
                raise InvalidMeasure(f"support of mu does not generate factor {i}")
        w.setflags(write=False)
        self.fp = fp
        self.weights = w
        self._terms = None

    @classmethod
    def from_letters(cls, fp: FreeProduct, weights: Mapping[Letter, float]) -> StepDistribution:
        return cls(fp, fp.vector(weights))

    @classmethod
    def uniform_on(cls, fp: FreeProduct, letters: Sequence[Letter]) -> StepDistribution:
        return cls.from_letters(fp, {x: 1 / len(letters) for x in letters})

    def __getitem__(self, x: Letter) -> float:
        return float(self.weights[self.fp.index[x]])

    def __repr__(self):
        body = ", ".join(f"{self.fp.name(x)}={w:.6g}" for x, w in zip(self.fp.sigma, self.weights) if w > 0)
        return f"StepDistribution({body})"

    @property
    def factor_mass(self) -> np.ndarray:
        return self.fp.factor_mask @ self.weights

    @property
    def terms(self) -> _Terms:
        if self._terms is None:
            self._terms = _Terms(self)
        return self._terms


class _Terms:
    """Constant matrices shared by the three systems for a fixed mu."""

    def __init__(self, mu: StepDistribution):
        fp = mu.fp
        size = len(fp.sigma)
        w = mu.weights
        inv = fp.inverse_index
        # within[x, z] = mu(x z^-1) for z != x in the factor of x
        within = np.zeros((size, size))
        for x in range(size):
            for z in range(size):
                if z != x and fp.factor_of[x] == fp.factor_of[z]:
                    within[x, z] = w[fp.product_index[x, inv[z]]]
        self.within = within
        # back[j, v] = mu(v^-1) for v in factor j, so back @ r = sum_{y in j} mu(y) r(y^-1)
        self.back = fp.factor_mask * w[inv][None, :]
        self.mask = fp.factor_mask
        self.f = fp.factor_of
        self.mu = w


@dataclass(frozen=True)
class TrafficSolution:
    r: np.ndarray
    residual: float
    iterations: int

    def factor_mass(self, fp: FreeProduct) -> np.ndarray:
        return fp.factor_mask @ self.r


@dataclass(frozen=True)
class FirstPassageSolution:
    q: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class NoSolution:
    """Returned when the stationary traffic equations have no solution."""

    residual: float
    starts: int

    def __bool__(self):
        return False


def _outside_mass(t: _Terms, r: np.ndarray) -> np.ndarray:
    out = r.sum() - t.mask @ r
    if np.any(out <= 0):
        raise DegenerateDenominator("r(Sigma minus Sigma_j) vanishes for some factor j")
    return out


def traffic_map(mu: StepDistribution, r) -> np.ndarray:
    """One application of the traffic map T.

    For x in factor i::

        T(r)(x) = mu(x) r(Sigma - Sigma_i)
                  + sum_{y in Sigma_i, y != x} mu(y) r(y^-1 x)
                  + r(x) sum_{j != i} sum_{y in Sigma_j} mu(y) r(y^-1) / r(Sigma - Sigma_j)
    """
    t = mu.terms
    r = np.asarray(r, dtype=float)
    out = _outside_mass(t, r)
    s = (t.back @ r) / out
    rate = s.sum() - s
    return t.mu * out[t.f] + t.within @ r + r * rate[t.f]


def traffic_jacobian(mu: StepDistribution, r) -> np.ndarray:
    t = mu.terms
    r = np.asarray(r, dtype=float)
    out = _outside_mass(t, r)
    c = t.back @ r
    s = c / out
    rate = s.sum() - s
    ds = t.back / out[:, None] - (c / out**2)[:, None] * (1 - t.mask)
    drate = ds.sum(axis=0)[None, :] - ds
    return (
        t.mu[:, None] * (1 - t.mask[t.f])
        + t.within
        + np.diag(rate[t.f])
        + r[:, None] * drate[t.f]
    )


def _traffic_residual(mu, r) -> float:
    return float(np.max(np.abs(traffic_map(mu, r) - r)))


def _newton_traffic(mu, r, tol, steps=50):
    ones = np.ones((1, len(r)))
    for _ in range(steps):
        F = traffic_map(mu, r) - r
        if np.max(np.abs(F)) < tol * 1e-2:
            break
        J = traffic_jacobian(mu, r) - np.eye(len(r))
        lhs = np.vstack([J, ones])
        rhs = -np.concatenate([F, [r.sum() - 1]])
        delta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        r = r + delta
        if np.any(r <= 0):
            return None
    return r


def solve_traffic(
    mu: StepDistribution, opts: SolverOptions = DEFAULT_OPTIONS, start=None
) -> TrafficSolution:
    """Unique solution of the traffic equations in the open simplex.

    Damped fixed-point iteration from ``start`` (uniform by default), with
    a Newton polish once the iterate is close.
    """
    size = len(mu.fp.sigma)
    r = np.full(size, 1 / size) if start is None else np.array(start, dtype=float)
    if r.shape != (size,) or np.any(r <= 0):
        raise ValueError("start must be a strictly positive vector over sigma")
    r = r / r.sum()
    newton_gate = 1e-5
    residual = np.inf
    for it in range(opts.max_iterations + 1):
        tr = traffic_map(mu, r)
        residual = float(np.max(np.abs(tr - r)))
        if residual < opts.tolerance:
            return TrafficSolution(r, residual, it)
        if opts.newton_polish and residual < newton_gate:
            polished = _newton_traffic(mu, r, opts.tolerance)
            if polished is not None:
                polished = polished / polished.sum()
                res_p = _traffic_residual(mu, polished)
                if res_p < opts.tolerance:
                    return TrafficSolution(polished, res_p, it + 1)
            newton_gate = residual * 1e-2
        r = (1 - opts.damping) * r + opts.damping * tr
        r = r / r.sum()
    raise NoConvergence("traffic iteration did not converge", residual, opts.max_iterations)


# -- stationary traffic equations ---------------------------------------------


def _stationary_parts(mu: StepDistribution, r):
    t = mu.terms
    n = t.mask.shape[0]
    scale = n / (n - 1)
    s = (t.back @ r) * scale
    rate = s.sum() - s
    value = t.mu * ((n - 1) / n) + t.within @ r + r * rate[t.f]
    residual = np.concatenate([value - r, t.mask @ r - 1 / n])
    ds = t.back * scale
    drate = ds.sum(axis=0)[None, :] - ds
    jac = t.within + np.diag(rate[t.f]) + r[:, None] * drate[t.f] - np.eye(len(r))
    return residual, np.vstack([jac, t.mask])


def stationary_residual(mu: StepDistribution, r) -> np.ndarray:
    """Defect of the stationary traffic system at r.

    Shift invariance of the multiplicative measure forces every factor to
    carry mass 1/n; the denominators r(Sigma - Sigma_j) are then the
    constant (n-1)/n and the system becomes the traffic equations with
    those constants plus the factor-mass constraints.
    """
    return _stationary_parts(mu, np.asarray(r, dtype=float))[0]


def solve_stationary_traffic(
    mu: StepDistribution, opts: SolverOptions = DEFAULT_OPTIONS, restarts: int = 8, seed: int = 0
) -> TrafficSolution | NoSolution:
    fp = mu.fp
    t = mu.terms
    n = fp.n_factors
    rng = np.random.default_rng(seed)
    starts = [t.mask.T @ (1 / (n * fp.factor_sizes))]
    for _ in range(restarts):
        g = rng.gamma(1.0, size=len(fp.sigma)) + 1e-3
        starts.append(g / (t.mask.T @ (t.mask @ g)) / n)

    def fun(r):
        return _stationary_parts(mu, r)[0]

    def jac(r):
        return _stationary_parts(mu, r)[1]

    best = np.inf
    for k, r0 in enumerate(starts):
        fit = least_squares(fun, r0, jac=jac, bounds=(0, 1), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = fit.x
        if opts.newton_polish and np.max(np.abs(fun(r))) < 1e-6:
            for _ in range(20):
                F, J = _stationary_parts(mu, r)
                if np.max(np.abs(F)) < opts.tolerance * 1e-2:
                    break
                r = r + np.linalg.lstsq(J, -F, rcond=None)[0]
        res = float(np.max(np.abs(fun(r))))
        best = min(best, res)
        if res < opts.tolerance and np.all(r > 0):
            return TrafficSolution(r, res, k + 1)
    return NoSolution(best, len(starts))


# -- first passage --------------------------------------------------------------


def first_passage_map(mu: StepDistribution, q) -> np.ndarray:
    """q(x) = mu(x) + sum_{y in Sigma_i, y != x} mu(y) q(y^-1 x) + q(x) sum_{y not in Sigma_i} mu(y) q(y^-1)."""
    t = mu.terms
    q = np.asarray(q, dtype=float)
    c = t.back @ q
    rate = c.sum() - c
    return t.mu + t.within @ q + q * rate[t.f]


def _first_passage_jacobian(mu, q):
    t = mu.terms
    c = t.back @ q
    rate = c.sum() - c
    drate = t.back.sum(axis=0)[None, :] - t.back
    return t.within + np.diag(rate[t.f]) + q[:, None] * drate[t.f]


def solve_first_passage(
    mu: StepDistribution, opts: SolverOptions = DEFAULT_OPTIONS
) -> FirstPassageSolution:
    """Minimal non-negative solution of the first-passage equations.

    Monotone iteration from zero; the iterates increase to the minimal
    solution, which is then polished by Newton steps.
    """
    size = len(mu.fp.sigma)
    q = np.zeros(size)
    newton_gate = 1e-7
    residual = np.inf
    for it in range(opts.max_iterations + 1):
        nxt = first_passage_map(mu, q)
        if np.any(nxt < q - 1e-14) or np.any(nxt > 1 + 1e-12):
            raise ArithmeticError("first-passage iteration left the monotone regime")
        residual = float(np.max(np.abs(nxt - q)))
        if residual < opts.tolerance:
            return FirstPassageSolution(nxt, float(np.max(np.abs(first_passage_map(mu, nxt) - nxt))), it + 1)
        if opts.newton_polish and residual < newton_gate:
            p = nxt.copy()
            for _ in range(30):
                F = first_passage_map(mu, p) - p
                if np.max(np.abs(F)) < opts.tolerance * 1e-2:
                    break
                J = _first_passage_jacobian(mu, p) - np.eye(size)
                p = p - np.linalg.solve(J, F)
            res_p = float(np.max(np.abs(first_passage_map(mu, p) - p)))
            if res_p < opts.tolerance and np.all(p >= nxt - 1e-9) and np.all(p < 1):
                return FirstPassageSolution(p, res_p, it + 1)
            newton_gate = residual * 1e-2
        q = nxt
    raise NoConvergence("first-passage iteration did not converge", residual, opts.max_iterations)
