"""Drift, entropy, volume and the extremality ratio h / (gamma v).

Also hosts measure families, parameter sweeps and maximisation over a
family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq, minimize, minimize_scalar

from .core import FreeProduct, GeneratorSet
from .equations import (
    DEFAULT_OPTIONS,
    FirstPassageSolution,
    SolverOptions,
    StepDistribution,
    TrafficSolution,
    solve_first_passage,
    solve_traffic,
)
from .harmonic import HarmonicMeasure, rn_log_matrix, stationary_distribution


class NoGrowthRoot(ArithmeticError):
    pass


def _vector(r) -> np.ndarray:
    if isinstance(r, TrafficSolution):
        return r.r
    if isinstance(r, HarmonicMeasure):
        return r.r
    return np.asarray(r, dtype=float)


def drift_sigma(mu: StepDistribution, r) -> float:
    """gamma = sum_x mu(x) [r(Sigma - Sigma_x) - r(x^-1)], the rate of syllable growth."""
    r = _vector(r)
    fp = mu.fp
    tail = r.sum() - fp.factor_mask @ r
    return float(mu.weights @ (tail[fp.factor_of] - r[fp.inverse_index]))


def mean_s_length(hm: HarmonicMeasure, S: GeneratorSet) -> float:
    """Average S-length of a syllable of the limit word (stationary law of the letter chain)."""
    pi = stationary_distribution(hm).pi
    return float(pi @ S.length_vector())


def drift_s(mu: StepDistribution, r, S: GeneratorSet) -> float:
    # the limit normal form is a Markov chain of letters; each syllable
    # contributes its S-length, produced at rate drift_sigma
    hm = r if isinstance(r, HarmonicMeasure) else HarmonicMeasure(mu.fp, _vector(r))
    return drift_sigma(mu, hm) * mean_s_length(hm, S)


def entropy(mu: StepDistribution, hm: HarmonicMeasure) -> float:
    """Asymptotic entropy h = -sum_x mu(x) E[log d(x^-1 nu)/d nu]."""
    if not isinstance(hm, HarmonicMeasure):
        hm = HarmonicMeasure(mu.fp, _vector(hm))
    logs = rn_log_matrix(hm)
    return float(-(mu.weights @ (logs @ hm.r)))


def volume_sigma(fp: FreeProduct) -> float:
    sizes = fp.factor_sizes.astype(float)
    M = np.tile(sizes, (len(sizes), 1))
    np.fill_diagonal(M, 0.0)
    return float(math.log(max(abs(np.linalg.eigvals(M)))))


def growth_numerator(fp: FreeProduct, S: GeneratorSet) -> np.ndarray:
    """Numerator of sum_i 1/F_i(z) - (n - 1), ascending coefficients.

    F_i is the growth polynomial of factor i for the word metric of S; the
    growth series F of the free product satisfies 1/F = sum_i 1/F_i - (n - 1).
    """
    polys = [S.factor_growth(i) for i in range(fp.n_factors)]
    total = np.array([1.0])
    for p in polys:
        total = P.polymul(total, p)
    num = -(fp.n_factors - 1) * total
    for i in range(len(polys)):
        others = np.array([1.0])
        for j, p in enumerate(polys):
            if j != i:
                others = P.polymul(others, p)
        num = P.polyadd(num, others)
    return P.polytrim(num, tol=0)


def growth_radius(fp: FreeProduct, S: GeneratorSet) -> float:
    """Smallest positive zero z* of the growth numerator; the volume is -log z*."""
    num = growth_numerator(fp, S)
    roots = P.polyroots(num)
    real = sorted(z.real for z in roots if abs(z.imag) < 1e-9 and 0 < z.real <= 1 + 1e-12)
    if not real:
        raise NoGrowthRoot("growth numerator has no zero in (0, 1]")
    z = real[0]
    f = lambda t: P.polyval(t, num)
    lo, hi = z * (1 - 1e-8), min(z * (1 + 1e-8), 1.0)
    if f(lo) * f(hi) < 0:
        z = brentq(f, lo, hi, xtol=1e-16, rtol=1e-15)
    return float(z)


def volume_s(fp: FreeProduct, S: GeneratorSet) -> float:
    return -math.log(growth_radius(fp, S))


def ball_counts(fp: FreeProduct, S: GeneratorSet, radius: int) -> list[int]:
    """|B(m)| for m = 0..radius by breadth-first search in the Cayley graph of (G, S)."""
    index = fp.index
    gens = [index[g] for g in S.generators()]
    prod = fp.product_index
    fac = fp.factor_of
    seen = {()}
    frontier = [()]
    counts = [1]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            last = w[-1] if w else -1
            for g in gens:
                if last < 0 or fac[last] != fac[g]:
                    v = w + (g,)
                else:
                    z = prod[last, g]
                    v = w[:-1] if z == -1 else w[:-1] + (int(z),)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
        counts.append(counts[-1] + len(nxt))
    return counts


def extremality_ratio(mu: StepDistribution, r, S: GeneratorSet) -> float:
    hm = r if isinstance(r, HarmonicMeasure) else HarmonicMeasure(mu.fp, _vector(r))
    return entropy(mu, hm) / (drift_s(mu, hm, S) * volume_s(mu.fp, S))


# -- one-shot analysis ----------------------------------------------------------


@dataclass
class Analysis:
    r: np.ndarray
    pi: np.ndarray
    gamma_sigma: float
    gamma_s: float
    entropy: float
    v_sigma: float
    v_s: float
    ratio: float
    stationary: bool
    residual: float
    iterations: int
    q: np.ndarray | None = None

    def invariant_violations(self, slack: float = 1e-9) -> list[str]:
        bad = []
        if not 0 < self.gamma_sigma < 1:
            bad.append(f"gamma_sigma={self.gamma_sigma} outside (0, 1)")
        if self.gamma_s < self.gamma_sigma - slack:
            bad.append("gamma_s < gamma_sigma")
        if self.entropy < -slack:
            bad.append(f"negative entropy {self.entropy}")
        if self.entropy > self.gamma_sigma * self.v_sigma + slack:
            bad.append("h > gamma_sigma v_sigma")
        if self.entropy > self.gamma_s * self.v_s + slack:
            bad.append("h > gamma_s v_s")
        return bad


def analyze(
    mu: StepDistribution,
    S: GeneratorSet | None = None,
    opts: SolverOptions = DEFAULT_OPTIONS,
    first_passage: bool = False,
) -> Analysis:
    fp = mu.fp
    S = S if S is not None else GeneratorSet.full(fp)
    sol = solve_traffic(mu, opts)
    hm = HarmonicMeasure(fp, sol.r)
    report = stationary_distribution(hm)
    g = drift_sigma(mu, hm)
    gs = g * float(report.pi @ S.length_vector())
    h = entropy(mu, hm)
    vs = volume_s(fp, S)
    q: FirstPassageSolution | None = solve_first_passage(mu, opts) if first_passage else None
    return Analysis(
        r=sol.r,
        pi=report.pi,
        gamma_sigma=g,
        gamma_s=gs,
        entropy=h,
        v_sigma=volume_sigma(fp),
        v_s=vs,
        ratio=h / (gs * vs),
        stationary=report.is_stationary,
        residual=sol.residual,
        iterations=sol.iterations,
        q=None if q is None else q.q,
    )


# -- families, sweeps, maximisation --------------------------------------------


Builder = Callable[..., tuple[StepDistribution, "GeneratorSet | None"]]


@dataclass(frozen=True)
class Family:
    """A parameterised family of step laws, optionally with a generating set.

    ``builder(*point)`` returns ``(mu, S)``; ``S`` of None means S = Sigma.
    ``simplex`` adds the constraint sum(point) <= simplex.
    """

    name: str
    params: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    builder: Builder
    simplex: float | None = None
    integer: bool = False
    description: str = ""

    def feasible(self, point: Sequence[float]) -> bool:
        if len(point) != len(self.params):
            return False
        for x, (lo, hi) in zip(point, self.bounds):
            if not lo - 1e-15 <= x <= hi + 1e-15:
                return False
        if self.simplex is not None and sum(point) > self.simplex + 1e-15:
            return False
        return True

    def build(self, point: Sequence[float]):
        if not self.feasible(point):
            raise ValueError(f"point {tuple(point)} outside family {self.name}")
        return self.builder(*point)

    def restrict(self, index: int, value: float) -> Family:
        """Face of the family with parameter ``index`` frozen at ``value``."""
        keep = [i for i in range(len(self.params)) if i != index]

        def builder(*free):
            full = list(free)
            full.insert(index, value)
            return self.builder(*full)

        bounds = [self.bounds[i] for i in keep]
        if self.simplex is not None:
            bounds = [(lo, min(hi, self.simplex - value)) for lo, hi in bounds]
        return Family(
            f"{self.name}[{self.params[index]}={value:g}]",
            tuple(self.params[i] for i in keep),
            tuple(bounds),
            builder,
            None,
            self.integer,
        )

    def simplex_face(self) -> Family:
        """For two parameters with sum(point) <= s: the face p + q = s, parameterised by p."""
        if self.simplex is None or len(self.params) != 2:
            raise ValueError("simplex face needs a two-parameter simplex family")
        s = self.simplex
        (lo0, hi0), (lo1, hi1) = self.bounds
        lo = max(lo0, s - hi1)
        hi = min(hi0, s - lo1)
        return Family(
            f"{self.name}[{self.params[0]}+{self.params[1]}={s:g}]",
            (self.params[0],),
            ((lo, hi),),
            lambda p: self.builder(p, s - p),
        )


@dataclass
class SweepRow:
    point: tuple[float, ...]
    analysis: Analysis


@dataclass
class SweepResult:
    family: str
    params: tuple[str, ...]
    rows: list[SweepRow]
    failures: list[tuple[tuple[float, ...], str]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    columns = ("gamma_sigma", "gamma_s", "entropy", "v_sigma", "v_s", "ratio", "stationary", "residual")

    def column(self, name: str) -> np.ndarray:
        if name in self.params:
            return np.array([row.point[self.params.index(name)] for row in self.rows])
        return np.array([getattr(row.analysis, name) for row in self.rows], dtype=float)

    def records(self) -> list[dict]:
        out = []
        for row in self.rows:
            rec = dict(zip(self.params, row.point))
            a = row.analysis
            for c in self.columns:
                rec[c] = getattr(a, c)
            out.append(rec)
        return out


def parse_grid(text: str, integer: bool = False) -> np.ndarray:
    """``start:stop:count`` (inclusive endpoints), or a comma list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be positive")
        values = np.linspace(start, stop, count)
        return np.unique(np.rint(values)) if integer else values
    return np.array([float(v) for v in text.split(",")])


def sweep(
    family: Family,
    grids: Sequence[Sequence[float]],
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> SweepResult:
    """Tabulate the observables over the cartesian product of ``grids``.

    Points outside the family are skipped; solver failures and invariant
    violations are recorded in ``failures`` instead of aborting the sweep.
    """
    if len(grids) != len(family.params):
        raise ValueError(f"family {family.name} needs grids for {family.params}")
    rows, failures = [], []
    points = sorted(tuple(float(v) for v in pt) for pt in np.array(np.meshgrid(*grids, indexing="ij")).reshape(len(grids), -1).T)
    for point in points:
        if not family.feasible(point):
            continue
        try:
            mu, S = family.build(point)
            a = analyze(mu, S, opts)
        except (ValueError, ArithmeticError, RuntimeError) as err:
            failures.append((point, f"{type(err).__name__}: {err}"))
            continue
        bad = a.invariant_violations()
        if bad:
            failures.append((point, "; ".join(bad)))
            continue
        rows.append(SweepRow(point, a))
    meta = {"tolerance": opts.tolerance, "max_iterations": opts.max_iterations,
            "solver_iterations": [row.analysis.iterations for row in rows]}
    return SweepResult(family.name, family.params, rows, failures, meta)


@dataclass
class MaxResult:
    point: tuple[float, ...]
    value: float
    evaluations: int


def _objective(family: Family, objective, opts: SolverOptions):
    if callable(objective):
        return objective
    if objective not in ("drift", "ratio"):
        raise ValueError(f"unknown objective {objective!r}")
    volumes: dict = {}

    def f(*point):
        try:
            mu, S = family.build(point)
            sol = solve_traffic(mu, opts)
        except (ValueError, ArithmeticError, RuntimeError):
            return math.nan
        if objective == "drift":
            return drift_sigma(mu, sol)
        S = S if S is not None else GeneratorSet.full(mu.fp)
        key = (mu.fp, S.subsets)
        if key not in volumes:
            volumes[key] = volume_s(mu.fp, S)
        hm = HarmonicMeasure(mu.fp, sol.r)
        return entropy(mu, hm) / (drift_s(mu, hm, S) * volumes[key])

    return f


class _Counter:
    def __init__(self, f):
        self.f = f
        self.n = 0

    def __call__(self, *x):
        self.n += 1
        return self.f(*x)


def _maximize_1d(f, lo: float, hi: float, grid: int, starts: int) -> tuple[float, float]:
    xs = np.linspace(lo, hi, grid)
    vals = np.array([f(x) for x in xs])
    if np.all(np.isnan(vals)):
        return math.nan, -math.inf
    v = np.where(np.isnan(vals), -np.inf, vals)
    # local maxima of the grid, best first
    peaks = [j for j in range(grid) if v[j] > -np.inf and (j == 0 or v[j] >= v[j - 1]) and (j == grid - 1 or v[j] >= v[j + 1])]
    peaks = sorted(peaks, key=lambda j: -v[j])[:starts]
    best_x, best_v = xs[peaks[0]], v[peaks[0]]
    step = xs[1] - xs[0] if grid > 1 else hi - lo
    for j in peaks:
        a, b = max(lo, xs[j] - step), min(hi, xs[j] + step)
        neg = lambda x: -f(x) if not math.isnan(f(x)) else math.inf
        res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
        x = float(res.x)
        x = _polish_stationary_point(f, x, a, b)
        fx = f(x)
        if not math.isnan(fx) and fx > best_v:
            best_x, best_v = x, fx
    return float(best_x), float(best_v)


def _polish_stationary_point(f, x: float, a: float, b: float, h: float = 1e-4) -> float:
    """Zero of a five-point central difference derivative near x."""
    def d(t):
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    lo, hi = max(a + 2 * h, x - 1e-3), min(b - 2 * h, x + 1e-3)
    if not lo < hi:
        return x
    try:
        dlo, dhi = d(lo), d(hi)
        if math.isnan(dlo) or math.isnan(dhi) or dlo * dhi > 0:
            return x
        return float(brentq(d, lo, hi, xtol=1e-15, rtol=1e-15))
    except (ValueError, ArithmeticError):
        return x


def maximize(
    family: Family,
    objective="drift",
    grid: int = 41,
    starts: int = 3,
    opts: SolverOptions = DEFAULT_OPTIONS,
) -> MaxResult:
    """Maximise drift or ratio over a one- or two-parameter family.

    Grid scan, then bounded Brent refinement and a derivative polish in one
    dimension; in two dimensions every face of the domain is treated as a
    one-parameter family and the interior is refined by Nelder-Mead.
    """
    f = _Counter(_objective(family, objective, opts))
    if len(family.params) == 1:
        (lo, hi), = family.bounds
        x, v = _maximize_1d(f, lo, hi, grid, starts)
        return MaxResult((x,), v, f.n)
    if len(family.params) != 2:
        raise ValueError("maximize supports one- and two-parameter families")

    candidates: list[tuple[float, tuple[float, ...]]] = []
    for idx in range(2):
        for bound in family.bounds[idx]:
            face = family.restrict(idx, bound)
            (lo, hi), = face.bounds
            if lo > hi:
                continue
            g = lambda t, idx=idx, bound=bound: f(*((bound, t) if idx == 0 else (t, bound)))
            x, v = _maximize_1d(g, lo, hi, grid, starts)
            if v > -math.inf:
                candidates.append((v, (bound, x) if idx == 0 else (x, bound)))
    if family.simplex is not None:
        face = family.simplex_face()
        (lo, hi), = face.bounds
        s = family.simplex
        x, v = _maximize_1d(lambda t: f(t, s - t), lo, hi, grid, starts)
        if v > -math.inf:
            candidates.append((v, (x, s - x)))

    (lo0, hi0), (lo1, hi1) = family.bounds
    pts = [(a, b) for a in np.linspace(lo0, hi0, grid)[1:-1] for b in np.linspace(lo1, hi1, grid)[1:-1]
           if family.feasible((a, b))]
    vals = [f(*p) for p in pts]
    order = sorted((i for i in range(len(pts)) if not math.isnan(vals[i])), key=lambda i: -vals[i])[:starts]

    def neg(z):
        if not family.feasible(z):
            return math.inf
        val = f(*z)
        return math.inf if math.isnan(val) else -val

    for i in order:
        res = minimize(neg, pts[i], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 2000})
        if np.isfinite(res.fun):
            candidates.append((-float(res.fun), tuple(float(t) for t in res.x)))
    if not candidates:
        raise ArithmeticError(f"objective undefined everywhere on {family.name}")
    top = max(c[0] for c in candidates)
    # symmetric families have mirror-image maxima; prefer the lexicographically largest point
    v, pt = max((c for c in candidates if c[0] >= top - 1e-12), key=lambda c: c[1])
    return MaxResult(tuple(float(t) for t in pt), float(v), f.n)
