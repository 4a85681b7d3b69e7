"""Free products of finite groups: letters, normal forms, word lengths.

Elements of a free product ``G_1 * ... * G_n`` are written in normal form
as alternating sequences of non-identity factor elements (syllables).
The alphabet ``sigma`` lists every non-identity element of every factor,
factor-major and element ascending; all solvers index vectors by this order.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class FreeProductError(ValueError):
    pass


class BadOrder(FreeProductError):
    pass


class InfiniteDihedral(FreeProductError):
    pass


class InvalidWord(FreeProductError):
    pass


class InvalidGenerators(FreeProductError):
    pass


@dataclass(frozen=True)
class FactorGroup:
    order: int
    product_table: tuple[tuple[int, ...], ...]
    inverse_table: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        k = self.order
        if k < 2:
            raise BadOrder(f"factor order must be >= 2, got {k}")
        table = np.asarray(self.product_table)
        if table.shape != (k, k) or table.min() < 0 or table.max() >= k:
            raise FreeProductError("product table must be a k x k table of indices in 0..k-1")
        ident = np.arange(k)
        if not (np.array_equal(table[0], ident) and np.array_equal(table[:, 0], ident)):
            raise FreeProductError("index 0 must be the identity")
        for row in table:
            if len(set(row)) != k:
                raise FreeProductError("product table is not a Latin square")
        if k <= 16:
            # (ij)l == i(jl) for all triples
            lhs = table[table]
            rhs = table[ident[:, None, None], table[None, :, :]]
            if not np.array_equal(lhs, rhs):
                raise FreeProductError("product table is not associative")
        inv = np.asarray(self.inverse_table)
        if inv.shape != (k,) or not np.all(table[ident, inv] == 0):
            raise FreeProductError("inverse table inconsistent with product table")

    @classmethod
    def cyclic(cls, k: int, label: str = "") -> FactorGroup:
        if k < 2:
            raise BadOrder(f"factor order must be >= 2, got {k}")
        table = tuple(tuple((i + j) % k for j in range(k)) for i in range(k))
        inverse = tuple((-i) % k for i in range(k))
        return cls(k, table, inverse, label or f"Z/{k}")

    def mul(self, i: int, j: int) -> int:
        return self.product_table[i][j]

    def inv(self, i: int) -> int:
        return self.inverse_table[i]


@dataclass(frozen=True, order=True)
class Letter:
    factor: int
    element: int

    def __post_init__(self):
        if self.element == 0:
            raise InvalidWord("a letter cannot be the identity element")

    def __str__(self):
        return f"{self.factor}:{self.element}"


_NAMES = "abcdefghijklmnopqrstuvwxyz"


class FreeProduct:
    """Free product of finite groups together with its canonical alphabet."""

    def __init__(self, factors: Sequence[FactorGroup]):
        factors = tuple(factors)
        if len(factors) < 2:
            raise FreeProductError("a free product needs at least two factors")
        if len(factors) == 2 and factors[0].order == 2 and factors[1].order == 2:
            raise InfiniteDihedral("Z/2 * Z/2 is the infinite dihedral group (recurrent walks)")
        self.factors = factors
        self.sigma: tuple[Letter, ...] = tuple(
            Letter(i, e) for i, f in enumerate(factors) for e in range(1, f.order)
        )
        self.index = {x: n for n, x in enumerate(self.sigma)}

        size = len(self.sigma)
        self.factor_of = np.array([x.factor for x in self.sigma])
        self.inverse_index = np.array([self.index[self.inverse(x)] for x in self.sigma])
        # product_index[x, y]: index of x*y when in the same factor, -1 if x*y = e,
        # -2 when x, y lie in different factors
        prod = np.full((size, size), -2, dtype=np.int64)
        for n, x in enumerate(self.sigma):
            for m, y in enumerate(self.sigma):
                if x.factor == y.factor:
                    z = factors[x.factor].mul(x.element, y.element)
                    prod[n, m] = -1 if z == 0 else self.index[Letter(x.factor, z)]
        self.product_index = prod
        self.factor_sizes = np.array([f.order - 1 for f in factors])
        # membership matrix: factor_mask[i, x] = 1 iff letter x lies in factor i
        self.factor_mask = (self.factor_of[None, :] == np.arange(len(factors))[:, None]).astype(float)

    def __repr__(self):
        return "FreeProduct(" + " * ".join(f.label for f in self.factors) + ")"

    def __eq__(self, other):
        return isinstance(other, FreeProduct) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(f.order for f in self.factors)

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def letter(self, factor: int, element: int) -> Letter:
        x = Letter(factor, element % self.factors[factor].order)
        if x not in self.index:
            raise InvalidWord(f"no letter {factor}:{element}")
        return x

    def parse_letter(self, text: str) -> Letter:
        """Parse ``"f:e"`` into a letter."""
        try:
            f, e = (int(s) for s in text.split(":"))
        except ValueError:
            raise InvalidWord(f"letter must look like 'factor:element', got {text!r}") from None
        if not 0 <= f < self.n_factors or not 0 < e < self.factors[f].order:
            raise InvalidWord(f"no letter {text!r} in {self!r}")
        return Letter(f, e)

    def inverse(self, x: Letter) -> Letter:
        return Letter(x.factor, self.factors[x.factor].inv(x.element))

    def name(self, x: Letter) -> str:
        """Human label: ``a``, ``b^2``, ... (cyclic convention)."""
        base = _NAMES[x.factor] if x.factor < len(_NAMES) else f"g{x.factor}_"
        return base if x.element == 1 else f"{base}^{x.element}"

    def vector(self, values: Mapping[Letter, float]) -> np.ndarray:
        v = np.zeros(len(self.sigma))
        for x, w in values.items():
            v[self.index[x]] = w
        return v


def make_cyclic_free_product(orders: Iterable[int]) -> FreeProduct:
    orders = [int(k) for k in orders]
    if len(orders) < 2:
        raise FreeProductError("need at least two factors")
    for k in orders:
        if k < 2:
            raise BadOrder(f"factor order must be >= 2, got {k}")
    return FreeProduct([FactorGroup.cyclic(k) for k in orders])


@dataclass(frozen=True)
class NormalForm:
    syllables: tuple[Letter, ...] = ()

    def __post_init__(self):
        for x, y in zip(self.syllables, self.syllables[1:]):
            if x.factor == y.factor:
                raise InvalidWord(f"adjacent syllables {x} and {y} lie in the same factor")

    def __len__(self):
        return len(self.syllables)

    def __iter__(self):
        return iter(self.syllables)


def right_multiply(w: NormalForm, x: Letter, fp: FreeProduct) -> NormalForm:
    syl = w.syllables
    if not syl or syl[-1].factor != x.factor:
        return NormalForm(syl + (x,))
    z = fp.factors[x.factor].mul(syl[-1].element, x.element)
    if z == 0:
        return NormalForm(syl[:-1])
    return NormalForm(syl[:-1] + (Letter(x.factor, z),))


def multiply(w: NormalForm, v: NormalForm, fp: FreeProduct) -> NormalForm:
    for x in v:
        w = right_multiply(w, x, fp)
    return w


def _bfs_lengths(group: FactorGroup, gens: Iterable[int]) -> list[int]:
    dist = [-1] * group.order
    dist[0] = 0
    queue = deque([0])
    gens = list(gens)
    while queue:
        g = queue.popleft()
        for s in gens:
            h = group.mul(g, s)
            if dist[h] < 0:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


@dataclass(frozen=True)
class GeneratorSet:
    """Generating set S given factor by factor, with word lengths |x|_S."""

    fp: FreeProduct
    subsets: tuple[frozenset[int], ...]
    lengths: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.subsets) != self.fp.n_factors:
            raise InvalidGenerators("one generator subset per factor is required")
        lengths = []
        for i, (group, subset) in enumerate(zip(self.fp.factors, self.subsets)):
            if not subset or any(not 0 < s < group.order for s in subset):
                raise InvalidGenerators(f"generators of factor {i} must be non-identity elements")
            dist = _bfs_lengths(group, sorted(subset))
            if min(dist) < 0:
                raise InvalidGenerators(f"subset {sorted(subset)} does not generate factor {i}")
            lengths.append(tuple(dist))
        object.__setattr__(self, "lengths", tuple(lengths))

    @classmethod
    def from_subsets(cls, fp: FreeProduct, subsets: Sequence[Iterable[int]]) -> GeneratorSet:
        return cls(fp, tuple(frozenset(int(e) % f.order for e in s) for f, s in zip(fp.factors, subsets)))

    @classmethod
    def full(cls, fp: FreeProduct) -> GeneratorSet:
        """S = sigma, every letter has length one."""
        return cls(fp, tuple(frozenset(range(1, f.order)) for f in fp.factors))

    @classmethod
    def minimal_symmetric(cls, fp: FreeProduct) -> GeneratorSet:
        """{g, g^-1} in each cyclic factor (just {g} for Z/2)."""
        return cls(fp, tuple(frozenset({1, f.inv(1)}) for f in fp.factors))

    def s_length(self, x: Letter) -> int:
        return self.lengths[x.factor][x.element]

    def length_vector(self) -> np.ndarray:
        return np.array([self.s_length(x) for x in self.fp.sigma], dtype=float)

    def generators(self) -> list[Letter]:
        return [Letter(i, e) for i, s in enumerate(self.subsets) for e in sorted(s)]

    def word_length(self, w: NormalForm) -> int:
        return sum(self.s_length(x) for x in w)

    def factor_growth(self, i: int) -> np.ndarray:
        """Coefficients (constant term first) of the factor growth polynomial."""
        dist = self.lengths[i]
        return np.bincount(dist).astype(float)

    def is_symmetric(self) -> bool:
        return all(
            all(f.inv(s) in subset for s in subset) for f, subset in zip(self.fp.factors, self.subsets)
        )


def s_length(x: Letter, S: GeneratorSet) -> int:
    return S.s_length(x)


def words(fp: FreeProduct, length: int) -> Iterable[NormalForm]:
    """All normal forms with the given number of syllables."""
    if length == 0:
        yield NormalForm()
        return
    for seq in itertools.product(fp.sigma, repeat=length):
        if all(a.factor != b.factor for a, b in zip(seq, seq[1:])):
            yield NormalForm(seq)
