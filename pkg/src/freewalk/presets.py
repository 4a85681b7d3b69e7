"""Named measure families used throughout the examples and the CLI."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import FreeProduct, GeneratorSet, make_cyclic_free_product
from .equations import StepDistribution
from .observables import Family


@lru_cache(maxsize=None)
def group(*orders: int) -> FreeProduct:
    return make_cyclic_free_product(orders)


def _mu(orders, weights):
    fp = group(*orders)
    return StepDistribution(fp, np.asarray(weights, dtype=float))


def _z2z3(p, q):
    return _mu((2, 3), [1 - p - q, p, q]), None


def _z3z3_i(p):
    # mu(a) = mu(b) = p, mu(a^2) = mu(b^2) = 1/2 - p
    return _mu((3, 3), [p, 0.5 - p, p, 0.5 - p]), None


def _z3z3_ii(p):
    # mu(a) = mu(a^2) = p, mu(b) = mu(b^2) = 1/2 - p
    return _mu((3, 3), [p, p, 0.5 - p, 0.5 - p]), None


def _z3z3_pq(p, q):
    s = (1 - p - q) / 2
    return _mu((3, 3), [p, q, s, s]), None


def _simple(orders):
    fp = group(*orders)
    S = GeneratorSet.minimal_symmetric(fp)
    return StepDistribution.uniform_on(fp, S.generators()), S


def _zkzk_simple(k):
    k = int(round(k))
    return _simple((k, k))


def _z2zk_simple(k):
    k = int(round(k))
    return _simple((2, k))


def _z2z2z2(p):
    return _mu((2, 2, 2), [p, p, 1 - 2 * p]), None


def _z2z4_min(p):
    fp = group(2, 4)
    return _mu((2, 4), [1 - 2 * p, p, 0, p]), GeneratorSet.minimal_symmetric(fp)


def _z3z4_min(p):
    fp = group(3, 4)
    return _mu((3, 4), [p, p, 0.5 - p, 0, 0.5 - p]), GeneratorSet.minimal_symmetric(fp)


def _z4z4_min(p):
    fp = group(4, 4)
    return _mu((4, 4), [p, 0, p, 0.5 - p, 0, 0.5 - p]), GeneratorSet.minimal_symmetric(fp)


def uniform_per_factor(orders) -> Family:
    """mu_p = p * uniform(Sigma_1) + (1 - p) * uniform(Sigma_2)."""
    k1, k2 = orders

    def build(p):
        w = [p / (k1 - 1)] * (k1 - 1) + [(1 - p) / (k2 - 1)] * (k2 - 1)
        return _mu((k1, k2), w), None

    return Family(f"z{k1}z{k2}-uniform", ("p",), ((0.0, 1.0),), build,
                  description="p uniform on the first factor, 1 - p uniform on the second")


FAMILIES: dict[str, Family] = {
    f.name: f
    for f in [
        Family("z2z3", ("p", "q"), ((0.0, 1.0), (0.0, 1.0)), _z2z3, simplex=1.0,
               description="Z/2*Z/3 with mu(b) = p, mu(b^2) = q, mu(a) = 1 - p - q"),
        Family("z3z3-i", ("p",), ((0.0, 0.5),), _z3z3_i,
               description="Z/3*Z/3 with mu(a) = mu(b) = p"),
        Family("z3z3-ii", ("p",), ((0.0, 0.5),), _z3z3_ii,
               description="Z/3*Z/3 with mu(a) = mu(a^2) = p"),
        Family("z3z3-pq", ("p", "q"), ((0.0, 1.0), (0.0, 1.0)), _z3z3_pq, simplex=1.0,
               description="Z/3*Z/3 with mu(a) = p, mu(a^2) = q, b and b^2 equally likely"),
        Family("zkzk-simple", ("k",), ((3, 1000),), _zkzk_simple, integer=True,
               description="simple walk on Z/k*Z/k"),
        Family("z2zk-simple", ("k",), ((3, 1000),), _z2zk_simple, integer=True,
               description="simple walk on Z/2*Z/k"),
        Family("z2z2z2", ("p",), ((0.0, 0.5),), _z2z2z2,
               description="Z/2*Z/2*Z/2 with mu(a) = mu(b) = p"),
        Family("z2z4-minS", ("p",), ((0.0, 0.5),), _z2z4_min,
               description="Z/2*Z/4, mu(b) = mu(b^3) = p, S = {a, b, b^-1}"),
        Family("z3z4-minS", ("p",), ((0.0, 0.5),), _z3z4_min,
               description="Z/3*Z/4, mu(a^+-1) = p, mu(b^+-1) = 1/2 - p, S minimal"),
        Family("z4z4-minS", ("p",), ((0.0, 0.5),), _z4z4_min,
               description="Z/4*Z/4, mu(a^+-1) = p, mu(b^+-1) = 1/2 - p, S minimal"),
        uniform_per_factor((2, 3)),
        uniform_per_factor((3, 4)),
    ]
}

# default family for `--group`
GROUP_DEFAULTS = {
    (2, 3): "z2z3",
    (3, 3): "z3z3-pq",
    (2, 4): "z2z4-minS",
    (3, 4): "z3z4-minS",
    (4, 4): "z4z4-minS",
    (2, 2, 2): "z2z2z2",
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(sorted(FAMILIES))}") from None
