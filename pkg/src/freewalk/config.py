"""Loading and validating group + measure configurations.

A configuration is a JSON object::

    {"factors": [4, 4],
     "mu": {"0:1": 0.25, "0:3": 0.25, "1:1": 0.25, "1:3": 0.25},
     "generators": {"0": [1, 3], "1": [1, 3]},
     "solver": {"tolerance": 1e-13}}

``generators`` and ``solver`` are optional; without generators S = Sigma.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .core import FreeProduct, FreeProductError, GeneratorSet, make_cyclic_free_product
from .equations import DEFAULT_OPTIONS, InvalidMeasure, SolverOptions, StepDistribution


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    fp: FreeProduct
    mu: StepDistribution
    S: GeneratorSet | None
    opts: SolverOptions
    digest: str


def digest(data) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = set(data) - {"factors", "mu", "generators", "solver", "name"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")

    factors = data.get("factors")
    if not isinstance(factors, list) or not all(isinstance(k, int) and not isinstance(k, bool) for k in factors):
        raise ConfigError("factors", "expected a list of integer factor orders")
    try:
        fp = make_cyclic_free_product(factors)
    except FreeProductError as err:
        raise ConfigError("factors", str(err)) from None

    raw = data.get("mu")
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("mu", "expected a mapping 'factor:element' -> probability")
    weights = {}
    for key, w in raw.items():
        if isinstance(key, str) and key.endswith(":0"):
            raise ConfigError("mu", f"mass on the identity ({key}) is not supported")
        try:
            x = fp.parse_letter(key)
        except FreeProductError as err:
            raise ConfigError("mu", str(err)) from None
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise ConfigError("mu", f"weight of {key} is not a number")
        weights[x] = float(w)
    try:
        mu = StepDistribution.from_letters(fp, weights)
    except InvalidMeasure as err:
        raise ConfigError("mu", str(err)) from None

    S = None
    gens = data.get("generators")
    if gens is not None:
        if not isinstance(gens, dict):
            raise ConfigError("generators", "expected a mapping factor -> list of elements")
        subsets = []
        for i in range(fp.n_factors):
            sub = gens.get(str(i))
            if not isinstance(sub, list) or not all(isinstance(e, int) for e in sub):
                raise ConfigError("generators", f"factor {i} needs a list of integer elements")
            subsets.append(sub)
        try:
            S = GeneratorSet.from_subsets(fp, subsets)
        except FreeProductError as err:
            raise ConfigError("generators", str(err)) from None

    opts = DEFAULT_OPTIONS
    solver = data.get("solver")
    if solver is not None:
        if not isinstance(solver, dict):
            raise ConfigError("solver", "expected a mapping")
        try:
            opts = SolverOptions(**solver)
        except (TypeError, ValueError) as err:
            raise ConfigError("solver", str(err)) from None
    return RunConfig(fp, mu, S, opts, digest(data))


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as err:
        raise ConfigError("<file>", f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ConfigError("<file>", f"invalid JSON: {err}") from None
    return parse_config(data)
