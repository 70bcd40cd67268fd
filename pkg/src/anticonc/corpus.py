"""Random instance corpora for calibration and verification runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .distributions import RandomVariableModel

MODELS = {
    "rademacher": RandomVariableModel.rademacher(),
    "lazy": RandomVariableModel.atomic([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]),
    "bernoulli3": RandomVariableModel.atomic([(0.0, 0.5), (3.0, 0.5)]),
    "three-point": RandomVariableModel.atomic([(0.0, 1 / 3), (1.5, 1 / 3), (3.0, 1 - 2 / 3)]),
}


@dataclass(frozen=True)
class Instance:
    instance_id: str
    a: Tuple[float, ...]
    model: RandomVariableModel
    D: float
    model_name: str = ""


def random_instance(rng: np.random.Generator, instance_id: str, n_max: int = 12, coef_max: float = 5.0,
                    models: Sequence[str] = tuple(MODELS)) -> Instance:
    """One instance: n in [2, n_max], coefficients uniform in
    [-coef_max, coef_max] with the largest forced to magnitude >= 1, and
    D uniform on (1/(2 |a|_inf), 1)."""
    n = int(rng.integers(2, n_max + 1))
    a = rng.uniform(-coef_max, coef_max, n)
    k = int(np.argmax(np.abs(a)))
    if abs(a[k]) < 1.0:
        a[k] = math.copysign(1.0, a[k]) * rng.uniform(1.0, coef_max)
    eta0 = 1.0 / (2.0 * np.max(np.abs(a)))
    D = float(rng.uniform(eta0, 1.0))
    name = models[int(rng.integers(len(models)))]
    return Instance(instance_id, tuple(float(x) for x in a), MODELS[name], D, name)


def random_corpus(size: int, seed: int, **kwargs) -> List[Instance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, f"i{idx:03d}", **kwargs) for idx in range(size)]


def _primes(count: int) -> List[int]:
    out: List[int] = []
    k = 2
    while len(out) < count:
        if all(k % p for p in out if p * p <= k):
            out.append(k)
        k += 1
    return out


def incommensurable_direction(n: int) -> np.ndarray:
    """Unit vector proportional to (sqrt 2, sqrt 3, sqrt 5, ...)."""
    u = np.sqrt(np.array(_primes(n), dtype=float))
    return u / np.linalg.norm(u)
