"""Models for the summand distribution X.

Two families are supported: finitely supported (atomic) laws and Gaussians.
Both admit a closed-form characteristic function, an exact concentration
function and an exact symmetrization summary, which is what the rest of the
package needs for oracle-grade checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf, erfc, ndtri

from .errors import DegenerateSymmetrization, InvalidModel

MERGE_TOL = 1e-12
WEIGHT_TOL = 1e-12


def window_slack(values) -> float:
    """Absolute slack used when testing closed-window membership."""
    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    return MERGE_TOL * max(1.0, scale)


def merge_support(values, weights, tol: float = MERGE_TOL):
    """Sort a weighted point set and merge values closer than ``tol``.

    Merging is relative to ``tol * max(1, |v|)`` and chains through
    consecutive neighbours. The representative of a merged group is its
    smallest member. Returns ``(values, weights)`` as float arrays.
    """
    values = np.asarray(values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if values.size == 0:
        return values, weights
    order = np.argsort(values, kind="stable")
    values = values[order]
    weights = weights[order]
    gaps = np.diff(values)
    thresh = tol * np.maximum(1.0, np.abs(values[1:]))
    starts = np.concatenate(([True], gaps > thresh))
    idx = np.flatnonzero(starts)
    return values[idx], np.add.reduceat(weights, idx)


def max_window_mass(values, weights, radius: float) -> float:
    """Largest mass of a sorted weighted point set inside a closed window
    of width ``2 * radius``.

    The supremum over window centres of a piecewise-constant count is
    attained with the left edge on a support point, so only those
    placements are scanned.
    """
    values = np.asarray(values, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(weights)))
    right = values + 2.0 * radius + window_slack(values)
    j = np.searchsorted(values, right, side="right")
    i = np.arange(values.size)
    return float(np.max(cum[j] - cum[i]))


@dataclass(frozen=True)
class RandomVariableModel:
    """Law of a single summand X.

    Build instances with :meth:`atomic`, :meth:`gaussian` or
    :meth:`from_literal` rather than calling the constructor directly; the
    factories validate and normalise the atom list.
    """

    kind: str
    values: Tuple[float, ...] = ()
    weights: Tuple[float, ...] = ()
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind == "atomic":
            if not self.values or len(self.values) != len(self.weights):
                raise InvalidModel("atomic model needs matching, nonempty values/weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise InvalidModel("atomic weights must be strictly positive")
            if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
                raise InvalidModel(f"atomic weights sum to {math.fsum(self.weights)!r}, not 1")
            v = np.asarray(self.values, dtype=float)
            if not np.all(np.isfinite(v)):
                raise InvalidModel("atomic values must be finite")
            if np.any(np.diff(v) <= 0):
                raise InvalidModel("atomic values must be sorted and distinct")
        elif self.kind == "gaussian":
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise InvalidModel("gaussian sigma must be positive")
            if not math.isfinite(self.mu):
                raise InvalidModel("gaussian mu must be finite")
        else:
            raise InvalidModel(f"unknown model kind {self.kind!r}")

    @classmethod
    def atomic(cls, atoms: Iterable[Sequence[float]]) -> "RandomVariableModel":
        """Atomic law from ``(value, weight)`` pairs; near-duplicates are merged."""
        atoms = [tuple(a) for a in atoms]
        if not atoms or any(len(a) != 2 for a in atoms):
            raise InvalidModel("atoms must be a nonempty list of (value, weight) pairs")
        vals, wts = merge_support([a[0] for a in atoms], [a[1] for a in atoms])
        return cls("atomic", tuple(map(float, vals)), tuple(map(float, wts)))

    @classmethod
    def gaussian(cls, mu: float = 0.0, sigma: float = 1.0) -> "RandomVariableModel":
        return cls("gaussian", mu=float(mu), sigma=float(sigma))

    @classmethod
    def rademacher(cls) -> "RandomVariableModel":
        return cls.atomic([(-1.0, 0.5), (1.0, 0.5)])

    @classmethod
    def from_literal(cls, obj) -> "RandomVariableModel":
        """Parse ``{"kind": "atomic", "atoms": [[v, w], ...]}`` or
        ``{"kind": "gaussian", "mu": m, "sigma": s}`` (dict or JSON text)."""
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise InvalidModel(f"model literal is not valid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise InvalidModel("model literal must be a JSON object")
        kind = obj.get("kind")
        if kind == "atomic":
            extra = set(obj) - {"kind", "atoms"}
            if extra or "atoms" not in obj:
                raise InvalidModel(f"atomic literal takes exactly 'kind' and 'atoms' (got {sorted(obj)})")
            return cls.atomic(obj["atoms"])
        if kind == "gaussian":
            extra = set(obj) - {"kind", "mu", "sigma"}
            if extra:
                raise InvalidModel(f"unknown gaussian literal keys {sorted(extra)}")
            return cls.gaussian(obj.get("mu", 0.0), obj.get("sigma", 1.0))
        raise InvalidModel(f"unknown model kind {kind!r}")

    def to_literal(self) -> dict:
        if self.kind == "atomic":
            return {"kind": "atomic", "atoms": [[v, w] for v, w in zip(self.values, self.weights)]}
        return {"kind": "gaussian", "mu": self.mu, "sigma": self.sigma}

    @property
    def is_atomic(self) -> bool:
        return self.kind == "atomic"

    def shifted(self, c: float) -> "RandomVariableModel":
        if self.is_atomic:
            return RandomVariableModel.atomic([(v + c, w) for v, w in zip(self.values, self.weights)])
        return RandomVariableModel.gaussian(self.mu + c, self.sigma)

    def scaled(self, k: float) -> "RandomVariableModel":
        if k == 0:
            raise InvalidModel("scale must be nonzero")
        if self.is_atomic:
            return RandomVariableModel.atomic([(k * v, w) for v, w in zip(self.values, self.weights)])
        return RandomVariableModel.gaussian(k * self.mu, abs(k) * self.sigma)


def char_fn(model: RandomVariableModel, eta):
    """Characteristic function E exp(i eta X); vectorised over ``eta``."""
    eta_arr = np.asarray(eta, dtype=float)
    if model.is_atomic:
        v = np.asarray(model.values)
        w = np.asarray(model.weights)
        out = np.exp(1j * np.multiply.outer(eta_arr, v)) @ w
    else:
        out = np.exp(1j * eta_arr * model.mu - 0.5 * (eta_arr * model.sigma) ** 2)
    out = np.where(eta_arr == 0, 1.0 + 0.0j, out)
    if np.ndim(eta) == 0:
        return complex(out)
    return out


def abs_char_fn(model: RandomVariableModel, eta):
    """|phi(eta)| as a float array, without forming complex intermediates
    for the Gaussian case."""
    eta_arr = np.asarray(eta, dtype=float)
    if model.is_atomic:
        return np.minimum(np.abs(char_fn(model, eta_arr)), 1.0)
    return np.exp(-0.5 * (eta_arr * model.sigma) ** 2)


def q_of(model: RandomVariableModel, radius: float = 1.0, scale: float = 1.0) -> float:
    """Concentration function sup_x P{|scale * X - x| <= radius}."""
    if radius <= 0 or scale <= 0:
        raise InvalidModel("radius and scale must be positive")
    if model.is_atomic:
        v = scale * np.asarray(model.values)
        return min(1.0, max_window_mass(v, model.weights, radius))
    return float(erf(radius / (math.sqrt(2.0) * scale * model.sigma)))


@dataclass(frozen=True)
class SymmetrizationSummary:
    """Facts about X~ = X - X' used by the Step-2 estimate.

    ``conditional_values``/``conditional_weights`` describe the law of X~
    given |X~| >= 2 (atomic models with q > 0 only).
    """

    q: float
    p: float
    conditional_values: Optional[Tuple[float, ...]] = None
    conditional_weights: Optional[Tuple[float, ...]] = None
    difference_values: Optional[Tuple[float, ...]] = field(default=None, repr=False)
    difference_weights: Optional[Tuple[float, ...]] = field(default=None, repr=False)

    @property
    def has_conditional(self) -> bool:
        return self.conditional_values is not None

    def conditional_law(self):
        if self.conditional_values is None:
            raise DegenerateSymmetrization("q = 0: X~ never satisfies |X~| >= 2")
        return dict(zip(self.conditional_values, self.conditional_weights))


def symmetrize(model: RandomVariableModel, scale: float = 1.0, *, require_conditional: bool = False) -> SymmetrizationSummary:
    """Exact q = P{|X~| >= 2} and, for atomic models, the conditional law.

    ``scale`` replaces X by ``scale * X`` throughout (p is then
    1 - Q(scale * X)).
    """
    p = 1.0 - q_of(model, 1.0, scale)
    if not model.is_atomic:
        if require_conditional:
            raise DegenerateSymmetrization("gaussian models have no finite conditional law")
        return SymmetrizationSummary(q=float(erfc(1.0 / (scale * model.sigma))), p=p)
    v = scale * np.asarray(model.values)
    w = np.asarray(model.weights)
    dv, dw = merge_support(np.subtract.outer(v, v).ravel(), np.multiply.outer(w, w).ravel())
    far = np.abs(dv) >= 2.0 - window_slack(dv)
    q = float(math.fsum(dw[far]))
    if q <= 0.0:
        if require_conditional:
            raise DegenerateSymmetrization("q = 0: X~ never satisfies |X~| >= 2")
        return SymmetrizationSummary(q=0.0, p=p, difference_values=tuple(dv), difference_weights=tuple(dw))
    return SymmetrizationSummary(
        q=q,
        p=p,
        conditional_values=tuple(map(float, dv[far])),
        conditional_weights=tuple(map(float, dw[far] / q)),
        difference_values=tuple(dv),
        difference_weights=tuple(dw),
    )


def _uniform_open(rng: np.random.Generator, count: int) -> np.ndarray:
    # rng.random() yields k / 2**53; the half-step offset keeps u in (0, 1)
    return rng.random(count) + 2.0 ** -54


def sample(model: RandomVariableModel, seed, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. copies of X, reproducibly from ``seed``.

    ``seed`` may be an int, a sequence of ints, or a
    :class:`numpy.random.SeedSequence`.
    """
    if count < 1:
        raise InvalidModel("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    return draw(model, rng, count)


def draw(model: RandomVariableModel, rng: np.random.Generator, count) -> np.ndarray:
    """Sample with an existing generator; ``count`` may be a shape tuple."""
    shape = (count,) if np.isscalar(count) else tuple(count)
    size = int(np.prod(shape))
    u = _uniform_open(rng, size)
    if model.is_atomic:
        cum = np.cumsum(model.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u, side="right")
        out = np.asarray(model.values)[np.minimum(idx, len(cum) - 1)]
    else:
        out = model.mu + model.sigma * ndtri(u)
    return out.reshape(shape)
