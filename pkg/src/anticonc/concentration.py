"""Ground-truth values of Q(sum_k a_k X_k).

Exact values come from convolving atomic laws (with near-duplicate merging)
or from the Gaussian closed form; Monte Carlo estimates carry a
distribution-free confidence band.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import erf

from .diophantine import CoefficientVector, as_coefficients
from .distributions import (
    MERGE_TOL,
    RandomVariableModel,
    draw,
    max_window_mass,
    merge_support,
    window_slack,
)
from .errors import AnticoncError, EnumerationBudgetExceeded, budget

ENUMERATION_CAP = 10_000_000
MC_BLOCK = 1 << 16
MIN_SAMPLES = 1000
MAX_CENTRES = 2000
MIDPOINT_POOL = 64

EXACT = "exact"
MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class ConcentrationEstimate:
    """A value of the concentration function.

    ``band`` is the half-width of a confidence band (zero for exact values).
    ``lower_bound`` marks multidimensional estimates that only search
    finitely many ball centres.
    """

    value: float
    method: str
    window_radius: float = 1.0
    band: float = 0.0
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    lower_bound: bool = False

    def __float__(self):
        return self.value

    def interval(self):
        return max(0.0, self.value - self.band), min(1.0, self.value + self.band)


def gaussian_q(norm: float, radius: float = 1.0, sigma: float = 1.0) -> float:
    """Q of N(m, (sigma * norm)^2) for a window of half-width ``radius``."""
    if norm == 0:
        return 1.0
    return float(erf(radius / (math.sqrt(2.0) * sigma * norm)))


def dkw_band(n_samples: int, delta: float) -> float:
    """Half-width 2 * sqrt(ln(2/delta) / (2 N)) covering both CDF evaluations
    of every window simultaneously with probability >= 1 - delta."""
    return 2.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * n_samples))


def sum_distribution(a, model: RandomVariableModel, cap: Optional[float] = None):
    """Exact law of sum_k a_k X_k for an atomic model.

    Returns ``(points, weights)``; points has shape ``(s,)`` in one
    dimension and ``(s, d)`` otherwise.
    """
    if not model.is_atomic:
        raise AnticoncError("exact enumeration needs an atomic model")
    a = as_coefficients(a, allow_zero=True)
    cap = budget(ENUMERATION_CAP) if cap is None else cap
    vals = np.asarray(model.values)
    wts = np.asarray(model.weights)
    m = vals.size
    if a.dim == 1:
        pts = np.zeros(1)
        w = np.ones(1)
        for ak in a.scalars:
            if m == 1:
                pts = pts + ak * vals[0]
                continue
            if ak == 0:
                continue
            if pts.size * m > cap:
                raise EnumerationBudgetExceeded(
                    f"support would grow to {pts.size * m} points (cap {cap:.3g}); use q_monte_carlo"
                )
            pts, w = merge_support(np.add.outer(pts, ak * vals).ravel(), np.multiply.outer(w, wts).ravel())
        return pts, w
    pts = np.zeros((1, a.dim))
    w = np.ones(1)
    for vec in a.vectors:
        if pts.shape[0] * m > cap:
            raise EnumerationBudgetExceeded(
                f"support would grow to {pts.shape[0] * m} points (cap {cap:.3g}); use q_monte_carlo"
            )
        new = (pts[:, None, :] + vals[None, :, None] * vec[None, None, :]).reshape(-1, a.dim)
        nw = np.multiply.outer(w, wts).ravel()
        key = np.round(new / MERGE_TOL) * MERGE_TOL
        pts, inv = np.unique(key, axis=0, return_inverse=True)
        w = np.bincount(inv.ravel(), weights=nw)
    return pts, w


def q_exact_atomic(a, model: RandomVariableModel, radius: float = 1.0) -> ConcentrationEstimate:
    """Q(sum_k a_k X_k) by exhaustive convolution of an atomic law.

    In one dimension the sup over window positions is exact. In d >= 2 the
    maximum is taken over balls centred at support points and at pairwise
    midpoints, and the result is flagged as a lower bound unless the whole
    support fits in one ball.
    """
    if not radius > 0:
        raise AnticoncError("radius must be positive")
    a = as_coefficients(a, allow_zero=True)
    pts, w = sum_distribution(a, model)
    if a.dim == 1:
        return ConcentrationEstimate(min(1.0, max_window_mass(pts, w, radius)), EXACT, radius)
    return _ball_search(pts, w, radius, EXACT)


def _ball_search(pts, w, radius, method, **extra) -> ConcentrationEstimate:
    n = pts.shape[0]
    r = radius + window_slack(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if np.linalg.norm(hi - lo) <= 2.0 * radius:
        # bounding-box diagonal fits: the ball at the box centre holds everything
        return ConcentrationEstimate(float(min(1.0, w.sum())), method, radius, **extra)
    tree = cKDTree(pts)
    centres = pts
    if n <= 1500:
        i, j = np.triu_indices(n, k=1)
        centres = np.concatenate((pts, 0.5 * (pts[i] + pts[j])))
    best = 0.0
    for s in range(0, centres.shape[0], 4096):
        hits = tree.query_ball_point(centres[s : s + 4096], r)
        for h in hits:
            best = max(best, float(np.sum(w[h])))
    return ConcentrationEstimate(min(1.0, best), method, radius, lower_bound=True, **extra)


def q_exact(a, model: RandomVariableModel, radius: float = 1.0) -> ConcentrationEstimate:
    """Exact Q: enumeration for atomic models, the erf formula for Gaussians."""
    a = as_coefficients(a, allow_zero=True)
    if model.is_atomic:
        return q_exact_atomic(a, model, radius)
    if a.dim != 1:
        raise AnticoncError("no closed form for multidimensional Gaussian sums; use q_monte_carlo")
    return ConcentrationEstimate(gaussian_q(a.euclid_norm, radius, model.sigma), EXACT, radius)


def sample_sums(a, model: RandomVariableModel, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``n_samples`` copies of sum_k a_k X_k as an ``(N, d)`` array.

    The budget is cut into fixed blocks, block ``i`` seeded from
    ``(seed, i)``, so the output does not depend on ``workers``.
    """
    a = as_coefficients(a, allow_zero=True)
    V = a.vectors
    nblocks = -(-n_samples // MC_BLOCK)
    jobs = [(i, min(MC_BLOCK, n_samples - i * MC_BLOCK)) for i in range(nblocks)]

    def run(job):
        i, count = job
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), i])))
        return draw(model, rng, (count, V.shape[0])) @ V

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return np.concatenate(parts)


def q_monte_carlo(
    a,
    model: RandomVariableModel,
    radius: float = 1.0,
    n_samples: int = 100_000,
    seed: int = 0,
    delta: float = 0.01,
    workers: int = 1,
) -> ConcentrationEstimate:
    """Empirical sup-window estimate of Q(sum_k a_k X_k).

    One dimension: sorted sums and a sliding closed window of width
    ``2 * radius``; the band is the DKW half-width. Higher dimensions:
    balls centred at up to 2000 distinct sampled points and at midpoints
    of pairs among the first 64, flagged as a lower bound.
    """
    if n_samples < MIN_SAMPLES:
        raise AnticoncError(f"n_samples must be >= {MIN_SAMPLES}")
    if not 0 < delta < 1:
        raise AnticoncError("delta must lie in (0, 1)")
    if not radius > 0:
        raise AnticoncError("radius must be positive")
    a = as_coefficients(a, allow_zero=True)
    sums = sample_sums(a, model, n_samples, seed, workers)
    band = dkw_band(n_samples, delta)
    extra = dict(band=band, n_samples=n_samples, seed=seed)
    if a.dim == 1:
        s = np.sort(sums[:, 0])
        j = np.searchsorted(s, s + 2.0 * radius + window_slack(s), side="right")
        count = int(np.max(j - np.arange(s.size)))
        return ConcentrationEstimate(count / n_samples, MONTE_CARLO, radius, **extra)
    tree = cKDTree(sums)
    # distinct sampled points plus pairwise midpoints of the first few of them
    head = sums[: 8 * MAX_CENTRES]
    _, first = np.unique(head, axis=0, return_index=True)
    distinct = head[np.sort(first)[:MAX_CENTRES]]
    i, j = np.triu_indices(min(distinct.shape[0], MIDPOINT_POOL), k=1)
    centres = np.concatenate((distinct, 0.5 * (distinct[i] + distinct[j])))
    counts = tree.query_ball_point(centres, radius + window_slack(sums), return_length=True)
    return ConcentrationEstimate(
        float(np.max(counts)) / n_samples, MONTE_CARLO, radius, lower_bound=True, **extra
    )


def levy_L(a, model: RandomVariableModel, epsilon: float, method: str = EXACT, **kwargs) -> ConcentrationEstimate:
    """L(sum_k a_k X_k; epsilon) computed as Q(sum_k (a_k / epsilon) X_k)."""
    if not epsilon > 0:
        raise AnticoncError("epsilon must be positive")
    a = as_coefficients(a, allow_zero=True)
    scaled = CoefficientVector(a.vectors / epsilon if a.dim > 1 else a.scalars / epsilon, allow_zero=True)
    if method == EXACT:
        est = q_exact(scaled, model, 1.0)
    elif method == MONTE_CARLO:
        est = q_monte_carlo(scaled, model, 1.0, **kwargs)
    else:
        raise AnticoncError(f"unknown method {method!r}")
    return ConcentrationEstimate(
        est.value, est.method, float(epsilon), est.band, est.n_samples, est.seed, est.lower_bound
    )
