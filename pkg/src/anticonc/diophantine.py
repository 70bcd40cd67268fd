"""Distance of eta * a from the integer lattice.

The central quantity is

    f(eta) = sqrt(sum_k dist(eta . a_k, Z)^2),

minimised over an admissible eta range. In one dimension the minimum is
found exactly from the piecewise-quadratic structure of f^2; in d
dimensions a Lipschitz branch-and-bound gives a certified lower bound.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    AnticoncError,
    BreakpointBudgetExceeded,
    EmptyDomain,
    InfeasibleDomain,
    IterationBudgetExceeded,
    budget,
)

BREAKPOINT_CAP = 10_000_000
NODE_CAP = 1_000_000
_CHUNK = 1 << 15

EXACT = "exact"
CERTIFIED = "certified-lower-bound"
HEURISTIC = "heuristic-upper-bound"


class CoefficientVector:
    """Coefficients a_1..a_n, scalars (d = 1) or vectors in R^d.

    Stored as an ``(n, d)`` read-only array; ``scalars`` gives the flat view
    in the one-dimensional case.
    """

    def __init__(self, data, allow_zero: bool = False):
        arr = np.array(data, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim == 1:
            arr = arr[:, None]
        elif arr.ndim != 2:
            raise AnticoncError("coefficients must be a list of numbers or a list of vectors")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise AnticoncError("need at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise AnticoncError("coefficients must be finite")
        arr.setflags(write=False)
        self.vectors = arr
        # hypot rescales internally, so tiny or huge entries neither underflow nor overflow
        self.sup_norm = float(np.max(np.hypot.reduce(arr, axis=1)))
        if self.sup_norm == 0 and not allow_zero:
            raise AnticoncError("all coefficients are zero")
        self.euclid_norm = math.hypot(*arr.ravel().tolist())
        gram = arr.T @ arr
        gram.setflags(write=False)
        self.gram = gram

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def scalars(self) -> np.ndarray:
        if self.dim != 1:
            raise AnticoncError(f"expected one-dimensional coefficients, got d = {self.dim}")
        return self.vectors[:, 0]

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of f: sqrt(sum_k |a_k|^2)."""
        return self.euclid_norm

    def scaled(self, c: float) -> "CoefficientVector":
        out = self.vectors * c
        return CoefficientVector(out[:, 0] if self.dim == 1 else out)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"CoefficientVector(n={self.n}, d={self.dim})"


def as_coefficients(a, allow_zero: bool = False) -> CoefficientVector:
    if isinstance(a, CoefficientVector):
        if a.sup_norm == 0 and not allow_zero:
            raise AnticoncError("all coefficients are zero")
        return a
    return CoefficientVector(a, allow_zero)


def lattice_distance(a, eta) -> np.ndarray:
    """f(eta) for one eta (scalar or d-vector) or a stack of them.

    ``eta`` has shape ``(..., d)``; in one dimension a plain array of
    scalars is accepted too.
    """
    a = as_coefficients(a)
    eta = np.asarray(eta, dtype=float)
    if a.dim == 1 and (eta.ndim == 0 or eta.shape[-1] != 1):
        eta = eta[..., None]
    x = eta @ a.vectors.T
    r = x - np.rint(x)
    return np.sqrt(np.sum(r * r, axis=-1))


@dataclass
class DiophantineCertificate:
    """Result of an alpha computation.

    For exact results ``alpha`` is the minimum. For certified results the
    true minimum lies in ``[alpha, alpha + gap]`` and ``objective`` is the
    value attained at ``eta_star``. Heuristic results carry the best value
    found in ``alpha`` and no guarantee.
    """

    alpha: float
    eta_star: np.ndarray
    m_star: Tuple[int, ...]
    kind: str
    gap: float = 0.0
    objective: float = 0.0
    nodes: int = 0

    @property
    def is_sound_lower_bound(self) -> bool:
        return self.kind in (EXACT, CERTIFIED)

    def to_record(self) -> dict:
        rec = {"alpha": self.alpha, "gap": self.gap, "kind": self.kind}
        for i, e in enumerate(np.atleast_1d(self.eta_star)):
            rec[f"eta_{i}"] = float(e)
        for i, m in enumerate(self.m_star):
            rec[f"m_{i}"] = int(m)
        return rec


def half_integer_breakpoints(b: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Points (j + 1/2)/b_k strictly inside (lo, hi), for b_k > 0."""
    parts = []
    for bk in b:
        j0 = math.ceil(lo * bk - 0.5)
        j1 = math.floor(hi * bk - 0.5)
        if j1 >= j0:
            pts = (np.arange(j0, j1 + 1, dtype=float) + 0.5) / bk
            parts.append(pts[(pts > lo) & (pts < hi)])
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def _cells(a: np.ndarray, lo: float, hi: float, cap: float) -> np.ndarray:
    b = np.abs(a[a != 0])
    count = float(np.sum(b)) * (hi - lo) + b.size
    if count > cap:
        raise BreakpointBudgetExceeded(
            f"about {count:.3g} breakpoints exceed the cap {cap:.3g}; "
            "use alpha_multi_certified or raise ANTICONC_BUDGET_OVERRIDE"
        )
    return np.unique(np.concatenate(([lo, hi], half_integer_breakpoints(b, lo, hi))))


def _cell_minima(a: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Per-cell minimiser of sum_k (eta a_k - m_k)^2 with m fixed per cell.

    Returns (eta_star, f^2 at eta_star, unconstrained centre, f^2 at the
    centre, m matrix).
    """
    mid = 0.5 * (lo + hi)
    m = np.rint(mid[:, None] * a[None, :])
    s2 = float(a @ a)
    centre = (m @ a) / s2
    eta = np.clip(centre, lo, hi)
    r = eta[:, None] * a[None, :] - m
    rc = centre[:, None] * a[None, :] - m
    return eta, np.sum(r * r, axis=1), centre, np.sum(rc * rc, axis=1), m


def alpha_1d_exact(a, D: float, *, cap: Optional[float] = None) -> DiophantineCertificate:
    """Exact inf of |eta a - m| over eta in [1/(2|a|_inf), D], m in Z^n.

    On each cell between consecutive breakpoints (j + 1/2)/|a_k| the
    nearest integer vector is constant, so f^2 is a quadratic whose
    minimiser is clamped into the cell.
    """
    a = as_coefficients(a)
    av = a.scalars
    eta0 = 1.0 / (2.0 * a.sup_norm)
    if not D > eta0:
        raise EmptyDomain(f"D = {D!r} <= 1/(2 |a|_inf) = {eta0!r}")
    edges = _cells(av, eta0, float(D), budget(BREAKPOINT_CAP) if cap is None else cap)
    best = (math.inf, 0.0, None)
    for s in range(0, edges.size - 1, _CHUNK):
        e = min(s + _CHUNK, edges.size - 1)
        lo = edges[s:e]
        hi = edges[s + 1 : e + 1]
        eta, val, _, _, m = _cell_minima(av, lo, hi)
        i = int(np.argmin(val))
        if val[i] < best[0]:
            best = (float(val[i]), float(eta[i]), m[i])
    val, eta, m = best
    return DiophantineCertificate(
        alpha=math.sqrt(val),
        eta_star=np.array([eta]),
        m_star=tuple(int(x) for x in m),
        kind=EXACT,
        gap=0.0,
        objective=math.sqrt(val),
    )


# -- branch and bound -------------------------------------------------------


def _box_bounds(V: np.ndarray, colnorm: np.ndarray, lo: np.ndarray, hi: np.ndarray, D: float):
    """Lower bound of f and feasibility status for a batch of boxes.

    Returns (lb, reachable, centre). ``reachable`` is False for boxes that
    cannot contain a feasible point.
    """
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    proj = c @ V.T
    spread = h @ np.abs(V).T
    d = np.abs(proj - np.rint(proj))
    slack = np.maximum(0.0, d - spread)
    lb = np.sqrt(np.sum(slack * slack, axis=1))
    nearest = np.clip(0.0, lo, hi)
    in_disk = np.sqrt(np.sum(nearest * nearest, axis=1)) <= D
    reach = np.max(np.abs(proj) + spread, axis=1) >= 0.5
    return lb, in_disk & reach, c


def _feasible_candidates(V: np.ndarray, D: float, lo: np.ndarray, hi: np.ndarray, c: np.ndarray):
    """A few points per box that may satisfy the constraints.

    Returns an array (boxes, k, d) of candidates; the caller filters.
    """
    cands = [c]
    norm = np.sqrt(np.sum(c * c, axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        cands.append(np.where(norm > D, c * (D / norm), c))
        big = np.max(np.abs(c @ V.T), axis=1, keepdims=True)
        cands.append(np.where(big > 0, c * (0.5 / big), c))
    far = np.where(c >= 0, hi, lo)
    cands.append(far)
    out = np.stack(cands, axis=1)
    return np.clip(np.nan_to_num(out), lo[:, None, :], hi[:, None, :])


def _is_feasible(V, D, pts):
    norm = np.sqrt(np.sum(pts * pts, axis=-1))
    return (norm <= D) & (np.max(np.abs(pts @ V.T), axis=-1) >= 0.5)


def alpha_multi_certified(
    a,
    D: float,
    tolerance: float = 1e-6,
    *,
    max_nodes: Optional[float] = None,
    batch: int = 256,
) -> DiophantineCertificate:
    """Certified minimum of f over {|eta| <= D, max_k |eta . a_k| >= 1/2}.

    Best-first branch-and-bound over axis-aligned boxes covering the disk.
    The per-box lower bound uses dist(x, Z) >= dist(c, Z) - |x - c| for each
    coordinate projection, which is never weaker than the global Lipschitz
    bound. Boxes are processed in deterministic batches of the ``batch``
    smallest lower bounds.

    If the node budget is exhausted an :class:`IterationBudgetExceeded`
    warning is issued and a heuristic certificate is returned.
    """
    a = as_coefficients(a)
    V = a.vectors
    d = a.dim
    D = float(D)
    if not D * a.sup_norm >= 0.5:
        raise InfeasibleDomain(f"no eta with |eta| <= {D!r} reaches max_k |eta.a_k| >= 1/2")
    if D >= d and d > 1:
        warnings.warn(f"D = {D} >= d = {d}; the multidimensional statement assumes D < d", stacklevel=2)
    cap = budget(NODE_CAP) if max_nodes is None else max_nodes
    colnorm = np.sqrt(np.sum(V * V, axis=0))

    best_ub = math.inf
    best_eta = None
    heap: List[tuple] = []
    counter = 0

    def consider(lo, hi):
        nonlocal best_ub, best_eta, counter
        lb, ok, c = _box_bounds(V, colnorm, lo, hi, D)
        cands = _feasible_candidates(V, D, lo, hi, c)
        feas = _is_feasible(V, D, cands)
        vals = np.where(feas, lattice_distance(a, cands), np.inf)
        flat = int(np.argmin(vals))
        bi, ci = divmod(flat, vals.shape[1])
        if vals[bi, ci] < best_ub:
            best_ub = float(vals[bi, ci])
            best_eta = cands[bi, ci].copy()
        for i in range(lo.shape[0]):
            if ok[i] and lb[i] < best_ub:
                heapq.heappush(heap, (float(lb[i]), counter, lo[i], hi[i]))
                counter += 1

    consider(np.full((1, d), -D), np.full((1, d), D))
    nodes = 1
    while heap:
        lb_min = heap[0][0]
        if best_ub - lb_min <= tolerance:
            break
        if nodes >= cap:
            warnings.warn(
                f"branch-and-bound stopped after {nodes} nodes with gap {best_ub - lb_min:.3g}",
                IterationBudgetExceeded,
                stacklevel=2,
            )
            if best_eta is None:
                raise InfeasibleDomain("no feasible point found before the node budget ran out")
            return _certificate(a, best_eta, best_ub, best_ub - lb_min, HEURISTIC, nodes)
        take = []
        while heap and len(take) < batch:
            item = heapq.heappop(heap)
            if item[0] < best_ub:
                take.append(item)
        if not take:
            break
        lo = np.array([t[2] for t in take])
        hi = np.array([t[3] for t in take])
        width = (hi - lo) * colnorm
        axis = np.argmax(width, axis=1)
        rows = np.arange(lo.shape[0])
        mid = 0.5 * (lo[rows, axis] + hi[rows, axis])
        hi_left = hi.copy()
        hi_left[rows, axis] = mid
        lo_right = lo.copy()
        lo_right[rows, axis] = mid
        consider(np.concatenate((lo, lo_right)), np.concatenate((hi_left, hi)))
        nodes += 2 * lo.shape[0]

    if best_eta is None:
        raise InfeasibleDomain("feasible set appears empty")
    lower = heap[0][0] if heap else best_ub
    lower = min(lower, best_ub)
    return _certificate(a, best_eta, lower, best_ub - lower, CERTIFIED, nodes)


def _certificate(a, eta, alpha, gap, kind, nodes) -> DiophantineCertificate:
    # f is even; report the representative with a positive leading entry
    nz = np.flatnonzero(eta)
    if nz.size and eta[nz[0]] < 0:
        eta = -eta
    x = a.vectors @ eta
    m = np.rint(x)
    obj = float(lattice_distance(a, eta))
    if kind == HEURISTIC:
        alpha = obj
    return DiophantineCertificate(
        alpha=float(alpha),
        eta_star=np.asarray(eta, dtype=float),
        m_star=tuple(int(v) for v in m),
        kind=kind,
        gap=float(gap),
        objective=obj,
        nodes=nodes,
    )


# -- B set -------------------------------------------------------------------


@dataclass
class BSetDecomposition:
    """Maximal intervals of {eta in [0, eta_max] : f(eta) < alpha / 2}.

    Intervals are reported as closed ``(lo, hi)`` pairs, sorted and disjoint.
    """

    intervals: List[Tuple[float, float]]
    alpha_used: float
    search_window: Tuple[float, float]
    sup_norm: float

    @property
    def lengths(self) -> np.ndarray:
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        return iv[:, 1] - iv[:, 0]

    @property
    def measure(self) -> float:
        return float(np.sum(self.lengths))

    def contains(self, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if iv.size == 0:
            return np.zeros(eta.shape, dtype=bool)
        i = np.searchsorted(iv[:, 0], eta, side="right") - 1
        ok = i >= 0
        i = np.maximum(i, 0)
        return ok & (eta <= iv[i, 1])

    def separation_violations(self, D: float, slack: float = 1e-9) -> List[Tuple[int, int]]:
        """Pairs of intervals (i <= j) holding two points whose distance
        lies in [1/(2|a|_inf), D].

        When |eta a - m| >= alpha on that range, no such pair may exist.
        """
        eta0 = 1.0 / (2.0 * self.sup_norm)
        iv = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        bad = []
        for i in range(iv.shape[0]):
            dmin = np.maximum(0.0, iv[i:, 0] - iv[i, 1])
            dmax = iv[i:, 1] - iv[i, 0]
            hit = (dmax > eta0 + slack) & (dmin < D - slack)
            bad.extend((i, i + int(j)) for j in np.flatnonzero(hit))
        return bad

    def clusters(self) -> List[Tuple[float, float]]:
        """Hulls of interval groups whose gaps are shorter than 1/(2|a|_inf)."""
        eta0 = 1.0 / (2.0 * self.sup_norm)
        out: List[Tuple[float, float]] = []
        for lo, hi in self.intervals:
            if out and lo - out[-1][1] < eta0:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        return out


def b_set(a, alpha: float, eta_max: float, *, cap: Optional[float] = None) -> BSetDecomposition:
    """Sublevel set {f < alpha / 2} on [0, eta_max], solved cell by cell."""
    a = as_coefficients(a)
    av = a.scalars
    if not alpha > 0:
        raise AnticoncError("alpha must be positive")
    if not eta_max > 0:
        raise AnticoncError("eta_max must be positive")
    edges = _cells(av, 0.0, float(eta_max), budget(BREAKPOINT_CAP) if cap is None else cap)
    r2 = (0.5 * alpha) ** 2
    s2 = float(av @ av)
    pieces: List[Tuple[float, float]] = []
    for s in range(0, edges.size - 1, _CHUNK):
        e = min(s + _CHUNK, edges.size - 1)
        lo = edges[s:e]
        hi = edges[s + 1 : e + 1]
        _, _, centre, fmin2, _ = _cell_minima(av, lo, hi)
        inside = fmin2 < r2
        half = np.sqrt(np.maximum(r2 - fmin2, 0.0) / s2)
        left = np.maximum(lo, centre - half)
        right = np.minimum(hi, centre + half)
        keep = inside & (left < right)
        pieces.extend(zip(left[keep].tolist(), right[keep].tolist()))
    merged: List[Tuple[float, float]] = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1] + 1e-12 * max(1.0, abs(lo)):
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return BSetDecomposition(merged, float(alpha), (0.0, float(eta_max)), a.sup_norm)
