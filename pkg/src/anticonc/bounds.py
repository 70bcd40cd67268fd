"""Right-hand sides of the concentration bounds, constant calibration, and
end-to-end verification reports."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import concentration, diophantine, esseen
from .corpus import incommensurable_direction
from .diophantine import as_coefficients
from .distributions import RandomVariableModel, symmetrize
from .errors import (
    AnticoncError,
    BudgetExceeded,
    DegenerateGram,
    EmptyCorpus,
    InvalidP,
)
from .quadrature import QuadratureSpec

CALIBRATED = "calibrated"
USER = "user-supplied"
C_GRID = tuple(float(x) for x in np.logspace(-3, 1, 41))


@dataclass(frozen=True)
class BoundConstants:
    """Values for the unspecified universal constants C and c.

    Calibrated constants are empirical fits to a corpus, nothing more.
    """

    C: float = 1.0
    c: float = 1.0
    provenance: str = USER
    binding_instance: Optional[str] = None
    excluded: tuple = ()

    def __post_init__(self):
        if not (self.C > 0 and self.c > 0):
            raise AnticoncError("C and c must be positive")


def theorem1_rhs(p: float, alpha: float, D: float, a_norm: float, k: BoundConstants = BoundConstants()) -> float:
    """C * (exp(-c p^2 alpha^2) + 1 / (p D |a|))."""
    if not p > 0:
        raise InvalidP(f"p = {p!r}: the bound needs Q(X) < 1")
    if not (D > 0 and a_norm > 0 and alpha >= 0):
        raise AnticoncError("need D > 0, |a| > 0, alpha >= 0")
    return k.C * (math.exp(-k.c * p * p * alpha * alpha) + 1.0 / (p * D * a_norm))


def inverse_sqrt_gram_det(a) -> float:
    """det(sum_k a_k a_k^T)^(-1/2) via a Cholesky factor."""
    a = as_coefficients(a)
    G = np.asarray(a.gram)
    d = G.shape[0]
    scale = float(np.max(np.diag(G)))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise DegenerateGram("the a_k do not span R^d; the bound is vacuous") from None
    diag = np.diag(L)
    if np.prod(diag) ** 2 <= 1e-14 * scale**d:
        raise DegenerateGram("the a_k do not span R^d; the bound is vacuous")
    return float(1.0 / np.prod(diag))


def theorem2_rhs(p: float, alpha: float, D: float, a, k: BoundConstants = BoundConstants()) -> float:
    """C^d * (exp(-c p^2 alpha^2) + (sqrt(d)/(p D))^d * det(Gram)^(-1/2))."""
    if not p > 0:
        raise InvalidP(f"p = {p!r}: the bound needs Q(X) < 1")
    if not (D > 0 and alpha >= 0):
        raise AnticoncError("need D > 0, alpha >= 0")
    a = as_coefficients(a)
    d = a.dim
    inv = inverse_sqrt_gram_det(a)
    return k.C**d * (math.exp(-k.c * p * p * alpha * alpha) + (math.sqrt(d) / (p * D)) ** d * inv)


# -- reports -----------------------------------------------------------------


@dataclass
class BoundReport:
    """Every quantity in the verification chain for one instance.

    ``stage_errors`` maps a stage name to the error that stopped it; the
    remaining fields are still filled wherever possible. ``None`` means
    not computed or not applicable.
    """

    instance_id: str
    n: int = 0
    dim: int = 1
    D: float = math.nan
    a_norm: float = math.nan
    sup_norm: float = math.nan
    gram_det: float = math.nan
    p: Optional[float] = None
    p_scale: float = 1.0
    q_sym: Optional[float] = None
    alpha: Optional[float] = None
    alpha_kind: Optional[str] = None
    alpha_gap: Optional[float] = None
    Q: Optional[float] = None
    Q_method: Optional[str] = None
    Q_band: float = 0.0
    step1: Optional[float] = None
    step1_tail: Optional[float] = None
    step2: Optional[float] = None
    I_A: Optional[float] = None
    I_B: Optional[float] = None
    cap_A: Optional[float] = None
    thm_rhs: Optional[float] = None
    C: Optional[float] = None
    c: Optional[float] = None
    chain_ok: Optional[bool] = None
    theorem_ok: Optional[bool] = None
    stage_errors: Dict[str, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    degraded: bool = False

    def as_text(self) -> str:
        lines = [f"instance {self.instance_id} (n={self.n}, d={self.dim}, D={_fmt(self.D)})"]
        for name in CSV_COLUMNS[1:]:
            lines.append(f"  {name:>12}: {_fmt(getattr(self, name, None))}")
        for stage, msg in self.stage_errors.items():
            lines.append(f"  error[{stage}]: {msg}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines)


CSV_COLUMNS = (
    "instance_id",
    "n",
    "dim",
    "D",
    "a_norm",
    "sup_norm",
    "gram_det",
    "p",
    "p_scale",
    "q_sym",
    "alpha",
    "alpha_kind",
    "alpha_gap",
    "Q",
    "Q_method",
    "Q_band",
    "step1",
    "step1_tail",
    "step2",
    "I_A",
    "I_B",
    "cap_A",
    "thm_rhs",
    "C",
    "c",
    "chain_ok",
    "theorem_ok",
)


def _fmt(v) -> str:
    """Fixed textual form: 17 significant digits, empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return format(float(v), ".17g")
    return str(v)


def reports_to_csv(reports: Iterable[BoundReport], extra_errors: bool = True) -> str:
    """CSV text with the fixed column order of :data:`CSV_COLUMNS` plus a
    final ``errors`` column; LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + (("errors",) if extra_errors else ()))
    for r in reports:
        row = [_fmt(getattr(r, c)) for c in CSV_COLUMNS]
        if extra_errors:
            row.append(";".join(f"{k}:{v}" for k, v in r.stage_errors.items()))
        w.writerow(row)
    return buf.getvalue()


def _err(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def verify_instance(
    a,
    model: RandomVariableModel,
    D: float,
    *,
    constants: BoundConstants = BoundConstants(),
    quad: QuadratureSpec = QuadratureSpec(),
    tol: float = 1e-9,
    c3: float = 1.0,
    z: float = 2.0 / math.pi,
    scale: Optional[float] = None,
    alpha_tol: float = 1e-6,
    mc_samples: int = 1_000_000,
    seed: int = 0,
    delta: float = 0.01,
    instance_id: str = "0",
) -> BoundReport:
    """Run the whole chain for one instance and record every value.

    Stages: p and q from the summand law; alpha (exact in one dimension,
    certified otherwise); Q (exact, or Monte Carlo when enumeration is too
    large); the step-1/step-2 integrals; the A/B split; the theorem bound.
    ``scale`` multiplies X when computing p and q; when omitted a law
    with p = 0 at scale 1 is retried at scale 2.
    """
    a = as_coefficients(a)
    rep = BoundReport(instance_id=str(instance_id), n=a.n, dim=a.dim, D=float(D))
    rep.a_norm = a.euclid_norm
    rep.sup_norm = a.sup_norm
    rep.gram_det = float(np.linalg.det(np.asarray(a.gram)))
    rep.C, rep.c = constants.C, constants.c

    # p, q
    K = 1.0 if scale is None else float(scale)
    try:
        sym = symmetrize(model, K)
        if sym.p == 0 and scale is None:
            K = 2.0
            sym = symmetrize(model, K)
            rep.notes.append("Q(X) = 1 at scale 1; p and q computed for 2X")
        rep.p, rep.q_sym, rep.p_scale = sym.p, sym.q, K
    except AnticoncError as exc:
        rep.stage_errors["symmetrize"] = _err(exc)

    # alpha
    cert = None
    try:
        if a.dim == 1:
            try:
                cert = diophantine.alpha_1d_exact(a, D)
            except BudgetExceeded as exc:
                rep.notes.append(f"exact alpha skipped ({exc}); using branch-and-bound")
                rep.degraded = True
                cert = diophantine.alpha_multi_certified(a, D, alpha_tol)
        else:
            cert = diophantine.alpha_multi_certified(a, D, alpha_tol)
        rep.alpha, rep.alpha_kind, rep.alpha_gap = cert.alpha, cert.kind, cert.gap
        rep.degraded |= cert.kind == diophantine.HEURISTIC
    except AnticoncError as exc:
        rep.stage_errors["alpha"] = _err(exc)

    # Q
    try:
        try:
            est = concentration.q_exact(a, model)
        except BudgetExceeded as exc:
            rep.notes.append(f"exact Q skipped ({exc}); using Monte Carlo")
            rep.degraded = True
            est = concentration.q_monte_carlo(a, model, 1.0, mc_samples, seed, delta)
        rep.Q, rep.Q_method, rep.Q_band = est.value, est.method, est.band
        if est.lower_bound:
            rep.notes.append("Q is a lower bound (finite ball-centre search)")
    except AnticoncError as exc:
        rep.stage_errors["Q"] = _err(exc)

    chain = []
    if a.dim == 1:
        try:
            s1 = esseen.step1_integral(a, model, quad)
            rep.step1, rep.step1_tail = s1.value, s1.tail
            if rep.Q is not None:
                chain.append(rep.Q - rep.Q_band <= s1.value + s1.tail + tol)
        except AnticoncError as exc:
            rep.stage_errors["step1"] = _err(exc)
        if model.is_atomic:
            try:
                s2 = esseen.step2_integral_atomic(a, model, quad)
                rep.step2 = s2.value
                if rep.step1 is not None:
                    chain.append(rep.step1 <= math.e * s2.value + tol)
            except AnticoncError as exc:
                rep.stage_errors["step2"] = _err(exc)
        else:
            rep.notes.append("step2 not applicable to Gaussian models")
        if rep.alpha and rep.p:
            try:
                sp = esseen.split_integral(a, rep.alpha, rep.p, c3, z, quad)
                rep.I_A, rep.I_B, rep.cap_A = sp.I_A, sp.I_B, sp.cap_A
            except AnticoncError as exc:
                rep.stage_errors["split"] = _err(exc)
    rep.chain_ok = all(chain) if chain else None

    # theorem bound
    if rep.p is not None and rep.alpha is not None:
        try:
            if a.dim == 1:
                rep.thm_rhs = theorem1_rhs(rep.p, rep.alpha, D, a.euclid_norm, constants)
            else:
                rep.thm_rhs = theorem2_rhs(rep.p, rep.alpha, D, a, constants)
        except AnticoncError as exc:
            rep.stage_errors["theorem"] = _err(exc)
    if rep.thm_rhs is not None and rep.Q is not None:
        if cert is not None and cert.is_sound_lower_bound:
            rep.theorem_ok = rep.Q - rep.Q_band <= rep.thm_rhs
        else:
            rep.notes.append("alpha is heuristic; hypothesis not claimed")
    return rep


# -- calibration -------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationPoint:
    """What calibration needs from a verified instance."""

    instance_id: str
    Q: float
    p: float
    alpha: float
    D: float
    a_norm: float
    alpha_kind: str = diophantine.EXACT

    @classmethod
    def from_report(cls, r: BoundReport) -> "CalibrationPoint":
        return cls(r.instance_id, r.Q, r.p, r.alpha, r.D, r.a_norm, r.alpha_kind)


def _points(corpus) -> List[CalibrationPoint]:
    out = []
    for item in corpus:
        out.append(CalibrationPoint.from_report(item) if isinstance(item, BoundReport) else item)
    return out


def _bracket(pt: CalibrationPoint, c: float) -> float:
    return theorem1_rhs(pt.p, pt.alpha, pt.D, pt.a_norm, BoundConstants(1.0, c))


def minimal_C(points: Sequence[CalibrationPoint], c: float):
    """Smallest C >= 1 with Q <= theorem1_rhs on every point, and the binding id."""
    ratios = [pt.Q / _bracket(pt, c) for pt in points]
    i = int(np.argmax(ratios))
    C = max(1.0, ratios[i])
    binding = points[i].instance_id if ratios[i] >= 1.0 else None
    # step up through rounding until the inequality holds exactly
    while any(pt.Q > theorem1_rhs(pt.p, pt.alpha, pt.D, pt.a_norm, BoundConstants(C, c)) for pt in points):
        C = float(np.nextafter(C, math.inf))
    return C, binding


def calibrate_constants(corpus, fixed_c: Optional[float] = None, c_grid: Sequence[float] = C_GRID) -> BoundConstants:
    """Fit (C, c) so that Q <= theorem1_rhs on every usable corpus instance.

    Instances with a heuristic alpha or p = 0 are excluded with a warning.
    For each candidate c the smallest admissible C is found; among the
    candidates the pair with the tightest bound (smallest mean
    log(RHS / Q)) is returned. With ``fixed_c`` only that value is tried.
    """
    points = _points(corpus)
    if not points:
        raise EmptyCorpus("calibration needs at least one instance")
    usable, excluded = [], []
    for pt in points:
        if pt.alpha_kind not in (diophantine.EXACT, diophantine.CERTIFIED):
            excluded.append(pt.instance_id)
            warnings.warn(f"instance {pt.instance_id}: alpha is {pt.alpha_kind}; excluded from calibration", stacklevel=2)
        elif not (pt.p and pt.p > 0) or pt.Q is None or pt.alpha is None:
            excluded.append(pt.instance_id)
            warnings.warn(f"instance {pt.instance_id}: p = 0 or missing values; excluded", stacklevel=2)
        else:
            usable.append(pt)
    if not usable:
        raise EmptyCorpus("no usable instances after exclusions")
    grid = [float(fixed_c)] if fixed_c is not None else list(c_grid)
    best = None
    for c in grid:
        C, binding = minimal_C(usable, c)
        k = BoundConstants(C, c)
        score = float(np.mean([math.log(theorem1_rhs(pt.p, pt.alpha, pt.D, pt.a_norm, k) / pt.Q) for pt in usable]))
        if best is None or score < best[0]:
            best = (score, C, c, binding)
    _, C, c, binding = best
    return BoundConstants(C, c, CALIBRATED, binding, tuple(excluded))


def holds(points, k: BoundConstants) -> List[bool]:
    """Per-instance check Q <= theorem1_rhs under constants ``k``."""
    return [pt.Q <= theorem1_rhs(pt.p, pt.alpha, pt.D, pt.a_norm, k) for pt in _points(points)]


def scaling_law(ts: Sequence[float] = (10.0, 30.0, 100.0, 300.0), n: int = 20, model: Optional[RandomVariableModel] = None):
    """Exact Q along t * u for an incommensurable unit direction u.

    Returns ``(slope, ts, qs)`` where ``slope`` is the least-squares slope of
    log Q against log t; a 1/|a| decay gives -1.
    """
    model = RandomVariableModel.rademacher() if model is None else model
    u = incommensurable_direction(n)
    ts = np.asarray(ts, dtype=float)
    qs = np.array([concentration.q_exact(t * u, model).value for t in ts])
    slope = float(np.polyfit(np.log(ts), np.log(qs), 1)[0])
    return slope, ts, qs
