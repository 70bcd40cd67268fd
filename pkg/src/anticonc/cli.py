"""Command-line front end.

Each subcommand reads an experiment config (``--config PATH``), applies any
flag overrides, runs one operation and writes a CSV file plus a text report
next to it. Exit codes: 0 success, 2 invalid input, 3 budget exceeded or a
degraded (heuristic) result; the report is still written in the last case.

Config grammar, one entry per line::

    # comment
    key = value

``model`` takes a JSON literal, ``coefficients`` a comma-separated list of
numbers (vectors separated by ``;`` in d > 1), everything else a scalar.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings
from dataclasses import dataclass, fields, replace
from typing import List, Optional, Tuple

from . import bounds, concentration, diophantine, esseen
from .corpus import random_corpus
from .diophantine import CoefficientVector
from .distributions import RandomVariableModel, symmetrize
from .errors import AnticoncError, BudgetExceeded, ConfigError, IterationBudgetExceeded
from .quadrature import QuadratureSpec

COMMANDS = ("alpha", "qexact", "qmc", "esseen", "bound", "verify", "calibrate")
DEFAULT_MODEL = '{"kind":"atomic","atoms":[[-1,0.5],[1,0.5]]}'


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment settings. Every field has a default."""

    command: str = "verify"
    model: str = DEFAULT_MODEL
    coefficients: Tuple = (1.0, 1.0, 1.0)
    coefficients_file: str = ""
    D: float = 0.75
    radius: float = 1.0
    epsilon: Optional[float] = None
    tol: float = 1e-6
    seed: int = 0
    samples: int = 100_000
    delta: float = 0.01
    out: str = ""
    alpha: Optional[float] = None
    p: Optional[float] = None
    scale: Optional[float] = None
    c3: float = 1.0
    z: float = 2.0 / math.pi
    C: float = 1.0
    c: float = 1.0
    truncation: float = 8.0
    abs_tolerance: float = 1e-10
    max_depth: int = 40
    corpus_size: int = 100
    n_max: int = 12
    coef_max: float = 5.0

    @property
    def model_obj(self) -> RandomVariableModel:
        return RandomVariableModel.from_literal(self.model)

    @property
    def vector(self) -> CoefficientVector:
        return CoefficientVector(self.coefficients)

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(self.truncation, self.max_depth, self.abs_tolerance)

    @property
    def output_path(self) -> str:
        return self.out or f"{self.command}.csv"

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "coefficients" and self.coefficients_file:
                continue
            if v is None or v == "":
                continue
            lines.append(f"{f.name} = {_render(f.name, v)}")
        return "\n".join(lines) + "\n"


_INT = {"seed", "samples", "max_depth", "corpus_size", "n_max"}
_OPT_FLOAT = {"epsilon", "alpha", "p", "scale"}
_STR = {"command", "model", "coefficients_file", "out"}


def _render(name, v) -> str:
    if name == "coefficients":
        if v and isinstance(v[0], tuple):
            return "; ".join(", ".join(repr(x) for x in row) for row in v)
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_numbers(text: str, where: str) -> Tuple:
    rows = [r.strip() for r in text.split(";") if r.strip()]
    try:
        parsed = [tuple(float(x) for x in r.split(",") if x.strip()) for r in rows]
    except ValueError:
        raise ConfigError(f"{where}: coefficients must be numbers") from None
    if not parsed:
        raise ConfigError(f"{where}: empty coefficient list")
    if len(parsed) == 1 and ";" not in text:
        return parsed[0]
    if len({len(r) for r in parsed}) != 1:
        raise ConfigError(f"{where}: coefficient vectors have different lengths")
    return tuple(parsed)


def load_coefficients(path: str) -> Tuple:
    """One number per line (d = 1) or d comma-separated numbers per line."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = [ln.strip() for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read coefficients file {path!r}: {exc.strerror}") from None
    rows = []
    for i, ln in enumerate(raw, 1):
        if not ln or ln.startswith("#"):
            continue
        try:
            rows.append(tuple(float(x) for x in ln.split(",")))
        except ValueError:
            raise ConfigError(f"{path}:{i}: not a number list: {ln!r}") from None
    if not rows:
        raise ConfigError(f"{path}: no coefficients")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"{path}: rows have different lengths")
    if widths == {1}:
        return tuple(r[0] for r in rows)
    return tuple(rows)


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    """Parse and validate config text; unknown or repeated keys are errors."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {s!r}")
        key, _, raw = s.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        where = f"line {lineno} ({key})"
        if key == "coefficients":
            values[key] = _parse_numbers(raw, where)
            continue
        try:
            if key in _STR:
                values[key] = raw
            elif key in _INT:
                values[key] = int(raw)
            else:
                values[key] = float(raw)
        except ValueError:
            raise ConfigError(f"{where}: cannot parse {raw!r}") from None
    if "coefficients_file" in values:
        if "coefficients" in values:
            raise ConfigError("give either 'coefficients' or 'coefficients_file', not both")
        path = values["coefficients_file"]
        values["coefficients"] = load_coefficients(path if os.path.isabs(path) else os.path.join(base_dir, path))
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
    try:
        cfg.model_obj
        cfg.vector
    except AnticoncError as exc:
        raise ConfigError(str(exc)) from None
    for name in ("radius", "tol", "delta", "c3", "truncation", "abs_tolerance", "C", "c", "coef_max"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if not cfg.D > 0:
        raise ConfigError("D must be positive")
    if not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)")
    if cfg.samples < concentration.MIN_SAMPLES:
        raise ConfigError(f"samples must be >= {concentration.MIN_SAMPLES}")
    if cfg.corpus_size < 2 or cfg.n_max < 2 or cfg.max_depth < 1:
        raise ConfigError("corpus_size and n_max must be >= 2, max_depth >= 1")
    for name in _OPT_FLOAT:
        v = getattr(cfg, name)
        if v is not None and not v > 0 and name != "alpha":
            raise ConfigError(f"{name} must be positive")


# -- output helpers ----------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([bounds._fmt(v) for v in row])
    return buf.getvalue()


def _write(cfg: ExperimentConfig, csv_text: str, report: str) -> str:
    path = cfg.output_path
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text)
    with open(os.path.splitext(path)[0] + ".txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report if report.endswith("\n") else report + "\n")
    return path


# -- commands ----------------------------------------------------------------


class Degraded(Exception):
    """Raised after outputs are written when the result is only heuristic."""


def _alpha_cert(cfg):
    a = cfg.vector
    if a.dim == 1:
        try:
            return diophantine.alpha_1d_exact(a, cfg.D), False
        except BudgetExceeded:
            pass
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cert = diophantine.alpha_multi_certified(a, cfg.D, cfg.tol)
    degraded = any(issubclass(w.category, IterationBudgetExceeded) for w in caught) or a.dim == 1
    return cert, degraded


def cmd_alpha(cfg):
    cert, degraded = _alpha_cert(cfg)
    rec = cert.to_record()
    text = "\n".join(f"{k}: {bounds._fmt(v)}" for k, v in rec.items())
    summary = f"alpha = {cert.alpha:.6g} ({cert.kind}, gap {cert.gap:.3g})"
    return _csv(list(rec), [list(rec.values())]), text, summary, degraded or cert.kind == diophantine.HEURISTIC


_Q_HEADER = ["value", "method", "window_radius", "band", "n_samples", "seed", "lower_bound"]


def _q_row(est):
    return [est.value, est.method, est.window_radius, est.band, est.n_samples, est.seed, est.lower_bound]


def cmd_qexact(cfg):
    if cfg.epsilon is not None:
        est = concentration.levy_L(cfg.vector, cfg.model_obj, cfg.epsilon)
    else:
        est = concentration.q_exact(cfg.vector, cfg.model_obj, cfg.radius)
    text = "\n".join(f"{k}: {bounds._fmt(v)}" for k, v in zip(_Q_HEADER, _q_row(est)))
    return _csv(_Q_HEADER, [_q_row(est)]), text, f"Q = {est.value:.17g} (exact)", False


def cmd_qmc(cfg):
    kw = dict(n_samples=cfg.samples, seed=cfg.seed, delta=cfg.delta)
    if cfg.epsilon is not None:
        est = concentration.levy_L(cfg.vector, cfg.model_obj, cfg.epsilon, concentration.MONTE_CARLO, **kw)
    else:
        est = concentration.q_monte_carlo(cfg.vector, cfg.model_obj, cfg.radius, **kw)
    text = "\n".join(f"{k}: {bounds._fmt(v)}" for k, v in zip(_Q_HEADER, _q_row(est)))
    return _csv(_Q_HEADER, [_q_row(est)]), text, f"Q = {est.value:.6g} +/- {est.band:.3g} (monte-carlo)", False


def _p_value(cfg, model):
    if cfg.p is not None:
        return cfg.p
    sym = symmetrize(model, cfg.scale or 1.0)
    if sym.p == 0 and cfg.scale is None:
        sym = symmetrize(model, 2.0)
    return sym.p


def cmd_esseen(cfg):
    a, model, quad = cfg.vector, cfg.model_obj, cfg.quad
    s1 = esseen.step1_integral(a, model, quad)
    row = {"step1": s1.value, "step1_tail": s1.tail, "step2": None, "step2_sup": None, "sup_z": None}
    if model.is_atomic:
        s2 = esseen.step2_integral_atomic(a, model, quad)
        row.update(step2=s2.value, step2_sup=s2.sup_value, sup_z=s2.sup_z)
    alpha = cfg.alpha if cfg.alpha is not None else diophantine.alpha_1d_exact(a, cfg.D).alpha
    p = _p_value(cfg, model)
    row.update(alpha=alpha, p=p, I_A=None, I_B=None, undivided=None, cap_A=None)
    if alpha > 0 and p > 0:
        sp = esseen.split_integral(a, alpha, p, cfg.c3, cfg.z, quad)
        row.update(I_A=sp.I_A, I_B=sp.I_B, undivided=sp.undivided, cap_A=sp.cap_A)
    text = "\n".join(f"{k}: {bounds._fmt(v)}" for k, v in row.items())
    return _csv(list(row), [list(row.values())]), text, f"step1 = {s1.value:.6g}", False


def cmd_bound(cfg):
    a, model = cfg.vector, cfg.model_obj
    degraded = False
    if cfg.alpha is not None:
        alpha = cfg.alpha
    else:
        cert, degraded = _alpha_cert(cfg)
        alpha = cert.alpha
    p = _p_value(cfg, model)
    k = bounds.BoundConstants(cfg.C, cfg.c)
    rhs = bounds.theorem1_rhs(p, alpha, cfg.D, a.euclid_norm, k) if a.dim == 1 else bounds.theorem2_rhs(p, alpha, cfg.D, a, k)
    row = {"dim": a.dim, "p": p, "alpha": alpha, "D": cfg.D, "a_norm": a.euclid_norm,
           "inv_sqrt_det": bounds.inverse_sqrt_gram_det(a), "C": cfg.C, "c": cfg.c, "rhs": rhs}
    text = "\n".join(f"{k}: {bounds._fmt(v)}" for k, v in row.items())
    text += "\nnote: C and c are user-supplied, not derived"
    return _csv(list(row), [list(row.values())]), text, f"bound = {rhs:.6g}", degraded


def cmd_verify(cfg):
    rep = bounds.verify_instance(
        cfg.vector, cfg.model_obj, cfg.D,
        constants=bounds.BoundConstants(cfg.C, cfg.c), quad=cfg.quad, c3=cfg.c3, z=cfg.z,
        scale=cfg.scale, alpha_tol=cfg.tol, mc_samples=cfg.samples, seed=cfg.seed, delta=cfg.delta,
    )
    if "alpha" in rep.stage_errors and rep.stage_errors["alpha"].startswith("EmptyDomain"):
        raise diophantine.EmptyDomain(rep.stage_errors["alpha"].partition(": ")[2])
    summary = f"Q = {bounds._fmt(rep.Q)}, chain_ok = {bounds._fmt(rep.chain_ok)}, theorem_ok = {bounds._fmt(rep.theorem_ok)}"
    return bounds.reports_to_csv([rep]), rep.as_text(), summary, rep.degraded


def cmd_calibrate(cfg):
    corpus = random_corpus(cfg.corpus_size, cfg.seed, n_max=cfg.n_max, coef_max=cfg.coef_max)
    pts = []
    for inst in corpus:
        a = CoefficientVector(inst.a)
        sym = symmetrize(inst.model)
        if sym.p == 0:
            sym = symmetrize(inst.model, 2.0)
        cert = diophantine.alpha_1d_exact(a, inst.D)
        Q = concentration.q_exact(a, inst.model).value
        pts.append(bounds.CalibrationPoint(inst.instance_id, Q, sym.p, cert.alpha, inst.D, a.euclid_norm, cert.kind))
    half = len(pts) // 2
    k = bounds.calibrate_constants(pts[:half])
    rows = []
    for i, pt in enumerate(pts):
        rhs = bounds.theorem1_rhs(pt.p, pt.alpha, pt.D, pt.a_norm, k)
        rows.append([pt.instance_id, "fit" if i < half else "holdout", pt.Q, pt.p, pt.alpha, pt.D, pt.a_norm, rhs, pt.Q <= rhs])
    held = [r[-1] for r in rows[half:]]
    header = ["instance_id", "role", "Q", "p", "alpha", "D", "a_norm", "rhs", "holds"]
    text = (
        f"calibrated (empirical) constants: C = {k.C!r}, c = {k.c!r}\n"
        f"binding instance: {k.binding_instance or 'none (C held at its floor of 1)'}\n"
        f"held-out instances satisfying the bound: {sum(held)}/{len(held)}"
    )
    return _csv(header, rows), text, f"C = {k.C:.6g}, c = {k.c:.6g}, holdout {sum(held)}/{len(held)}", False


HANDLERS = {
    "alpha": cmd_alpha,
    "qexact": cmd_qexact,
    "qmc": cmd_qmc,
    "esseen": cmd_esseen,
    "bound": cmd_bound,
    "verify": cmd_verify,
    "calibrate": cmd_calibrate,
}


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute ``cfg``; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        validate(cfg)
        csv_text, report, summary, degraded = HANDLERS[cfg.command](cfg)
    except BudgetExceeded as exc:
        print(f"{cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except AnticoncError as exc:
        print(f"{cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    path = _write(cfg, csv_text, report)
    print(f"{cfg.command}: {summary} -> {path}", file=stdout)
    return 3 if degraded else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anticonc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="CSV output path (text report goes next to it)")
        p.add_argument("--samples", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--d-param", type=float, dest="D", help="the eta range end D")
        p.add_argument("--radius", type=float)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
            cfg = parse_config(text, os.path.dirname(os.path.abspath(args.config)))
        else:
            cfg = ExperimentConfig()
        overrides = {k: v for k in ("seed", "out", "samples", "tol", "D", "radius") if (v := getattr(args, k)) is not None}
        cfg = replace(cfg, command=args.command, **overrides)
        validate(cfg)
    except (OSError, AnticoncError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
