"""Characteristic-function integrals that bound the concentration function.

Three integrals are evaluated, each over the real line and each dominated
by a Gaussian weight so that truncation at a fixed multiple of the weight's
width leaves an analytically bounded tail:

* the Esseen-type bound  e * int prod_k |phi(2 a_k eta)| exp(-eta^2) deta/sqrt(pi),
* its symmetrized majorant built from q = P{|X~| >= 2} and the conditional
  law of X~ given |X~| >= 2,
* the lattice-distance integral
  int exp(-c3 p^2 f(eta)^2 - (eta/z)^2) deta/(z sqrt(pi)), split over the
  sets A = {f >= alpha/2} and B = {f < alpha/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.special import erfc

from .diophantine import BSetDecomposition, half_integer_breakpoints, as_coefficients, b_set, lattice_distance
from .distributions import RandomVariableModel, abs_char_fn, symmetrize
from .errors import AnticoncError
from .quadrature import QuadratureSpec, integrate

# optimal constant in 1 - cos(theta) >= C1 * min_m |theta - 2 pi m|^2 (equality at theta = pi)
C1 = 2.0 / math.pi**2

SQRT_PI = math.sqrt(math.pi)


def cosine_gap_lower(theta):
    """C1 * min_m |theta - 2 pi m|^2, a lower bound for 1 - cos(theta)."""
    theta = np.asarray(theta, dtype=float)
    r = theta - 2.0 * math.pi * np.rint(theta / (2.0 * math.pi))
    return C1 * r * r


@dataclass
class IntegralValue:
    """An integral estimate with its truncation tail and quadrature error."""

    value: float
    tail: float
    error: float
    converged: bool = True

    def __float__(self):
        return self.value


@dataclass
class Step2Value(IntegralValue):
    """Symmetrized integral plus the sup over the support of |X~|."""

    q: float = 0.0
    sup_value: float = 0.0
    sup_z: float = 0.0
    by_z: Dict[float, float] = field(default_factory=dict)


@dataclass
class SplitValue:
    I_A: float
    I_B: float
    undivided: float
    cap_A: float
    tail: float
    error: float
    b_set: BSetDecomposition

    @property
    def additivity_gap(self) -> float:
        return abs(self.I_A + self.I_B - self.undivided)


def _half_line(f, upper: float, quad: QuadratureSpec, bandwidth: float, breaks=None):
    """2 * int_0^upper f for an even integrand."""
    width = min(0.125, 1.0 / (1.0 + bandwidth))
    res = integrate(f, [(0.0, upper)], 0.5 * quad.abs_tolerance, quad.max_refinement_depth, width, breaks)
    return 2.0 * res.value, 2.0 * res.error, res.converged


def _spread(model: RandomVariableModel) -> float:
    if model.is_atomic:
        return model.values[-1] - model.values[0]
    return 6.0 * model.sigma


def _product_abs_phi(model, av, eta):
    out = np.ones_like(eta)
    for ak in av:
        if ak != 0:
            out *= abs_char_fn(model, 2.0 * ak * eta)
    return out


def step1_integral(a, model: RandomVariableModel, quad: QuadratureSpec = QuadratureSpec()) -> IntegralValue:
    """e * int prod_k |phi(2 a_k eta)| exp(-eta^2) deta / sqrt(pi).

    Upper-bounds Q(sum_k a_k X_k) once the reported tail is added.
    """
    av = as_coefficients(a, allow_zero=True).scalars

    def g(eta):
        return _product_abs_phi(model, av, eta) * np.exp(-eta * eta) / SQRT_PI

    bw = 2.0 * float(np.sum(np.abs(av))) * _spread(model)
    val, err, ok = _half_line(g, quad.truncation, quad, bw)
    return IntegralValue(math.e * val, math.e * float(erfc(quad.truncation)), math.e * err, ok)


def step2_integral_atomic(a, model: RandomVariableModel, quad: QuadratureSpec = QuadratureSpec()) -> Step2Value:
    """int exp{-(q/2) E[sum_k (1 - cos(2 a_k eta X~)) | |X~| >= 2] - eta^2} deta/sqrt(pi).

    The conditional expectation is a finite sum for atomic models. The same
    integral with X~ frozen at each support point z of |X~| is also
    evaluated; its maximum over z is the sup form.
    """
    if not model.is_atomic:
        raise AnticoncError("step2_integral_atomic requires an atomic model")
    av = as_coefficients(a, allow_zero=True).scalars
    sym = symmetrize(model, require_conditional=True)
    q = sym.q
    zs = np.abs(np.asarray(sym.conditional_values))
    ws = np.asarray(sym.conditional_weights)
    # merge +z and -z: the integrand only depends on |z|
    uz, inv = np.unique(zs, return_inverse=True)
    uw = np.bincount(inv, weights=ws)
    nz_a = av[av != 0]
    bw = 2.0 * float(np.sum(np.abs(av))) * float(uz.max())

    def exponent(eta, z, w):
        # (q/2) * sum_j w_j sum_k (1 - cos(2 a_k eta z_j))
        arg = 2.0 * np.multiply.outer(eta, np.multiply.outer(z, nz_a))
        return 0.5 * q * np.sum((1.0 - np.cos(arg)) * w[None, :, None], axis=(1, 2))

    def g(eta):
        return np.exp(-exponent(eta, uz, uw) - eta * eta) / SQRT_PI

    val, err, ok = _half_line(g, quad.truncation, quad, bw)
    by_z = {}
    for z in uz:
        zz = np.array([z])
        one = np.ones(1)
        v, _, ok_z = _half_line(lambda eta: np.exp(-exponent(eta, zz, one) - eta * eta) / SQRT_PI, quad.truncation, quad, bw)
        ok = ok and ok_z
        by_z[float(z)] = v
    sup_z = max(by_z, key=by_z.get)
    return Step2Value(
        value=val,
        tail=float(erfc(quad.truncation)),
        error=err,
        converged=ok,
        q=q,
        sup_value=by_z[sup_z],
        sup_z=sup_z,
        by_z=by_z,
    )


def _kinks(av, upper):
    """Points in (0, upper) where some eta * a_k is a half-integer."""
    b = np.abs(av[av != 0])
    return half_integer_breakpoints(b, 0.0, upper)


def _lattice_integrand(av, p, c3, z):
    s = c3 * p * p
    norm = 1.0 / (z * SQRT_PI)

    def h(eta):
        f = lattice_distance(av, eta)
        return np.exp(-s * f * f - (eta / z) ** 2) * norm

    return h


def step2_final_integral(a, p: float, c3: float, z: float, quad: QuadratureSpec = QuadratureSpec()) -> IntegralValue:
    """int exp{-c3 p^2 f(eta)^2 - (eta/z)^2} deta / (z sqrt(pi)) in one pass."""
    av = as_coefficients(a).scalars
    if not z >= 2.0 / math.pi:
        raise AnticoncError("z must be >= 2/pi")
    h = _lattice_integrand(av, p, c3, z)
    bw = float(np.sum(np.abs(av))) * 4.0
    upper = quad.truncation * z
    val, err, ok = _half_line(h, upper, quad, bw, _kinks(av, upper))
    return IntegralValue(val, float(erfc(quad.truncation)), err, ok)


def split_integral(
    a,
    alpha: float,
    p: float,
    c3: float,
    z: float,
    quad: QuadratureSpec = QuadratureSpec(),
) -> SplitValue:
    """Split the lattice-distance integral over A = {f >= alpha/2} and B.

    Both parts and the undivided integral are computed by independent
    quadrature passes; ``cap_A = exp(-c3 p^2 (alpha/2)^2)`` is the analytic
    ceiling for I_A.
    """
    av = as_coefficients(a).scalars
    if not alpha > 0:
        raise AnticoncError("alpha must be positive")
    if not z >= 2.0 / math.pi:
        raise AnticoncError("z must be >= 2/pi")
    upper = quad.truncation * z
    bset = b_set(av, alpha, upper)
    h = _lattice_integrand(av, p, c3, z)
    width = min(0.125, 1.0 / (1.0 + 4.0 * float(np.sum(np.abs(av)))))
    tol = 0.5 * quad.abs_tolerance
    B = bset.intervals
    A: List[Tuple[float, float]] = []
    prev = 0.0
    for lo, hi in B:
        if lo > prev:
            A.append((prev, lo))
        prev = max(prev, hi)
    if prev < upper:
        A.append((prev, upper))
    kinks = _kinks(av, upper)
    rb = integrate(h, B, tol, quad.max_refinement_depth, width, kinks)
    ra = integrate(h, A, tol, quad.max_refinement_depth, width, kinks)
    whole = step2_final_integral(av, p, c3, z, quad)
    return SplitValue(
        I_A=2.0 * ra.value,
        I_B=2.0 * rb.value,
        undivided=whole.value,
        cap_A=math.exp(-c3 * p * p * (0.5 * alpha) ** 2),
        tail=float(erfc(quad.truncation)),
        error=2.0 * (ra.error + rb.error) + whole.error,
        b_set=bset,
    )
