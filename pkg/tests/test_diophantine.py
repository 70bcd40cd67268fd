import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anticonc import diophantine as dio
from anticonc.diophantine import CoefficientVector, alpha_1d_exact, alpha_multi_certified, b_set, lattice_distance
from anticonc.errors import (
    BUDGET_ENV,
    BreakpointBudgetExceeded,
    EmptyDomain,
    InfeasibleDomain,
    InvalidModel,
    IterationBudgetExceeded,
)


def grid_alpha(a, D, h=1e-5):
    a = np.asarray(a, dtype=float)
    eta0 = 1 / (2 * np.max(np.abs(a)))
    eta = np.append(np.arange(eta0, D, h), D)
    return float(np.min(lattice_distance(a, eta)))


def domain_end(a, frac, span=1.0):
    eta0 = 1 / (2 * max(abs(x) for x in a))
    return eta0 * (1 + span * frac) + 1e-3


coef = st.lists(
    st.floats(0.05, 20).map(lambda x: round(x, 3)) | st.floats(-20, -0.05).map(lambda x: round(x, 3)),
    min_size=1,
    max_size=6,
)


def test_coefficient_vector_norms():
    a = CoefficientVector([3.0, -4.0])
    assert a.sup_norm == 4.0 and a.euclid_norm == 5.0
    np.testing.assert_array_equal(a.gram, [[25.0]])
    v = CoefficientVector([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    assert v.dim == 2 and v.n == 3
    np.testing.assert_allclose(v.gram, [[2.0, 1.0], [1.0, 5.0]])
    assert v.sup_norm == 2.0


@pytest.mark.parametrize("bad", [[], [0.0, 0.0], [1.0, math.nan], [[1.0, 0.0], [1.0]]])
def test_coefficient_vector_rejects(bad):
    with pytest.raises(ValueError):
        CoefficientVector(bad)


def test_zero_vector_allowed_on_request():
    assert CoefficientVector([0.0], allow_zero=True).euclid_norm == 0.0


def test_alpha_examples():
    c = alpha_1d_exact([1, 1, 1, 1], 0.75)
    assert c.alpha == pytest.approx(0.5, abs=1e-15)
    assert float(c.eta_star[0]) == pytest.approx(0.75)
    assert c.m_star == (1, 1, 1, 1)
    assert c.kind == dio.EXACT and c.gap == 0.0
    c = alpha_1d_exact([1, 2], 0.4)
    assert c.alpha == pytest.approx(math.sqrt(0.2), abs=1e-14)
    assert float(c.eta_star[0]) == pytest.approx(0.4)
    with pytest.raises(EmptyDomain):
        alpha_1d_exact([1, 1], 0.2)


def test_alpha_interior_minimum():
    # f^2 = eta^2 + (1 - 2 eta)^2 is minimized at eta = 0.4; a longer range keeps it
    c = alpha_1d_exact([1, 2], 0.45)
    assert c.alpha == pytest.approx(math.sqrt(0.2), abs=1e-14)
    assert float(c.eta_star[0]) == pytest.approx(0.4, abs=1e-12)


def test_alpha_zero_at_lattice_hit():
    c = alpha_1d_exact([0.5, 1.5], 2.5)
    assert c.alpha == pytest.approx(0.0, abs=1e-14)
    assert float(c.eta_star[0]) == pytest.approx(2.0)


@given(coef, st.floats(0.05, 0.99))
def test_alpha_matches_grid(a, frac):
    D = domain_end(a, frac)
    c = alpha_1d_exact(a, D)
    h = 1e-5
    g = grid_alpha(a, D, h)
    L = math.sqrt(sum(x * x for x in a))
    assert c.alpha <= g + 1e-12
    assert g - c.alpha <= L * h + 1e-12
    assert lattice_distance(a, c.eta_star[0]) == pytest.approx(c.alpha, abs=1e-12)


@given(coef, st.floats(0.05, 0.95), st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]))
def test_alpha_scaling_identity(a, frac, k):
    # f(eta; k a) = f(k eta; a), so alpha(k a, D / k) = alpha(a, D)
    D = domain_end(a, frac, 2.0)
    base = alpha_1d_exact(a, D).alpha
    scaled = alpha_1d_exact([k * x for x in a], D / k).alpha
    assert scaled == pytest.approx(base, abs=1e-12)


@given(coef, st.permutations(range(6)), st.lists(st.booleans(), min_size=6, max_size=6), st.floats(0.1, 0.9))
def test_alpha_permutation_and_sign_invariant(a, perm, flips, frac):
    D = domain_end(a, frac)
    b = [a[i] * (-1 if flips[i] else 1) for i in perm if i < len(a)]
    assert alpha_1d_exact(b, D).alpha == pytest.approx(alpha_1d_exact(a, D).alpha, abs=1e-12)


@given(coef, st.floats(-50, 50), st.floats(-50, 50))
def test_lattice_distance_lipschitz(a, e1, e2):
    L = math.sqrt(sum(x * x for x in a))
    assert abs(lattice_distance(a, e1) - lattice_distance(a, e2)) <= L * abs(e1 - e2) + 1e-9


def test_lattice_distance_vectorized_multi_d():
    V = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    eta = np.array([[0.25, 0.0], [1.0, 1.0], [0.3, 0.6]])
    expect = [math.sqrt(0.25**2 + 0.125**2), 0.0, math.sqrt(0.3**2 + 0.4**2 + 0.45**2)]
    np.testing.assert_allclose(lattice_distance(V, eta), expect, atol=1e-15)


def test_breakpoint_budget(monkeypatch):
    with pytest.raises(BreakpointBudgetExceeded):
        alpha_1d_exact([1000.0] * 5, 0.9, cap=100)
    monkeypatch.setenv(BUDGET_ENV, "50")
    with pytest.raises(BreakpointBudgetExceeded):
        alpha_1d_exact([100.0, 200.0], 0.9)
    monkeypatch.setenv(BUDGET_ENV, "unlimited")
    assert alpha_1d_exact([100.0, 200.0], 0.9).kind == dio.EXACT


def test_certified_examples():
    c = alpha_multi_certified([[1, 0], [0, 1]], 0.75, 1e-3)
    assert c.kind == dio.CERTIFIED
    assert c.alpha <= 0.25 <= c.alpha + c.gap
    assert c.gap <= 1e-3
    assert np.linalg.norm(c.eta_star) == pytest.approx(0.75, abs=2e-3)
    with pytest.warns(UserWarning, match="D < d"):
        c = alpha_multi_certified([[1, 0]], 2.0, 1e-6)
    assert c.alpha == pytest.approx(0.0, abs=1e-6)
    c = alpha_multi_certified([1, 2], 0.4, 1e-4)
    assert c.alpha <= math.sqrt(0.2) <= c.alpha + c.gap + 1e-15
    assert c.gap <= 1e-4


def test_certified_objective_is_upper_end():
    c = alpha_multi_certified([[1, 0.3], [0.2, 1], [0.7, -0.4]], 0.9, 1e-4)
    assert c.objective == pytest.approx(c.alpha + c.gap)
    assert lattice_distance([[1, 0.3], [0.2, 1], [0.7, -0.4]], c.eta_star) == pytest.approx(c.objective, abs=1e-12)
    assert c.eta_star[np.flatnonzero(c.eta_star)[0]] > 0


@given(st.lists(st.floats(0.5, 6).map(lambda x: round(x, 2)), min_size=1, max_size=4), st.floats(0.1, 0.9))
def test_certified_brackets_exact_in_one_dim(a, frac):
    D = domain_end(a, frac)
    exact = alpha_1d_exact(a, D).alpha
    c = alpha_multi_certified(a, D, 1e-5)
    assert c.alpha <= exact + 1e-12
    assert exact <= c.alpha + c.gap + 1e-12


def test_certified_grid_over_disk_two_d():
    V = np.array([[1.0, 0.4], [0.3, 1.2], [0.9, -0.7]])
    D = 0.8
    c = alpha_multi_certified(V, D, 1e-3)
    h = 2e-3
    xs = np.arange(-D, D + h, h)
    X, Y = np.meshgrid(xs, xs)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    pts = pts[np.linalg.norm(pts, axis=1) <= D]
    pts = pts[np.max(np.abs(pts @ V.T), axis=1) >= 0.5]
    grid = float(np.min(lattice_distance(V, pts)))
    assert c.alpha <= grid + 1e-12
    L = float(np.linalg.norm(V, 2))
    assert grid - (c.alpha + c.gap) <= L * h


def test_certified_infeasible():
    with pytest.raises(InfeasibleDomain):
        alpha_multi_certified([[1, 0], [0, 1]], 0.4)


def test_node_budget_gives_heuristic():
    with pytest.warns(IterationBudgetExceeded):
        c = alpha_multi_certified([[3.1, 0.2], [0.4, 2.7], [1.9, -2.2]], 0.9, 1e-9, max_nodes=50)
    assert c.kind == dio.HEURISTIC
    assert not c.is_sound_lower_bound


def test_certificate_record():
    rec = alpha_1d_exact([1, 2], 0.4).to_record()
    assert list(rec) == ["alpha", "gap", "kind", "eta_0", "m_0", "m_1"]


def test_b_set_examples():
    b = b_set([1, 1, 1, 1], 0.5, 2.0)
    np.testing.assert_allclose(np.asarray(b.intervals), [[0, 0.125], [0.875, 1.125], [1.875, 2.0]], atol=1e-12)
    assert np.all(b.lengths <= 1.0)
    b = b_set([1.0], 10.0, 1.0)
    np.testing.assert_allclose(np.asarray(b.intervals), [[0.0, 1.0]])
    small = b_set([1, 1, 1, 1], 1e-6, 2.0)
    # measure is alpha * eta_max / 2 here, vanishing with alpha
    assert small.measure == pytest.approx(1e-6, rel=1e-6)
    assert small.contains([0.0, 1.0, 2.0]).all()


@given(coef, st.floats(0.01, 1.5), st.floats(0.5, 6))
def test_b_set_is_the_sublevel_set(a, alpha, eta_max):
    b = b_set(a, alpha, eta_max)
    eta = np.linspace(0, eta_max, 4001)
    f = lattice_distance(a, eta)
    inside = b.contains(eta)
    margin = 1e-9
    assert np.all(f[inside] < 0.5 * alpha + margin)
    assert np.all(f[~inside] >= 0.5 * alpha - margin)
    for lo, hi in b.intervals:
        assert 0 <= lo <= hi <= eta_max


@given(coef, st.floats(0.05, 0.9))
def test_b_set_dichotomy_with_exact_alpha(a, frac):
    sup = max(abs(x) for x in a)
    eta0 = 1 / (2 * sup)
    D = domain_end(a, frac)
    alpha = alpha_1d_exact(a, D).alpha
    if alpha <= 1e-9:
        return
    b = b_set(a, alpha, 6.0)
    assert b.separation_violations(D) == []
    assert np.all(b.lengths <= eta0 + 1e-9)


def test_invalid_model_is_value_error():
    assert issubclass(InvalidModel, ValueError)
