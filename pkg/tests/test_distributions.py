import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erf, erfc

from anticonc.distributions import (
    RandomVariableModel,
    char_fn,
    max_window_mass,
    merge_support,
    q_of,
    sample,
    symmetrize,
)
from anticonc.errors import DegenerateSymmetrization, InvalidModel


@st.composite
def atomic_models(draw, max_atoms=5):
    k = draw(st.integers(1, max_atoms))
    vals = draw(st.lists(st.integers(-40, 40), min_size=k, max_size=k, unique=True))
    raw = draw(st.lists(st.integers(1, 20), min_size=k, max_size=k))
    tot = sum(raw)
    return RandomVariableModel.atomic([(v / 4.0, r / tot) for v, r in zip(vals, raw)])


def test_char_fn_at_zero_is_one(rademacher, std_gaussian):
    three = RandomVariableModel.atomic([(0.0, 0.2), (1.5, 0.3), (7.0, 0.5)])
    for m in (rademacher, std_gaussian, three):
        assert char_fn(m, 0.0) == 1 + 0j


def test_char_fn_closed_forms(rademacher, std_gaussian):
    assert char_fn(rademacher, math.pi) == pytest.approx(-1.0, abs=1e-15)
    assert char_fn(std_gaussian, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    shifted = RandomVariableModel.gaussian(2.0, 0.5)
    eta = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(char_fn(shifted, eta), np.exp(2j * eta - 0.125 * eta**2), atol=1e-15)


@given(atomic_models(), st.floats(-50, 50))
def test_char_fn_hermitian_and_bounded(m, eta):
    z = char_fn(m, eta)
    assert abs(z) <= 1 + 1e-12
    assert char_fn(m, -eta) == pytest.approx(np.conj(z), abs=1e-12)


@given(atomic_models())
def test_char_fn_of_symmetric_law_is_real(m):
    # X - c with c the midpoint of a law mirrored about it
    pos = [(v - m.values[0] + 1.0, 0.5 * w) for v, w in zip(m.values, m.weights)]
    sym = RandomVariableModel.atomic(pos + [(-v, w) for v, w in pos]).shifted(3.0).shifted(-3.0)
    eta = np.linspace(-5, 5, 41)
    assert np.max(np.abs(char_fn(sym, eta).imag)) < 1e-12


def test_q_of_examples(rademacher, std_gaussian):
    assert q_of(rademacher) == 1.0
    assert q_of(rademacher, scale=2) == 0.5
    assert q_of(std_gaussian) == pytest.approx(erf(1 / math.sqrt(2)), abs=1e-15)


def test_q_of_window_is_closed():
    m = RandomVariableModel.atomic([(0.0, 0.5), (2.0, 0.5)])
    assert q_of(m) == 1.0
    assert q_of(m, radius=0.999999) == 0.5


@given(atomic_models(), st.floats(0.05, 5), st.floats(0.05, 5))
def test_q_of_monotone_in_radius(m, r1, r2):
    lo, hi = sorted((r1, r2))
    assert q_of(m, lo) <= q_of(m, hi)


@given(atomic_models(), st.floats(0.1, 4), st.floats(0.25, 4))
def test_q_of_scale_equals_radius_change(m, r, k):
    assert q_of(m, r, scale=k) == pytest.approx(q_of(m, r / k), abs=1e-12)


@given(atomic_models(), st.floats(-30, 30))
def test_q_of_translation_invariant(m, c):
    assert q_of(m.shifted(c)) == pytest.approx(q_of(m), abs=1e-12)


def test_symmetrize_examples(rademacher, std_gaussian):
    s = symmetrize(rademacher)
    assert s.q == 0.5
    assert s.conditional_law() == {-2.0: 0.5, 2.0: 0.5}
    assert symmetrize(std_gaussian).q == pytest.approx(erfc(1.0), abs=1e-15)
    narrow = RandomVariableModel.atomic([(0.0, 0.5), (0.5, 0.5)])
    assert symmetrize(narrow).q == 0.0
    with pytest.raises(DegenerateSymmetrization):
        symmetrize(narrow).conditional_law()
    with pytest.raises(DegenerateSymmetrization):
        symmetrize(narrow, require_conditional=True)


@given(atomic_models(), st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_q_at_least_half_p_squared(m, k):
    s = symmetrize(m, k)
    assert s.q >= 0.5 * s.p**2 - 1e-12


@given(st.floats(0.05, 20))
def test_gaussian_symmetrization_closed_form(sigma):
    s = symmetrize(RandomVariableModel.gaussian(0, sigma))
    assert s.q == pytest.approx(erfc(1 / sigma), rel=1e-12, abs=1e-300)
    assert s.q >= 0.5 * s.p**2


def test_difference_law_enumerated():
    m = RandomVariableModel.atomic([(0.0, 0.2), (1.0, 0.3), (3.0, 0.5)])
    s = symmetrize(m)
    brute = {}
    for v1, w1 in zip(m.values, m.weights):
        for v2, w2 in zip(m.values, m.weights):
            brute[v1 - v2] = brute.get(v1 - v2, 0.0) + w1 * w2
    assert dict(zip(s.difference_values, s.difference_weights)) == pytest.approx(brute)
    assert s.q == pytest.approx(sum(w for d, w in brute.items() if abs(d) >= 2))


def test_sample_point_mass():
    np.testing.assert_array_equal(sample(RandomVariableModel.atomic([(7.0, 1.0)]), 3, 3), [7.0, 7.0, 7.0])


@pytest.mark.parametrize("seed", [0, 1, 12345])
def test_sample_moments(seed, rademacher, std_gaussian):
    x = sample(rademacher, seed, 10**6)
    assert set(np.unique(x)) == {-1.0, 1.0}
    assert abs(x.mean()) < 3 / math.sqrt(x.size)
    g = sample(std_gaussian, seed, 10**6)
    assert abs(g.var() - 1.0) < 0.01


def test_sample_reproducible(rademacher):
    np.testing.assert_array_equal(sample(rademacher, 9, 1000), sample(rademacher, 9, 1000))
    assert not np.array_equal(sample(rademacher, 9, 1000), sample(rademacher, 10, 1000))


def test_literal_round_trip():
    m = RandomVariableModel.atomic([(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)])
    assert RandomVariableModel.from_literal(json.dumps(m.to_literal())) == m
    g = RandomVariableModel.gaussian(1.5, 2.0)
    assert RandomVariableModel.from_literal(g.to_literal()) == g


@pytest.mark.parametrize(
    "literal",
    [
        '{"kind": "atomic", "atoms": [[0, 0.4], [1, 0.4]]}',
        '{"kind": "atomic", "atoms": [[0, -0.5], [1, 1.5]]}',
        '{"kind": "atomic", "atoms": []}',
        '{"kind": "atomic", "atoms": [[0, 1]], "extra": 1}',
        '{"kind": "gaussian", "mu": 0, "sigma": 0}',
        '{"kind": "cauchy"}',
        "[1, 2]",
        "not json",
    ],
)
def test_bad_literals_rejected(literal):
    with pytest.raises(InvalidModel):
        RandomVariableModel.from_literal(literal)


def test_merge_support_joins_near_duplicates():
    v, w = merge_support(np.array([1.0, 1.0 + 1e-14, 3.0, 0.1 + 0.2]), np.array([0.25, 0.25, 0.25, 0.25]))
    assert v.size == 3
    assert w.sum() == pytest.approx(1.0)


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=30), st.floats(0.01, 5))
def test_max_window_mass_matches_brute_force(xs, r):
    v = np.sort(np.array(xs))
    w = np.full(v.size, 1.0 / v.size)
    brute = max(w[(v >= x) & (v <= x + 2 * r + 1e-12 * max(1, np.abs(v).max()))].sum() for x in v)
    assert max_window_mass(v, w, r) == pytest.approx(brute, abs=1e-12)
