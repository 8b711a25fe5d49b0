"""Full-ZVS terms, the duty-ratio linear system, and the online solution."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mabsim import (DerivedParams, full_zvs_term, full_zvs_terms, general_solution,
                    online_duty_ratios, sps_duty_ratios, zvs_system_residual)
from mabsim.core import derive_params

from conftest import make_config

GOLDEN_M = np.array([1.0, 1.25, 1.0, 0.75])
TEXT_L_COEFF = np.array([32.0, 24.0, 15.0, 32.0]) / 103.0


def params(ratios, coefficients):
    return DerivedParams(ratios=np.asarray(ratios, float),
                         coefficients=np.asarray(coefficients, float),
                         current_scales=np.ones(len(ratios)))


def test_terms_vanish_for_uniform_ratios():
    p = params(np.ones(4), [0.1, 0.2, 0.3, 0.4])
    assert np.allclose(full_zvs_terms(p, np.zeros(4)), 0.0, atol=1e-15)


def test_min_ratio_port_cannot_reach_zvs_under_sps():
    # with the text inductances the weighted ratio mean is 101/103, so the
    # 0.75-ratio port keeps a positive term: 101/103 - 3/4 = 95/412
    p = params(GOLDEN_M, TEXT_L_COEFF)
    level = Fraction(32 * 4 + 24 * 5 + 15 * 4, 103 * 4)
    assert level == Fraction(101, 103)
    t4 = full_zvs_term(p, np.zeros(4), 4)
    assert t4 == pytest.approx(float(level - Fraction(3, 4)), abs=1e-12)
    assert t4 > 0.2


def test_online_duties_zero_every_term():
    p = params(GOLDEN_M, TEXT_L_COEFF)
    sol = online_duty_ratios([400.0, 500.0, 200.0, 300.0], [1.0, 1.0, 0.5, 1.0])
    assert np.allclose(full_zvs_terms(p, sol.inner_ratios), 0.0, atol=1e-14)


def test_residual_zero_for_online_duties():
    p = params(GOLDEN_M, TEXT_L_COEFF)
    sol = online_duty_ratios([400.0, 500.0, 200.0, 300.0], [1.0, 1.0, 0.5, 1.0])
    assert np.allclose(zvs_system_residual(p, sol.inner_ratios), 0.0, atol=1e-14)


def test_residual_zero_for_uniform_ratios():
    p = params(np.ones(3), [0.5, 0.3, 0.2])
    assert np.allclose(zvs_system_residual(p, np.zeros(3)), 0.0, atol=1e-15)


def test_residual_values_under_sps():
    # rows read matrix@D - rhs; at D = 0 that is (weighted mean) - M_i
    p = params(GOLDEN_M, TEXT_L_COEFF)
    r = zvs_system_residual(p, np.zeros(4))
    expected = [float(Fraction(101, 103) - Fraction(m)) for m in ("1", "1.25", "1", "0.75")]
    assert np.allclose(r, expected, atol=1e-12)


def test_residual_matches_terms_everywhere():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        w = rng.uniform(0.1, 1.0, n)
        p = params(rng.uniform(0.3, 2.5, n), w / w.sum())
        dd = rng.uniform(0.0, 1.0, n)
        # the system residual is the negated full-ZVS term vector
        assert np.allclose(zvs_system_residual(p, dd), -full_zvs_terms(p, dd), atol=1e-12)


def test_general_solution_example():
    sol = general_solution(GOLDEN_M, 0.5)
    assert np.allclose(sol.inner_ratios, [0.5, 0.6, 0.5, 1.0 / 3.0], rtol=1e-15)
    assert sol.residual_norm <= 1e-15


def test_general_solution_degenerate_uniform():
    sol = general_solution(np.ones(4), 1.0)
    assert np.array_equal(sol.inner_ratios, np.zeros(4))


def test_general_solution_rejects_out_of_range_level():
    with pytest.raises(ValueError, match="feasible range"):
        general_solution(GOLDEN_M, 1.1 * 0.75)
    with pytest.raises(ValueError, match="feasible range"):
        general_solution(GOLDEN_M, 0.0)


def test_online_rule_golden_values_exact():
    sol = online_duty_ratios([400.0, 500.0, 200.0, 300.0], [1.0, 1.0, 0.5, 1.0])
    assert np.array_equal(sol.inner_ratios, [0.25, 0.4, 0.25, 0.0])
    assert sol.min_ratio_port == 4
    assert sol.lam == 0.75


def test_online_rule_degenerates_to_sps():
    sol = online_duty_ratios([400.0, 400.0, 400.0], [1.0, 1.0, 1.0])
    assert np.array_equal(sol.inner_ratios, np.zeros(3))


def test_online_rule_two_port():
    sol = online_duty_ratios([400.0, 800.0], [1.0, 1.0])
    assert np.array_equal(sol.inner_ratios, [0.0, 0.5])
    assert sol.min_ratio_port == 1


def test_online_rule_rejects_bad_voltage():
    with pytest.raises(ValueError, match="port 2"):
        online_duty_ratios([400.0, -1.0], [1.0, 1.0])


def test_online_rule_tie_handling():
    sol = online_duty_ratios([400.0, 300.0, 150.0], [1.0, 1.0, 0.5])  # M = [1, 0.75, 0.75]
    assert sol.min_ratio_port == 2          # lowest index among the tied minima
    assert sol.inner_ratios[1] == 0.0
    assert sol.inner_ratios[2] == pytest.approx(0.0, abs=1e-15)
    assert sol.residual_norm <= 1e-15


def test_sps_baseline():
    assert np.array_equal(sps_duty_ratios(4), np.zeros(4))
    assert np.array_equal(sps_duty_ratios(2), np.zeros(2))
    with pytest.raises(ValueError, match="at least 2"):
        sps_duty_ratios(1)


@st.composite
def ratio_weight_duty(draw):
    n = draw(st.integers(2, 8))
    M = np.array(draw(st.lists(st.floats(0.2, 3.0), min_size=n, max_size=n)))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    dd = np.array(draw(st.lists(st.floats(0.0, 0.999), min_size=n, max_size=n)))
    return M, w / w.sum(), dd


@settings(max_examples=150, deadline=None)
@given(ratio_weight_duty())
def test_weighted_sum_of_terms_vanishes(mwd):
    M, l, dd = mwd
    p = params(M, l)
    terms = full_zvs_terms(p, dd)
    assert abs(float(np.sum(l * terms))) < 1e-12


@settings(max_examples=150, deadline=None)
@given(ratio_weight_duty())
def test_literal_and_reduced_term_forms_agree(mwd):
    M, l, dd = mwd
    p = params(M, l)
    for i in range(M.size):
        literal = sum(l[k] * M[k] * (1 - dd[k]) for k in range(M.size) if k != i) \
            - (1 - l[i]) * M[i] * (1 - dd[i])
        assert full_zvs_term(p, dd, i + 1) == pytest.approx(literal, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(ratio_weight_duty())
def test_online_rule_solves_system_for_any_weights(mwd):
    M, l, _ = mwd
    sol = online_duty_ratios(M, np.ones(M.size))  # voltages proportional to M at unit turns
    p = params(M / M[0], l)
    assert np.max(np.abs(full_zvs_terms(p, sol.inner_ratios))) < 1e-12
    assert np.max(np.abs(zvs_system_residual(p, sol.inner_ratios))) < 1e-12


@settings(max_examples=80, deadline=None)
@given(ratio_weight_duty(), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_duties_strictly_decrease_with_level(mwd, a, b):
    M, _, _ = mwd
    lo, hi = sorted((a, b))
    m_min = float(np.min(M))
    lam_lo, lam_hi = lo * m_min, hi * m_min
    if lam_hi - lam_lo < 1e-9:
        return
    d_lo = general_solution(M, lam_lo).inner_ratios
    d_hi = general_solution(M, lam_hi).inner_ratios
    assert np.all(d_hi < d_lo + 1e-15)
    # the maximal feasible level minimizes every duty at once
    d_min = general_solution(M, m_min).inner_ratios
    assert np.all(d_min <= d_lo + 1e-15) and np.all(d_min <= d_hi + 1e-15)
