import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate
from scipy.optimize import brentq

from relweyl import potentials as P
from relweyl import semiclassics as SC
from relweyl import spectral as S
from relweyl import theory as T
from relweyl.errors import AdmissibilityError, ConfigError, DomainError
from relweyl.unbounded import UNBOUNDED, is_unbounded


@pytest.mark.parametrize("d, value", [(2, 1.0), (3, 1.2), (6, 1.5)])
def test_critical_exponent(d, value):
    assert T.critical_exponent(d) == pytest.approx(value, rel=1e-15)


def test_report_subcritical():
    rep = T.eta_report(3, 1.0, 2.0, 0.5)
    assert rep.eta_loc == pytest.approx(14 / 15, abs=1e-12)
    assert is_unbounded(rep.eta_sc) and is_unbounded(rep.eta_cutoff)
    assert rep.eta_star == pytest.approx(14 / 15, abs=1e-12)
    assert rep.governing == "loc"
    assert rep.admissible


def test_report_supercritical():
    rep = T.eta_report(3, 1.3, 1.6, 0.5)
    assert rep.eta_sc == pytest.approx(0.7888, abs=1e-4)
    assert rep.eta_loc == pytest.approx(0.3714, abs=1e-4)
    assert is_unbounded(rep.eta_cutoff)
    assert rep.eta_star == pytest.approx(0.3714, abs=1e-4)
    assert rep.branch == "s>s_c"


# ---------------------------------------------------------------- boundary values

def test_boundary_eta_loc_three_dimensions():
    assert T.eta_loc(3, 62 / 45, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_boundary_eta_loc_two_dimensions():
    assert T.eta_loc(2, 5 / 4, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_boundary_eta_sc_three_dimensions():
    s = (85 + 3 * math.sqrt(1313)) / 140
    assert s == pytest.approx(1.3836, abs=1e-4)
    assert T.eta_sc(3, s, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_boundary_eta_sc_two_dimensions():
    s = (4 + math.sqrt(6)) / 5
    assert s == pytest.approx(1.2899, abs=1e-4)
    assert T.eta_sc(2, s, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_lemma_cap():
    cap = (43 - math.sqrt(769)) / 10
    assert cap == pytest.approx(1.5269, abs=1e-4)
    # the cap is where α_loc(r = 0) meets 2/(8 - s)
    assert T.alpha_loc(3, cap, 0.0) == pytest.approx(2 / (8 - cap), abs=1e-12)
    assert T.lemma_conditions(3, cap - 1e-9, 0.0) == ()
    assert T.lemma_conditions(3, cap + 1e-9, 0.0)
    rep = T.eta_report(3, 1.53, 2.0, 0.1)
    assert not rep.lemma_admissible


@pytest.mark.parametrize("d, cap", [(3, 62 / 45), (2, 5 / 4)])
def test_positivity_frontier(d, cap):
    r = 1e-9
    for s in np.linspace(1.0, cap - 1e-6, 25):
        assert T.eta_loc(d, s, r) > 0
    for s in np.linspace(cap + 1e-6, 1.9, 25):
        assert T.eta_loc(d, s, r) < 0


def test_cutoff_continuity_at_large_s_threshold():
    omega, eta = T.omega_cutoff(3, 14 / 9)
    assert eta == pytest.approx(2 / 3, abs=1e-12)
    # balance of the outer-zone optimized term at θ = -ω with the zone-localization term
    assert omega == pytest.approx((2 / 3) / (14 / 9 - 2 / 3), abs=1e-12)
    assert is_unbounded(T.omega_cutoff(3, 14 / 9 + 1e-9)[1])


def test_cutoff_values():
    omega, eta = T.omega_cutoff(3, 1.4)
    assert omega == pytest.approx(0.9091, abs=1e-4)
    assert eta == pytest.approx(0.4545, abs=1e-4)
    assert T.omega_cutoff(2, 2.0) == (UNBOUNDED, UNBOUNDED)
    with pytest.raises(DomainError):
        T.omega_cutoff(3, 1.2)


@pytest.mark.parametrize("d, s_c", [(2, 1.0), (3, 1.2)])
def test_exponents_continuous_at_branch_point(d, s_c):
    for r in (0.0, 0.3):
        lo, hi = T.eta_loc(d, s_c - 1e-10, r), T.eta_loc(d, s_c + 1e-10, r)
        assert lo == pytest.approx(hi, abs=1e-8)
        lo, hi = T.alpha_loc(d, s_c - 1e-10, r), T.alpha_loc(d, s_c + 1e-10, r)
        assert lo == pytest.approx(hi, abs=1e-8)


# ---------------------------------------------------------------- balance oracles

def _balance(fn, lo=1e-6, hi=50.0):
    return brentq(fn, lo, hi, xtol=1e-15, rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3]), st.floats(1.0, 1.35), st.floats(0.0, 0.9))
def test_alpha_loc_balances_quantum_terms(d, s, r):
    # α_loc equalizes the quantum-zone error and the quantum-zone localization error
    a = _balance(lambda a: T.quantum_error_exponent(d, s, r, a)
                 - T.quantum_localization_exponent(d, s, a))
    assert T.alpha_loc(d, s, r) == pytest.approx(a, rel=1e-10)
    assert T.eta_loc(d, s, r) == pytest.approx(d + T.quantum_error_exponent(d, s, r, a),
                                               abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 1.24), st.floats(0.0, 0.5))
def test_alpha_sc_two_dimensions_balance(s, r):
    # quantum error against the inner optimized semiclassical term at θ = α
    a = _balance(lambda a: T.quantum_error_exponent(2, s, r, a)
                 - T.semiclassical_optimized(2, a, "inner", s, 2.0))
    assert T.alpha_sc(2, s, r) == pytest.approx(a, rel=1e-10)
    assert T.eta_sc(2, s, r) == pytest.approx(2 + T.quantum_error_exponent(2, s, r, a), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 1.2), st.floats(0.0, 0.9))
def test_alpha_sc_three_dimensions_balance(s, r):
    a = _balance(lambda a: T.quantum_error_exponent(3, s, r, a)
                 - T.semiclassical_optimized(3, a, "deep_inner", s, 2.0))
    assert T.alpha_sc(3, s, r) == pytest.approx(a, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.21, 1.5), st.floats(0.0, 0.9))
def test_eta_sc_three_dimensions_is_localization_at_alpha_sc(s, r):
    a = T.alpha_sc(3, s, r)
    assert T.eta_sc(3, s, r) == pytest.approx(3 + T.quantum_localization_exponent(3, s, a),
                                              abs=1e-10)


def test_alpha_examples():
    assert T.alpha_loc(3, 1.0, 0.0) == pytest.approx(1.0)
    assert T.alpha_sc(2, 1.0, 0.0) == pytest.approx(0.5)
    a_sc, a_loc, _ = T.alpha_optimal(3, 1.3, 0.5)
    for a in (a_sc, a_loc):
        assert 2 / (8 - 1.3) <= a <= 2 / (2 - 1.3)


# ---------------------------------------------------------------- zones

@pytest.mark.parametrize("d, theta, zone, s, value", [
    (3, 0.0, "inner", 1.0, 2 / 3),
    (3, 0.4, "deep_inner", 1.2, 1.02),
    (2, -0.3, "outer", 1.1, 2 / 3 - 0.1),
])
def test_beta_table(d, theta, zone, s, value):
    assert T.beta_optimal(d, theta, zone, s) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("args", [(2, 0.3, "outer", 1.0), (2, 0.4, "deep_inner", 1.1),
                                  (3, 0.1, "deep_inner", 1.2), (3, -0.1, "inner", 1.0)])
def test_beta_table_rejects(args):
    with pytest.raises(DomainError):
        T.beta_optimal(*args)


@given(st.sampled_from([2, 3]), st.floats(0.0, 1.0), st.floats(1.0, 1.3))
def test_optimized_semiclassical_is_the_balanced_triple(d, theta, s):
    # inner zones end at 2/(8 - s) in d = 3; in d = 2 the a priori β > θ caps θ below 2/(2 - s)
    theta *= 2 / (8 - s) if d == 3 else 0.999 * 2 / (2 - s)
    b = T.beta_optimal(d, theta, "inner", s)
    triple = T.semiclassical_triple(d, theta, b, "inner", s, 2.0)
    # at the optimal β the first two entries balance and equal the optimized form
    assert triple[0] == pytest.approx(triple[1], abs=1e-12)
    assert min(triple) == pytest.approx(T.semiclassical_optimized(d, theta, "inner", s, 2.0),
                                        abs=1e-12)


def test_localization_exponent_at_quantum_zone():
    a = T.alpha_loc(3, 1.0, 0.5)
    assert T.quantum_localization_exponent(3, 1.0, a) == pytest.approx(-3 + 2 * (1 - a) + 1.2 * a)


def _admissible_tuples(rng, count):
    out = []
    while len(out) < count:
        d = int(rng.choice([2, 3]))
        s = float(rng.uniform(1.0, 62 / 45 if d == 3 else 5 / 4))
        S = float(rng.uniform(T.critical_exponent(d) + 0.05, 2.5))
        r = float(rng.uniform(0.0, 1.0))
        rep = T.eta_report(d, s, S, r)
        if rep.admissible and rep.eta_star > 1e-3:
            out.append((d, s, S, r, rep))
    return out


def test_ledger_argmin_consistency(rng):
    for d, s, S, r, rep in _admissible_tuples(rng, 100):
        ledger = T.zone_ledger(d, s, S, r, 0.9 * float(rep.eta_star))
        assert ledger.worst_exponent == pytest.approx(float(rep.eta_star), abs=1e-12)
        assert ledger.governing == rep.governing
        for z in ledger.semiclassical_zones():
            assert z.beta > z.theta
        assert ledger.N * ledger.epsilon_used == pytest.approx(ledger.alpha, rel=1e-12)
        assert ledger.epsilon_used <= ledger.epsilon + 1e-15


def test_ledger_zone_layout():
    ledger = T.zone_ledger(3, 1.3, 1.4, 0.5, 0.3)
    kinds = [z.kind for z in ledger.zones]
    assert kinds[0] == "quantum"
    assert "outer" in kinds and "deep_inner" in kinds
    thetas = [z.theta for z in ledger.zones[1:]]
    assert all(b < a for a, b in zip(thetas[:-1], thetas[1:]))
    # outer zones reach down to -ω
    assert thetas[-1] <= -0.9090 + ledger.epsilon_used


def test_ledger_rejects_inadmissible_and_large_target():
    with pytest.raises(AdmissibilityError):
        T.zone_ledger(3, 1.45, 2.0, 0.1, 0.01)
    with pytest.raises(DomainError):
        T.zone_ledger(3, 1.3, 2.0, 0.5, 0.5)
    with pytest.raises(ConfigError):
        T.zone_ledger(3, 1.3, 2.0, 0.5, 0.3, A=0.0)


def test_violations_are_reported_not_raised():
    rep = T.eta_report(3, 1.3, 2.0, 1.2)
    assert not rep.admissible
    assert any("r <" in v for v in rep.violations)
    with pytest.raises(AdmissibilityError):
        rep.require_admissible()
    with pytest.raises(DomainError):
        T.eta_report(3, 2.0, 2.0, 0.1)
    with pytest.raises(DomainError):
        T.eta_report(3, 1.2, 2.0, -0.1)


# ---------------------------------------------------------------- W_β

def test_wbeta_example():
    b = T.wbeta_bound(3, 1.0, 1.0, 0.5, 0.5)
    assert b.exponent == pytest.approx(-2.0)
    assert b.integrable


def test_wbeta_flag_boundary():
    assert not T.wbeta_bound(3, 1.0, 1.4, 0.9, 0.5).integrable
    assert T.wbeta_bound(3, 1.0, 1.4, 0.9 - 1e-9, 0.5).integrable


def test_wbeta_zeroth_power():
    b = T.wbeta_bound(2, 0.0, 1.3, 0.4, 0.5)
    assert b.exponent == pytest.approx(-0.4)


@given(st.sampled_from([2, 3]), st.floats(1.0, 1.9), st.floats(0.0, 1.5))
def test_wbeta_flag_matches_remark_condition(d, s, r):
    assume(abs(s * d / 2 + r - d) > 1e-9)
    assert T.wbeta_bound(d, 1.0, s, r, 1.0).integrable == (r < d / 2 * (2 - s))


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_wbeta_bounds_actual_difference(beta):
    pair = P.perturbed_pair(3, 1.0, 1.3, 0.5, 0.5, 1.0)
    env = P.envelope(pair.second)
    g = 1.5 + beta
    r = np.logspace(-6, 0, 200)
    actual = np.abs(pair.first.negative_part(r) ** g - pair.second.negative_part(r) ** g)
    bound = np.array([T.wbeta_bound(3, beta, 1.3, 0.5, x, pair.c_diff, env.c_prime).value
                      for x in r])
    assert np.all(actual <= bound)


# ---------------------------------------------------------------- orders

@pytest.mark.parametrize("s, text", [(1.0, "h^-3"), (1.2, "h^-3 |log h|"), (1.5, "h^-6")])
def test_landaus_order(s, text):
    assert str(T.landaus_order(3, s)) == text


# ---------------------------------------------------------------- singular LT bound

def test_beta_coefficients_match_quadrature():
    eps, L = 0.5, 1.0
    A, B = T.beta_coefficients(3, eps, L)
    f = lambda t: t ** -0.25 * (1 - t) ** 1.75
    direct, _ = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    assert A / 2 == pytest.approx(direct, abs=1e-10)
    g = lambda t: t ** -0.75 * (1 - t) ** 1.75
    direct_b, _ = integrate.quad(g, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    assert B / 2 ** 0.5 == pytest.approx(direct_b, abs=1e-10)


def test_lt_constant_table_and_defaults():
    assert T.lt_constant(3, 0.0) == pytest.approx(T.CLR_3D)
    assert T.lt_constant(3, 0.25, {(3, 0.25): 0.5}) == 0.5
    assert T.lt_constant(3, 0.25, {"3,0.25": 0.7}) == 0.7
    with pytest.raises(ConfigError):
        T.lt_constant(2, 0.25)
    with pytest.raises(ConfigError):
        T.ltsing_bound(2, 0.4, 1.0, P.pure_power(2, 1.0, 1.1, 0.1))


def test_lt_default_dominates_classical():
    for beta in (0.0, 0.25, 0.5, 1.0):
        assert T.lt_constant(3, beta) >= SC.classical_lt_constant(3, beta)


def test_ltsing_nonnegative_potential():
    V = P.custom(3, lambda r: np.exp(-r), lambda r: -np.exp(-r), s=1.0, S=2.0)
    assert T.ltsing_bound(3, 0.5, 1.0, V).value == 0.0


@pytest.mark.parametrize("c0, s, mu", [(1.0, 1.3, 0.5), (2.0, 1.45, 0.2), (0.7, 1.25, 1.0)])
def test_ltsing_dominates_spectral_trace(c0, s, mu):
    V = P.pure_power(3, c0, s, mu)
    grid = S.make_grid(V, 1.0)
    trace = S.trace_neg(V, 1.0, grid).trace
    E = 1.05 * abs(S.ground_state_energy(V, 1.0, grid))
    eps = 0.5 * (3 / s - 1.5)
    assert trace <= T.ltsing_bound(3, eps, E, V).value
