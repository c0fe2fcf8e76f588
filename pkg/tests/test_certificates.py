import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from irbound.certificates import (
    REFERENCE_INTEGRALS,
    CertificateInput,
    ScanPoint,
    alpha_free_condition,
    bound2_value,
    critical_ratio,
    general_lro_bound,
    kk_alpha_bound,
    limit_integrals,
    momentum_sums,
    nn_e_envelope,
    nn_lro_bounds,
    richardson,
    scan,
    worst_case_e_bound,
)
from irbound.ed import SpinModel, SpinSystem
from irbound.exceptions import ConfigError, DomainError, ParameterError
from irbound.lattice import CouplingTable, PowerLawL1, Torus, Yukawa, epsilon_k, momenta

# Watson's simple-cubic integral (1/pi^3) int_0^pi int_0^pi int_0^pi dk / (3 - sum cos k_i)
WATSON_W3 = 1.5163860591519780 / 3


def brute_sums(d, ell):
    table = CouplingTable.nearest_neighbour(Torus(d, ell), 0.0, 0.0, 1.0)
    ks = momenta(table.torus)
    N = ell**d
    tot = dict(inv=0.0, invp=0.0, I=0.0, It=0.0)
    for k in ks:
        if not np.any(k):
            continue
        eps = epsilon_k(table, k)
        eps_pi = epsilon_k(table, k + np.pi)
        c = max(np.mean(np.cos(k)), 0.0)
        tot["inv"] += 1 / eps / N
        tot["invp"] += c / eps / N
        tot["I"] += math.sqrt(eps_pi / eps) / N
        tot["It"] += c * math.sqrt(eps_pi / eps) / N
    return tot


# ---------------------------------------------------------------- momentum sums


@pytest.mark.parametrize("d,ell", [(1, 4), (1, 10), (2, 4), (2, 6), (3, 4)])
def test_momentum_sums_against_brute_loop(d, ell):
    ms = momentum_sums(d, ell)
    ref = brute_sums(d, ell)
    assert ms.sum_inv_eps == pytest.approx(ref["inv"], rel=1e-12)
    assert ms.sum_inv_eps_cosplus == pytest.approx(ref["invp"], rel=1e-12, abs=1e-15)
    assert ms.I_ell == pytest.approx(ref["I"], rel=1e-12)
    assert ms.I_tilde_ell == pytest.approx(ref["It"], rel=1e-12, abs=1e-15)
    assert ms.pi_term_bound == pytest.approx(math.sqrt(2) / ell**d)


@pytest.mark.parametrize("d,ell", [(1, 8), (2, 8), (3, 6)])
def test_r_variants_are_maximal_at_one(d, ell):
    ms = momentum_sums(d, ell)
    top, top_t = ms.I_ell_r(1.0), ms.I_tilde_ell_r(1.0)
    for r in np.linspace(-1, 1, 41):
        assert ms.I_ell_r(r) <= top + 1e-13
        assert ms.I_tilde_ell_r(r) <= top_t + 1e-13
    # r = 1 drops only the (pi, ..., pi) term, which contributes zero to I_ell
    assert top == pytest.approx(ms.I_ell, rel=1e-13)


def test_momentum_sums_reject_odd_ell():
    with pytest.raises(ParameterError):
        momentum_sums(2, 5)
    with pytest.raises(ParameterError):
        momentum_sums(2, 4).I_ell_r(1.5)


# ---------------------------------------------------------------- limits


def test_richardson_is_exact_on_polynomials():
    hs = [0.5, 0.25, 0.125, 0.0625]
    vals = [3.0 + 2 * h - h**2 + 0.5 * h**3 for h in hs]
    est, err = richardson(hs, vals, (1, 2, 3))
    assert est == pytest.approx(3.0, abs=1e-13)
    with pytest.raises(ParameterError):
        richardson(hs[:2], vals[:2], (1, 2))


def test_square_lattice_limits_against_adaptive_quadrature():
    li = limit_integrals(2)

    def f(y, x):
        return math.sqrt((2 + math.cos(x) + math.cos(y)) / (2 - math.cos(x) - math.cos(y)))

    I_ref = integrate.dblquad(f, 0, math.pi, 0, math.pi, epsabs=1e-11, epsrel=1e-11)[0] / math.pi**2
    # cos x + cos y > 0 exactly when y < pi - x
    It_ref = integrate.dblquad(lambda y, x: f(y, x) * 0.5 * (math.cos(x) + math.cos(y)), 0, math.pi,
                               0, lambda x: math.pi - x, epsabs=1e-11, epsrel=1e-11)[0] / math.pi**2
    assert li.I == pytest.approx(I_ref, abs=1e-7)
    assert li.I_tilde == pytest.approx(It_ref, abs=1e-7)


def test_cubic_inverse_dispersion_against_watson():
    li = limit_integrals(3)
    # eps = 2 (3 - sum cos k): the mean of 1/eps is W3 / 2
    assert li.inv_eps == pytest.approx(WATSON_W3 / 2, abs=1e-5)
    assert li.inv_eps_cosplus < li.inv_eps


@pytest.mark.parametrize("d", [2, 3, 4])
def test_limits_match_reference_table(d):
    li = limit_integrals(d)
    ref_I, ref_It = REFERENCE_INTEGRALS[d]
    assert abs(li.I - ref_I) <= 2e-3
    assert abs(li.I_tilde - ref_It) <= 5e-4
    assert li.I_err < 5e-4 and li.I_tilde_err < 5e-4


def test_finite_volume_sums_approach_the_limit():
    li = limit_integrals(3)
    gaps = [abs(momentum_sums(3, L).I_ell - li.I) for L in (8, 16, 32)]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("d", [1, 5])
def test_limits_outside_supported_dimensions(d):
    with pytest.raises(DomainError):
        limit_integrals(d)


# ---------------------------------------------------------------- thresholds


def test_alpha_free_condition_square_lattice_spin_half():
    c = alpha_free_condition(2, 1, 0.0)
    assert c.holds
    assert c.threshold == pytest.approx(0.109, abs=1e-3)
    assert not alpha_free_condition(2, 1, 0.2).holds


@pytest.mark.parametrize("d,two_S", [(d, s) for d in (2, 3, 4) for s in (1, 2, 3) if (d, s) != (2, 1)])
def test_alpha_free_condition_holds_at_ratio_one(d, two_S):
    assert alpha_free_condition(d, two_S, 1.0).holds


def test_critical_ratio_bisection():
    r = critical_ratio(lambda x: x < 0.3141592, tol=1e-9)
    assert r == pytest.approx(0.3141592, abs=1e-9)
    assert critical_ratio(lambda x: False) is None
    assert critical_ratio(lambda x: True) == 1.0


def test_kk_alpha_bound():
    assert kk_alpha_bound(0.0) == 0.125
    assert kk_alpha_bound(1.0) == pytest.approx(1 / 12)
    with pytest.raises(ParameterError):
        kk_alpha_bound(-0.1)


# ---------------------------------------------------------------- nearest-neighbour bounds


def test_measured_bounds_by_hand():
    li = limit_integrals(3)
    J1, J2, alpha = 0.8, -0.2, 0.05
    rep = nn_lro_bounds(CertificateInput(3, 1, J1, J2, 4.0, None, "measured", alpha))
    S = 0.5
    b1 = S * (S + 1) / 3 - 0.5 * li.I * math.sqrt(alpha) - li.inv_eps / 8.0
    b2 = alpha / (1 - J2 / J1) - 0.5 * li.I_tilde * math.sqrt(alpha) - li.inv_eps_cosplus / 8.0
    assert rep.bound1 == pytest.approx(b1, rel=1e-14)
    assert rep.bound2 == pytest.approx(b2, rel=1e-14)
    assert rep.lro_proven == (max(b1, b2) > 0)
    assert bound2_value(CertificateInput(3, 1, J1, J2, 4.0, None, "measured", alpha), alpha) == pytest.approx(b2)


def test_finite_volume_bounds_by_hand():
    ms = momentum_sums(2, 6)
    rep = nn_lro_bounds(CertificateInput(2, 2, 0.5, -0.1, 3.0, 6, "measured", 0.2))
    b1 = 2 / 3 - 0.5 * (ms.I_ell + ms.pi_term_bound) * math.sqrt(0.2) - ms.sum_inv_eps / 6.0
    assert rep.bound1 == pytest.approx(b1, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(ratio=st.floats(0.0, 1.0), two_S=st.integers(1, 3), d=st.integers(2, 4))
def test_worst_case_bounds_hold_for_every_alpha(ratio, two_S, d):
    inp = CertificateInput(d, two_S, 1.0, -ratio, math.inf, None, "worst_case")
    rep = nn_lro_bounds(inp)
    lo, hi = rep.alpha_interval
    worst = max(rep.bound1, rep.bound2)
    for a in np.linspace(lo, hi, 33):
        m = nn_lro_bounds(CertificateInput(d, two_S, 1.0, -ratio, math.inf, None, "measured", float(a)))
        assert max(m.bound1, m.bound2) >= worst - 1e-12
    assert rep.lro_proven == (worst > 0)


def test_worst_case_agrees_with_alpha_free_condition():
    for ratio in (0.05, 0.10, 0.12, 0.5):
        rep = nn_lro_bounds(CertificateInput(2, 1, 1.0, -ratio))
        assert rep.lro_proven == alpha_free_condition(2, 1, ratio).holds


def test_certificate_input_validation():
    with pytest.raises(ConfigError):
        CertificateInput(2, 1, 1.2, 0.0)
    with pytest.raises(ConfigError):
        CertificateInput(2, 1, 0.5, -0.6)
    with pytest.raises(ConfigError):
        CertificateInput(2, 1, 0.5, 0.0, J3=2.0)
    with pytest.raises(ParameterError):
        CertificateInput(2, 1, 0.5, 0.0, alpha_mode="measured")
    with pytest.raises(ConfigError):
        CertificateInput(2, 3, 0.5, 0.0, alpha_mode="kk")
    with pytest.raises(ParameterError):
        CertificateInput(2, 1, 0.5, 0.0, ell=5)


def test_square_lattice_finite_beta_limit_diverges():
    with pytest.raises(DomainError):
        nn_lro_bounds(CertificateInput(2, 1, 1.0, 0.0, beta=3.0))


# ---------------------------------------------------------------- general families


@pytest.mark.parametrize("d,ell", [(1, 6), (2, 4), (3, 4)])
def test_general_bound_reduces_to_nearest_neighbour(d, ell):
    table = CouplingTable.nearest_neighbour(Torus(d, ell), 0.7, -0.2, 1.0)
    for beta in (math.inf, 2.0):
        gen = general_lro_bound(table, 2, beta, nn_e_envelope(0.3, d))
        nn = nn_lro_bounds(CertificateInput(d, 2, 0.7, -0.2, beta, ell, "measured", 0.3))
        assert gen.bound1 == pytest.approx(nn.bound1, abs=1e-12)


def test_worst_case_e_bound_dominates_measured_e():
    torus = Torus(1, 4)
    table = CouplingTable.from_families(torus, [Yukawa(0.5, 1.0), Yukawa(-0.2, 1.0), Yukawa(1.0, 1.0)])
    st_ = SpinModel(SpinSystem(torus, 2), table).gibbs(1.0)
    bound = worst_case_e_bound(table, 2)
    for k in momenta(torus):
        assert st_.e_of_k(k) <= bound(k) + 1e-12


def test_general_bound_long_range_is_finite():
    table = CouplingTable.from_families(Torus(3, 4), [PowerLawL1(0.5, 4), PowerLawL1(-0.2, 4), PowerLawL1(1.0, 4)])
    rep = general_lro_bound(table, 3, math.inf)
    assert math.isfinite(rep.bound1) and rep.bound2 is None


def test_general_bound_rejects_bad_tables():
    with pytest.raises(ConfigError):
        general_lro_bound(CouplingTable.nearest_neighbour(Torus(1, 4), 0.5, 0.5, 1.0), 1)
    with pytest.raises(ConfigError):
        general_lro_bound(CouplingTable.nearest_neighbour(Torus(1, 5), 0.5, 0.0, 1.0), 1)


# ---------------------------------------------------------------- scans


def test_empty_scan_is_header_only():
    res = scan([])
    lines = res.to_csv().split("\n")
    assert lines[0].startswith("d,two_S,ratio,beta,ell,")
    assert lines[1:] == [""]
    assert res.critical_ratios == {}


def test_scan_csv_formatting_and_errors():
    pts = [ScanPoint(2, 1, 0.1, math.inf), ScanPoint(2, 1, 0.1, 2.0), ScanPoint(3, 1, 0.0, 2.0, 4)]
    res = scan(pts)
    text = res.to_csv()
    assert "\r" not in text
    rows = [r.split(",") for r in text.strip().split("\n")]
    header = rows[0]
    assert len(rows) == 4 and all(len(r) == len(header) for r in rows)
    assert rows[1][header.index("ratio")] == "0.1"
    assert float(rows[1][header.index("bound1")]) == res.reports[0].bound1
    assert rows[2][header.index("error")].startswith("DomainError")
    assert rows[3][header.index("ell")] == "4"
    assert res.critical_ratios["d=2,two_S=1,beta=inf,ell=inf"] == pytest.approx(0.1097, abs=1e-3)


def test_scan_is_deterministic():
    pts = [ScanPoint(d, s, r, math.inf) for d, s, r in itertools.product((2, 3), (1, 2), (0.0, 0.5))]
    assert scan(pts).to_csv() == scan(list(pts)).to_csv()
