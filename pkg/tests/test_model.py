from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import case_a, case_c, case_d, case_e
from pdmscrew.errors import ConfigError, DomainError, GridError
from pdmscrew.model import (DislocationConfig, GaugeConfig, PdmProfile, PotentialConfig,
                            SolvableFamily, SystemConfig, apply_reduced_hamiltonian,
                            build_effective_problem, case_parameters, classify,
                            mass_multiplier, mass_term)


def test_profile_validation():
    with pytest.raises(ConfigError):
        PdmProfile(0.0, 1.0)
    with pytest.raises(ConfigError):
        PdmProfile(-1.0, 1.0)


def test_burgers_relation():
    d = DislocationConfig.from_burgers(1.3)
    assert d.chi == 1.3 / (2 * math.pi)
    with pytest.raises(ConfigError):
        DislocationConfig(chi=0.5, burgers=1.0)


def test_mass_multiplier_examples():
    assert mass_multiplier(PdmProfile(1, 0), 7.3) == 1.0
    assert mass_multiplier(PdmProfile(2, -1), 4.0) == 0.5
    assert mass_multiplier(PdmProfile(1, 2), 3.0) == 9.0
    with pytest.raises(DomainError):
        mass_multiplier(PdmProfile(1, 2), 0.0)


def test_mass_term_examples():
    assert mass_term(PdmProfile(3.0, 0), 1.0) == 0.0
    assert mass_term(PdmProfile(1, 2), 1.0) == pytest.approx(0.75, rel=1e-15)
    assert mass_term(PdmProfile(1, -1), 2.0) == pytest.approx(0.046875, rel=1e-15)
    with pytest.raises(DomainError):
        mass_term(PdmProfile(1, 2), -1.0)


@pytest.mark.parametrize("sigma", [-2.0, -1.0, -0.5, 0.0, 0.7, 1.0, 2.0, 3.3])
def test_mass_term_power_law_identity(sigma):
    r = np.linspace(0.1, 10.0, 37)
    expect = 3 * sigma**2 / 16 / r**2
    got = mass_term(PdmProfile(1.7, sigma), r)
    assert np.allclose(got, expect, rtol=1e-12, atol=1e-300)


def test_classify_examples():
    assert classify(case_a()) is SolvableFamily.CASE_A
    assert classify(SystemConfig(PdmProfile(1, 2), k=1)) is SolvableFamily.CASE_B
    assert classify(case_c()) is SolvableFamily.CASE_C
    assert classify(case_d()) is SolvableFamily.CASE_D
    assert classify(case_e()) is SolvableFamily.CASE_E
    assert classify(SystemConfig(PdmProfile(1, 1.3), k=1)) is SolvableFamily.NUMERICAL_ONLY
    # negative q B0 is left to the numerical path
    assert classify(case_d(B0=-2.0)) is SolvableFamily.NUMERICAL_ONLY
    # a pure flux does not make a configuration magnetic
    flux_only = SystemConfig(PdmProfile(1, -1), gauge=GaugeConfig(1.0, 0.0, 0.4), k=1)
    assert classify(flux_only) is SolvableFamily.CASE_A


def test_case_a_problem():
    prob = build_effective_problem(case_a(chi=0.3, k=1.5), 2)
    le = 2 - 0.3 * 1.5
    assert prob.centrifugal == pytest.approx(le**2 + 1 / 16, rel=1e-15)
    assert len(prob.power_terms) == 1
    t = prob.power_terms[0]
    assert (t.c0, t.cE, t.exponent) == (0.0, -1.0, -1.0)
    assert prob.target == -1.5**2
    assert prob.energy_embedding


def test_constant_mass_collapse():
    cfg = SystemConfig(PdmProfile(1.0, 0.0), DislocationConfig(0.2), potential=PotentialConfig(0, 0.5, 0), k=1.0)
    prob = build_effective_problem(cfg, 1)
    assert prob.centrifugal - 0.25 == pytest.approx((1 - 0.2)**2 - 0.25, rel=1e-15)
    assert prob.angular_strength(0.3) == prob.centrifugal
    assert mass_term(cfg.pdm, 2.0) == 0.0
    # -lam (E - V): E-dependent constant plus the linear potential term
    expo = {t.exponent: (t.c0, t.cE) for t in prob.power_terms}
    assert expo[0.0] == (0.0, -1.0)
    assert expo[1.0] == (0.5, 0.0)


def test_case_e_problem_collects_terms():
    cfg = case_e(a=1.0, b_lin=3.0, c=2.0, k=0.5, chi=0.1)
    ell = 2
    prob = build_effective_problem(cfg, ell)
    le = ell - 0.1 * 0.5
    E = 0.37
    # (L~^2 - 1/4)/r^2 with L~^2 = m~^2 + lam a
    m2 = le**2 - E + 0.25
    assert prob.angular_strength(E) == pytest.approx(m2 + 1.0, rel=1e-14)
    expo = {t.exponent: (t.c0, t.cE) for t in prob.power_terms}
    assert expo[-1.0] == (3.0, 0.0)          # + b~ / r
    assert expo[2.0] == (1.0, 0.0)           # w^2 r^2
    lam_tilde = 2.0 * le - 0.25
    assert prob.target == pytest.approx(lam_tilde - 2.0, rel=1e-15)


def test_gauge_off_equivalence():
    plain = case_c(a=0.5, b_lin=3.0, c=0.2, chi=0.3)
    gauged = SystemConfig(plain.pdm, plain.dislocation, GaugeConfig(-2.7, 0.0, 0.0),
                          plain.potential, plain.k)
    for ell in (-2, 0, 1, 3):
        assert build_effective_problem(plain, ell) == build_effective_problem(gauged, ell)
        assert case_parameters(plain, ell, -1.3) == case_parameters(gauged, ell, -1.3)
    assert classify(gauged) is classify(plain)


def test_shift_structure():
    # same ell - chi k - q Phi/(2 pi) with different components
    c1 = case_d(chi=0.25, k=2.0, phi=0.0)
    c2 = case_d(chi=0.0, k=2.0, phi=math.pi)
    assert c1.ell_eff(3) == pytest.approx(c2.ell_eff(3), abs=1e-15)
    p1 = build_effective_problem(c1, 3)
    p2 = build_effective_problem(c2, 3)
    assert p1.centrifugal == pytest.approx(p2.centrifugal, rel=1e-15)
    assert p1.target == pytest.approx(p2.target, rel=1e-15)


def test_case_parameters_examples():
    assert case_parameters(case_a(), 1, 0.0).ell_tilde_sq == 1.0625
    p = case_parameters(case_d(), 2, 3.25)
    assert (p.m_tilde_sq, p.lambda_tilde, p.omega) == (1.0, 4.0, 1.0)
    assert case_parameters(case_c(), 1, -11.0).kappa == 1.0
    with pytest.raises(DomainError):
        case_parameters(case_c(c=-2.0), 1, 0.0)
    with pytest.raises(DomainError):
        case_parameters(SystemConfig(PdmProfile(1, 1.3)), 0, 0.0)


def test_case_e_zeta_definition():
    p = case_parameters(case_e(), 2, 5.25)
    assert p.cal_l_tilde_sq == 0.0
    assert p.zeta == pytest.approx(2 * p.omega * (0 + 1) - p.big_lambda_tilde, abs=1e-15)


def test_with_axis():
    cfg = case_e()
    assert cfg.with_axis("b_lin", 4.0).potential.b_lin == 4.0
    assert cfg.with_axis("B0", 3.0).gauge.B0 == 3.0
    assert cfg.with_axis("chi", -0.5).chi == -0.5
    with pytest.raises(ConfigError):
        case_a().with_axis("B0", 1.0)
    with pytest.raises(ConfigError):
        cfg.with_axis("nope", 1.0)


def _grid(r_max, n=4096):
    return r_max * np.arange(1, n + 1) / n


def test_residual_rejects_bad_grids():
    cfg = case_a()
    with pytest.raises(GridError):
        apply_reduced_hamiltonian(cfg, 1, np.linspace(0.1, 1, 10), np.ones(10), 1.0)
    r = np.sort(np.random.default_rng(0).uniform(0.1, 1, 100))
    with pytest.raises(GridError):
        apply_reduced_hamiltonian(cfg, 1, r, np.ones(100), 1.0)
    with pytest.raises(GridError):
        apply_reduced_hamiltonian(cfg, 1, np.linspace(0, 1, 100), np.ones(100), 1.0)


def test_residual_constant_mass_wrong_pair():
    cfg = SystemConfig(PdmProfile(1.0, 0.0), k=0.0)
    r = _grid(30.0)
    R = r * np.exp(-r)
    res = apply_reduced_hamiltonian(cfg, 1, r, R, 0.3)
    assert res.relative_sup(r_min=0.6) > 1e-2


def test_residual_case_a_analytic():
    # Case A: R = r^(L - 1/2) e^{-k r}, L = sqrt(17)/4, E = 2 (L + 1/2)
    L = math.sqrt(17) / 4
    r = _grid(30.0)
    R = r**(L - 0.5) * np.exp(-r)
    res = apply_reduced_hamiltonian(case_a(), 1, r, R, 2 * (L + 0.5))
    assert res.relative_sup(r_min=0.6) < 1e-6


def test_residual_case_d_analytic():
    # Case D ground state at ell = 2: |m~| = 1, R = r^0 e^{-r^2/2}, E = 3.25
    r = _grid(30.0)
    R = np.exp(-r**2 / 2)
    res = apply_reduced_hamiltonian(case_d(), 2, r, R, 3.25)
    assert res.relative_sup(r_min=0.6) < 1e-6


@settings(max_examples=30, deadline=None)
@given(ell=st.integers(-4, 4), chi=st.floats(-2, 2), k=st.floats(-2, 2),
       phi=st.floats(-3, 3), E=st.floats(-5, 5))
def test_centrifugal_depends_on_single_combination(ell, chi, k, phi, E):
    cfg = SystemConfig(PdmProfile(1.0, -2.0), DislocationConfig(chi), GaugeConfig(1.0, 1.0, phi), k=k)
    prob = build_effective_problem(cfg, ell)
    le = ell - chi * k - phi / (2 * math.pi)
    assert prob.centrifugal == pytest.approx(le**2 + 0.25, rel=1e-12, abs=1e-12)
    assert prob.angular_strength(E) == pytest.approx(le**2 + 0.25 - E, rel=1e-12, abs=1e-12)
