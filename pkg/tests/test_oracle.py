from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import case_a, case_b, case_c, case_d, case_e
from pdmscrew import oracle, spectra
from pdmscrew.errors import ConfigError, GridError, NoRootError
from pdmscrew.model import PdmProfile, SystemConfig, build_effective_problem, case_parameters
from pdmscrew.oracle import FdGrid, OracleSettings, TargetConvention, Verdict


def box(r):
    return np.zeros_like(r)


def oscillator(r):
    return (1 - 0.25) / r**2 + r**2


def hydrogenic(r):
    return 0.75 / r**2 - 2 / r


def test_fd_box():
    eps = oracle.fd_spectrum(box, FdGrid(1.0, 2000), 1)
    assert eps[0] == pytest.approx(math.pi**2, abs=1e-4)


def test_fd_oscillator():
    eps = oracle.fd_spectrum(oscillator, FdGrid(12.0, 8000), 1)
    assert eps[0] == pytest.approx(4.0, abs=1e-4)


def test_fd_hydrogenic():
    eps = oracle.fd_spectrum(hydrogenic, FdGrid(40.0, 16000), 1)
    assert eps[0] == pytest.approx(-4 / 9, abs=1e-4)


def test_fd_accepts_samples_and_validates():
    g = FdGrid(1.0, 300)
    assert oracle.fd_spectrum(np.zeros(300), g, 2).shape == (2,)
    with pytest.raises(GridError):
        oracle.fd_spectrum(np.zeros(10), g, 1)
    with pytest.raises(GridError):
        oracle.fd_spectrum(np.full(300, np.inf), g, 1)
    with pytest.raises(GridError):
        FdGrid(1.0, 100)


@pytest.mark.parametrize("W,r_max,n0", [(box, 1.0, 500), (oscillator, 12.0, 1000),
                                         (hydrogenic, 40.0, 2000)])
def test_fd_second_order(W, r_max, n0):
    e = [oracle.fd_spectrum(W, FdGrid(r_max, n), 1)[0] for n in (n0, 2 * n0 + 1, 4 * n0 + 3)]
    ratio = (e[0] - e[1]) / (e[1] - e[2])
    assert 3.2 <= ratio <= 4.8


def test_fd_node_count():
    vals, vecs = oracle.fd_spectrum(oscillator, FdGrid(12.0, 2000), 4, vectors=True)
    for n in range(4):
        assert oracle.sign_changes(vecs[:, n]) == n
    # radial oscillator: 2 (2 n + |m| + 1) with |m| = 1
    assert np.allclose(vals, [4, 8, 12, 16], atol=1e-2)


def test_structured_scheme_is_second_order():
    # fractional |l~| = 1/4 with a Coulomb term
    prob = build_effective_problem(case_a(), 0)
    e = [oracle.structured_eigenvalue(prob, 1.5, 30.0, n, 0) for n in (2000, 4000, 8000)]
    ratio = (e[0] - e[1]) / (e[1] - e[2])
    assert 3.2 <= ratio <= 4.8


def test_self_consistent_case_a():
    E = oracle.self_consistent_energy(case_a(chi=0.5), 0, 1)
    assert E == pytest.approx(2.118034, abs=1e-4)


def test_self_consistent_case_b_conventions():
    with pytest.raises(NoRootError):
        oracle.self_consistent_energy(case_b(), 0, 0, TargetConvention.PRINTED_TARGET)
    E = oracle.self_consistent_energy(case_b(), 0, 0, TargetConvention.POSITIVE_TARGET)
    assert E == pytest.approx(-0.1111111, abs=1e-4)
    assert abs(E / (-1 / 9) - 1) < 1e-4


def test_self_consistent_case_c():
    E = oracle.self_consistent_energy(case_c(), 0, 1)
    assert E == pytest.approx(-11.0, abs=1e-3)


@pytest.mark.parametrize("make,n,ell", [(case_d, 0, 2), (case_d, 1, 3), (case_e, 0, 2),
                                         (case_e, 1, 4)])
def test_oracle_matches_landau_like(make, n, ell):
    cfg = make()
    E = oracle.self_consistent_energy(cfg, n, ell)
    assert abs(E / spectra.energy(cfg, n, ell).value - 1) < 1e-4


def test_truncation_relation_holds_for_oracle_energy():
    cfg = case_e()
    for n, ell in ((0, 2), (1, 4)):
        E = oracle.self_consistent_energy(cfg, n, ell)
        p = case_parameters(cfg, ell, E)
        L = math.sqrt(max(p.cal_l_tilde_sq, 0.0))
        assert p.big_lambda_tilde == pytest.approx(2 * p.omega * (2 * n + L + 1), rel=1e-4, abs=1e-4)


def test_coulomb_term_moves_case_e_level():
    # the closed form ignores b_lin; the oracle does not
    base = oracle.self_consistent_energy(case_e(b_lin=0.0), 0, 2)
    shifted = oracle.self_consistent_energy(case_e(b_lin=1.0), 0, 2)
    print(f"case E (0,2): b_lin=0 -> {base:.8f}, b_lin=1 -> {shifted:.8f}")
    assert shifted > base + 1e-3


def test_numerical_only_needs_bracket():
    cfg = SystemConfig(PdmProfile(1.0, -1.3), k=1.0)
    with pytest.raises(ConfigError):
        oracle.self_consistent_energy(cfg, 0, 1)
    E = oracle.self_consistent_energy(cfg, 0, 1, bracket=(0.5, 10.0),
                                      settings=OracleSettings(n_points=4000))
    assert math.isfinite(E)


def test_no_root_outside_bracket():
    with pytest.raises(NoRootError):
        oracle.self_consistent_energy(case_a(), 0, 1, bracket=(10.0, 11.0),
                                      settings=OracleSettings(n_points=2000))


def test_residual_norm_examples():
    E = spectra.energy(case_a(), 0, 1).value
    assert oracle.residual_norm(case_a(), 0, 1, E) < 1e-6
    assert oracle.residual_norm(case_a(), 0, 1, 1.01 * E) > 1e-3


def test_residual_case_e_with_coulomb_term_is_reported():
    cfg = case_e(b_lin=1.0)
    value = oracle.residual_norm(cfg, 0, 2, spectra.energy(cfg, 0, 2).value)
    print(f"case E, b_lin=1, truncated Heun residual: {value:.3e}")
    assert value > 1e-6


def test_audit_case_c():
    rep = oracle.audit("c", case_c(), 0, 1)
    assert rep.verdict is Verdict.PRINTED_DEVIATES
    assert rep.as_printed == -1.0 and rep.rederived == -11.0
    assert rep.oracle_value == pytest.approx(-11.0, rel=1e-3)
    assert rep.oracle_error < 1e-4
    doc = json.loads(rep.to_json())
    assert set(doc) >= {"case_id", "as_printed", "rederived", "oracle_value", "oracle_error",
                        "verdict", "convergence"}
    assert doc["verdict"] == "printed_deviates"


def test_audit_case_b_target_sign():
    rep = oracle.audit("b", case_b(), 0, 0)
    assert rep.verdict is Verdict.AGREES
    assert rep.target_sign is Verdict.PRINTED_DEVIATES


def test_audit_case_d_agrees():
    assert oracle.audit("d", case_d(), 0, 2).verdict is Verdict.AGREES


def test_audit_invalid_case_d_has_no_bound_state_or_deviates():
    rep = oracle.audit("d", case_d(chi=0.2, k=1.0), 0, -4)
    assert rep.verdict in (Verdict.NO_BOUND_STATE, Verdict.PRINTED_DEVIATES)


def test_audit_case_e_heun_facts():
    rep = oracle.audit("e", case_e(b_lin=2.0), 1, 4)
    h = rep.heun
    assert h["c_next_nonzero"] and abs(h["c_next"]) > 1e-12
    assert h["b_tilde_sq_required"] == pytest.approx(2 * h["omega"] * (h["two_l_abs"] + 1))
    assert h["l_abs_forced_when_b_zero"] == -0.5
    # closed C_2 lacks the zeta C_0 contribution
    assert h["c2_series"] - h["c2_closed"] == pytest.approx(h["zeta"] / (2 * (2 + h["two_l_abs"])))


def test_audit_rejects_wrong_case():
    with pytest.raises(ConfigError):
        oracle.audit("c", case_a(), 0, 1)


def test_results_independent_of_scheduling():
    jobs = [(case_d(), 0, 2), (case_d(), 1, 3), (case_e(), 0, 2)]
    s = OracleSettings(n_points=3000)
    serial = [oracle.self_consistent_energy(c, n, l, settings=s) for c, n, l in jobs]
    oracle.clear_cache(s)
    with ThreadPoolExecutor(3) as pool:
        threaded = list(pool.map(lambda j: oracle.self_consistent_energy(*j, settings=s), jobs))
    assert threaded == serial
