from __future__ import annotations

import pytest

from pdmscrew.model import (DislocationConfig, GaugeConfig, PdmProfile, PotentialConfig,
                            SystemConfig)


def case_a(chi=0.0, k=1.0, lam=1.0):
    return SystemConfig(PdmProfile(lam, -1.0), DislocationConfig(chi), k=k)


def case_b(chi=0.0, k=1.0, lam=1.0):
    return SystemConfig(PdmProfile(lam, 2.0), DislocationConfig(chi), k=k)


def case_c(a=0.0, b_lin=8.0, c=0.0, chi=0.0, k=1.0, lam=1.0):
    return SystemConfig(PdmProfile(lam, -2.0), DislocationConfig(chi),
                        potential=PotentialConfig(a, b_lin, c), k=k)


def case_d(B0=2.0, phi=0.0, chi=0.0, k=0.0, q=1.0, lam=1.0):
    return SystemConfig(PdmProfile(lam, -2.0), DislocationConfig(chi), GaugeConfig(q, B0, phi), k=k)


def case_e(a=1.0, b_lin=0.0, c=2.0, B0=2.0, phi=0.0, chi=0.0, k=0.0, q=1.0, lam=1.0):
    return SystemConfig(PdmProfile(lam, -2.0), DislocationConfig(chi), GaugeConfig(q, B0, phi),
                        PotentialConfig(a, b_lin, c), k=k)


@pytest.fixture
def configs():
    return {"a": case_a, "b": case_b, "c": case_c, "d": case_d, "e": case_e}


# -- runtime budget of the whole suite (acceptance criterion 10) -------------

import time as _time

SUITE_BUDGET_S = 60.0
_started = {}


def pytest_sessionstart(session):
    _started["t"] = _time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    elapsed = _time.perf_counter() - _started.get("t", _time.perf_counter())
    _started["elapsed"] = elapsed
    if elapsed >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    elapsed = _started.get("elapsed")
    if elapsed is None:
        return
    tag = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    terminalreporter.write_line(
        f"[{tag}] criterion 10 (runtime): session took {elapsed:.1f} s, budget {SUITE_BUDGET_S:.0f} s")
