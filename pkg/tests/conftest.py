import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.linalg import expm

from eprsim.config import ExperimentConfig
from eprsim.gaussian import CovarianceMatrix

OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def random_physical_state(rng, max_log_squeeze=1.0, max_thermal=3.0):
    """V = S D S^T with S = expm(Omega H) symplectic and D >= identity."""
    h = rng.normal(size=(4, 4))
    h = 0.5 * (h + h.T)
    h *= max_log_squeeze / max(np.linalg.norm(h, 2), 1e-12) * rng.uniform(0, 1)
    s = expm(OMEGA @ h)
    nu = 1 + rng.uniform(0, max_thermal, size=2)
    d = np.diag(np.repeat(nu, 2))
    return CovarianceMatrix(s @ d @ s.T)


@st.composite
def physical_states(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_physical_state(np.random.default_rng(seed))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def default_config():
    return ExperimentConfig()


@pytest.fixture
def default_model(default_config):
    return default_config.model()


# ---------------------------------------------------------------- acceptance summary

_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when == "teardown" and report.passed:
        return
    if report.when == "call" or report.failed or report.skipped:
        props = dict(report.user_properties)
        name = props.get("criterion") or report.nodeid.split("::")[-1]
        _acceptance[name] = (report.outcome, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda s: int(s[1:]) if s[1:].isdigit() else 99):
        outcome, detail = _acceptance[name]
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{name:4} {verdict}  {detail}")
