import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fa_iscsc.beamforming import sca_beamforming
from fa_iscsc.config import SystemConfig
from fa_iscsc.harness.scenario import generate_scenario
from fa_iscsc.model import build_channels

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def default_case(cfg):
    """Seeded default scenario with channels and a converged SCA solution."""
    geo, scenario = generate_scenario(cfg, 0)
    channels = build_channels(cfg, geo, scenario)
    rho = np.ones(cfg.n_users)
    state = sca_beamforming(channels, cfg, rho)
    return dict(cfg=cfg, geo=geo, scenario=scenario, channels=channels, rho=rho,
                state=state, solution=state.solution)


def random_psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return scale * A @ A.conj().T / n


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome line is printed at the end."""
    entry = {"detail": ""}

    def note(name, detail=""):
        entry["name"] = name
        entry["detail"] = detail

    yield note
    rep = getattr(request.node, "rep_call", None)
    entry["passed"] = bool(rep and rep.passed)
    ACCEPTANCE[request.node.name] = entry


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(ACCEPTANCE.values(), key=lambda e: e.get("name", "")):
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {e.get('name', '?')}: {e['detail']}")
