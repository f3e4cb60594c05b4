import time

import pytest

from nvelectro.diamond import DiamondParams, band_model, solve_interface
from nvelectro.electrolyte import ElectrolyteParams
from nvelectro.nv_spin import NVParams
from nvelectro.pipeline import default_cb_grid, run_sweep
from nvelectro.stochastic_oracle import McConfig, run_simulation

NV_DEPTH = 10e-9

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ep():
    return ElectrolyteParams()


@pytest.fixture(scope="session")
def dp():
    return DiamondParams()


@pytest.fixture(scope="session")
def band(dp):
    return band_model(dp)


@pytest.fixture(scope="session")
def nv():
    return NVParams()


@pytest.fixture(scope="session")
def solution(ep, dp, band):
    return solve_interface(ep, dp, band)


@pytest.fixture(scope="session")
def default_sweep(ep, dp, band, nv):
    """Default 25-point grid; wall time is kept for the runtime criterion."""
    t0 = time.perf_counter()
    points = run_sweep(ep, dp, band, nv, NV_DEPTH, default_cb_grid())
    return points, time.perf_counter() - t0


@pytest.fixture(scope="session")
def mc_run():
    cfg = McConfig()
    t0 = time.perf_counter()
    trace = run_simulation(cfg)
    return cfg, trace, time.perf_counter() - t0


@pytest.fixture
def report():
    """Record a criterion line; it is printed now and again in the terminal summary."""

    def _report(criterion: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
