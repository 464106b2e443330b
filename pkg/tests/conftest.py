import time
from pathlib import Path

import numpy as np
import pytest

from coyote.core import ChainConfig, load_config
from coyote.dynamics import simulate_linear

ROOT = Path(__file__).resolve().parents[1]
TRIAL1 = ROOT / "configs" / "trial1.json"
SUITE_BUDGET_S = 60.0

_session_start = time.perf_counter()
ACCEPTANCE_LINES: list[str] = []


def random_config(rng: np.random.Generator, n: int) -> ChainConfig:
    return ChainConfig(
        bare_masses=tuple(rng.uniform(1.0, 200.0, n)),
        spring_constants=tuple(rng.uniform(1e3, 3e4, n - 1)),
        spring_masses=tuple(rng.uniform(0.0, 10.0, n - 1)),
        g=981.0,
    )


@pytest.fixture(scope="session")
def trial1() -> ChainConfig:
    return load_config(TRIAL1)


@pytest.fixture(scope="session")
def trial1_traj(trial1):
    return simulate_linear(trial1, 0.25, 1e-5, error_estimate=False)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _session_start
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        ok = elapsed < SUITE_BUDGET_S
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] criterion 10 (suite time): {elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s"
        )


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE_LINES and time.perf_counter() - _session_start >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
