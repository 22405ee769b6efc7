"""Shared fixtures and the acceptance-criteria summary hook."""

import numpy as np
import pytest

from coneflow.spectral import SpectralGrid


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid8():
    return SpectralGrid(8, box_scale=1.0, pad_factor=2.0)


@pytest.fixture
def grid16():
    return SpectralGrid(16, box_scale=1.0, pad_factor=1.5)


# Acceptance tests register one human-readable line each; the summary
# hook replays them at the end of the run so pass/fail margins are
# visible without -s.

def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_report(request):
    lines = request.config._acceptance_lines

    def add(criterion: int, name: str, ok: bool, detail: str):
        flag = "PASS" if ok else "FAIL"
        lines.append(f"criterion {criterion} [{flag}] {name}: {detail}")

    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
