import numpy as np
import pytest

from probe_reduce.geometry import SpacetimeBackground, harmonic_potential, make_grid
from probe_reduce.modes import assemble_E2, solve_modes


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion (printed in the summary)."""

    def record(number, title, ok, detail, elapsed):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail} ({elapsed:.2f} s)"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def harmonic_basis():
    """Unit harmonic oscillator (m = Omega = 1) on [-12, 12], 2001 points, 40 modes."""
    grid = make_grid(-12.0, 12.0, 2001)
    bg = SpacetimeBackground.flat(grid)
    return solve_modes(assemble_E2(grid, bg, harmonic_potential(grid, 1.0, 1.0)), 40)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
