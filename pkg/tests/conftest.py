"""Shared fixtures and the acceptance summary printed at the end of a run."""
from __future__ import annotations

import pytest

from halfspace_hls.discretization import build_ball_quadrature, build_sphere_mesh
from halfspace_hls.exponents import critical_config
from halfspace_hls.operators import DiscreteOperator

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> str:
    line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg32():
    return critical_config(3, 2.0)


@pytest.fixture(scope="session")
def ball_op(cfg32):
    """Sphere-to-ball operator at the default resolution (level 24, radial order 16)."""
    return DiscreteOperator(build_sphere_mesh(3, 24), build_ball_quadrature(3, 16, 24), cfg32)


@pytest.fixture(scope="session")
def small_ball_op(cfg32):
    return DiscreteOperator(build_sphere_mesh(3, 8), build_ball_quadrature(3, 6, 8), cfg32)
