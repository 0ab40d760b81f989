import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curlstokes.mesh import (
    BoundaryChart,
    CircleArc,
    DomainSpec,
    Segment,
    build_mesh,
    curve_boundary,
    generate_domain,
)

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def rotation(x):
    return np.column_stack([-x[:, 1], x[:, 0]])


@pytest.fixture
def two_cell_square():
    """Unit square split along the diagonal, all sides slip."""
    return build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])


@pytest.fixture
def single_cell():
    return build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


@pytest.fixture(scope="session")
def curved_ellipse():
    mesh, chart = generate_domain(DomainSpec("ellipse", 0.2))
    return curve_boundary(mesh, chart, 3), chart


@pytest.fixture(scope="session")
def curved_annulus():
    mesh, chart = generate_domain(DomainSpec("annulus", 0.5))
    return curve_boundary(mesh, chart, 5), chart


def circle_sector_mesh(theta: float):
    """One triangle with its edge 1-2 on the unit circle, subtending ``theta``."""
    V = [[0, 0], [1, 0], [np.cos(theta), np.sin(theta)]]
    chart = BoundaryChart((CircleArc((0, 0), 1.0, 0.0, 2 * np.pi, name="circle"),), ())
    return build_mesh(V, [[0, 1, 2]], {(1, 2): ("slip", 0)}, chart), chart


def unit_square_chart():
    arcs = (
        Segment((0, 0), (1, 0), "bottom"),
        Segment((1, 0), (1, 1), "right"),
        Segment((1, 1), (0, 1), "top"),
        Segment((0, 1), (0, 0), "left"),
    )
    return BoundaryChart(arcs, ((0, 1, 2, 3),))


# --- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_report():
    """record(n, passed, detail) prints and stores one line per criterion."""

    def record(n: int, passed: bool, detail: str) -> None:
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
