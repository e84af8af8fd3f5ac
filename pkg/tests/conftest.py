"""Pytest configuration and shared fixtures."""

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

src_path = str(Path(__file__).parent.parent / "src")
if src_path not in sys.path:
    sys.path.insert(0, src_path)

from core import curvature
from core.cross_section import CrossSection
from core.geometry import CurveSpec, jacobian_field, solve_tang_frame
from core.grid import TensorGrid
from core.operators import full_potential


@pytest.fixture
def interval():
    """ω = (−1, 1)."""
    return CrossSection.interval(1.0)


@pytest.fixture
def straight_curve():
    return CurveSpec(dim=2, length=np.pi, kappa1=curvature.constant(0.0))


@pytest.fixture
def constant_curve():
    """Planar curve of constant curvature 1 over (0, π)."""
    return CurveSpec(dim=2, length=np.pi, kappa1=curvature.constant(1.0))


@pytest.fixture
def sine_curve():
    return CurveSpec(
        dim=2, length=np.pi, kappa1=curvature.sine(amplitude=0.8, frequency=1.0, phase=0.5)
    )


@pytest.fixture
def space_curve():
    """Curve in ℝ³ with sinusoidal κ₁ and constant κ₂ = 0.5."""
    return CurveSpec(
        dim=3,
        length=np.pi,
        kappa1=curvature.sine(amplitude=1.0, frequency=1.0, offset=0.2),
        higher_kappas=(curvature.constant(0.5),),
    )


@pytest.fixture
def small_grid(interval):
    return TensorGrid.build(np.pi, 40, interval.sides, 12)


def build_tube(curve, omega, epsilon, s_count, t_counts):
    """Grid, Jacobian field and full potential of a tube."""
    grid = TensorGrid.build(curve.length, s_count, omega.sides, t_counts)
    rot = solve_tang_frame(curve, grid.s_count + 1)
    jf = jacobian_field(curve, rot, epsilon, grid)
    return grid, jf, full_potential(jf, curve)


@pytest.fixture
def tube_factory():
    return build_tube


@pytest.fixture
def temp_config_file(tmp_path):
    """Small planar sweep configuration in TOML."""
    config_file = tmp_path / "run.toml"
    config_file.write_text(
        f"""
[run]
mode = "sweep"
epsilons = [0.2, 0.1, 0.05]
seed = 7

[curve]
kind = "constant"
params = {{ value = 1.0 }}

[grid]
s_count = 40
t_count = [10]

[solver]
n = 2

[output]
directory = "{(tmp_path / 'out').as_posix()}"

[logging]
console_output = false
"""
    )
    return config_file


@pytest.fixture(autouse=True)
def restore_root_logger():
    """Runs that configure logging attach handlers to the root logger; undo that."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "unit: marks tests as unit tests")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")
    config.addinivalue_line("markers", "performance: marks tests as performance tests")
    config.addinivalue_line("markers", "slow: marks tests as slow running")


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests based on their location."""
    for item in items:
        if "unit" in str(item.fspath):
            item.add_marker(pytest.mark.unit)
        elif "integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)
            item.add_marker(pytest.mark.slow)

        slow_keywords = ["slow", "sturm_suite", "oracle_equivalence"]
        if any(keyword in item.name.lower() for keyword in slow_keywords):
            item.add_marker(pytest.mark.slow)
