from importlib import resources

import numpy as np
import pytest

from spdc.compiler import compile_program
from spdc.lbm import cell_stage_design, lbm_design
from spdc.parser import parse

SAMPLE_SOURCE = resources.files("spdc.data").joinpath("sample_core.spd").read_text("utf-8")


@pytest.fixture(scope="session")
def sample_program():
    return parse(SAMPLE_SOURCE, "sample_core.spd")


@pytest.fixture(scope="session")
def sample_design(sample_program):
    return compile_program(sample_program, 125.0)


@pytest.fixture(scope="session")
def lbm():
    return lbm_design(64, 125.0)


@pytest.fixture(scope="session")
def cell_design():
    return cell_stage_design(125.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_finite(rng, shape, spread: int = 8) -> np.ndarray:
    """Random finite binary32 values over a moderate exponent range, both signs."""
    mant = rng.uniform(-1.0, 1.0, shape)
    return (mant * np.exp2(rng.integers(-spread, spread + 1, shape))).astype(np.float32)


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` logs one acceptance line and fails the test when ``ok`` is false."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", {})

    def check(n: int, ok: bool, detail: str) -> None:
        line = f"AC{n:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = line
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
