import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("cclab", max_examples=40, deadline=None)
settings.load_profile("cclab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
