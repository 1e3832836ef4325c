import numpy as np
import pytest
import torch

from skewkit import data as D


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_dataset():
    """200 tiny synthetic images, 10 bands of 16x16, with train and validation splits."""
    return D.make_synthetic_splits((0.6, 0.15, 0.15, 0.1), 160, 40, seed=3, height=16, width=16)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: (int(k.split("-")[0]), k)):
        terminalreporter.write_line(mod.RESULTS[key])
