"""Shared fixtures for the shiftlab test suite."""
import math

import numpy as np
import pytest

from shiftlab.core.shiftmap import Affine, SineShift
from shiftlab.utils.output_handler import OutputHandler

# Fixed seeds for the randomized coefficient jets
JET_SEEDS = [3, 11, 17, 23, 29, 31, 37, 41, 43, 47]


@pytest.fixture
def handler(tmp_path):
    return OutputHandler(str(tmp_path), include_meta=False)


@pytest.fixture
def sine7():
    return SineShift(7.0)


@pytest.fixture
def sine_branch():
    """lambda = 7.4 on the branch shifted by -2 pi."""
    return SineShift(7.4, -2.0 * math.pi)


@pytest.fixture
def doubling():
    return Affine(2.0, 0.0)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    monkeypatch.delenv("SHIFTLAB_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("LOG_LEVEL", raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture(params=JET_SEEDS)
def jet_rng(request):
    return np.random.default_rng(request.param)
