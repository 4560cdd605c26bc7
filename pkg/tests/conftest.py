import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sta_lstm import ModelShape, init_params


FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_model():
    """A small full model with every gate active."""
    shape = ModelShape(joints=4, classes=3, hidden=5, attn_hidden=4, main_layers=2, dropout=0.0)
    return init_params(shape, 7)


@pytest.fixture
def sbu_fixture_dir():
    path = FIXTURES / "sbu_synth"
    assert path.is_dir(), "bundled capture-layout fixture is missing"
    return path
