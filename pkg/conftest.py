"""
Shared pytest configuration for feature-capsnet tests
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path so the tests run without an install
sys.path.insert(0, str(Path(__file__).parent / "src"))

from feature_capsnet.config import build_config  # noqa: E402

# Small network that keeps every layer type: 10x10 images, 3x3 kernels
TINY_ARCHITECTURE = {
    "image_height": 10,
    "image_width": 10,
    "conv_channels": 4,
    "primary_groups": 2,
    "primary_dim": 4,
    "capsule_dim": 4,
    "kernel_size": 3,
    "primary_stride": 2,
    "decoder_hidden": [8, 12],
}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Factory for reduced configs; keyword arguments override fields"""

    def make(**overrides):
        data = {**TINY_ARCHITECTURE, "n_class": 3}
        return build_config(data, **overrides)

    return make
