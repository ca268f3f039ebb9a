"""Shared fixtures: the seeded tiny network and deterministic 64×64 images."""

import numpy as np
import pytest

from restyle.cli import demo_images
from restyle.imaging import RgbImage
from restyle.network import tiny_network

FIXTURE_SEED = 7


@pytest.fixture(scope="session")
def net():
    return tiny_network(FIXTURE_SEED)


@pytest.fixture(scope="session")
def fixture_images():
    """(content, style) pair at 64×64 used across the suite."""
    return demo_images(64)


@pytest.fixture()
def random_image():
    rng = np.random.default_rng(2024)
    return RgbImage(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
