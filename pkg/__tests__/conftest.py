"""
Pytest configuration and shared fixtures for kernbound tests.
"""
from pathlib import Path
from unittest.mock import MagicMock

import numpy as np
import pytest

from kernbound.domain import KernelSpec, Sample
from kernbound.kernels import KernelDictionary, build_dictionary
from kernbound.logger import set_log_level

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "__fixtures__"


@pytest.fixture
def mock_logger():
    """Fixture providing a mock logger for injection."""
    mock = MagicMock()
    mock.debug = MagicMock()
    mock.info = MagicMock()
    mock.warn = MagicMock()
    mock.error = MagicMock()
    mock.trace = MagicMock()
    return mock


@pytest.fixture
def clean_env(monkeypatch):
    """Fixture to manage environment variables."""
    def set_env(**kwargs):
        for key, value in kwargs.items():
            if value is None:
                monkeypatch.delenv(key, raising=False)
            else:
                monkeypatch.setenv(key, value)
    return set_env


@pytest.fixture(autouse=True)
def reset_log_level():
    """Drop any forced log level between tests."""
    set_log_level(None)
    yield
    set_log_level(None)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def in_repo_root(monkeypatch):
    """Run from the repository root so relative fixture paths in configs resolve."""
    monkeypatch.chdir(ROOT)
    return ROOT


@pytest.fixture
def tiny_sample() -> Sample:
    """Eight separable 2-d points, four per class."""
    x = np.array([
        [1.0, 0.5], [1.5, 1.0], [2.0, 0.2], [0.8, 1.2],
        [-1.0, -0.4], [-1.4, -1.1], [-2.1, 0.1], [-0.7, -1.3],
    ])
    y = np.array([1, 1, 1, 1, -1, -1, -1, -1])
    return Sample.from_arrays(x, y)


@pytest.fixture
def tiny_specs():
    return [
        KernelSpec.linear("lin"),
        KernelSpec.polynomial(2, 1.0, name="poly2"),
        KernelSpec.gaussian(0.5, name="rbf"),
    ]


@pytest.fixture
def tiny_dictionary(tiny_sample, tiny_specs) -> KernelDictionary:
    return build_dictionary(tiny_sample, tiny_specs)


@pytest.fixture
def identity_dictionary():
    """Factory for dictionaries of p identity Grams of size m."""
    def _make(m: int, p: int = 1) -> KernelDictionary:
        return KernelDictionary.from_matrices([np.eye(m)] * p)
    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
