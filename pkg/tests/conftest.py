"""Shared fixtures for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


@pytest.fixture
def write_csv(tmp_path):
    """Return a helper that writes CSV text and hands back the path."""

    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
