"""Shared fixtures: the two bundled example systems and derived data.

Everything heavyweight (config loading, the exponent-crossing search)
is session-scoped so the suite pays for it once.
"""

from __future__ import annotations

import pytest

from ismquant import dims
from ismquant.config import RunConfig, example_config_path, load_config


@pytest.fixture(scope="session")
def ex31_cfg() -> RunConfig:
    return load_config(example_config_path("example_3_1.json"))


@pytest.fixture(scope="session")
def ex32_cfg() -> RunConfig:
    return load_config(example_config_path("example_3_2.json"))


@pytest.fixture(scope="session")
def ex31(ex31_cfg):
    return ex31_cfg.system


@pytest.fixture(scope="session")
def ex32(ex32_cfg):
    return ex32_cfg.system


@pytest.fixture(scope="session")
def r_star(ex31) -> float:
    """Order at which the two exponents of the first example cross."""
    return dims.find_crossing_r(ex31, 0.01, 20.0)
