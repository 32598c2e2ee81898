"""Shared fixtures: tiny driver configs and deterministic generators."""

from __future__ import annotations

import numpy as np
import pytest

from masr.config import RunConfig

# small end-to-end setup used by driver/CLI tests; physics at paper values,
# sizes shrunk so a full AO run stays under a second
TINY = dict(
    n_antennas=2, n_ris=3, n_paths=4,
    n_particles=12, n_swarm_iters=10,
    sca_max_iters=10, ao_max_iters=6, verify_samples=60,
)


def tiny_config(**over) -> RunConfig:
    kw = dict(TINY)
    kw.update(over)
    return RunConfig(**kw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_psr():
    return tiny_config(scenario="psr", seeds=(0,))


@pytest.fixture
def tiny_csr():
    return tiny_config(scenario="csr", seeds=(0,))
