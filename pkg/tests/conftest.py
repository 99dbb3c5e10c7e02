import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relightlab.stylegen import ArchConfig, StyleGenerator


@pytest.fixture(scope="session")
def tiny_arch() -> ArchConfig:
    # 16x16 output, 64 style channels: fast enough for exhaustive checks
    return ArchConfig(
        z_dim=16,
        w_dim=32,
        mapping_hidden=32,
        block_channels=(40, 24),
        block_outputs=(24, 16),
    )


@pytest.fixture(scope="session")
def tiny_gen(tiny_arch) -> StyleGenerator:
    return StyleGenerator.fresh(tiny_arch, seed=3)
