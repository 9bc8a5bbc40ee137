from __future__ import annotations

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

import pytest

from eemimo.models.params import SystemParams
from eemimo.network.geometry import build_layout, compute_coupling

DATA_DIR = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def small_layout():
    # 600 is a multiple of six, so the per-cell grid keeps its rotational symmetry.
    return build_layout(grid_size=600)


@pytest.fixture(scope="session")
def small_gains(small_layout):
    return compute_coupling(small_layout)


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def data_dir():
    return DATA_DIR
