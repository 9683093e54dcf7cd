"""
Shared fixtures: repository root on sys.path, seeded generators and a
throwaway SQLite report archive
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from config.settings import DEFAULT_SEED


@pytest.fixture
def seed():
    return DEFAULT_SEED


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


@pytest.fixture
def archive(tmp_path, monkeypatch):
    """Point the report archive at a fresh SQLite file"""
    from backend import database
    monkeypatch.setattr(database, 'USE_POSTGRES', False)
    monkeypatch.setattr(database, 'DATABASE_PATH', tmp_path / 'lab_reports.db')
    database.init_db()
    return database
