"""
Shared pytest fixtures: the application, its CLI runner and the data directory
"""
import os
from pathlib import Path

import pytest

from app import create_app

DATA_DIR = Path(os.path.dirname(os.path.abspath(__file__))) / 'data'


@pytest.fixture
def app():
    return create_app({'TESTING': True, 'WORKERS': 2, 'MC_STREAMS': 4})


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def config_file(data_dir):
    def path(name):
        return str(data_dir / 'configs' / name)
    return path


@pytest.fixture
def spec_file(data_dir):
    def path(name):
        return str(data_dir / 'specs' / name)
    return path
