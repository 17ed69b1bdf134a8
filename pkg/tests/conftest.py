"""
Pytest Configuration and Fixtures
Provides reusable fixtures for states, settings and output directories
"""

import pytest
import numpy as np
from datetime import datetime
from pathlib import Path
from loguru import logger

from bohmflow.config.config_manager import config
from bohmflow.core.guidance import IntegratorSettings
from bohmflow.core.wavefunction import base_state as make_base_state
from bohmflow.core.wavefunction import perturbed_state as make_perturbed_state
from bohmflow.utils.log_helper import LOG_FORMAT

PROJECT_ROOT = Path(__file__).parent.parent
EXPERIMENT_CONFIGS = PROJECT_ROOT / "config" / "experiments"
STATE_FILES = PROJECT_ROOT / "config" / "states"


# ============= Session-Level Fixtures =============

@pytest.fixture(scope="session", autouse=True)
def setup_logging():
    """Configure logging for test session."""
    log_dir = Path("logs")
    log_dir.mkdir(exist_ok=True)

    log_file = log_dir / f"test_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"

    logger.add(
        log_file,
        rotation="100 MB",
        retention="30 days",
        level=config.log_level,
        format=LOG_FORMAT,
    )

    logger.info("=" * 80)
    logger.info("TEST SESSION STARTED")
    logger.info(f"Environment: {config.env}")
    logger.info(f"Node guard: {config.get('integrator.node_guard')}")
    logger.info("=" * 80)

    yield

    logger.info("=" * 80)
    logger.info("TEST SESSION COMPLETED")
    logger.info("=" * 80)


@pytest.fixture(scope="session")
def test_config():
    """Provide configuration object to tests."""
    return config


@pytest.fixture(scope="session")
def base_state():
    """(Psi_100 + Psi_010 + Psi_001) / sqrt(3) with the default frequencies."""
    return make_base_state()


@pytest.fixture(scope="session")
def perturbed_state():
    """Base state with a 0.05 admixture of Psi_002."""
    return make_perturbed_state(0.05)


@pytest.fixture(scope="session")
def experiment_configs():
    return EXPERIMENT_CONFIGS


@pytest.fixture(scope="session")
def state_files():
    return STATE_FILES


# ============= Function-Level Fixtures =============

@pytest.fixture(scope="function")
def rng():
    """Seeded generator so random draws are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture(scope="function")
def settings():
    """Integrator settings from the active config."""
    return IntegratorSettings.from_config()


@pytest.fixture(scope="function")
def tmp_output(tmp_path):
    """Fresh output directory for one experiment run."""
    directory = tmp_path / "run"
    directory.mkdir()
    return directory


@pytest.fixture(scope="function")
def runtime_overrides():
    """Drop runtime config overrides a test made."""
    yield config
    config.reset_overrides()


@pytest.fixture(autouse=True)
def log_test_name(request):
    """Log test name at start and end."""
    logger.info(f"{'=' * 60}")
    logger.info(f"Starting test: {request.node.name}")
    logger.info(f"{'=' * 60}")

    yield

    logger.info(f"{'=' * 60}")
    logger.info(f"Finished test: {request.node.name}")
    logger.info(f"{'=' * 60}")


# ============= Pytest Hooks =============

def pytest_configure(config):
    """Configure pytest with custom markers and settings."""
    config.addinivalue_line("markers", "smoke: Quick smoke tests")
    config.addinivalue_line("markers", "regression: Full regression suite")
    config.addinivalue_line("markers", "slow: Tests that take longer to run")
    config.addinivalue_line("markers", "acceptance: Figure-level acceptance checks")
