import numpy as np
import pytest

from vaporfilter.config import load_config
from vaporfilter.scan import calibrate_to_targets, run_pipeline, tunability_scan


@pytest.fixture(scope="session")
def default_cfg():
    return load_config()


@pytest.fixture(scope="session")
def rb87(default_cfg):
    return default_cfg.atom


@pytest.fixture(scope="session")
def rb85():
    from vaporfilter.atomic_data import default_atoms
    return default_atoms()["Rb85"]


@pytest.fixture(scope="session")
def default_result(default_cfg):
    return run_pipeline(default_cfg)


@pytest.fixture(scope="session")
def calibration(default_cfg):
    """(calibrated cfg, report) computed once for the whole session."""
    return calibrate_to_targets(default_cfg)


@pytest.fixture(scope="session")
def tune_600(default_cfg):
    detunings = np.arange(-600.0, 601.0, 25.0)
    return tunability_scan(detunings, default_cfg)
