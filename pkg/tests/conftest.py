import numpy as np
import pytest

from mevboost_egta.signals import CalibrationConstants, calibrate_rates


@pytest.fixture(scope="session")
def default_signal_config():
    return calibrate_rates(CalibrationConstants())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240711)
