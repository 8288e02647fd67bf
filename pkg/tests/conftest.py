import numpy as np
import pytest

from spectra.spectral_model import ProcessModel, preset_measure


@pytest.fixture(scope="session")
def presets():
    return {
        "iid": preset_measure(ProcessModel("iid")),
        "ar1": preset_measure(ProcessModel("ar1", rho=0.5)),
        "ma1": preset_measure(ProcessModel("ma1", rho=0.4)),
        "sums": preset_measure(ProcessModel("partial_sums")),
        "ou": preset_measure(ProcessModel("ou")),
        "fbm75": preset_measure(ProcessModel("fbm", H=0.75)),
        "levy": preset_measure(ProcessModel("levy")),
    }


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
