import numpy as np
import pytest

from fairwash.blackbox import train
from fairwash.dataspace import SplitSpec, split, synth_generate

# small fixed hyperparameters keep fixture training under a few seconds
FIXED_HP = {
    "adaboost": {"n_estimators": 100},
    "rf": {"n_estimators": 50, "max_depth": 8},
    "mlp": {"hidden": [16], "learning_rate": 0.01, "epochs": 40},
    "gbt": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
}


@pytest.fixture(scope="session")
def synth():
    return synth_generate(10000, 10, 0.3, 0)


@pytest.fixture(scope="session")
def parts(synth):
    return split(synth, SplitSpec(), 0)


@pytest.fixture(scope="session")
def blackboxes(parts):
    train_set = parts[0]
    return {fam: train(fam, train_set, hp, seed=0) for fam, hp in FIXED_HP.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
