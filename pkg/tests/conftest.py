import numpy as np
import pytest

from mtensor.core import MTensor
from mtensor.features import Basis1D, FeatureMapSet
from mtensor.selftest import TOY_CORES, TOY_SAMPLES, TOY_Y


@pytest.fixture
def toy():
    return MTensor([c.copy() for c in TOY_CORES])


@pytest.fixture
def toy_maps():
    return FeatureMapSet.per_axis(2, Basis1D.monomial(2))


@pytest.fixture
def toy_samples():
    return TOY_SAMPLES.copy()


@pytest.fixture
def toy_y():
    return TOY_Y.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
