import numpy as np
import pytest

import ctdb as cdb


@pytest.fixture(scope="session")
def phantom():
    hu, spacing = cdb.phantom(96, 5)
    return hu, spacing


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    n = cdb.generate('{"num_reference_slices": 2, "image_size": 64, "master_seed": 3}', str(out))
    return out, n


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
